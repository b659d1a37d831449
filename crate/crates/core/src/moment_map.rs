//! The moment map `ShapeParams → R^k` and its Jacobian.
//!
//! Solvers evaluate densities given on the unit cube as polynomials on all of
//! `R^d`; whether a final shape respects the domain is checked by the caller.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{Family, ShapeParams};
use crate::measures::{box_moment_corner_gradient, logistic, orbit_moment, shape_moment, Domain, MeasureFamily, PolyDensity};

fn solver_domain(domain: Domain) -> Domain {
    match domain {
        Domain::UnitCube => Domain::Full,
        other => other,
    }
}

/// Moments of the shape encoded by `params`, with unit-cube densities
/// extended polynomially.
pub fn moments_at(fam: &MeasureFamily, params: &ShapeParams) -> Result<Vec<f64>> {
    Error::check_dim("params", fam.dim(), params.dim())?;
    let shape = params.to_shape()?;
    let domain = solver_domain(fam.domain());
    fam.densities().iter().map(|f| shape_moment(f, domain, &shape)).collect()
}

/// Gradient of one moment with respect to the search coordinates.
pub fn moment_gradient(f: &PolyDensity, domain: Domain, params: &ShapeParams) -> Result<Vec<f64>> {
    let d = params.dim();
    let shape = params.to_shape()?;
    match params.family {
        Family::Orbit(_) => {
            if let Domain::PulledBack { .. } = domain {
                return Err(Error::Unsupported("pulled-back measures are defined on boxes only".into()));
            }
            let crate::geometry::Shape::Orbit(o) = &shape else { unreachable!() };
            // d/db_i ∫_{L(K)} f = ∫_{L(K)} ∂_i f
            // d/dlog c_i ∫_{L(K)} f = ∫_{L(K)} f + (y_i - b_i) ∂_i f
            let mut g = Vec::with_capacity(2 * d);
            let shift = o.transform().shift();
            let partials: Vec<PolyDensity> = (0..d).map(|i| f.partial(i)).collect();
            for p in &partials {
                g.push(orbit_moment(p, o)?);
            }
            let base = orbit_moment(f, o)?;
            for (i, p) in partials.iter().enumerate() {
                g.push(base + orbit_moment(&p.times_offset(i, shift[i]), o)?);
            }
            Ok(g)
        }
        Family::Cube | Family::Cuboid => {
            let b = shape.bounding_box();
            let (g_lo, g_hi) = match domain {
                Domain::PulledBack { steepness } => {
                    let lo: Vec<f64> = b.lo().iter().map(|&x| logistic(x, steepness)).collect();
                    let hi: Vec<f64> = b.hi().iter().map(|&x| logistic(x, steepness)).collect();
                    let (gl, gh) = box_moment_corner_gradient(f, &lo, &hi);
                    let ds = |s: f64| steepness * s * (1.0 - s);
                    (
                        gl.iter().zip(&lo).map(|(g, &s)| g * ds(s)).collect::<Vec<_>>(),
                        gh.iter().zip(&hi).map(|(g, &s)| g * ds(s)).collect::<Vec<_>>(),
                    )
                }
                _ => box_moment_corner_gradient(f, b.lo(), b.hi()),
            };
            let mut g: Vec<f64> = (0..d).map(|i| g_lo[i] + g_hi[i]).collect();
            if params.family == Family::Cube {
                let edge = params.coords[d].exp();
                g.push(edge * g_hi.iter().sum::<f64>());
            } else {
                let w = b.widths();
                g.extend((0..d).map(|i| 0.5 * w[i] * (g_hi[i] - g_lo[i])));
            }
            Ok(g)
        }
    }
}

/// Moments and the `k × P` analytic Jacobian.
pub fn moments_and_jacobian(fam: &MeasureFamily, params: &ShapeParams) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let values = moments_at(fam, params)?;
    let domain = solver_domain(fam.domain());
    let p = params.coords.len();
    let mut jac = DMatrix::zeros(fam.len(), p);
    for (row, f) in fam.densities().iter().enumerate() {
        let g = moment_gradient(f, domain, params)?;
        for (col, v) in g.into_iter().enumerate() {
            jac[(row, col)] = v;
        }
    }
    Ok((values, jac))
}

/// Central differences with step `rel_step · max(1, |x_j|)`.
pub fn fd_jacobian(fam: &MeasureFamily, params: &ShapeParams, rel_step: f64) -> Result<DMatrix<f64>> {
    let p = params.coords.len();
    let mut jac = DMatrix::zeros(fam.len(), p);
    for col in 0..p {
        let h = rel_step * params.coords[col].abs().max(1.0);
        let mut plus = params.clone();
        plus.coords[col] += h;
        let mut minus = params.clone();
        minus.coords[col] -= h;
        let (fp, fm) = (moments_at(fam, &plus)?, moments_at(fam, &minus)?);
        for row in 0..fam.len() {
            jac[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    Ok(jac)
}
