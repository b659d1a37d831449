//! Adaptive Gauss–Kronrod integration used as an independent oracle for the
//! closed-form moments. Densities are only ever evaluated pointwise here.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::geometry::{BodyKind, Shape};
use crate::measures::{logistic, Domain, MeasureFamily, MomentVector, PolyDensity};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_depth: u32,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-15,
            rel: 1e-13,
            max_depth: 20,
        }
    }
}

/// Kronrod value, |Kronrod − Gauss| and the Kronrod estimate of `∫|f|`.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut absolute = WGK[7] * fc.abs();
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        kronrod += WGK[j] * (f1 + f2);
        absolute += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs(), absolute * h.abs())
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, est: (f64, f64, f64), abs: f64, tol: &Tolerance, depth: u32) -> f64 {
    let (value, err, absolute) = est;
    // Relative to ∫|f| so that cancelling integrands do not force refinement.
    if err <= abs.max(tol.rel * absolute) || depth >= tol.max_depth {
        return value;
    }
    let m = 0.5 * (a + b);
    let left = gk15(f, a, m);
    let right = gk15(f, m, b);
    adapt(f, a, m, left, 0.5 * abs, tol, depth + 1) + adapt(f, m, b, right, 0.5 * abs, tol, depth + 1)
}

pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: &Tolerance) -> f64 {
    if a == b {
        return 0.0;
    }
    adapt(f, a, b, gk15(f, a, b), tol.abs, tol, 0)
}

/// Iterated integral of `g` over `[lo, hi]`.
pub fn integrate_box(g: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], tol: &Tolerance) -> f64 {
    nested_box(g, lo, hi, &[], tol)
}

fn nested_box(g: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], prefix: &[f64], tol: &Tolerance) -> f64 {
    let axis = prefix.len();
    if axis == lo.len() {
        return g(prefix);
    }
    let inner = |x: f64| {
        let mut p = prefix.to_vec();
        p.push(x);
        nested_box(g, lo, hi, &p, tol)
    };
    integrate(&inner, lo[axis], hi[axis], tol)
}

/// Iterated integral of `g` over the unit body of the given kind in `R^dim`.
///
/// Ball coordinates are substituted `x = r sin θ` at each level, which keeps
/// the integrand smooth up to the boundary sphere; the cross-polytope is split
/// at each coordinate hyperplane where its section has a kink.
pub fn integrate_body(kind: BodyKind, dim: usize, g: &dyn Fn(&[f64]) -> f64, tol: &Tolerance) -> f64 {
    match kind {
        BodyKind::Cube => integrate_box(g, &vec![-1.0; dim], &vec![1.0; dim], tol),
        BodyKind::Ball => nested_ball(g, dim, &[], 1.0, tol),
        BodyKind::CrossPolytope => nested_cross(g, dim, &[], 1.0, tol),
    }
}

fn nested_ball(g: &dyn Fn(&[f64]) -> f64, dim: usize, prefix: &[f64], r: f64, tol: &Tolerance) -> f64 {
    if prefix.len() == dim {
        return g(prefix);
    }
    let inner = |theta: f64| {
        let (s, c) = theta.sin_cos();
        let mut p = prefix.to_vec();
        p.push(r * s);
        r * c * nested_ball(g, dim, &p, r * c, tol)
    };
    integrate(&inner, -FRAC_PI_2, FRAC_PI_2, tol)
}

fn nested_cross(g: &dyn Fn(&[f64]) -> f64, dim: usize, prefix: &[f64], r: f64, tol: &Tolerance) -> f64 {
    if prefix.len() == dim {
        return g(prefix);
    }
    let inner = |x: f64| {
        let mut p = prefix.to_vec();
        p.push(x);
        nested_cross(g, dim, &p, (r - x.abs()).max(0.0), tol)
    };
    integrate(&inner, -r, 0.0, tol) + integrate(&inner, 0.0, r, tol)
}

/// Moment of one shape by quadrature, honouring the domain the same way the
/// closed-form engine does.
pub fn oracle_moment(f: &PolyDensity, domain: Domain, shape: &Shape, tol: &Tolerance) -> Result<f64> {
    Error::check_dim("shape", f.dim(), shape.dim())?;
    let eval = |x: &[f64]| f.eval(x);
    match shape {
        Shape::Orbit(o) => {
            match domain {
                Domain::Full => {}
                Domain::UnitCube => o.bounding_box().check_in_unit_cube()?,
                Domain::PulledBack { .. } => {
                    return Err(Error::Unsupported(
                        "pulled-back measures are defined on boxes only".into(),
                    ))
                }
            }
            let t = o.transform();
            let pulled = |x: &[f64]| f.eval(&t.apply(x));
            Ok(t.det() * integrate_body(o.body().kind, o.dim(), &pulled, tol))
        }
        _ => {
            let b = shape.bounding_box();
            match domain {
                Domain::Full => Ok(integrate_box(&eval, b.lo(), b.hi(), tol)),
                Domain::UnitCube => {
                    b.check_in_unit_cube()?;
                    Ok(integrate_box(&eval, b.lo(), b.hi(), tol))
                }
                Domain::PulledBack { steepness } => Ok(pulled_back_box(f, b.lo(), b.hi(), steepness, tol)),
            }
        }
    }
}

/// `∫_box f(σ(x)) ∏ σ'(x_i) dx` directly in `R^d`. Beyond `|s x| = 40` the
/// logistic derivative is below `e^{-40}` and the tails are dropped; the
/// remaining range is pre-split so the bump at the origin is always sampled.
fn pulled_back_box(f: &PolyDensity, lo: &[f64], hi: &[f64], steepness: f64, tol: &Tolerance) -> f64 {
    let cut = 40.0 / steepness;
    let lo: Vec<f64> = lo.iter().map(|x| x.max(-cut)).collect();
    let hi: Vec<f64> = hi.iter().map(|x| x.min(cut)).collect();
    if lo.iter().zip(&hi).any(|(l, h)| l >= h) {
        return 0.0;
    }
    let integrand = |x: &[f64]| {
        let mut y = Vec::with_capacity(x.len());
        let mut jac = 1.0;
        for &xi in x {
            let s = logistic(xi, steepness);
            jac *= steepness * s * (1.0 - s);
            y.push(s);
        }
        f.eval(&y) * jac
    };
    const PIECES: usize = 8;
    split_box(&integrand, &lo, &hi, PIECES, &[], &[], tol)
}

fn split_box(
    g: &dyn Fn(&[f64]) -> f64,
    lo: &[f64],
    hi: &[f64],
    pieces: usize,
    sub_lo: &[f64],
    sub_hi: &[f64],
    tol: &Tolerance,
) -> f64 {
    let axis = sub_lo.len();
    if axis == lo.len() {
        return integrate_box(g, sub_lo, sub_hi, tol);
    }
    let step = (hi[axis] - lo[axis]) / pieces as f64;
    (0..pieces)
        .map(|p| {
            let mut l = sub_lo.to_vec();
            let mut h = sub_hi.to_vec();
            l.push(lo[axis] + p as f64 * step);
            h.push(if p + 1 == pieces { hi[axis] } else { lo[axis] + (p + 1) as f64 * step });
            split_box(g, lo, hi, pieces, &l, &h, tol)
        })
        .sum()
}

pub fn oracle_measure_vector(fam: &MeasureFamily, shape: &Shape, tol: &Tolerance) -> Result<MomentVector> {
    fam.densities()
        .iter()
        .map(|f| oracle_moment(f, fam.domain(), shape, tol))
        .collect::<Result<Vec<_>>>()
        .map(MomentVector::new)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn one_dimensional_rules() {
        let tol = Tolerance::default();
        assert!((integrate(&|x| x.powi(3), 0.0, 1.0, &tol) - 0.25).abs() < 1e-15);
        assert!((integrate(&|x: f64| x.sin(), 0.0, PI, &tol) - 2.0).abs() < 1e-13);
        // sqrt singularity at the endpoint still converges
        assert!((integrate(&|x: f64| x.sqrt(), 0.0, 1.0, &tol) - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn body_volumes() {
        let tol = Tolerance::default();
        let one = |_: &[f64]| 1.0;
        assert!((integrate_body(BodyKind::Ball, 2, &one, &tol) - PI).abs() < 1e-12);
        assert!((integrate_body(BodyKind::Ball, 3, &one, &tol) - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!((integrate_body(BodyKind::CrossPolytope, 3, &one, &tol) - 8.0 / 6.0).abs() < 1e-12);
        let x2 = |x: &[f64]| x[0] * x[0];
        assert!((integrate_body(BodyKind::Ball, 2, &x2, &tol) - PI / 4.0).abs() < 1e-12);
    }
}
