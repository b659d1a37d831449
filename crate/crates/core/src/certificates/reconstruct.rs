use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{family_densities, Certificate, CertificateKind, ReconstructionResult, ReconstructionStatus};
use crate::error::{Error, Result};
use crate::geometry::{apply_transform, AxisTransform, BodyKind, Cube, Cuboid, Family, Shape, ShapeParams, SymmetricBody};
use crate::lm::{self, LmSettings};
use crate::measures::{measure_vector, monomial_body_moment, normalized_second_moment, Domain, MeasureFamily, MomentVector};
use crate::moment_map::moments_and_jacobian;
use crate::seeding::item_rng;

fn check_moments(m: &MomentVector, expected: usize) -> Result<f64> {
    Error::check_dim("moments", expected, m.len())?;
    if m.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("moments", "non-finite value"));
    }
    let m0 = m.values[0];
    if m0 <= 0.0 {
        return Err(Error::InvalidVolume(m0));
    }
    Ok(m0)
}

fn finish(kind: CertificateKind, d: usize, m: &MomentVector, shape: Shape, status: ReconstructionStatus) -> Result<ReconstructionResult> {
    let fam = family_densities(kind, d)?.with_domain(Domain::Full)?;
    let residual = measure_vector(&fam, &shape)?.max_abs_diff(m);
    Ok(ReconstructionResult {
        shape: Some(shape),
        residual: Some(residual),
        status,
    })
}

/// Centres and half-extents from `(m_0, m_1..m_d, m_{d+1}..m_{2d-1})` of the
/// quadratic family, for a body with unit volume `vol` and normalized second
/// moment `kappa`.
fn invert_quadratic(m: &[f64], d: usize, vol: f64, kappa: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let m0 = m[0];
    let mids: Vec<f64> = (0..d).map(|j| m[1 + j] / m0).collect();
    let mut scales = Vec::with_capacity(d);
    for j in 0..d - 1 {
        let var = m[1 + d + j] / m0 - mids[j] * mids[j];
        if !(var > 0.0) {
            return Err(Error::InfeasibleMoments {
                axis: j,
                reason: format!("variance {var:e} is not positive"),
            });
        }
        scales.push((var / kappa).sqrt());
    }
    scales.push(m0 / (vol * scales.iter().product::<f64>()));
    Ok((mids, scales))
}

/// Inverts the quadratic family on cuboids:
/// `mid_j = m_j/m_0`, `width_j = √(12 (m_{d+j}/m_0 − mid_j²))` for `j < d`,
/// and the last width from the volume.
pub fn reconstruct_cuboid_quadratic(m: &MomentVector, d: usize) -> Result<ReconstructionResult> {
    check_moments(m, 2 * d)?;
    let (mids, halves) = invert_quadratic(&m.values, d, 2f64.powi(d as i32), 1.0 / 3.0)?;
    let lo = mids.iter().zip(&halves).map(|(c, h)| c - h).collect();
    let hi = mids.iter().zip(&halves).map(|(c, h)| c + h).collect();
    let shape = Shape::Cuboid(Cuboid::new(lo, hi)?);
    finish(CertificateKind::CuboidQuadratic, d, m, shape, ReconstructionStatus::Exact)
}

/// Same inversion for `L(K)`, using the body's volume and normalized second
/// moment in place of the box constants.
pub fn reconstruct_orbit_quadratic(m: &MomentVector, d: usize, body: BodyKind) -> Result<ReconstructionResult> {
    check_moments(m, 2 * d)?;
    let vol = monomial_body_moment(body, &vec![0; d]);
    let (mids, scales) = invert_quadratic(&m.values, d, vol, normalized_second_moment(body, d))?;
    let t = AxisTransform::new(scales, mids)?;
    let shape = Shape::Orbit(apply_transform(&t, SymmetricBody::new(body, d)?)?);
    finish(CertificateKind::SymmetricOrbit(body), d, m, shape, ReconstructionStatus::Exact)
}

/// Inverts the cubic family. For `j < d`, `s_j = a_j + b_j = 2 m_j/m_0` and
/// `q_j = a_j² + b_j² = 4 m_{d+j}/(m_0 s_j)`, so `b_j − a_j = √(2q_j − s_j²)`.
/// When some `s_j` vanishes the cubic moment carries no width information and
/// the result is reported as ambiguous.
pub fn reconstruct_cuboid_cubic(m: &MomentVector, d: usize) -> Result<ReconstructionResult> {
    let m0 = check_moments(m, 2 * d)?;
    let v = &m.values;
    let mut mids = Vec::with_capacity(d);
    let mut widths = Vec::with_capacity(d);
    let mut ambiguous = false;
    for j in 0..d - 1 {
        let s = 2.0 * v[1 + j] / m0;
        let scale = (v[1 + d + j].abs() / m0).cbrt().max(1.0);
        if s.abs() < 1e-9 * scale {
            ambiguous = true;
            continue;
        }
        let q = 4.0 * v[1 + d + j] / (m0 * s);
        let disc = 2.0 * q - s * s;
        if !(disc > 0.0) {
            return Err(Error::InfeasibleMoments {
                axis: j,
                reason: format!("2q - s^2 = {disc:e} is not positive"),
            });
        }
        mids.push(0.5 * s);
        widths.push(disc.sqrt());
    }
    if ambiguous {
        return Ok(ReconstructionResult {
            shape: None,
            residual: None,
            status: ReconstructionStatus::Ambiguous,
        });
    }
    widths.push(m0 / widths.iter().product::<f64>());
    mids.push(v[d] / m0);
    let lo = mids.iter().zip(&widths).map(|(c, w)| c - 0.5 * w).collect();
    let hi = mids.iter().zip(&widths).map(|(c, w)| c + 0.5 * w).collect();
    let shape = Shape::Cuboid(Cuboid::new(lo, hi)?);
    finish(CertificateKind::CuboidCubic, d, m, shape, ReconstructionStatus::Exact)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CubeSolveConfig {
    pub seed: u64,
    pub starts: usize,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for CubeSolveConfig {
    fn default() -> Self {
        CubeSolveConfig {
            seed: 0,
            starts: 32,
            tol: 1e-10,
            max_iterations: 200,
        }
    }
}

/// Numerical inversion of the sequential cube family: damped Gauss–Newton in
/// `(anchor, ln edge)` from seeded random cubes in `(0,1)^d`. The first start
/// that converges to a cube inside `[0,1]^d` wins.
pub fn reconstruct_cube_numeric(m: &MomentVector, d: usize, cfg: &CubeSolveConfig) -> Result<ReconstructionResult> {
    Error::check_dim("moments", d + 1, m.len())?;
    if m.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("moments", "non-finite value"));
    }
    let fam: MeasureFamily = family_densities(CertificateKind::CubeSequential, d)?.with_domain(Domain::Full)?;
    let target = DVector::from_column_slice(&m.values);
    let settings = LmSettings {
        max_iterations: cfg.max_iterations,
        ..LmSettings::default()
    };
    let mut best = f64::INFINITY;
    for start in 0..cfg.starts {
        let mut rng = item_rng(cfg.seed, start as u64);
        let edge: f64 = rng.random_range(0.05..0.95);
        let mut x0: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0 - edge)).collect();
        x0.push(edge.ln());
        let eval = |x: &[f64]| {
            let p = ShapeParams::new(Family::Cube, x.to_vec()).ok()?;
            let (v, j) = moments_and_jacobian(&fam, &p).ok()?;
            Some((DVector::from_vec(v) - &target, j))
        };
        let Some(out) = lm::minimize(x0, eval, &settings) else {
            continue;
        };
        best = best.min(out.residual_inf);
        if out.residual_inf >= cfg.tol {
            continue;
        }
        let cube = Cube::new(out.x[..d].to_vec(), out.x[d].exp())?;
        if cube.to_cuboid().check_in_unit_cube().is_ok() {
            return Ok(ReconstructionResult {
                shape: Some(Shape::Cube(cube)),
                residual: Some(out.residual_inf),
                status: ReconstructionStatus::Numeric,
            });
        }
    }
    Err(Error::ReconstructionFailed { best_residual: best })
}

/// Dispatches on the certificate kind.
pub fn reconstruct(cert: &Certificate, m: &MomentVector, cube_cfg: &CubeSolveConfig) -> Result<ReconstructionResult> {
    let d = cert.dim;
    match cert.kind {
        CertificateKind::CuboidQuadratic => reconstruct_cuboid_quadratic(m, d),
        CertificateKind::CuboidCubic => reconstruct_cuboid_cubic(m, d),
        CertificateKind::SymmetricOrbit(b) => reconstruct_orbit_quadratic(m, d, b),
        CertificateKind::CubeSequential => reconstruct_cube_numeric(m, d, cube_cfg),
        CertificateKind::IntervalPair => {
            // total mass m_1 + m_2 is the length, m_2 the first moment
            check_len(m, 2)?;
            let len = m.values[0] + m.values[1];
            if !(len > 0.0) {
                return Err(Error::InvalidVolume(len));
            }
            let mid = m.values[1] / len;
            let shape = Shape::Cuboid(Cuboid::new(vec![mid - 0.5 * len], vec![mid + 0.5 * len])?);
            finish(CertificateKind::IntervalPair, 1, m, shape, ReconstructionStatus::Exact)
        }
    }
}

fn check_len(m: &MomentVector, n: usize) -> Result<()> {
    Error::check_dim("moments", n, m.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mv(v: &[f64]) -> MomentVector {
        MomentVector::new(v.to_vec())
    }

    fn cuboid_of(r: &ReconstructionResult) -> Cuboid {
        match r.shape.as_ref().unwrap() {
            Shape::Cuboid(c) => c.clone(),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn assert_box(c: &Cuboid, lo: &[f64], hi: &[f64], tol: f64) {
        for i in 0..lo.len() {
            assert!((c.lo()[i] - lo[i]).abs() < tol && (c.hi()[i] - hi[i]).abs() < tol, "{c:?}");
        }
    }

    #[test]
    fn quadratic_examples() {
        let r = reconstruct_cuboid_quadratic(&mv(&[2.0, 1.0, 2.0, 2.0 / 3.0]), 2).unwrap();
        assert_eq!(r.status, ReconstructionStatus::Exact);
        assert_box(&cuboid_of(&r), &[0.0, 0.0], &[1.0, 2.0], 1e-14);
        assert!(r.residual.unwrap() < 1e-14);

        let r = reconstruct_cuboid_quadratic(&mv(&[1.0, 0.0]), 1).unwrap();
        assert_box(&cuboid_of(&r), &[-0.5], &[0.5], 1e-15);

        let err = reconstruct_cuboid_quadratic(&mv(&[1.0, 0.0, 0.0, 0.0]), 2).unwrap_err();
        assert!(matches!(err, Error::InfeasibleMoments { axis: 0, .. }));
        assert!(matches!(
            reconstruct_cuboid_quadratic(&mv(&[0.0, 0.0, 0.0, 1.0]), 2).unwrap_err(),
            Error::InvalidVolume(_)
        ));
        assert!(reconstruct_cuboid_quadratic(&mv(&[1.0, 0.0, 0.0]), 2).is_err());
    }

    #[test]
    fn cubic_examples() {
        let fam = family_densities(CertificateKind::CuboidCubic, 2).unwrap();
        let c = Cuboid::new(vec![0.2, 0.1], vec![0.7, 0.9]).unwrap();
        let m = measure_vector(&fam, &Shape::Cuboid(c.clone())).unwrap();
        let r = reconstruct_cuboid_cubic(&m, 2).unwrap();
        assert_box(&cuboid_of(&r), c.lo(), c.hi(), 1e-10);

        let full = fam.with_domain(Domain::Full).unwrap();
        let sym = Shape::Cuboid(Cuboid::new(vec![-1.0, 0.0], vec![1.0, 1.0]).unwrap());
        let r = reconstruct_cuboid_cubic(&measure_vector(&full, &sym).unwrap(), 2).unwrap();
        assert_eq!(r.status, ReconstructionStatus::Ambiguous);
        assert!(r.shape.is_none());

        let r = reconstruct_cuboid_cubic(&mv(&[1.0, 0.5]), 1).unwrap();
        assert_box(&cuboid_of(&r), &[0.0], &[1.0], 1e-15);
    }

    #[test]
    fn cube_examples() {
        let cfg = CubeSolveConfig::default();
        let r = reconstruct_cube_numeric(&mv(&[1.0 / 16.0, 1.0 / 16.0, 1.0 / 8.0]), 2, &cfg).unwrap();
        assert_eq!(r.status, ReconstructionStatus::Numeric);
        let Some(Shape::Cube(c)) = r.shape else { panic!() };
        assert!((c.anchor()[0] - 0.25).abs() < 1e-10 && (c.anchor()[1] - 0.25).abs() < 1e-10);
        assert!((c.edge() - 0.5).abs() < 1e-10);

        let r = reconstruct_cube_numeric(&mv(&[0.25, 0.25]), 1, &cfg).unwrap();
        let Some(Shape::Cube(c)) = r.shape else { panic!() };
        assert!((c.anchor()[0] - 0.25).abs() < 1e-10 && (c.edge() - 0.5).abs() < 1e-10);

        // moments no cube can produce: negative mass
        let err = reconstruct_cube_numeric(&mv(&[-1.0, 0.3]), 1, &cfg).unwrap_err();
        assert!(matches!(err, Error::ReconstructionFailed { .. }));
    }

    #[test]
    fn orbit_examples() {
        for body in [BodyKind::Ball, BodyKind::CrossPolytope, BodyKind::Cube] {
            let t = AxisTransform::new(vec![0.5, 2.0, 1.5], vec![-1.0, 0.25, 3.0]).unwrap();
            let o = Shape::Orbit(apply_transform(&t, SymmetricBody::new(body, 3).unwrap()).unwrap());
            let fam = family_densities(CertificateKind::SymmetricOrbit(body), 3).unwrap();
            let r = reconstruct_orbit_quadratic(&measure_vector(&fam, &o).unwrap(), 3, body).unwrap();
            let Some(Shape::Orbit(back)) = r.shape else { panic!() };
            for i in 0..3 {
                assert!((back.transform().scale()[i] - t.scale()[i]).abs() < 1e-12);
                assert!((back.transform().shift()[i] - t.shift()[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interval_pair_inversion() {
        let cert = Certificate::new(CertificateKind::IntervalPair, 1).unwrap();
        let c = Shape::Cuboid(Cuboid::new(vec![0.2], vec![0.45]).unwrap());
        let m = measure_vector(&cert.family(), &c).unwrap();
        let r = reconstruct(&cert, &m, &CubeSolveConfig::default()).unwrap();
        assert_box(&cuboid_of(&r), &[0.2], &[0.45], 1e-15);
    }
}
