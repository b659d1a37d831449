use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Certificate, CertificateKind};
use crate::error::{Error, Result};
use crate::geometry::{separation, Family, Shape, ShapeParams};
use crate::measures::{measure_vector, Domain, MeasureFamily};
use crate::moment_map::{fd_jacobian, moments_and_jacobian};
use crate::real;
use crate::seeding::item_rng;

/// Smallest singular value of the row-normalized Jacobian counted as nonzero.
pub const RANK_THRESHOLD: f64 = 1e-8;

const MIN_SEPARATION: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairSample {
    pub separation: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscernibilityReport {
    pub schema: u32,
    pub kind: CertificateKind,
    pub d: usize,
    pub pairs: usize,
    #[serde(with = "real::scalar")]
    pub min_gap: f64,
    #[serde(with = "real::scalar")]
    pub min_ratio: f64,
    pub worst_pair: (Shape, Shape),
    pub seed: u64,
    #[serde(skip, default)]
    pub samples: Vec<PairSample>,
}

fn sample_params(kind: CertificateKind, d: usize, rng: &mut ChaCha8Rng) -> ShapeParams {
    match kind {
        CertificateKind::CubeSequential => {
            let edge: f64 = rng.random_range(0.02..0.98);
            let mut coords: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0 - edge)).collect();
            coords.push(edge.ln());
            ShapeParams::new(Family::Cube, coords).expect("valid cube")
        }
        CertificateKind::IntervalPair | CertificateKind::CuboidCubic => {
            let (mut mids, mut logw) = (Vec::with_capacity(d), Vec::with_capacity(d));
            for _ in 0..d {
                let (a, b): (f64, f64) = loop {
                    let (a, b) = (rng.random::<f64>(), rng.random::<f64>());
                    if (a - b).abs() > 1e-3 {
                        break (a.min(b), a.max(b));
                    }
                };
                mids.push(0.5 * (a + b));
                logw.push((b - a).ln());
            }
            mids.extend(logw);
            ShapeParams::new(Family::Cuboid, mids).expect("valid cuboid")
        }
        CertificateKind::CuboidQuadratic | CertificateKind::SymmetricOrbit(_) => {
            let cert = Certificate { kind, dim: d };
            let mut coords: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            coords.extend((0..d).map(|_| rng.random_range(-1.0..1.0)));
            ShapeParams::new(cert.shape_family(), coords).expect("valid params")
        }
    }
}

fn in_domain(fam: &MeasureFamily, p: &ShapeParams) -> bool {
    match (fam.domain(), p.to_cuboid()) {
        (_, Err(_)) => false,
        (Domain::UnitCube, Ok(c)) => c.strictly_inside_unit_cube(),
        _ => true,
    }
}

/// Draws a pair with separation at least `MIN_SEPARATION`. Odd indices give
/// an independent pair, even ones a perturbation at scale `10^U(-2.9, 0)` so
/// that nearby pairs are represented.
fn sample_pair(kind: CertificateKind, fam: &MeasureFamily, index: usize, rng: &mut ChaCha8Rng) -> (ShapeParams, ShapeParams, f64) {
    let d = fam.dim();
    loop {
        let a = sample_params(kind, d, rng);
        let b = if index % 2 == 0 {
            let scale = 10f64.powf(rng.random_range(-2.9..0.0));
            let mut b = a.clone();
            for x in &mut b.coords {
                *x += scale * rng.random_range(-1.0..1.0);
            }
            b
        } else {
            sample_params(kind, d, rng)
        };
        if !in_domain(fam, &b) {
            continue;
        }
        let sep = separation(&a, &b).expect("same family");
        if sep >= MIN_SEPARATION {
            return (a, b, sep);
        }
    }
}

/// Samples `n_pairs` pairs of distinct shapes and reports the smallest
/// moment gap `‖μ(A) − μ(B)‖∞`, also relative to the parameter separation.
pub fn verify_injectivity_sampling(kind: CertificateKind, d: usize, n_pairs: usize, seed: u64) -> Result<DiscernibilityReport> {
    let cert = Certificate::new(kind, d)?;
    if n_pairs == 0 {
        return Err(Error::invalid("pairs", "must be at least 1"));
    }
    let fam = cert.family();
    let results: Vec<Result<(PairSample, Shape, Shape)>> = (0..n_pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = item_rng(seed, i as u64);
            let (a, b, sep) = sample_pair(kind, &fam, i, &mut rng);
            let (sa, sb) = (a.to_shape()?, b.to_shape()?);
            let gap = measure_vector(&fam, &sa)?.max_abs_diff(&measure_vector(&fam, &sb)?);
            Ok((PairSample { separation: sep, gap }, sa, sb))
        })
        .collect();

    let mut samples = Vec::with_capacity(n_pairs);
    let mut worst: Option<(f64, Shape, Shape)> = None;
    let mut min_ratio = f64::INFINITY;
    for r in results {
        let (s, a, b) = r?;
        min_ratio = min_ratio.min(s.gap / s.separation);
        if worst.as_ref().is_none_or(|w| s.gap < w.0) {
            worst = Some((s.gap, a, b));
        }
        samples.push(s);
    }
    let (min_gap, a, b) = worst.expect("n_pairs >= 1");
    Ok(DiscernibilityReport {
        schema: 1,
        kind,
        d,
        pairs: n_pairs,
        min_gap,
        min_ratio,
        worst_pair: (a, b),
        seed,
        samples,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    #[serde(with = "real::vector")]
    pub singular_values: Vec<f64>,
    pub full_rank: bool,
    /// Largest entry of `|J_fd − J_analytic|`, relative to the largest entry
    /// of the analytic Jacobian.
    #[serde(with = "real::scalar")]
    pub analytic_discrepancy: f64,
}

/// Rank audit of the certificate's moment map at `shape`.
pub fn jacobian_rank(cert: &Certificate, shape: &Shape) -> Result<RankReport> {
    if shape.family() != cert.shape_family() {
        return Err(Error::invalid(
            "shape",
            format!("{} certificate needs {} shapes", cert.kind, cert.shape_family().name()),
        ));
    }
    jacobian_rank_for(&cert.family(), &ShapeParams::from_shape(shape))
}

/// Singular values of the finite-difference Jacobian with rows scaled to unit
/// length; full rank means at least as many measures as coordinates and the
/// smallest singular value above [`RANK_THRESHOLD`].
pub fn jacobian_rank_for(fam: &MeasureFamily, params: &ShapeParams) -> Result<RankReport> {
    Error::check_dim("params", fam.dim(), params.dim())?;
    if fam.domain() == Domain::UnitCube && !params.to_cuboid()?.strictly_inside_unit_cube() {
        return Err(Error::OnDomainBoundary);
    }
    let jac = fd_jacobian(fam, params, 1e-6)?;
    let (_, analytic) = moments_and_jacobian(fam, params)?;
    let peak = analytic.amax().max(f64::MIN_POSITIVE);
    let analytic_discrepancy = (&jac - &analytic).amax() / peak;

    let mut scaled: DMatrix<f64> = jac;
    for mut row in scaled.row_iter_mut() {
        let n = row.norm();
        if n > 0.0 {
            row /= n;
        }
    }
    let mut singular_values: Vec<f64> = scaled.singular_values().iter().copied().collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    let p = params.coords.len();
    let full_rank = fam.len() >= p && singular_values.len() >= p && singular_values[p - 1] > RANK_THRESHOLD;
    Ok(RankReport {
        singular_values,
        full_rank,
        analytic_discrepancy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Cuboid;

    fn cuboid(lo: &[f64], hi: &[f64]) -> Shape {
        Shape::Cuboid(Cuboid::new(lo.to_vec(), hi.to_vec()).unwrap())
    }

    #[test]
    fn rank_examples() {
        let cert = Certificate::new(CertificateKind::CuboidQuadratic, 2).unwrap();
        let r = jacobian_rank(&cert, &cuboid(&[0.0, 0.0], &[1.0, 2.0])).unwrap();
        assert!(r.full_rank);
        assert_eq!(r.singular_values.len(), 4);
        assert!(r.analytic_discrepancy < 1e-7);

        let full = cert.family().prefix(3).unwrap();
        let p = ShapeParams::from_shape(&cuboid(&[0.0, 0.0], &[1.0, 2.0]));
        assert!(!jacobian_rank_for(&full, &p).unwrap().full_rank);

        let cubic = Certificate::new(CertificateKind::CuboidCubic, 2).unwrap().family().with_domain(Domain::Full).unwrap();
        let p = ShapeParams::from_shape(&cuboid(&[-0.5, 0.2], &[0.5, 0.9]));
        assert!(!jacobian_rank_for(&cubic, &p).unwrap().full_rank);
    }

    #[test]
    fn boundary_is_rejected() {
        let cert = Certificate::new(CertificateKind::CuboidCubic, 2).unwrap();
        let err = jacobian_rank(&cert, &cuboid(&[0.0, 0.2], &[0.5, 0.9])).unwrap_err();
        assert_eq!(err, Error::OnDomainBoundary);
    }

    #[test]
    fn sampling_is_deterministic_and_positive() {
        let a = verify_injectivity_sampling(CertificateKind::IntervalPair, 1, 500, 7).unwrap();
        let b = verify_injectivity_sampling(CertificateKind::IntervalPair, 1, 500, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.min_gap > 0.0);
        assert!(a.samples.iter().all(|s| s.separation >= MIN_SEPARATION));
    }
}
