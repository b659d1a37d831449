//! Explicit density families whose moment maps are injective on a shape
//! family, together with the inversions and audits that make the injectivity
//! constructive.
//!
//! | kind               | densities                                   | shapes   | size  |
//! |--------------------|---------------------------------------------|----------|-------|
//! | `interval-pair`    | `1 - x`, `x`                                | intervals in (0,1) | 2 |
//! | `cube-sequential`  | `x_1⋯x_d`, `(1-x_1)x_2⋯x_d`, …, `1 - x_d`   | cubes in (0,1)^d   | d+1 |
//! | `cuboid-cubic`     | `1`, `x_i`, `x_i^3` (i < d)                 | cuboids in (0,1)^d | 2d |
//! | `cuboid-quadratic` | `1`, `x_i`, `x_i^2` (i < d)                 | cuboids in R^d     | 2d |
//! | `orbit-<body>`     | as `cuboid-quadratic`                        | images of a symmetric body | 2d |

mod audit;
mod lemma;
mod reconstruct;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BodyKind, Family, Shape};
use crate::measures::{Domain, MeasureFamily, MonomialTerm, PolyDensity};
use crate::real;

pub use audit::{jacobian_rank, jacobian_rank_for, verify_injectivity_sampling, DiscernibilityReport, PairSample, RankReport, RANK_THRESHOLD};
pub use lemma::{solve_lemma_moment, LinearMap};
pub use reconstruct::{
    reconstruct, reconstruct_cube_numeric, reconstruct_cuboid_cubic, reconstruct_cuboid_quadratic,
    reconstruct_orbit_quadratic, CubeSolveConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CertificateKind {
    IntervalPair,
    CubeSequential,
    CuboidCubic,
    CuboidQuadratic,
    SymmetricOrbit(BodyKind),
}

impl fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CertificateKind::IntervalPair => f.write_str("interval-pair"),
            CertificateKind::CubeSequential => f.write_str("cube-sequential"),
            CertificateKind::CuboidCubic => f.write_str("cuboid-cubic"),
            CertificateKind::CuboidQuadratic => f.write_str("cuboid-quadratic"),
            CertificateKind::SymmetricOrbit(b) => write!(f, "orbit-{}", b.name()),
        }
    }
}

impl FromStr for CertificateKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "interval-pair" => CertificateKind::IntervalPair,
            "cube-sequential" => CertificateKind::CubeSequential,
            "cuboid-cubic" => CertificateKind::CuboidCubic,
            "cuboid-quadratic" => CertificateKind::CuboidQuadratic,
            other => match other.strip_prefix("orbit-").and_then(BodyKind::parse) {
                Some(b) => CertificateKind::SymmetricOrbit(b),
                None => return Err(Error::invalid("kind", format!("unknown certificate kind `{s}`"))),
            },
        })
    }
}

impl Serialize for CertificateKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CertificateKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// A certificate kind in a fixed ambient dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub dim: usize,
}

impl Certificate {
    pub fn new(kind: CertificateKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("d", "must be positive"));
        }
        if kind == CertificateKind::IntervalPair && dim != 1 {
            return Err(Error::invalid("d", "interval-pair is one-dimensional"));
        }
        Ok(Certificate { kind, dim })
    }

    pub fn family(&self) -> MeasureFamily {
        family_densities(self.kind, self.dim).expect("validated at construction")
    }

    pub fn shape_family(&self) -> Family {
        match self.kind {
            CertificateKind::CubeSequential => Family::Cube,
            CertificateKind::SymmetricOrbit(b) => Family::Orbit(b),
            _ => Family::Cuboid,
        }
    }

    pub fn size(&self) -> usize {
        match self.kind {
            CertificateKind::IntervalPair => 2,
            CertificateKind::CubeSequential => self.dim + 1,
            _ => 2 * self.dim,
        }
    }
}

fn term(d: usize, coeff: f64, exps: &[(usize, u32)]) -> MonomialTerm {
    let mut e = vec![0; d];
    for &(i, k) in exps {
        e[i] = k;
    }
    MonomialTerm::new(coeff, e)
}

fn density(d: usize, terms: Vec<MonomialTerm>) -> PolyDensity {
    PolyDensity::new(d, terms).expect("well-formed certificate density")
}

/// `1, x_1, …, x_d, x_1^p, …, x_{d-1}^p`.
fn moment_family(d: usize, power: u32) -> Vec<PolyDensity> {
    let mut out = vec![PolyDensity::constant(d, 1.0)];
    out.extend((0..d).map(|i| PolyDensity::axis_power(d, i, 1, 1.0)));
    out.extend((0..d - 1).map(|i| PolyDensity::axis_power(d, i, power, 1.0)));
    out
}

/// The densities of a certificate family, in order, with its domain.
pub fn family_densities(kind: CertificateKind, d: usize) -> Result<MeasureFamily> {
    let cert = Certificate::new(kind, d)?;
    let (densities, domain) = match cert.kind {
        CertificateKind::IntervalPair => (
            vec![
                density(1, vec![term(1, 1.0, &[]), term(1, -1.0, &[(0, 1)])]),
                PolyDensity::axis_power(1, 0, 1, 1.0),
            ],
            Domain::UnitCube,
        ),
        CertificateKind::CubeSequential => {
            // φ_1 = x_1⋯x_d, then φ_{j+1} = (1 - x_j) x_{j+1}⋯x_d
            let tail = |from: usize| -> Vec<(usize, u32)> { (from..d).map(|i| (i, 1)).collect() };
            let mut v = vec![density(d, vec![term(d, 1.0, &tail(0))])];
            for j in 0..d {
                let rest = tail(j + 1);
                let mut with_xj = rest.clone();
                with_xj.push((j, 1));
                v.push(density(d, vec![term(d, 1.0, &rest), term(d, -1.0, &with_xj)]));
            }
            (v, Domain::UnitCube)
        }
        CertificateKind::CuboidCubic => (moment_family(d, 3), Domain::UnitCube),
        CertificateKind::CuboidQuadratic | CertificateKind::SymmetricOrbit(_) => {
            (moment_family(d, 2), Domain::Full)
        }
    };
    MeasureFamily::new(densities, domain)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReconstructionStatus {
    /// Closed-form inversion.
    Exact,
    /// Converged numerical inversion.
    Numeric,
    /// The moments do not determine the shape through this inversion.
    Ambiguous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub shape: Option<Shape>,
    /// `‖μ(shape) − m‖∞`, re-evaluated on the returned shape.
    #[serde(with = "real::optional")]
    pub residual: Option<f64>,
    pub status: ReconstructionStatus,
}
