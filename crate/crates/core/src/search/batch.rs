//! Sweeps over the number of measures, recording where witnesses stop
//! existing.

use serde::{Deserialize, Serialize};

use super::{find_indiscernible_tuple, SearchConfig, SearchProblem, SearchStatus};
use crate::certificates::{family_densities, CertificateKind};
use crate::error::Result;
use crate::geometry::Family;
use crate::real;
use crate::seeding::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub k: usize,
    pub d: usize,
    pub restarts_used: usize,
    #[serde(with = "real::scalar")]
    pub residual: f64,
    /// Separation of the returned pair; near zero when every restart
    /// collapsed onto the diagonal.
    #[serde(with = "real::scalar")]
    pub separation: f64,
    pub status: SearchStatus,
    pub existence_guaranteed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseBatch {
    pub schema: u32,
    pub family: String,
    pub d: usize,
    pub seed: u64,
    pub rows: Vec<BatchRow>,
}

/// Pair searches on cuboids with the first `k` densities of the quadratic
/// certificate family, `k = 1..=2d`. Row `k` uses seed `derive_seed(seed, k)`.
pub fn phase_batch(d: usize, config: &SearchConfig) -> Result<PhaseBatch> {
    let full = family_densities(CertificateKind::CuboidQuadratic, d)?;
    let mut rows = Vec::with_capacity(2 * d);
    for k in 1..=2 * d {
        let problem = SearchProblem::new(Family::Cuboid, full.prefix(k)?, 2)?;
        let cfg = SearchConfig {
            seed: derive_seed(config.seed, k as u64),
            ..*config
        };
        let r = find_indiscernible_tuple(&problem, &cfg)?;
        rows.push(BatchRow {
            k,
            d,
            restarts_used: r.restarts_used,
            residual: r.residual_inf,
            separation: r.min_pairwise_separation,
            status: r.status,
            existence_guaranteed: problem.existence_guaranteed(),
        });
    }
    Ok(PhaseBatch {
        schema: 1,
        family: Family::Cuboid.name(),
        d,
        seed: config.seed,
        rows,
    })
}
