//! Witness search: `n` distinct shapes whose moment vectors agree under `k`
//! measures, found as zeros of
//! `F(C_1, …, C_n) = (μ_i(C_j) − μ_i(C_1))_{i, j>1}`
//! by seeded multistart damped least squares.

mod batch;
mod disjoint;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{disjoint_margin, separation, Family, Shape, ShapeParams};
use crate::lm::{self, LmSettings};
use crate::measures::{Domain, MeasureFamily};
use crate::moment_map::moments_and_jacobian;
use crate::quadrature::{oracle_measure_vector, Tolerance};
use crate::real;
use crate::seeding::item_rng;

pub use batch::{phase_batch, BatchRow, PhaseBatch};
pub use disjoint::find_disjoint_equal_cubes;

/// Restarts are dispatched in fixed-size chunks so the winning index does not
/// depend on the thread count.
const RESTART_CHUNK: usize = 16;

mod family_name {
    use super::Family;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(f: &Family, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&f.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Family, D::Error> {
        let s = String::deserialize(d)?;
        Family::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("unknown shape family `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constraints {
    pub require_disjoint: bool,
    /// All shapes share one extent; cubes only.
    pub equal_size: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchProblem {
    #[serde(with = "family_name")]
    pub family: Family,
    pub measures: MeasureFamily,
    pub n_shapes: usize,
    #[serde(default)]
    pub constraints: Constraints,
}

impl SearchProblem {
    pub fn new(family: Family, measures: MeasureFamily, n_shapes: usize) -> Result<Self> {
        let p = SearchProblem {
            family,
            measures,
            n_shapes,
            constraints: Constraints::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_constraints(mut self, constraints: Constraints) -> Result<Self> {
        self.constraints = constraints;
        self.validate()?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.measures.dim()
    }

    pub fn k(&self) -> usize {
        self.measures.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_shapes < 2 {
            return Err(Error::invalid("n_shapes", "need at least 2 shapes"));
        }
        if self.measures.is_empty() {
            return Err(Error::invalid("measures", "need at least one density"));
        }
        if self.constraints.equal_size && self.family != Family::Cube {
            return Err(Error::invalid("constraints.equal_size", "supported for the cube family only"));
        }
        if let (Family::Orbit(_), Domain::PulledBack { .. }) = (self.family, self.measures.domain()) {
            return Err(Error::Unsupported("pulled-back measures are defined on boxes only".into()));
        }
        Ok(())
    }

    /// Whether the topological existence results cover this problem:
    /// `k ≤ d` for cubes, `k ≤ 2d − 1` for cuboids and orbits, and `k ≤ d − 1`
    /// for disjoint equal cubes.
    pub fn existence_guaranteed(&self) -> bool {
        let (k, d) = (self.k(), self.dim());
        if self.constraints.require_disjoint || self.constraints.equal_size {
            return self.family == Family::Cube && k < d;
        }
        match self.family {
            Family::Cube => k <= d,
            Family::Cuboid | Family::Orbit(_) => k < 2 * d,
        }
    }

    fn check_params(&self, params: &[ShapeParams]) -> Result<()> {
        Error::check_dim("shapes", self.n_shapes, params.len())?;
        for p in params {
            if p.family != self.family {
                return Err(Error::invalid("family", format!("expected {}, got {}", self.family.name(), p.family.name())));
            }
            Error::check_dim("params", self.dim(), p.dim())?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub seed: u64,
    pub max_restarts: usize,
    #[serde(with = "real::scalar")]
    pub tol_residual: f64,
    #[serde(with = "real::scalar")]
    pub min_separation: f64,
    /// Range of starting midpoints (or anchors, or shifts).
    pub start_mid: (f64, f64),
    /// Range of starting log-extents.
    pub start_log_width: (f64, f64),
    pub max_iterations: usize,
    /// Shapes with an extent outside `[min_extent, max_extent]` are rejected:
    /// shrinking every shape to a point also drives all moments to zero.
    #[serde(with = "real::scalar")]
    pub min_extent: f64,
    #[serde(with = "real::scalar")]
    pub max_extent: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            seed: 0,
            max_restarts: 200,
            tol_residual: 1e-10,
            min_separation: 1e-2,
            start_mid: (-2.0, 2.0),
            start_log_width: (-1.0, 1.0),
            max_iterations: 500,
            min_extent: 1e-2,
            max_extent: 1e3,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tol_residual", self.tol_residual),
            ("min_separation", self.min_separation),
            ("min_extent", self.min_extent),
            ("max_extent", self.max_extent),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(field, format!("must be positive, got {v}")));
            }
        }
        if self.min_extent >= self.max_extent {
            return Err(Error::invalid("min_extent", "must be below max_extent"));
        }
        for (field, (a, b)) in [("start_mid", self.start_mid), ("start_log_width", self.start_log_width)] {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::invalid(field, format!("[{a}, {b}] is not a proper range")));
            }
        }
        if self.max_restarts == 0 {
            return Err(Error::invalid("max_restarts", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchStatus {
    Found,
    NotFound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub schema: u32,
    pub status: SearchStatus,
    /// The witness, or the best attempt when nothing was found.
    pub shapes: Vec<Shape>,
    #[serde(with = "real::scalar")]
    pub residual_inf: f64,
    #[serde(with = "real::scalar")]
    pub min_pairwise_separation: f64,
    #[serde(with = "real::optional")]
    pub min_disjoint_margin: Option<f64>,
    pub restarts_used: usize,
    pub existence_guaranteed: bool,
}

/// `μ_i(C_j) − μ_i(C_1)` at index `i·(n−1) + (j−1)`.
pub fn residual_map(p: &SearchProblem, params: &[ShapeParams]) -> Result<Vec<f64>> {
    p.check_params(params)?;
    let moments: Vec<Vec<f64>> = params
        .iter()
        .map(|q| crate::moment_map::moments_at(&p.measures, q))
        .collect::<Result<_>>()?;
    let n = params.len();
    let mut out = vec![0.0; p.k() * (n - 1)];
    for i in 0..p.k() {
        for j in 1..n {
            out[i * (n - 1) + j - 1] = moments[j][i] - moments[0][i];
        }
    }
    Ok(out)
}

/// How the unknowns map onto the shapes' coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Layout {
    Independent,
    /// Cubes: `n·d` anchors then one shared log-edge.
    SharedEdge,
}

pub(crate) struct Engine<'a> {
    pub problem: &'a SearchProblem,
    pub config: &'a SearchConfig,
    pub layout: Layout,
    pub penalty: bool,
}

pub(crate) struct Attempt {
    pub params: Vec<ShapeParams>,
    pub residual_inf: f64,
    pub min_separation: f64,
    pub min_margin: Option<f64>,
    pub ok: bool,
}

impl Engine<'_> {
    fn n(&self) -> usize {
        self.problem.n_shapes
    }

    fn p(&self) -> usize {
        self.problem.family.param_len(self.problem.dim())
    }

    fn n_unknowns(&self) -> usize {
        match self.layout {
            Layout::Independent => self.n() * self.p(),
            Layout::SharedEdge => self.n() * self.problem.dim() + 1,
        }
    }

    fn column(&self, shape: usize, coord: usize) -> usize {
        let d = self.problem.dim();
        match self.layout {
            Layout::Independent => shape * self.p() + coord,
            Layout::SharedEdge if coord < d => shape * d + coord,
            Layout::SharedEdge => self.n() * d,
        }
    }

    pub fn unpack(&self, x: &[f64]) -> Vec<ShapeParams> {
        (0..self.n())
            .map(|j| ShapeParams {
                family: self.problem.family,
                coords: (0..self.p()).map(|c| x[self.column(j, c)]).collect(),
            })
            .collect()
    }

    fn within_bounds(&self, params: &[ShapeParams]) -> bool {
        let (lo, hi) = (self.config.min_extent.ln(), self.config.max_extent.ln());
        let d = self.problem.dim();
        params.iter().all(|p| {
            p.coords[..d].iter().all(|m| m.abs() <= self.config.max_extent)
                && p.log_extents().iter().all(|&t| t >= lo && t <= hi)
        })
    }

    fn start(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let d = self.problem.dim();
        let unit = self.problem.measures.domain() == Domain::UnitCube;
        let (mid_range, logw_range) = if unit {
            ((0.25, 0.75), (0.05f64.ln(), 0.5f64.ln()))
        } else {
            (self.config.start_mid, self.config.start_log_width)
        };
        let mut x = vec![0.0; self.n_unknowns()];
        let shared_edge = rng.random_range(logw_range.0..logw_range.1);
        for j in 0..self.n() {
            match self.problem.family {
                Family::Cube => {
                    let t = match self.layout {
                        Layout::SharedEdge => shared_edge,
                        Layout::Independent => rng.random_range(logw_range.0..logw_range.1),
                    };
                    for c in 0..d {
                        x[self.column(j, c)] = if unit {
                            rng.random_range(0.0..1.0 - t.exp())
                        } else {
                            rng.random_range(mid_range.0..mid_range.1)
                        };
                    }
                    x[self.column(j, d)] = t;
                }
                Family::Cuboid | Family::Orbit(_) => {
                    for c in 0..d {
                        x[self.column(j, c)] = rng.random_range(mid_range.0..mid_range.1);
                    }
                    for c in d..2 * d {
                        x[self.column(j, c)] = rng.random_range(logw_range.0..logw_range.1);
                    }
                }
            }
        }
        x
    }

    /// Moment residuals, followed by overlap penalties when enabled.
    fn eval(&self, x: &[f64], with_penalty: bool) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let params = self.unpack(x);
        if !self.within_bounds(&params) {
            return None;
        }
        let (n, k) = (self.n(), self.problem.k());
        let mut blocks = Vec::with_capacity(n);
        for p in &params {
            blocks.push(moments_and_jacobian(&self.problem.measures, p).ok()?);
        }
        let extra = if with_penalty { disjoint::penalty_rows(n) } else { 0 };
        let rows = k * (n - 1) + extra;
        let mut r = DVector::zeros(rows);
        let mut jac = DMatrix::zeros(rows, self.n_unknowns());
        for i in 0..k {
            for j in 1..n {
                let row = i * (n - 1) + j - 1;
                r[row] = blocks[j].0[i] - blocks[0].0[i];
                for c in 0..self.p() {
                    jac[(row, self.column(j, c))] += blocks[j].1[(i, c)];
                    jac[(row, self.column(0, c))] -= blocks[0].1[(i, c)];
                }
            }
        }
        if with_penalty {
            disjoint::fill_penalty(self, x, k * (n - 1), &mut r, &mut jac)?;
        }
        Some((r, jac))
    }

    fn settings(&self) -> LmSettings {
        LmSettings {
            max_iterations: self.config.max_iterations,
            target: 1e-2 * self.config.tol_residual,
            ..LmSettings::default()
        }
    }

    fn attempt(&self, index: usize) -> Option<Attempt> {
        let mut rng = item_rng(self.config.seed, index as u64);
        let x0 = self.start(&mut rng);
        let settings = self.settings();
        let mut x = x0;
        if self.penalty {
            x = lm::minimize(x, |v| self.eval(v, true), &settings)?.x;
        }
        let out = lm::minimize(x, |v| self.eval(v, false), &settings)?;
        Some(self.assess(out.x, out.residual_inf))
    }

    fn assess(&self, x: Vec<f64>, residual_inf: f64) -> Attempt {
        let params = self.unpack(&x);
        let c = self.problem.constraints;
        let mut min_separation = f64::INFINITY;
        let mut min_margin = None::<f64>;
        let boxes: Vec<_> = params.iter().map(|p| p.to_cuboid()).collect();
        for a in 0..params.len() {
            for b in a + 1..params.len() {
                min_separation = min_separation.min(separation(&params[a], &params[b]).unwrap_or(0.0));
                if c.require_disjoint {
                    let m = match (&boxes[a], &boxes[b]) {
                        (Ok(x), Ok(y)) => disjoint_margin(x, y).unwrap_or(f64::NEG_INFINITY),
                        _ => f64::NEG_INFINITY,
                    };
                    min_margin = Some(min_margin.map_or(m, |v| v.min(m)));
                }
            }
        }
        let in_domain = match self.problem.measures.domain() {
            Domain::UnitCube => boxes.iter().all(|b| b.as_ref().is_ok_and(|b| b.check_in_unit_cube().is_ok())),
            _ => boxes.iter().all(|b| b.is_ok()),
        };
        let ok = residual_inf < self.config.tol_residual
            && min_separation >= self.config.min_separation
            && min_margin.is_none_or(|m| m > 0.0)
            && self.within_bounds(&params)
            && in_domain;
        Attempt {
            params,
            residual_inf,
            min_separation,
            min_margin,
            ok,
        }
    }

    /// Best-attempt ordering for not-found results: attempts off the diagonal
    /// first, then by residual.
    fn rank(&self, a: &Attempt) -> (bool, f64) {
        (a.min_separation < self.config.min_separation, a.residual_inf)
    }

    pub fn run(&self) -> Result<SearchResult> {
        self.problem.validate()?;
        self.config.validate()?;
        let mut best: Option<Attempt> = None;
        let mut start = 0;
        while start < self.config.max_restarts {
            let end = (start + RESTART_CHUNK).min(self.config.max_restarts);
            let chunk: Vec<Option<Attempt>> = (start..end).into_par_iter().map(|i| self.attempt(i)).collect();
            for (offset, a) in chunk.into_iter().enumerate() {
                let Some(a) = a else { continue };
                if a.ok {
                    return self.result(a, SearchStatus::Found, start + offset + 1);
                }
                if best.as_ref().is_none_or(|b| self.rank(&a) < self.rank(b)) {
                    best = Some(a);
                }
            }
            start = end;
        }
        match best {
            Some(a) => self.result(a, SearchStatus::NotFound, self.config.max_restarts),
            None => Ok(SearchResult {
                schema: 1,
                status: SearchStatus::NotFound,
                shapes: Vec::new(),
                residual_inf: f64::INFINITY,
                min_pairwise_separation: 0.0,
                min_disjoint_margin: None,
                restarts_used: self.config.max_restarts,
                existence_guaranteed: self.problem.existence_guaranteed(),
            }),
        }
    }

    fn result(&self, a: Attempt, status: SearchStatus, restarts_used: usize) -> Result<SearchResult> {
        Ok(SearchResult {
            schema: 1,
            status,
            shapes: a.params.iter().map(|p| p.to_shape()).collect::<Result<_>>()?,
            residual_inf: a.residual_inf,
            min_pairwise_separation: a.min_separation,
            min_disjoint_margin: a.min_margin,
            restarts_used,
            existence_guaranteed: self.problem.existence_guaranteed(),
        })
    }
}

/// Seeded multistart search for an indiscernible `n`-tuple. Running out of
/// restarts is a `not-found` result, not an error.
pub fn find_indiscernible_tuple(p: &SearchProblem, c: &SearchConfig) -> Result<SearchResult> {
    if p.constraints.require_disjoint && p.constraints.equal_size {
        return find_disjoint_equal_cubes(p, c);
    }
    Engine {
        problem: p,
        config: c,
        layout: if p.constraints.equal_size { Layout::SharedEdge } else { Layout::Independent },
        penalty: p.constraints.require_disjoint,
    }
    .run()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessCheck {
    pub verified: bool,
    #[serde(with = "real::scalar")]
    pub oracle_residual: f64,
}

/// Re-checks a witness with the quadrature oracle and re-confirms the
/// structural constraints.
pub fn verify_witness(r: &SearchResult, p: &SearchProblem, c: &SearchConfig) -> Result<WitnessCheck> {
    if r.shapes.len() != p.n_shapes {
        return Ok(WitnessCheck {
            verified: false,
            oracle_residual: f64::INFINITY,
        });
    }
    let tol = Tolerance {
        abs: 1e-16,
        rel: 1e-14,
        ..Tolerance::default()
    };
    let vectors: Vec<_> = r
        .shapes
        .iter()
        .map(|s| oracle_measure_vector(&p.measures, s, &tol))
        .collect::<Result<_>>()?;
    let oracle_residual = vectors[1..].iter().map(|v| v.max_abs_diff(&vectors[0])).fold(0.0, f64::max);

    let params: Vec<ShapeParams> = r.shapes.iter().map(ShapeParams::from_shape).collect();
    let mut structural = params.iter().all(|q| q.family == p.family && q.dim() == p.dim());
    for a in 0..params.len() {
        for b in a + 1..params.len() {
            structural &= separation(&params[a], &params[b]).is_ok_and(|s| s >= c.min_separation);
            if p.constraints.require_disjoint {
                let (x, y) = (r.shapes[a].bounding_box(), r.shapes[b].bounding_box());
                structural &= disjoint_margin(&x, &y).is_ok_and(|m| m > 0.0);
            }
        }
    }
    if p.constraints.equal_size {
        let e = params[0].log_extents().to_vec();
        structural &= params.iter().all(|q| q.log_extents() == e.as_slice());
    }
    Ok(WitnessCheck {
        verified: structural && oracle_residual < 10.0 * c.tol_residual,
        oracle_residual,
    })
}
