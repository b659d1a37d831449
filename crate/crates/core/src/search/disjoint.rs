//! Disjoint witnesses: an overlap penalty pushes the boxes apart during a
//! first solve, then the moment equations alone are polished.

use nalgebra::{DMatrix, DVector};

use super::{Constraints, Engine, Layout, SearchConfig, SearchProblem, SearchResult};
use crate::error::{Error, Result};
use crate::geometry::{disjoint_margin, Family};

/// Boxes closer than this fraction of their smallest extent are penalized.
const CLEARANCE: f64 = 0.1;

pub(super) fn penalty_rows(n: usize) -> usize {
    n * (n - 1) / 2
}

fn penalties(engine: &Engine<'_>, x: &[f64]) -> Option<Vec<f64>> {
    let boxes = engine
        .unpack(x)
        .iter()
        .map(|p| p.to_cuboid().ok())
        .collect::<Option<Vec<_>>>()?;
    let mut out = Vec::with_capacity(penalty_rows(boxes.len()));
    for a in 0..boxes.len() {
        for b in a + 1..boxes.len() {
            let smallest = boxes[a].widths().into_iter().chain(boxes[b].widths()).fold(f64::INFINITY, f64::min);
            let margin = disjoint_margin(&boxes[a], &boxes[b]).ok()?;
            out.push((CLEARANCE * smallest - margin).max(0.0));
        }
    }
    Some(out)
}

/// Writes the penalty rows starting at `offset`; derivatives by central
/// differences since the margin is only piecewise smooth.
pub(super) fn fill_penalty(engine: &Engine<'_>, x: &[f64], offset: usize, r: &mut DVector<f64>, jac: &mut DMatrix<f64>) -> Option<()> {
    let base = penalties(engine, x)?;
    for (i, v) in base.iter().enumerate() {
        r[offset + i] = *v;
    }
    let mut probe = x.to_vec();
    for col in 0..x.len() {
        let h = 1e-7 * x[col].abs().max(1.0);
        probe[col] = x[col] + h;
        let plus = penalties(engine, &probe)?;
        probe[col] = x[col] - h;
        let minus = penalties(engine, &probe)?;
        probe[col] = x[col];
        for i in 0..base.len() {
            jac[(offset + i, col)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Some(())
}

/// `n` pairwise disjoint cubes of one common size with equal moments. The
/// unknowns are the `n·d` anchors and one shared log-edge.
pub fn find_disjoint_equal_cubes(p: &SearchProblem, c: &SearchConfig) -> Result<SearchResult> {
    if p.family != Family::Cube {
        return Err(Error::invalid("family", "disjoint equal-size search needs cubes"));
    }
    if p.dim() < 2 {
        return Err(Error::invalid("measures", "disjoint equal-size search needs d >= 2"));
    }
    let problem = SearchProblem {
        constraints: Constraints {
            require_disjoint: true,
            equal_size: true,
        },
        ..p.clone()
    };
    Engine {
        problem: &problem,
        config: c,
        layout: Layout::SharedEdge,
        penalty: true,
    }
    .run()
}
