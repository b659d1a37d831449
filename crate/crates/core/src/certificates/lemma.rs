use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{power_integral, PolyDensity};
use crate::real;

/// An increasing affine function `u(x) = a x + b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearMap {
    #[serde(with = "real::scalar")]
    pub a: f64,
    #[serde(with = "real::scalar")]
    pub b: f64,
}

impl LinearMap {
    pub fn eval(&self, x: f64) -> f64 {
        self.a * x + self.b
    }
}

const NONNEGATIVITY_SAMPLES: usize = 2001;

/// Finds the unique increasing `u = a x + b` with `∫ u α = m1` and
/// `∫ u² α = m2`, where `α` lives on `support` and is even about its centre.
pub fn solve_lemma_moment(alpha: &PolyDensity, support: (f64, f64), m1: f64, m2: f64) -> Result<LinearMap> {
    Error::check_dim("alpha", 1, alpha.dim())?;
    let (lo, hi) = support;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid("support", format!("[{lo}, {hi}] is not a proper interval")));
    }
    if !(m1.is_finite() && m2.is_finite()) {
        return Err(Error::invalid("m1/m2", "non-finite moment"));
    }
    let r = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);

    // coefficients of α(r + t) in powers of t
    let mut coeffs = vec![0.0; alpha.degree() as usize + 1];
    for term in alpha.terms() {
        let k = term.exps[0] as usize;
        let mut binom = 1.0;
        for j in 0..=k {
            coeffs[j] += term.coeff * binom * r.powi((k - j) as i32);
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }
    let scale = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c.abs() * h.powi(k as i32))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    for (k, c) in coeffs.iter().enumerate().skip(1).step_by(2) {
        if c.abs() * h.powi(k as i32) > 1e-12 * scale {
            return Err(Error::Precondition(format!(
                "density is not even about {r}: coefficient of t^{k} is {c:e}"
            )));
        }
    }
    for i in 0..NONNEGATIVITY_SAMPLES {
        let x = lo + (hi - lo) * i as f64 / (NONNEGATIVITY_SAMPLES - 1) as f64;
        let v = alpha.eval(&[x]);
        if v < -1e-12 * scale {
            return Err(Error::Precondition(format!("density is negative at {x}: {v:e}")));
        }
    }

    let moment = |p: i32| -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * power_integral(-h, h, k as u32 + p as u32))
            .sum()
    };
    let mass = moment(0);
    if !(mass > 0.0) {
        return Err(Error::Precondition(format!("total mass {mass:e} is not positive")));
    }
    let second = moment(2);
    let b0 = m1 / mass;
    let deficit = m2 - b0 * b0 * mass;
    if !(deficit > 0.0) || !(second > 0.0) {
        return Err(Error::NoIncreasingSolution { deficit });
    }
    let a = (deficit / second).sqrt();
    Ok(LinearMap { a, b: b0 - a * r })
}
