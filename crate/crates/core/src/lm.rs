//! Damped Gauss–Newton (Levenberg) iteration for square, over- and
//! underdetermined systems. Underdetermined steps are minimum-norm:
//! `δ = -Jᵀ (J Jᵀ + λ I)^{-1} r`.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug)]
pub struct LmSettings {
    pub max_iterations: usize,
    pub lambda_init: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub lambda_max: f64,
    /// Stop once `‖r‖∞` drops to this value.
    pub target: f64,
    /// Stop once an accepted step is this small relative to `‖x‖`.
    pub step_tol: f64,
}

impl Default for LmSettings {
    fn default() -> Self {
        LmSettings {
            max_iterations: 500,
            lambda_init: 1e-3,
            lambda_up: 10.0,
            lambda_down: 10.0,
            lambda_max: 1e14,
            target: 0.0,
            step_tol: 1e-15,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    pub residual: Vec<f64>,
    pub residual_inf: f64,
    pub iterations: usize,
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `eval` returns `None` when the point is outside the usable region (for
/// example an extent overflowed); such trial steps are treated as failures.
/// Returns `None` if the starting point itself cannot be evaluated.
pub fn minimize<F>(x0: Vec<f64>, mut eval: F, s: &LmSettings) -> Option<LmOutcome>
where
    F: FnMut(&[f64]) -> Option<(DVector<f64>, DMatrix<f64>)>,
{
    let mut x = DVector::from_vec(x0);
    let (mut r, mut jac) = eval(x.as_slice())?;
    if r.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut cost = r.norm_squared();
    let mut lambda = s.lambda_init;
    let mut iterations = 0;
    while iterations < s.max_iterations && inf_norm(&r) > s.target && lambda <= s.lambda_max {
        iterations += 1;
        let Some(step) = damped_step(&jac, &r, lambda) else {
            lambda *= s.lambda_up;
            continue;
        };
        let trial = &x + &step;
        match eval(trial.as_slice()) {
            Some((rt, jt)) if rt.iter().all(|v| v.is_finite()) && rt.norm_squared() < cost => {
                let small = step.norm() <= s.step_tol * (x.norm() + s.step_tol);
                x = trial;
                cost = rt.norm_squared();
                r = rt;
                jac = jt;
                lambda = (lambda / s.lambda_down).max(1e-15);
                if small {
                    break;
                }
            }
            _ => lambda *= s.lambda_up,
        }
    }
    Some(LmOutcome {
        residual_inf: inf_norm(&r),
        residual: r.as_slice().to_vec(),
        x: x.as_slice().to_vec(),
        iterations,
    })
}

/// Damping is relative to the mean diagonal of the normal matrix so the
/// iteration does not depend on the overall scale of the residuals.
fn damped_step(jac: &DMatrix<f64>, r: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let (m, p) = jac.shape();
    if m <= p {
        let mut normal = jac * jac.transpose();
        let mu = lambda * (normal.trace() / m as f64).max(f64::MIN_POSITIVE);
        for i in 0..m {
            normal[(i, i)] += mu;
        }
        let y = normal.cholesky()?.solve(r);
        Some(-(jac.transpose() * y))
    } else {
        let mut normal = jac.transpose() * jac;
        let mu = lambda * (normal.trace() / p as f64).max(f64::MIN_POSITIVE);
        for i in 0..p {
            normal[(i, i)] += mu;
        }
        Some(-normal.cholesky()?.solve(&(jac.transpose() * r)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_square_nonlinear_system() {
        // x^2 + y^2 = 4, x - y = 0 → (√2, √2) from a positive start
        let eval = |x: &[f64]| {
            let r = DVector::from_vec(vec![x[0] * x[0] + x[1] * x[1] - 4.0, x[0] - x[1]]);
            let j = DMatrix::from_row_slice(2, 2, &[2.0 * x[0], 2.0 * x[1], 1.0, -1.0]);
            Some((r, j))
        };
        let out = minimize(vec![1.0, 0.5], eval, &LmSettings::default()).unwrap();
        assert!(out.residual_inf < 1e-14);
        assert!((out.x[0] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn underdetermined_step_is_minimum_norm() {
        // single linear equation x + y = 2 from the origin → (1, 1)
        let eval = |x: &[f64]| {
            Some((
                DVector::from_vec(vec![x[0] + x[1] - 2.0]),
                DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            ))
        };
        let out = minimize(vec![0.0, 0.0], eval, &LmSettings::default()).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-10 && (out.x[1] - 1.0).abs() < 1e-10);
    }
}
