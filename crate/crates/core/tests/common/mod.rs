#![allow(dead_code)]

use discern::geometry::{Cube, Cuboid};
use discern::measures::{MonomialTerm, PolyDensity};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Tensor Gauss–Legendre with enough nodes to integrate every monomial of
/// per-axis degree ≤ 9 exactly.
pub fn gl_box_moment(f: &PolyDensity, lo: &[f64], hi: &[f64]) -> f64 {
    let rule = gauss_legendre(5);
    let d = lo.len();
    let mut total = 0.0;
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    loop {
        let mut w = 1.0;
        for i in 0..d {
            let (t, wi) = rule[idx[i]];
            let h = 0.5 * (hi[i] - lo[i]);
            x[i] = 0.5 * (hi[i] + lo[i]) + h * t;
            w *= wi * h;
        }
        total += w * f.eval(&x);
        let mut axis = 0;
        while axis < d {
            idx[axis] += 1;
            if idx[axis] < rule.len() {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
        if axis == d {
            return total;
        }
    }
}

/// `∫_lo^hi |x|^k dx`.
pub fn abs_power_integral(lo: f64, hi: f64, k: u32) -> f64 {
    let prim = |x: f64| x.abs().powi(k as i32 + 1) / (k as f64 + 1.0) * x.signum();
    prim(hi) - prim(lo)
}

/// `Σ |c_t| ∫ |x^{e_t}|`: the scale against which signed moments are compared.
pub fn abs_scale(f: &PolyDensity, lo: &[f64], hi: &[f64]) -> f64 {
    f.terms()
        .iter()
        .map(|t| {
            t.coeff.abs()
                * t.exps
                    .iter()
                    .enumerate()
                    .map(|(i, &k)| abs_power_integral(lo[i], hi[i], k))
                    .product::<f64>()
        })
        .sum()
}

pub fn random_density(rng: &mut ChaCha8Rng, d: usize, max_exp: u32, n_terms: usize) -> PolyDensity {
    let terms = (0..n_terms)
        .map(|_| {
            let exps = (0..d).map(|_| rng.random_range(0..=max_exp)).collect();
            MonomialTerm::new(rng.random_range(-2.0..2.0), exps)
        })
        .collect();
    PolyDensity::new(d, terms).unwrap()
}

/// Every monomial of total degree ≤ `degree` with a coefficient in [-1, 1].
pub fn random_full_polynomial(rng: &mut ChaCha8Rng, d: usize, degree: u32) -> PolyDensity {
    let mut terms = Vec::new();
    let mut exps = vec![0u32; d];
    loop {
        if exps.iter().sum::<u32>() <= degree {
            terms.push(MonomialTerm::new(rng.random_range(-1.0..1.0), exps.clone()));
        }
        let mut axis = 0;
        while axis < d {
            exps[axis] += 1;
            if exps[axis] <= degree {
                break;
            }
            exps[axis] = 0;
            axis += 1;
        }
        if axis == d {
            return PolyDensity::new(d, terms).unwrap();
        }
    }
}

pub fn random_cuboid(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> Cuboid {
    loop {
        let (mut a, mut b) = (Vec::with_capacity(d), Vec::with_capacity(d));
        for _ in 0..d {
            let (x, y) = (rng.random_range(lo..hi), rng.random_range(lo..hi));
            a.push(x.min(y));
            b.push(x.max(y));
        }
        if let Ok(c) = Cuboid::new(a, b) {
            return c;
        }
    }
}

/// A cuboid strictly inside the open unit cube.
pub fn random_unit_cuboid(rng: &mut ChaCha8Rng, d: usize) -> Cuboid {
    loop {
        let c = random_cuboid(rng, d, 0.0, 1.0);
        if c.strictly_inside_unit_cube() {
            return c;
        }
    }
}

pub fn random_unit_cube(rng: &mut ChaCha8Rng, d: usize) -> Cube {
    let edge: f64 = rng.random_range(0.02..0.98);
    let anchor = (0..d).map(|_| rng.random_range(0.0..1.0 - edge)).collect();
    Cube::new(anchor, edge).unwrap()
}

/// Largest coordinate error relative to `max(1, |coordinate|)`.
pub fn box_error(got: &Cuboid, want: &Cuboid) -> f64 {
    let mut err: f64 = 0.0;
    for i in 0..want.dim() {
        for (g, w) in [(got.lo()[i], want.lo()[i]), (got.hi()[i], want.hi()[i])] {
            err = err.max((g - w).abs() / w.abs().max(1.0));
        }
    }
    err
}
