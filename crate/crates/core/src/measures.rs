//! Closed-form polynomial moments.
//!
//! A measure here is `f dm` for a signed polynomial density `f`. Its value on a
//! box is a sum of products of one-dimensional power integrals; on the image
//! `L(K)` of a unit body it follows from the change of variables
//! `∫_{L(K)} f = det(A) ∫_K f(Ax + b) dx` after binomial expansion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BodyKind, Cuboid, OrbitShape, Shape};
use crate::real;

/// Highest power of a single variable accepted in user-supplied densities.
pub const MAX_EXPONENT: u32 = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonomialTerm {
    #[serde(with = "real::scalar")]
    pub coeff: f64,
    pub exps: Vec<u32>,
}

impl MonomialTerm {
    pub fn new(coeff: f64, exps: Vec<u32>) -> Self {
        MonomialTerm { coeff, exps }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.exps
            .iter()
            .zip(x)
            .fold(self.coeff, |acc, (&k, &v)| acc * v.powi(k as i32))
    }
}

/// Signed polynomial density on `R^dim`; no terms means the zero density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityRepr", into = "DensityRepr")]
pub struct PolyDensity {
    dim: usize,
    terms: Vec<MonomialTerm>,
}

#[derive(Serialize, Deserialize)]
struct DensityRepr {
    dim: usize,
    terms: Vec<MonomialTerm>,
}

impl TryFrom<DensityRepr> for PolyDensity {
    type Error = Error;
    fn try_from(r: DensityRepr) -> Result<Self> {
        PolyDensity::new(r.dim, r.terms)
    }
}

impl From<PolyDensity> for DensityRepr {
    fn from(p: PolyDensity) -> Self {
        DensityRepr {
            dim: p.dim,
            terms: p.terms,
        }
    }
}

impl PolyDensity {
    pub fn new(dim: usize, terms: Vec<MonomialTerm>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be positive"));
        }
        for t in &terms {
            Error::check_dim("exps", dim, t.exps.len())?;
            if let Some(k) = t.exps.iter().find(|&&k| k > MAX_EXPONENT) {
                return Err(Error::invalid(
                    "exps",
                    format!("exponent {k} exceeds the cap {MAX_EXPONENT}"),
                ));
            }
            if !t.coeff.is_finite() {
                return Err(Error::invalid("coeff", "non-finite"));
            }
        }
        Ok(PolyDensity { dim, terms })
    }

    pub fn zero(dim: usize) -> Self {
        PolyDensity { dim, terms: vec![] }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        PolyDensity {
            dim,
            terms: vec![MonomialTerm::new(c, vec![0; dim])],
        }
    }

    /// `coeff · x_axis^power`.
    pub fn axis_power(dim: usize, axis: usize, power: u32, coeff: f64) -> Self {
        let mut exps = vec![0; dim];
        exps[axis] = power;
        PolyDensity {
            dim,
            terms: vec![MonomialTerm::new(coeff, exps)],
        }
    }

    pub fn from_terms(dim: usize, terms: &[(f64, &[u32])]) -> Result<Self> {
        PolyDensity::new(
            dim,
            terms.iter().map(|(c, e)| MonomialTerm::new(*c, e.to_vec())).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[MonomialTerm] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.exps.iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    /// Like terms merged, zero coefficients dropped, exponents sorted.
    pub fn simplified(&self) -> Self {
        let mut terms: Vec<MonomialTerm> = Vec::new();
        let mut sorted = self.terms.clone();
        sorted.sort_by(|a, b| a.exps.cmp(&b.exps));
        for t in sorted {
            match terms.last_mut() {
                Some(last) if last.exps == t.exps => last.coeff += t.coeff,
                _ => terms.push(t),
            }
        }
        terms.retain(|t| t.coeff != 0.0);
        PolyDensity {
            dim: self.dim,
            terms,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        PolyDensity {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|t| MonomialTerm::new(c * t.coeff, t.exps.clone()))
                .collect(),
        }
    }

    pub fn plus(&self, other: &PolyDensity) -> Result<Self> {
        Error::check_dim("density", self.dim, other.dim)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(PolyDensity {
            dim: self.dim,
            terms,
        }
        .simplified())
    }

    /// `∂f/∂x_axis`.
    pub fn partial(&self, axis: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.exps[axis] > 0)
            .map(|t| {
                let mut exps = t.exps.clone();
                exps[axis] -= 1;
                MonomialTerm::new(t.coeff * t.exps[axis] as f64, exps)
            })
            .collect();
        PolyDensity {
            dim: self.dim,
            terms,
        }
    }

    /// `(x_axis - center) · f`.
    pub fn times_offset(&self, axis: usize, center: f64) -> Self {
        let mut terms = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            let mut exps = t.exps.clone();
            exps[axis] += 1;
            terms.push(MonomialTerm::new(t.coeff, exps));
            if center != 0.0 {
                terms.push(MonomialTerm::new(-center * t.coeff, t.exps.clone()));
            }
        }
        PolyDensity {
            dim: self.dim,
            terms,
        }
        .simplified()
    }
}

/// Where the densities of a family live.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    /// All of `R^d`.
    Full,
    /// Shapes must lie in `[0, 1]^d`.
    UnitCube,
    /// Densities given on the unit cube, pulled back to `R^d` through the
    /// coordinatewise logistic map of the given steepness.
    PulledBack { steepness: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilyRepr", into = "FamilyRepr")]
pub struct MeasureFamily {
    densities: Vec<PolyDensity>,
    domain: Domain,
}

#[derive(Serialize, Deserialize)]
struct FamilyRepr {
    densities: Vec<PolyDensity>,
    #[serde(default = "full_domain")]
    domain: Domain,
}

fn full_domain() -> Domain {
    Domain::Full
}

impl TryFrom<FamilyRepr> for MeasureFamily {
    type Error = Error;
    fn try_from(r: FamilyRepr) -> Result<Self> {
        MeasureFamily::new(r.densities, r.domain)
    }
}

impl From<MeasureFamily> for FamilyRepr {
    fn from(f: MeasureFamily) -> Self {
        FamilyRepr {
            densities: f.densities,
            domain: f.domain,
        }
    }
}

impl MeasureFamily {
    pub fn new(densities: Vec<PolyDensity>, domain: Domain) -> Result<Self> {
        let first = densities
            .first()
            .ok_or_else(|| Error::invalid("densities", "at least one density is required"))?;
        for f in &densities {
            Error::check_dim("densities", first.dim, f.dim)?;
        }
        if let Domain::PulledBack { steepness } = domain {
            if !(steepness.is_finite() && steepness > 0.0) {
                return Err(Error::invalid("steepness", "must be positive"));
            }
        }
        Ok(MeasureFamily { densities, domain })
    }

    pub fn densities(&self) -> &[PolyDensity] {
        &self.densities
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn with_domain(&self, domain: Domain) -> Result<Self> {
        MeasureFamily::new(self.densities.clone(), domain)
    }

    pub fn dim(&self) -> usize {
        self.densities[0].dim
    }

    pub fn len(&self) -> usize {
        self.densities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.densities.is_empty()
    }

    /// The first `k` densities, same domain.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.len() {
            return Err(Error::invalid("k", format!("prefix length {k} out of 1..={}", self.len())));
        }
        MeasureFamily::new(self.densities[..k].to_vec(), self.domain)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MomentVector {
    #[serde(with = "real::vector")]
    pub values: Vec<f64>,
}

impl MomentVector {
    pub fn new(values: Vec<f64>) -> Self {
        MomentVector { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs_diff(&self, other: &MomentVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `∫_lo^hi x^k dx`. When `lo` and `hi` have the same sign the difference of
/// powers is taken in factored form `(hi − lo) Σ hi^a lo^b`, whose terms all
/// share one sign; this covers every interval thin relative to its offset.
pub fn power_integral(lo: f64, hi: f64, k: u32) -> f64 {
    let n = k + 1;
    let width = hi - lo;
    if lo * hi > 0.0 || width.abs() < 1e-6 * hi.abs().max(lo.abs()) {
        let mut sum = 0.0;
        let mut hp = 1.0;
        for a in 0..n {
            sum += hp * lo.powi((n - 1 - a) as i32);
            hp *= hi;
        }
        width * sum / n as f64
    } else {
        (hi.powi(n as i32) - lo.powi(n as i32)) / n as f64
    }
}

fn box_monomial_raw(exps: &[u32], lo: &[f64], hi: &[f64]) -> f64 {
    exps.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&k, (&l, &h))| power_integral(l, h, k))
        .product()
}

fn box_moment_raw(f: &PolyDensity, lo: &[f64], hi: &[f64]) -> f64 {
    f.terms
        .iter()
        .map(|t| t.coeff * box_monomial_raw(&t.exps, lo, hi))
        .sum()
}

/// `∫_c ∏ x_i^{k_i} dx`.
pub fn monomial_box_moment(exps: &[u32], c: &Cuboid) -> Result<f64> {
    Error::check_dim("exps", c.dim(), exps.len())?;
    Ok(box_monomial_raw(exps, c.lo(), c.hi()))
}

pub fn poly_box_moment(f: &PolyDensity, c: &Cuboid) -> Result<f64> {
    Error::check_dim("cuboid", f.dim, c.dim())?;
    Ok(box_moment_raw(f, c.lo(), c.hi()))
}

/// Derivatives of `∫_[lo,hi] f` with respect to each `lo_i` and each `hi_i`.
pub fn box_moment_corner_gradient(f: &PolyDensity, lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = lo.len();
    let mut g_lo = vec![0.0; d];
    let mut g_hi = vec![0.0; d];
    for t in &f.terms {
        let factors: Vec<f64> = (0..d).map(|i| power_integral(lo[i], hi[i], t.exps[i])).collect();
        for i in 0..d {
            let others: f64 = (0..d).filter(|&j| j != i).map(|j| factors[j]).product();
            let k = t.exps[i] as i32;
            g_hi[i] += t.coeff * hi[i].powi(k) * others;
            g_lo[i] -= t.coeff * lo[i].powi(k) * others;
        }
    }
    (g_lo, g_hi)
}

/// `Γ(m/2)` for a positive integer `m`.
fn gamma_half(m: u32) -> f64 {
    assert!(m > 0);
    if m % 2 == 0 {
        (1..m / 2).map(|i| i as f64).product()
    } else {
        // Γ(n + 1/2) = (2n)! √π / (4^n n!) = √π ∏_{i<n} (i + 1/2)
        let n = (m - 1) / 2;
        (0..n).map(|i| i as f64 + 0.5).product::<f64>() * std::f64::consts::PI.sqrt()
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `∫_K ∏ x_i^{k_i} dx` over the unit body `K` of the given kind.
pub fn monomial_body_moment(kind: BodyKind, exps: &[u32]) -> f64 {
    if exps.iter().any(|k| k % 2 == 1) {
        return 0.0;
    }
    let d = exps.len() as u32;
    let total: u32 = exps.iter().sum();
    match kind {
        BodyKind::Ball => {
            exps.iter().map(|&k| gamma_half(k + 1)).product::<f64>() / gamma_half(total + d + 2)
        }
        BodyKind::Cube => exps.iter().map(|&k| 2.0 / (k + 1) as f64).product(),
        BodyKind::CrossPolytope => {
            2f64.powi(d as i32) * exps.iter().map(|&k| factorial(k)).product::<f64>()
                / factorial(total + d)
        }
    }
}

pub fn monomial_ball_moment(exps: &[u32]) -> f64 {
    monomial_body_moment(BodyKind::Ball, exps)
}

/// `∫_K x_1^2 / vol(K)`: 1/(d+2) for the ball, 1/3 for the cube,
/// 2/((d+1)(d+2)) for the cross-polytope.
pub fn normalized_second_moment(kind: BodyKind, dim: usize) -> f64 {
    let mut e = vec![0; dim];
    let vol = monomial_body_moment(kind, &e);
    e[0] = 2;
    monomial_body_moment(kind, &e) / vol
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `∫_{L(K)} f`, exact: each `(c_i x_i + b_i)^{k_i}` is expanded binomially
/// and integrated against the unit body; odd body moments vanish.
pub fn orbit_moment(f: &PolyDensity, s: &OrbitShape) -> Result<f64> {
    Error::check_dim("orbit", f.dim, s.dim())?;
    let t = s.transform();
    let kind = s.body().kind;
    let mut total = 0.0;
    let mut exps = vec![0u32; f.dim];
    for term in &f.terms {
        total += term.coeff
            * expand_axes(kind, &term.exps, t.scale(), t.shift(), 0, 1.0, &mut exps);
    }
    Ok(t.det() * total)
}

fn expand_axes(
    kind: BodyKind,
    powers: &[u32],
    scale: &[f64],
    shift: &[f64],
    axis: usize,
    coeff: f64,
    exps: &mut Vec<u32>,
) -> f64 {
    if axis == powers.len() {
        return coeff * monomial_body_moment(kind, exps);
    }
    let k = powers[axis];
    let mut sum = 0.0;
    for j in (0..=k).step_by(2) {
        let c = binomial(k, j) * scale[axis].powi(j as i32) * shift[axis].powi((k - j) as i32);
        exps[axis] = j;
        sum += expand_axes(kind, powers, scale, shift, axis + 1, coeff * c, exps);
    }
    exps[axis] = 0;
    sum
}

/// `1 / (1 + e^{-s x})`, evaluated without overflow.
pub fn logistic(x: f64, steepness: f64) -> f64 {
    let z = steepness * x;
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Pullback of `f dm|_(0,1)^d` through the coordinatewise logistic map: the
/// measure of `c` equals the original measure of its image box.
pub fn pulledback_box_measure(f: &PolyDensity, c: &Cuboid, steepness: f64) -> Result<f64> {
    Error::check_dim("cuboid", f.dim, c.dim())?;
    let lo: Vec<f64> = c.lo().iter().map(|&x| logistic(x, steepness)).collect();
    let hi: Vec<f64> = c.hi().iter().map(|&x| logistic(x, steepness)).collect();
    Ok(box_moment_raw(f, &lo, &hi))
}

/// One-dimensional density in `x_axis` obtained by integrating the other
/// coordinates over the box; supported on `[lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisMarginal {
    pub density: PolyDensity,
    pub lo: f64,
    pub hi: f64,
}

impl AxisMarginal {
    pub fn total(&self) -> f64 {
        box_moment_raw(&self.density, &[self.lo], &[self.hi])
    }
}

pub fn axis_marginal(f: &PolyDensity, c: &Cuboid, axis: usize) -> Result<AxisMarginal> {
    Error::check_dim("cuboid", f.dim, c.dim())?;
    if axis >= f.dim {
        return Err(Error::invalid("axis", format!("{axis} out of range for dimension {}", f.dim)));
    }
    let terms = f
        .terms
        .iter()
        .map(|t| {
            let rest: f64 = (0..f.dim)
                .filter(|&i| i != axis)
                .map(|i| power_integral(c.lo()[i], c.hi()[i], t.exps[i]))
                .product();
            MonomialTerm::new(t.coeff * rest, vec![t.exps[axis]])
        })
        .collect();
    Ok(AxisMarginal {
        density: PolyDensity { dim: 1, terms }.simplified(),
        lo: c.lo()[axis],
        hi: c.hi()[axis],
    })
}

/// The measure of one shape under one density, honouring the domain.
pub fn shape_moment(f: &PolyDensity, domain: Domain, shape: &Shape) -> Result<f64> {
    Error::check_dim("shape", f.dim, shape.dim())?;
    match (shape, domain) {
        (Shape::Orbit(o), Domain::Full) => orbit_moment(f, o),
        (Shape::Orbit(o), Domain::UnitCube) => {
            o.bounding_box().check_in_unit_cube()?;
            orbit_moment(f, o)
        }
        (Shape::Orbit(_), Domain::PulledBack { .. }) => Err(Error::Unsupported(
            "pulled-back measures are defined on boxes only".into(),
        )),
        (_, Domain::Full) => poly_box_moment(f, &shape.bounding_box()),
        (_, Domain::UnitCube) => {
            let b = shape.bounding_box();
            b.check_in_unit_cube()?;
            poly_box_moment(f, &b)
        }
        (_, Domain::PulledBack { steepness }) => {
            pulledback_box_measure(f, &shape.bounding_box(), steepness)
        }
    }
}

pub fn measure_vector(fam: &MeasureFamily, shape: &Shape) -> Result<MomentVector> {
    Error::check_dim("shape", fam.dim(), shape.dim())?;
    fam.densities
        .iter()
        .map(|f| shape_moment(f, fam.domain, shape))
        .collect::<Result<Vec<_>>>()
        .map(MomentVector::new)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{apply_transform, AxisTransform, Cube, SymmetricBody};
    use std::f64::consts::PI;

    fn cuboid(lo: &[f64], hi: &[f64]) -> Cuboid {
        Cuboid::new(lo.to_vec(), hi.to_vec()).unwrap()
    }

    #[test]
    fn monomial_examples() {
        assert_eq!(monomial_box_moment(&[0, 0], &cuboid(&[0.0, 0.0], &[1.0, 1.0])).unwrap(), 1.0);
        assert_eq!(monomial_box_moment(&[3, 0], &cuboid(&[0.0, 0.0], &[1.0, 1.0])).unwrap(), 0.25);
        assert_eq!(monomial_box_moment(&[1], &cuboid(&[-1.0], &[1.0])).unwrap(), 0.0);
        assert!(monomial_box_moment(&[1, 2], &cuboid(&[0.0], &[1.0])).is_err());
    }

    #[test]
    fn thin_interval_uses_factored_form() {
        let (lo, hi) = (1e8, 1e8 + 1e-3);
        let w = hi - lo;
        // (hi^3 - lo^3)/3 = w (lo^2 + lo w + w^2/3)
        let exact = w * (lo * lo + lo * w + w * w / 3.0);
        let got = power_integral(lo, hi, 2);
        assert!((got - exact).abs() / exact < 1e-9, "{got} vs {exact}");
    }

    #[test]
    fn zero_density_vanishes() {
        let c = cuboid(&[-3.0, 1.0], &[2.0, 4.0]);
        assert_eq!(poly_box_moment(&PolyDensity::zero(2), &c).unwrap(), 0.0);
    }

    #[test]
    fn unit_cube_domain_rejects_outside_boxes() {
        let fam = MeasureFamily::new(vec![PolyDensity::constant(1, 1.0)], Domain::UnitCube).unwrap();
        let err = measure_vector(&fam, &Shape::Cuboid(cuboid(&[0.5], &[1.5]))).unwrap_err();
        assert!(matches!(err, Error::DomainViolation { axis: 0, .. }));
    }

    #[test]
    fn body_moments_closed_forms() {
        assert!((monomial_ball_moment(&[0, 0]) - PI).abs() < 1e-15);
        assert!((monomial_ball_moment(&[2, 0]) - PI / 4.0).abs() < 1e-15);
        assert!((monomial_ball_moment(&[0, 0, 0]) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert_eq!(monomial_ball_moment(&[1, 2]), 0.0);
        assert_eq!(monomial_ball_moment(&[2, 3, 0]), 0.0);
        assert_eq!(monomial_body_moment(BodyKind::Cube, &[0, 0, 0]), 8.0);
        assert!((monomial_body_moment(BodyKind::CrossPolytope, &[0, 0]) - 2.0).abs() < 1e-15);
        assert!((monomial_body_moment(BodyKind::CrossPolytope, &[2, 0]) - 1.0 / 3.0).abs() < 1e-15);
        assert!((normalized_second_moment(BodyKind::Ball, 3) - 0.2).abs() < 1e-15);
        assert!((normalized_second_moment(BodyKind::Cube, 2) - 1.0 / 3.0).abs() < 1e-15);
        assert!((normalized_second_moment(BodyKind::CrossPolytope, 2) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn scaled_ball_volume() {
        let t = AxisTransform::new(vec![2.0, 3.0], vec![-7.0, 11.5]).unwrap();
        let o = apply_transform(&t, SymmetricBody::new(BodyKind::Ball, 2).unwrap()).unwrap();
        let v = orbit_moment(&PolyDensity::constant(2, 1.0), &o).unwrap();
        assert!((v - 6.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn orbit_of_unit_cube_matches_box_moments() {
        let f = PolyDensity::from_terms(2, &[(1.5, &[3, 1]), (-2.0, &[0, 2]), (0.5, &[1, 0])]).unwrap();
        let t = AxisTransform::new(vec![0.5, 2.0], vec![1.0, -0.25]).unwrap();
        let o = apply_transform(&t, SymmetricBody::new(BodyKind::Cube, 2).unwrap()).unwrap();
        let a = orbit_moment(&f, &o).unwrap();
        let b = poly_box_moment(&f, &o.bounding_box()).unwrap();
        assert!((a - b).abs() < 1e-13 * b.abs().max(1.0));
    }

    #[test]
    fn example_families_on_small_boxes() {
        let one_minus_x = PolyDensity::from_terms(1, &[(1.0, &[0]), (-1.0, &[1])]).unwrap();
        let x = PolyDensity::axis_power(1, 0, 1, 1.0);
        let fam = MeasureFamily::new(vec![one_minus_x, x], Domain::UnitCube).unwrap();
        let m = measure_vector(&fam, &Shape::Cuboid(cuboid(&[0.0], &[0.5]))).unwrap();
        assert!((m.values[0] - 0.375).abs() < 1e-15 && (m.values[1] - 0.125).abs() < 1e-15);

        let fam = MeasureFamily::new(
            vec![
                PolyDensity::from_terms(2, &[(1.0, &[1, 1])]).unwrap(),
                PolyDensity::from_terms(2, &[(1.0, &[0, 1]), (-1.0, &[1, 1])]).unwrap(),
                PolyDensity::from_terms(2, &[(1.0, &[0, 0]), (-1.0, &[0, 1])]).unwrap(),
            ],
            Domain::UnitCube,
        )
        .unwrap();
        let c = Shape::Cube(Cube::new(vec![0.25, 0.25], 0.5).unwrap());
        let m = measure_vector(&fam, &c).unwrap();
        for (got, want) in m.values.iter().zip([1.0 / 16.0, 1.0 / 16.0, 1.0 / 8.0]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn pullback_examples() {
        let one = PolyDensity::constant(1, 1.0);
        let v = pulledback_box_measure(&one, &cuboid(&[-100.0], &[100.0]), 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let x = PolyDensity::axis_power(1, 0, 1, 1.0);
        let v = pulledback_box_measure(&x, &cuboid(&[0.0], &[100.0]), 1.0).unwrap();
        assert!((v - 0.375).abs() < 1e-15);
        // saturated corners give an empty image box, not an error
        assert_eq!(pulledback_box_measure(&one, &cuboid(&[50.0], &[60.0]), 1.0).unwrap(), 0.0);
        let fam = MeasureFamily::new(vec![x.clone()], Domain::PulledBack { steepness: 1.0 }).unwrap();
        let sym = cuboid(&[-0.7], &[0.7]);
        let image = cuboid(&[logistic(-0.7, 1.0)], &[logistic(0.7, 1.0)]);
        assert_eq!(
            measure_vector(&fam, &Shape::Cuboid(sym)).unwrap().values[0],
            poly_box_moment(&x, &image).unwrap()
        );
    }

    #[test]
    fn marginal_examples() {
        let unit = cuboid(&[0.0, 0.0], &[1.0, 1.0]);
        let m = axis_marginal(&PolyDensity::constant(2, 1.0), &unit, 0).unwrap();
        assert_eq!(m.density, PolyDensity::constant(1, 1.0));
        assert_eq!((m.lo, m.hi), (0.0, 1.0));

        let m = axis_marginal(&PolyDensity::from_terms(2, &[(1.0, &[1, 1])]).unwrap(), &unit, 0).unwrap();
        assert_eq!(m.density, PolyDensity::axis_power(1, 0, 1, 0.5));

        let c = cuboid(&[0.0, -1.0], &[2.0, 1.0]);
        let m = axis_marginal(&PolyDensity::axis_power(2, 1, 2, 1.0), &c, 0).unwrap();
        assert_eq!(m.density.terms().len(), 1);
        assert!((m.density.terms()[0].coeff - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.density.terms()[0].exps, vec![0]);
    }

    #[test]
    fn density_json_shape() {
        let f: PolyDensity =
            serde_json::from_str(r#"{"dim":2,"terms":[{"coeff":1,"exps":[1,0]}]}"#).unwrap();
        assert_eq!(f, PolyDensity::axis_power(2, 0, 1, 1.0));
        assert!(serde_json::from_str::<PolyDensity>(r#"{"dim":2,"terms":[{"coeff":1,"exps":[1]}]}"#).is_err());
        assert!(serde_json::from_str::<PolyDensity>(r#"{"dim":1,"terms":[{"coeff":1,"exps":[9]}]}"#).is_err());
        let fam: MeasureFamily = serde_json::from_str(
            r#"{"densities":[{"dim":1,"terms":[]}],"domain":{"pulled-back":{"steepness":2}}}"#,
        )
        .unwrap();
        assert_eq!(fam.domain(), Domain::PulledBack { steepness: 2.0 });
        let back: MeasureFamily = serde_json::from_str(&serde_json::to_string(&fam).unwrap()).unwrap();
        assert_eq!(back, fam);
        let fam: MeasureFamily =
            serde_json::from_str(r#"{"densities":[{"dim":1,"terms":[]}],"domain":"unit-cube"}"#).unwrap();
        assert_eq!(fam.domain(), Domain::UnitCube);
    }

    #[test]
    fn partial_and_offset() {
        let f = PolyDensity::from_terms(2, &[(3.0, &[2, 1]), (1.0, &[0, 1])]).unwrap();
        let p = f.partial(0);
        assert_eq!(p, PolyDensity::from_terms(2, &[(6.0, &[1, 1])]).unwrap());
        let q = PolyDensity::axis_power(1, 0, 1, 1.0).times_offset(0, 2.0);
        assert_eq!(q, PolyDensity::from_terms(1, &[(-2.0, &[1]), (1.0, &[2])]).unwrap());
    }
}
