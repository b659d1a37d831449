//! Shape families and their search coordinates.
//!
//! Three families are supported: axis-aligned cubes, axis-aligned cuboids, and
//! images of a centrally symmetric unit body under positive axis dilatations
//! followed by translations. Every family element maps one-to-one onto an
//! unconstrained coordinate vector ([`ShapeParams`]); widths and scales enter
//! through their logarithms so every real vector is a valid, nondegenerate shape.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real;

fn check_finite(field: &'static str, xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(field, "non-finite coordinate"))
    }
}

/// Axis-aligned cube `[anchor, anchor + edge]^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CubeRepr", into = "CubeRepr")]
pub struct Cube {
    anchor: Vec<f64>,
    edge: f64,
}

#[derive(Serialize, Deserialize)]
struct CubeRepr {
    #[serde(with = "real::vector")]
    anchor: Vec<f64>,
    #[serde(with = "real::scalar")]
    edge: f64,
}

impl TryFrom<CubeRepr> for Cube {
    type Error = Error;
    fn try_from(r: CubeRepr) -> Result<Self> {
        Cube::new(r.anchor, r.edge)
    }
}

impl From<Cube> for CubeRepr {
    fn from(c: Cube) -> Self {
        CubeRepr {
            anchor: c.anchor,
            edge: c.edge,
        }
    }
}

impl Cube {
    pub fn new(anchor: Vec<f64>, edge: f64) -> Result<Self> {
        if anchor.is_empty() {
            return Err(Error::invalid("anchor", "empty"));
        }
        check_finite("anchor", &anchor)?;
        if !(edge.is_finite() && edge > 0.0) {
            return Err(Error::invalid("edge", format!("must be positive, got {edge}")));
        }
        Ok(Cube { anchor, edge })
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn edge(&self) -> f64 {
        self.edge
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn to_cuboid(&self) -> Cuboid {
        Cuboid {
            lo: self.anchor.clone(),
            hi: self.anchor.iter().map(|a| a + self.edge).collect(),
        }
    }
}

/// Nondegenerate axis-aligned box `[lo_1, hi_1] × … × [lo_d, hi_d]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CuboidRepr", into = "CuboidRepr")]
pub struct Cuboid {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CuboidRepr {
    #[serde(with = "real::vector")]
    lo: Vec<f64>,
    #[serde(with = "real::vector")]
    hi: Vec<f64>,
}

impl TryFrom<CuboidRepr> for Cuboid {
    type Error = Error;
    fn try_from(r: CuboidRepr) -> Result<Self> {
        Cuboid::new(r.lo, r.hi)
    }
}

impl From<Cuboid> for CuboidRepr {
    fn from(c: Cuboid) -> Self {
        CuboidRepr { lo: c.lo, hi: c.hi }
    }
}

impl Cuboid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() {
            return Err(Error::invalid("lo", "empty"));
        }
        Error::check_dim("hi", lo.len(), hi.len())?;
        check_finite("lo", &lo)?;
        check_finite("hi", &hi)?;
        if let Some(i) = (0..lo.len()).find(|&i| lo[i] >= hi[i]) {
            return Err(Error::invalid(
                "hi",
                format!("axis {i}: lo {} is not below hi {}", lo[i], hi[i]),
            ));
        }
        Ok(Cuboid { lo, hi })
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).collect()
    }

    pub fn mids(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn volume(&self) -> f64 {
        self.widths().iter().product()
    }

    /// Closed containment in `[0, 1]^d`; reports the first offending axis.
    pub fn check_in_unit_cube(&self) -> Result<()> {
        for (axis, (&lo, &hi)) in self.lo.iter().zip(&self.hi).enumerate() {
            if lo < 0.0 || hi > 1.0 {
                return Err(Error::DomainViolation { axis, lo, hi });
            }
        }
        Ok(())
    }

    pub fn strictly_inside_unit_cube(&self) -> bool {
        self.lo.iter().all(|&l| l > 0.0) && self.hi.iter().all(|&h| h < 1.0)
    }
}

/// `x ↦ diag(scale) x + shift` with positive scales.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TransformRepr", into = "TransformRepr")]
pub struct AxisTransform {
    scale: Vec<f64>,
    shift: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TransformRepr {
    #[serde(with = "real::vector")]
    scale: Vec<f64>,
    #[serde(with = "real::vector")]
    shift: Vec<f64>,
}

impl TryFrom<TransformRepr> for AxisTransform {
    type Error = Error;
    fn try_from(r: TransformRepr) -> Result<Self> {
        AxisTransform::new(r.scale, r.shift)
    }
}

impl From<AxisTransform> for TransformRepr {
    fn from(t: AxisTransform) -> Self {
        TransformRepr {
            scale: t.scale,
            shift: t.shift,
        }
    }
}

impl AxisTransform {
    pub fn new(scale: Vec<f64>, shift: Vec<f64>) -> Result<Self> {
        if scale.is_empty() {
            return Err(Error::invalid("scale", "empty"));
        }
        Error::check_dim("shift", scale.len(), shift.len())?;
        check_finite("shift", &shift)?;
        if let Some(s) = scale.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::invalid("scale", format!("must be positive, got {s}")));
        }
        Ok(AxisTransform { scale, shift })
    }

    pub fn identity(dim: usize) -> Self {
        AxisTransform {
            scale: vec![1.0; dim],
            shift: vec![0.0; dim],
        }
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    pub fn det(&self) -> f64 {
        self.scale.iter().product()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.scale.iter().zip(&self.shift))
            .map(|(x, (c, b))| c * x + b)
            .collect()
    }

    /// `self ∘ inner`, i.e. `x ↦ self(inner(x))`.
    pub fn compose(&self, inner: &AxisTransform) -> Result<AxisTransform> {
        Error::check_dim("transform", self.dim(), inner.dim())?;
        let scale = self.scale.iter().zip(&inner.scale).map(|(a, b)| a * b).collect();
        let shift = self.apply(&inner.shift);
        Ok(AxisTransform { scale, shift })
    }

    pub fn inverse(&self) -> AxisTransform {
        let scale: Vec<f64> = self.scale.iter().map(|c| 1.0 / c).collect();
        let shift = self.shift.iter().zip(&scale).map(|(b, r)| -b * r).collect();
        AxisTransform { scale, shift }
    }
}

/// Centrally symmetric unit bodies centred at the origin: the Euclidean unit
/// ball, the cube `[-1, 1]^d`, and the cross-polytope `Σ|x_i| ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BodyKind {
    Ball,
    Cube,
    CrossPolytope,
}

impl BodyKind {
    pub fn name(self) -> &'static str {
        match self {
            BodyKind::Ball => "ball",
            BodyKind::Cube => "cube",
            BodyKind::CrossPolytope => "cross-polytope",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ball" => Some(BodyKind::Ball),
            "cube" => Some(BodyKind::Cube),
            "cross-polytope" => Some(BodyKind::CrossPolytope),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SymmetricBody {
    pub kind: BodyKind,
    pub dim: usize,
}

impl SymmetricBody {
    pub fn new(kind: BodyKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be positive"));
        }
        Ok(SymmetricBody { kind, dim })
    }

    /// Membership of a point in the closed unit body.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self.kind {
            BodyKind::Ball => x.iter().map(|v| v * v).sum::<f64>() <= 1.0,
            BodyKind::Cube => x.iter().all(|v| v.abs() <= 1.0),
            BodyKind::CrossPolytope => x.iter().map(|v| v.abs()).sum::<f64>() <= 1.0,
        }
    }
}

/// Image `L(K)` of a unit body under an axis transform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OrbitRepr", into = "OrbitRepr")]
pub struct OrbitShape {
    body: SymmetricBody,
    transform: AxisTransform,
}

#[derive(Serialize, Deserialize)]
struct OrbitRepr {
    body: BodyKind,
    #[serde(with = "real::vector")]
    scale: Vec<f64>,
    #[serde(with = "real::vector")]
    shift: Vec<f64>,
}

impl TryFrom<OrbitRepr> for OrbitShape {
    type Error = Error;
    fn try_from(r: OrbitRepr) -> Result<Self> {
        let transform = AxisTransform::new(r.scale, r.shift)?;
        let body = SymmetricBody::new(r.body, transform.dim())?;
        apply_transform(&transform, body)
    }
}

impl From<OrbitShape> for OrbitRepr {
    fn from(o: OrbitShape) -> Self {
        OrbitRepr {
            body: o.body.kind,
            scale: o.transform.scale,
            shift: o.transform.shift,
        }
    }
}

impl OrbitShape {
    pub fn body(&self) -> SymmetricBody {
        self.body
    }

    pub fn transform(&self) -> &AxisTransform {
        &self.transform
    }

    pub fn dim(&self) -> usize {
        self.body.dim
    }

    /// Every supported body spans exactly `[-1, 1]` on each axis.
    pub fn bounding_box(&self) -> Cuboid {
        let t = &self.transform;
        Cuboid {
            lo: t.shift.iter().zip(&t.scale).map(|(b, c)| b - c).collect(),
            hi: t.shift.iter().zip(&t.scale).map(|(b, c)| b + c).collect(),
        }
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        self.body.contains(&self.transform.inverse().apply(y))
    }
}

pub fn apply_transform(t: &AxisTransform, body: SymmetricBody) -> Result<OrbitShape> {
    Error::check_dim("transform", body.dim, t.dim())?;
    Ok(OrbitShape {
        body,
        transform: t.clone(),
    })
}

/// A concrete element of one of the shape families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Cube(Cube),
    Cuboid(Cuboid),
    Orbit(OrbitShape),
}

impl Shape {
    pub fn dim(&self) -> usize {
        match self {
            Shape::Cube(c) => c.dim(),
            Shape::Cuboid(c) => c.dim(),
            Shape::Orbit(o) => o.dim(),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Shape::Cube(_) => Family::Cube,
            Shape::Cuboid(_) => Family::Cuboid,
            Shape::Orbit(o) => Family::Orbit(o.body.kind),
        }
    }

    /// The box itself for cubes and cuboids; the bounding box for orbits.
    pub fn bounding_box(&self) -> Cuboid {
        match self {
            Shape::Cube(c) => c.to_cuboid(),
            Shape::Cuboid(c) => c.clone(),
            Shape::Orbit(o) => o.bounding_box(),
        }
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        match self {
            Shape::Orbit(o) => o.contains(y),
            _ => {
                let b = self.bounding_box();
                y.iter()
                    .zip(b.lo.iter().zip(&b.hi))
                    .all(|(v, (l, h))| l <= v && v <= h)
            }
        }
    }
}

impl From<Cube> for Shape {
    fn from(c: Cube) -> Self {
        Shape::Cube(c)
    }
}

impl From<Cuboid> for Shape {
    fn from(c: Cuboid) -> Self {
        Shape::Cuboid(c)
    }
}

impl From<OrbitShape> for Shape {
    fn from(o: OrbitShape) -> Self {
        Shape::Orbit(o)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Cube,
    Cuboid,
    Orbit(BodyKind),
}

impl Family {
    /// Number of search coordinates per shape.
    pub fn param_len(self, dim: usize) -> usize {
        match self {
            Family::Cube => dim + 1,
            Family::Cuboid | Family::Orbit(_) => 2 * dim,
        }
    }

    pub fn dim_from_len(self, len: usize) -> Option<usize> {
        match self {
            Family::Cube if len >= 2 => Some(len - 1),
            Family::Cuboid | Family::Orbit(_) if len >= 2 && len % 2 == 0 => Some(len / 2),
            _ => None,
        }
    }

    pub fn name(self) -> String {
        match self {
            Family::Cube => "cube".into(),
            Family::Cuboid => "cuboid".into(),
            Family::Orbit(b) => format!("orbit-{}", b.name()),
        }
    }

    /// Inverse of [`Family::name`].
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cube" => Some(Family::Cube),
            "cuboid" => Some(Family::Cuboid),
            _ => s.strip_prefix("orbit-").and_then(BodyKind::parse).map(Family::Orbit),
        }
    }
}

/// Unconstrained coordinates of a family element.
///
/// * cube: `d` anchor coordinates followed by `ln(edge)`;
/// * cuboid: `d` midpoints followed by `d` log-widths;
/// * orbit: `d` shifts (the body centre) followed by `d` log-scales.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeParams {
    pub family: Family,
    #[serde(with = "real::vector")]
    pub coords: Vec<f64>,
}

impl ShapeParams {
    pub fn new(family: Family, coords: Vec<f64>) -> Result<Self> {
        if family.dim_from_len(coords.len()).is_none() {
            return Err(Error::invalid(
                "coords",
                format!("length {} does not fit family {}", coords.len(), family.name()),
            ));
        }
        check_finite("coords", &coords)?;
        Ok(ShapeParams { family, coords })
    }

    pub fn dim(&self) -> usize {
        self.family
            .dim_from_len(self.coords.len())
            .expect("length validated at construction")
    }

    /// Logarithms of the edge (cube), widths (cuboid) or scales (orbit).
    pub fn log_extents(&self) -> &[f64] {
        let d = self.dim();
        &self.coords[d..]
    }

    pub fn from_shape(shape: &Shape) -> ShapeParams {
        let (family, coords) = match shape {
            Shape::Cube(c) => {
                let mut v = c.anchor.clone();
                v.push(c.edge.ln());
                (Family::Cube, v)
            }
            Shape::Cuboid(c) => {
                let mut v = c.mids();
                v.extend(c.widths().iter().map(|w| w.ln()));
                (Family::Cuboid, v)
            }
            Shape::Orbit(o) => {
                let mut v = o.transform.shift.clone();
                v.extend(o.transform.scale.iter().map(|c| c.ln()));
                (Family::Orbit(o.body.kind), v)
            }
        };
        ShapeParams { family, coords }
    }

    /// Fails only when an exponentiated extent overflows or underflows to a
    /// degenerate shape.
    pub fn to_shape(&self) -> Result<Shape> {
        let d = self.dim();
        let (head, logs) = self.coords.split_at(d);
        match self.family {
            Family::Cube => Ok(Shape::Cube(Cube::new(head.to_vec(), logs[0].exp())?)),
            Family::Cuboid => {
                let half: Vec<f64> = logs.iter().map(|l| 0.5 * l.exp()).collect();
                let lo = head.iter().zip(&half).map(|(m, h)| m - h).collect();
                let hi = head.iter().zip(&half).map(|(m, h)| m + h).collect();
                Ok(Shape::Cuboid(Cuboid::new(lo, hi)?))
            }
            Family::Orbit(kind) => {
                let t = AxisTransform::new(logs.iter().map(|l| l.exp()).collect(), head.to_vec())?;
                Ok(Shape::Orbit(apply_transform(&t, SymmetricBody::new(kind, d)?)?))
            }
        }
    }

    pub fn to_cuboid(&self) -> Result<Cuboid> {
        Ok(self.to_shape()?.bounding_box())
    }
}

/// Euclidean distance between coordinate vectors; zero exactly on the diagonal.
pub fn separation(a: &ShapeParams, b: &ShapeParams) -> Result<f64> {
    if a.family != b.family {
        return Err(Error::invalid(
            "family",
            format!("{} vs {}", a.family.name(), b.family.name()),
        ));
    }
    Error::check_dim("coords", a.coords.len(), b.coords.len())?;
    Ok(a.coords
        .iter()
        .zip(&b.coords)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disjointness {
    /// Largest per-axis gap between the two boxes.
    pub margin: f64,
}

impl Disjointness {
    /// Closures are disjoint.
    pub fn is_disjoint(&self) -> bool {
        self.margin > 0.0
    }

    pub fn interiors_overlap(&self) -> bool {
        self.margin < 0.0
    }
}

/// Per axis the gap is `max(lo2 - hi1, lo1 - hi2)`, negative while the
/// projections overlap; boxes are separated iff some axis has a positive gap.
pub fn disjoint_margin(a: &Cuboid, b: &Cuboid) -> Result<f64> {
    Error::check_dim("cuboid", a.dim(), b.dim())?;
    Ok((0..a.dim())
        .map(|i| (b.lo[i] - a.hi[i]).max(a.lo[i] - b.hi[i]))
        .fold(f64::NEG_INFINITY, f64::max))
}

pub fn boxes_disjoint(a: &Cuboid, b: &Cuboid) -> Result<Disjointness> {
    Ok(Disjointness {
        margin: disjoint_margin(a, b)?,
    })
}
