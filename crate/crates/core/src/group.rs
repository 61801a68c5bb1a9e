//! Exact arithmetic on the Heisenberg and Engel groups in exponential
//! coordinates.
//!
//! Points are stored by their logarithm: coordinates are listed layer by
//! layer, `(x, y, t)` for the Heisenberg group and `(x, y, t, s)` for the
//! Engel group. In these coordinates `exp` and `log` only re-bundle the
//! coordinates, the inverse is negation, and the group laws are the
//! closed-form Baker-Campbell-Hausdorff polynomials of step two and three.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};

/// Default absolute tolerance on the layer >= 2 components of `log(g^-1 g')`
/// used to decide horizontality.
pub const DEFAULT_HORIZONTAL_TOL: f64 = 1e-9;

/// Constant `C` of the Heisenberg horizontal factorization: every factor
/// satisfies `||h_i|| <= C ||g||`.
pub const FACTORIZATION_CONSTANT: f64 = 1.0;

/// A Carnot group model with a hard-coded group law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupModel {
    /// Step 2, layers (2, 1).
    Heisenberg,
    /// Step 3, layers (2, 1, 1).
    Engel,
}

impl GroupModel {
    pub fn name(self) -> &'static str {
        match self {
            GroupModel::Heisenberg => "heisenberg",
            GroupModel::Engel => "engel",
        }
    }

    pub fn step(self) -> usize {
        self.layer_dims().len()
    }

    pub fn layer_dims(self) -> &'static [usize] {
        match self {
            GroupModel::Heisenberg => &[2, 1],
            GroupModel::Engel => &[2, 1, 1],
        }
    }

    /// Topological dimension `N = sum dim V_i`.
    pub fn topological_dim(self) -> usize {
        self.layer_dims().iter().sum()
    }

    /// Homogeneous dimension `Q = sum i dim V_i`.
    pub fn homogeneous_dim(self) -> usize {
        self.layer_dims().iter().enumerate().map(|(i, d)| (i + 1) * d).sum()
    }

    /// Dimension `m` of the first layer.
    pub fn horizontal_dim(self) -> usize {
        self.layer_dims()[0]
    }

    /// Layer index (1-based) of each coordinate.
    pub fn coordinate_degrees(self) -> &'static [u32] {
        match self {
            GroupModel::Heisenberg => &[1, 1, 2],
            GroupModel::Engel => &[1, 1, 2, 3],
        }
    }

    /// Conventional coordinate names.
    pub fn coordinate_names(self) -> &'static [&'static str] {
        match self {
            GroupModel::Heisenberg => &["x", "y", "t"],
            GroupModel::Engel => &["x", "y", "t", "s"],
        }
    }

    pub fn identity(self) -> GroupPoint {
        GroupPoint {
            model: self,
            coords: [0.0; 4],
        }
    }

    /// Builds a point from exponential coordinates listed in layer order.
    pub fn point(self, coords: &[f64]) -> Result<GroupPoint> {
        let n = self.topological_dim();
        if coords.len() != n {
            return Err(usage(format!(
                "{} points have {} coordinates, got {}",
                self,
                n,
                coords.len()
            )));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(usage(format!("non-finite coordinate {c}")));
        }
        let mut buf = [0.0; 4];
        buf[..n].copy_from_slice(coords);
        Ok(GroupPoint {
            model: self,
            coords: buf,
        })
    }

    /// `exp(v)` for a first-layer vector `v`.
    pub fn exp_horizontal(self, v: HorizontalVector) -> GroupPoint {
        let mut coords = [0.0; 4];
        coords[0] = v.0[0];
        coords[1] = v.0[1];
        GroupPoint { model: self, coords }
    }
}

impl fmt::Display for GroupModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GroupModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "heisenberg" | "h" => Ok(GroupModel::Heisenberg),
            "engel" | "e" => Ok(GroupModel::Engel),
            other => Err(usage(format!("unknown group model '{other}'"))),
        }
    }
}

/// An element of the first layer `V_1`, in the orthonormal basis
/// `X_1, X_2`. Both models have `m = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HorizontalVector(pub [f64; 2]);

impl HorizontalVector {
    pub const ZERO: HorizontalVector = HorizontalVector([0.0, 0.0]);

    pub fn new(a: f64, b: f64) -> Self {
        HorizontalVector([a, b])
    }

    pub fn dot(&self, other: &HorizontalVector) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1]
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.0[0].hypot(self.0[1])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl Add for HorizontalVector {
    type Output = HorizontalVector;
    fn add(self, rhs: Self) -> Self {
        HorizontalVector([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1]])
    }
}

impl Sub for HorizontalVector {
    type Output = HorizontalVector;
    fn sub(self, rhs: Self) -> Self {
        HorizontalVector([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1]])
    }
}

impl Neg for HorizontalVector {
    type Output = HorizontalVector;
    fn neg(self) -> Self {
        HorizontalVector([-self.0[0], -self.0[1]])
    }
}

impl Mul<f64> for HorizontalVector {
    type Output = HorizontalVector;
    fn mul(self, k: f64) -> Self {
        HorizontalVector([self.0[0] * k, self.0[1] * k])
    }
}

impl fmt::Display for HorizontalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0[0], self.0[1])
    }
}

/// The image of a point under `log`, split by layers.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredVector {
    model: GroupModel,
    layers: Vec<Vec<f64>>,
}

impl LayeredVector {
    pub fn new(model: GroupModel, layers: Vec<Vec<f64>>) -> Result<Self> {
        let dims = model.layer_dims();
        if layers.len() != dims.len() || layers.iter().zip(dims).any(|(l, d)| l.len() != *d) {
            return Err(usage(format!(
                "layer dimensions {:?} do not match {} {:?}",
                layers.iter().map(Vec::len).collect::<Vec<_>>(),
                model,
                dims
            )));
        }
        Ok(LayeredVector { model, layers })
    }

    pub fn zero(model: GroupModel) -> Self {
        LayeredVector {
            model,
            layers: model.layer_dims().iter().map(|d| vec![0.0; *d]).collect(),
        }
    }

    pub fn model(&self) -> GroupModel {
        self.model
    }

    pub fn layers(&self) -> &[Vec<f64>] {
        &self.layers
    }

    pub fn layer(&self, i: usize) -> &[f64] {
        &self.layers[i]
    }

    pub fn exp(&self) -> GroupPoint {
        let flat: Vec<f64> = self.layers.iter().flatten().copied().collect();
        let mut coords = [0.0; 4];
        coords[..flat.len()].copy_from_slice(&flat);
        GroupPoint {
            model: self.model,
            coords,
        }
    }
}

/// A group element in exponential coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint {
    model: GroupModel,
    coords: [f64; 4],
}

impl GroupPoint {
    pub fn model(&self) -> GroupModel {
        self.model
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.model.topological_dim()]
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.coords()[i]
    }

    /// First-layer component `xi_1(g)`.
    pub fn horizontal(&self) -> HorizontalVector {
        HorizontalVector([self.coords[0], self.coords[1]])
    }

    pub fn is_identity(&self) -> bool {
        self.coords().iter().all(|c| *c == 0.0)
    }

    /// Group product `self * other`.
    pub fn mul(&self, other: &GroupPoint) -> Result<GroupPoint> {
        if self.model != other.model {
            return Err(Error::ModelMismatch {
                expected: self.model,
                found: other.model,
            });
        }
        Ok(self.compose(other))
    }

    /// Group product for points already known to share a model.
    ///
    /// Panics if the models differ.
    pub fn compose(&self, other: &GroupPoint) -> GroupPoint {
        assert_eq!(self.model, other.model, "group model mismatch");
        let [x, y, t, s] = self.coords;
        let [x2, y2, t2, s2] = other.coords;
        let mut out = [0.0; 4];
        out[0] = x + x2;
        out[1] = y + y2;
        out[2] = t + t2 + (x * y2 - x2 * y) / 2.0;
        if self.model == GroupModel::Engel {
            out[3] = s + s2 + (x * t2 - x2 * t) / 2.0 + (x - x2) * (x * y2 - y * x2) / 12.0;
        }
        GroupPoint {
            model: self.model,
            coords: out,
        }
    }

    /// Group inverse; in exponential coordinates `exp(X)^-1 = exp(-X)`.
    pub fn inv(&self) -> GroupPoint {
        let mut coords = self.coords;
        for c in coords.iter_mut() {
            *c = -*c;
        }
        GroupPoint {
            model: self.model,
            coords,
        }
    }

    pub fn log(&self) -> LayeredVector {
        let mut layers = Vec::with_capacity(self.model.step());
        let mut offset = 0;
        for d in self.model.layer_dims() {
            layers.push(self.coords[offset..offset + d].to_vec());
            offset += d;
        }
        LayeredVector {
            model: self.model,
            layers,
        }
    }

    /// Non-isotropic dilation: layer `i` scales by `lambda^i`.
    pub fn dilate(&self, lambda: f64) -> Result<GroupPoint> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(usage(format!("dilation factor must be positive, got {lambda}")));
        }
        Ok(self.dilate_unchecked(lambda))
    }

    /// Dilation for any real factor, used by the twisted convex combination
    /// where `lambda` ranges over `[0, 1]`.
    pub(crate) fn dilate_unchecked(&self, lambda: f64) -> GroupPoint {
        let mut coords = self.coords;
        for (c, deg) in coords.iter_mut().zip(self.model.coordinate_degrees()) {
            *c *= lambda.powi(*deg as i32);
        }
        GroupPoint {
            model: self.model,
            coords,
        }
    }

    /// Homogeneous gauge `(sum_i |v_i|^(2 r!/i))^(1/(2 r!))`.
    pub fn gauge_norm(&self) -> f64 {
        let log = self.log();
        let r = self.model.step();
        let exponent = 2.0 * (1..=r).product::<usize>() as f64;
        let layer_norms: Vec<f64> = log
            .layers
            .iter()
            .map(|l| l.iter().map(|c| c * c).sum::<f64>().sqrt())
            .collect();
        // Factor out the homogeneous scale to keep the large powers in range.
        let scale = layer_norms
            .iter()
            .enumerate()
            .map(|(i, n)| n.powf(1.0 / (i + 1) as f64))
            .fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let sum: f64 = layer_norms
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let deg = (i + 1) as f64;
                (n / scale.powf(deg)).powf(exponent / deg)
            })
            .sum();
        scale * sum.powf(1.0 / exponent)
    }

    /// Left-invariant gauge distance `||g^-1 g'||`.
    pub fn gauge_distance(&self, other: &GroupPoint) -> f64 {
        self.inv().compose(other).gauge_norm()
    }

    /// Whether `other` lies on the horizontal plane `H_g = g exp(V_1)`.
    pub fn in_horizontal_plane(&self, other: &GroupPoint, tol: f64) -> bool {
        let rel = self.inv().compose(other);
        rel.coords()[2..].iter().all(|c| c.abs() <= tol)
    }

    /// `g exp(w)`: the point reached by one horizontal move.
    pub fn translate_horizontal(&self, w: HorizontalVector) -> GroupPoint {
        self.compose(&self.model.exp_horizontal(w))
    }

    /// Twisted convex combination `g delta_lambda(g^-1 g')`; a horizontal
    /// segment when `g'` lies on `H_g`.
    pub fn horizontal_segment(&self, other: &GroupPoint, lambda: f64) -> GroupPoint {
        let rel = self.inv().compose(other);
        self.compose(&rel.dilate_unchecked(lambda))
    }
}

impl fmt::Display for GroupPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Writes a Heisenberg point as a product of at most five points of `H_e`.
///
/// The first-layer part is removed with one factor and the remaining
/// vertical point `(0, 0, t)` is realized by the commutator of
/// `(sqrt|t|, 0, 0)` and `(0, +-sqrt|t|, 0)`. Every factor has gauge norm at
/// most [`FACTORIZATION_CONSTANT`] times the norm of `g`.
pub fn horizontal_factorization_heisenberg(g: &GroupPoint) -> Result<Vec<GroupPoint>> {
    if g.model() != GroupModel::Heisenberg {
        return Err(usage(
            "horizontal factorization is implemented for the Heisenberg group only",
        ));
    }
    let model = GroupModel::Heisenberg;
    let [x, y, t] = [g.coord(0), g.coord(1), g.coord(2)];
    let mut factors = Vec::with_capacity(5);
    if x != 0.0 || y != 0.0 {
        factors.push(model.exp_horizontal(HorizontalVector::new(x, y)));
    }
    if t != 0.0 {
        let a = t.abs().sqrt();
        let b = a * t.signum();
        factors.push(model.exp_horizontal(HorizontalVector::new(a, 0.0)));
        factors.push(model.exp_horizontal(HorizontalVector::new(0.0, b)));
        factors.push(model.exp_horizontal(HorizontalVector::new(-a, 0.0)));
        factors.push(model.exp_horizontal(HorizontalVector::new(0.0, -b)));
    }
    if factors.is_empty() {
        factors.push(model.identity());
    }
    Ok(factors)
}
