//! Cost functions `c: G x V_1 -> R`, c H-subdifferentials, the c H-Fenchel
//! transform and c H-convexity verification.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{usage, Error, Result};
use crate::field::ScalarField;
use crate::group::{GroupPoint, HorizontalVector};
use crate::hconvex::{gradient_of, horizontal_hessian, min_eigenvalue, sample_max, Matrix2, Verdict};
use crate::sampling::{sample_rng, uniform_disc, Region, Sampling};

const INVERSE_DAMPING: f64 = 0.25;
const INVERSE_MAX_ITER: usize = 100;
const INVERSE_TOL: f64 = 1e-10;

/// Which of the structural conditions a cost claims to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConditionClaims {
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
}

pub trait CostFunction: Send + Sync {
    fn eval(&self, g: &GroupPoint, v: HorizontalVector) -> f64;

    /// `c(g', v) - c(g, v)`.
    fn increment(&self, g: &GroupPoint, g_prime: &GroupPoint, v: HorizontalVector) -> f64 {
        self.eval(g_prime, v) - self.eval(g, v)
    }

    /// Horizontal gradient in `g` of `c(., v)`.
    fn grad_g(&self, _g: &GroupPoint, _v: HorizontalVector) -> Option<HorizontalVector> {
        None
    }

    /// Closed-form solution `v` of `X c(g, v) = w`.
    fn grad_inverse(&self, _g: &GroupPoint, _w: HorizontalVector) -> Option<HorizontalVector> {
        None
    }

    /// Symmetrized horizontal Hessian in `g` of `c(., v)`.
    fn hessian_g(&self, _g: &GroupPoint, _v: HorizontalVector) -> Option<Matrix2> {
        None
    }

    fn claims(&self) -> ConditionClaims {
        ConditionClaims {
            c1: false,
            c2: false,
            c3: false,
        }
    }

    fn name(&self) -> String {
        "cost".to_string()
    }
}

/// The built-in costs: `linear` is `<xi_1(g), v>`, `neg_quadratic` is
/// `-||xi_1(g) - v||^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BuiltinCost {
    Linear,
    NegQuadratic,
}

impl BuiltinCost {
    pub fn all() -> [BuiltinCost; 2] {
        [BuiltinCost::Linear, BuiltinCost::NegQuadratic]
    }
}

impl CostFunction for BuiltinCost {
    fn eval(&self, g: &GroupPoint, v: HorizontalVector) -> f64 {
        match self {
            BuiltinCost::Linear => g.horizontal().dot(&v),
            BuiltinCost::NegQuadratic => -(g.horizontal() - v).norm_sq(),
        }
    }

    fn increment(&self, g: &GroupPoint, g_prime: &GroupPoint, v: HorizontalVector) -> f64 {
        match self {
            BuiltinCost::Linear => v.dot(&(g_prime.horizontal() - g.horizontal())),
            BuiltinCost::NegQuadratic => self.eval(g_prime, v) - self.eval(g, v),
        }
    }

    fn grad_g(&self, g: &GroupPoint, v: HorizontalVector) -> Option<HorizontalVector> {
        Some(match self {
            BuiltinCost::Linear => v,
            BuiltinCost::NegQuadratic => (g.horizontal() - v) * -2.0,
        })
    }

    fn grad_inverse(&self, g: &GroupPoint, w: HorizontalVector) -> Option<HorizontalVector> {
        Some(match self {
            BuiltinCost::Linear => w,
            BuiltinCost::NegQuadratic => g.horizontal() + w * 0.5,
        })
    }

    fn hessian_g(&self, _g: &GroupPoint, _v: HorizontalVector) -> Option<Matrix2> {
        Some(match self {
            BuiltinCost::Linear => [[0.0; 2]; 2],
            BuiltinCost::NegQuadratic => [[-2.0, 0.0], [0.0, -2.0]],
        })
    }

    fn claims(&self) -> ConditionClaims {
        ConditionClaims {
            c1: true,
            c2: true,
            c3: true,
        }
    }

    fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for BuiltinCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BuiltinCost::Linear => "linear",
            BuiltinCost::NegQuadratic => "neg_quadratic",
        })
    }
}

impl FromStr for BuiltinCost {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "linear" => Ok(BuiltinCost::Linear),
            "neg_quadratic" => Ok(BuiltinCost::NegQuadratic),
            other => Err(usage(format!(
                "unknown cost '{other}' (expected linear or neg_quadratic)"
            ))),
        }
    }
}

/// A user cost given by a closure. Gradients fall back to finite
/// differences and the gradient inverse to a damped fixed-point iteration.
pub struct FnCost<F> {
    label: String,
    f: F,
    claims: ConditionClaims,
}

impl<F> FnCost<F>
where
    F: Fn(&GroupPoint, HorizontalVector) -> f64 + Send + Sync,
{
    pub fn new(label: impl Into<String>, f: F) -> Self {
        FnCost {
            label: label.into(),
            f,
            claims: ConditionClaims {
                c1: false,
                c2: false,
                c3: false,
            },
        }
    }

    pub fn with_claims(mut self, claims: ConditionClaims) -> Self {
        self.claims = claims;
        self
    }
}

impl<F> CostFunction for FnCost<F>
where
    F: Fn(&GroupPoint, HorizontalVector) -> f64 + Send + Sync,
{
    fn eval(&self, g: &GroupPoint, v: HorizontalVector) -> f64 {
        (self.f)(g, v)
    }

    fn claims(&self) -> ConditionClaims {
        self.claims
    }

    fn name(&self) -> String {
        self.label.clone()
    }
}

/// `g -> c(g, v)` viewed as a scalar field.
pub struct CostSlice<'a> {
    pub cost: &'a dyn CostFunction,
    pub v: HorizontalVector,
}

impl ScalarField for CostSlice<'_> {
    fn eval(&self, g: &GroupPoint) -> f64 {
        self.cost.eval(g, self.v)
    }

    fn grad(&self, g: &GroupPoint) -> Option<HorizontalVector> {
        self.cost.grad_g(g, self.v)
    }

    fn label(&self) -> String {
        format!("{}(., {})", self.cost.name(), self.v)
    }
}

/// `X c(g, v)`, symbolic when available.
pub fn cost_gradient(
    c: &dyn CostFunction,
    g: &GroupPoint,
    v: HorizontalVector,
    h: Option<f64>,
) -> Result<HorizontalVector> {
    gradient_of(&CostSlice { cost: c, v }, g, h)
}

pub fn cost_hessian(c: &dyn CostFunction, g: &GroupPoint, v: HorizontalVector, h: Option<f64>) -> Result<Matrix2> {
    match c.hessian_g(g, v) {
        Some(m) => Ok(m),
        None => horizontal_hessian(&CostSlice { cost: c, v }, g, h),
    }
}

/// Solves `X c(g, v) = w` for `v`, using the closed form when the cost has
/// one and a damped fixed-point iteration `v <- v + beta (w - X c(g, v))`
/// otherwise.
pub fn invert_gradient(c: &dyn CostFunction, g: &GroupPoint, w: HorizontalVector) -> Result<HorizontalVector> {
    if let Some(v) = c.grad_inverse(g, w) {
        return Ok(v);
    }
    let mut v = g.horizontal();
    for _ in 0..INVERSE_MAX_ITER {
        let r = w - cost_gradient(c, g, v, None)?;
        if !r.is_finite() {
            break;
        }
        if r.norm() <= INVERSE_TOL {
            return Ok(v);
        }
        v = v + r * INVERSE_DAMPING;
    }
    Err(Error::UnsupportedCost(format!(
        "gradient of {} in g could not be inverted at {g}",
        c.name()
    )))
}

/// `(X c(g, .))^{-1}(X u(g))`, the only possible element of the c
/// H-subdifferential of a differentiable `u` at `g`.
pub fn subdiff_singleton(
    u: &dyn ScalarField,
    c: &dyn CostFunction,
    g: &GroupPoint,
    h: Option<f64>,
) -> Result<HorizontalVector> {
    let du = gradient_of(u, g, h)?;
    invert_gradient(c, g, du)
}

/// Whether `p` is a c H-subgradient of `u` at `g`:
/// `u(g') >= u(g) + c(g', p) - c(g, p)` for sampled `g'` in `H_g`.
///
/// When `u(g) = +inf` the subdifferential is nonempty exactly when `u` is
/// `+inf` on the sampled plane as well.
pub fn in_c_h_subdifferential(
    u: &dyn ScalarField,
    c: &dyn CostFunction,
    g: &GroupPoint,
    p: HorizontalVector,
    region: &Region,
    sampling: &Sampling,
    tol: f64,
) -> Result<Verdict> {
    if sampling.samples == 0 {
        return Err(usage("at least one sample is required"));
    }
    let ug = u.eval(g);
    let worst = sample_max(sampling.samples, |i| {
        let mut rng = sample_rng(sampling.seed, i);
        let w = region.sample_horizontal_move(g, sampling.membership_radius(i), &mut rng);
        let g2 = g.translate_horizontal(w);
        let u2 = u.eval(&g2);
        let value = if ug.is_infinite() {
            if u2.is_infinite() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        } else if u2.is_infinite() {
            f64::NEG_INFINITY
        } else {
            ug + c.increment(g, &g2, p) - u2
        };
        Some((value, g2))
    });
    let (witness_g, witness_g_prime) = match worst.item {
        Some(g2) => (Some(*g), Some(g2)),
        None => (None, None),
    };
    Ok(Verdict {
        passed: worst.value <= tol,
        violation: worst.value,
        witness_g,
        witness_g_prime,
        evaluated: worst.evaluated,
        skipped: worst.skipped,
    })
}

/// A square grid `[-R, R]^2` in `V_1` with an odd number of points per
/// axis, so the origin is always a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SquareGrid {
    pub radius: f64,
    pub points_per_axis: usize,
}

impl SquareGrid {
    pub const DEFAULT_PLANE: SquareGrid = SquareGrid {
        radius: 2.0,
        points_per_axis: 21,
    };
    pub const DEFAULT_V: SquareGrid = SquareGrid {
        radius: 8.0,
        points_per_axis: 33,
    };

    pub fn new(radius: f64, points_per_axis: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(usage(format!("grid radius must be positive, got {radius}")));
        }
        if points_per_axis < 1 || points_per_axis.is_multiple_of(2) {
            return Err(usage(format!("grid size must be odd, got {points_per_axis}")));
        }
        Ok(SquareGrid {
            radius,
            points_per_axis,
        })
    }

    pub fn spacing(&self) -> f64 {
        if self.points_per_axis == 1 {
            2.0 * self.radius
        } else {
            2.0 * self.radius / (self.points_per_axis - 1) as f64
        }
    }

    /// Halves the spacing; every node of `self` stays a node.
    pub fn refine(&self) -> SquareGrid {
        SquareGrid {
            radius: self.radius,
            points_per_axis: 2 * (self.points_per_axis - 1) + 1,
        }
    }

    fn coordinate(&self, k: usize) -> f64 {
        if self.points_per_axis == 1 {
            0.0
        } else {
            -self.radius + k as f64 * self.spacing()
        }
    }

    /// Nodes in row-major order.
    pub fn nodes(&self) -> Vec<HorizontalVector> {
        let n = self.points_per_axis;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(HorizontalVector::new(self.coordinate(i), self.coordinate(j)));
            }
        }
        out
    }
}

/// Values of `c(g exp(w), v) - u(g exp(w))` on the grid nodes kept by the
/// region; `None` marks excluded nodes and `+inf` values of `u`.
fn fenchel_values(
    u: &dyn ScalarField,
    c: &dyn CostFunction,
    g: &GroupPoint,
    v: HorizontalVector,
    region: &Region,
    grid: &SquareGrid,
) -> Vec<Option<f64>> {
    grid.nodes()
        .into_iter()
        .map(|w| {
            let g2 = g.translate_horizontal(w);
            if !region.contains(&g2) {
                return None;
            }
            let u2 = u.eval(&g2);
            if u2.is_infinite() {
                None
            } else {
                Some(c.eval(&g2, v) - u2)
            }
        })
        .collect()
}

/// Grid supremum of `c(g', v) - u(g')` over `g' = g exp(w)` in the region.
/// A lower bound of the plane-restricted transform; `-inf` when `u` is
/// `+inf` at every node.
pub fn c_fenchel(
    u: &dyn ScalarField,
    c: &dyn CostFunction,
    g: &GroupPoint,
    v: HorizontalVector,
    region: &Region,
    grid: &SquareGrid,
) -> f64 {
    fenchel_values(u, c, g, v, region, grid)
        .into_iter()
        .flatten()
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FenchelIdentityReport {
    pub fenchel: f64,
    /// `u(g) + u^c_g(p) - c(g, p)`.
    pub residual: f64,
    /// Bound on how far the grid supremum can sit below the true one:
    /// the largest difference quotient between neighbouring nodes times half
    /// a cell diagonal.
    pub grid_gap_bound: f64,
    pub holds: bool,
}

pub fn fenchel_identity_check(
    u: &dyn ScalarField,
    c: &dyn CostFunction,
    g: &GroupPoint,
    p: HorizontalVector,
    region: &Region,
    grid: &SquareGrid,
    tol: f64,
) -> Result<FenchelIdentityReport> {
    let ug = u.eval(g);
    if !ug.is_finite() {
        return Err(usage(format!("u(g) must be finite, got {ug}")));
    }
    let values = fenchel_values(u, c, g, p, region, grid);
    let fenchel = values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = grid.points_per_axis;
    let h = grid.spacing();
    let mut lipschitz: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let Some(a) = values[i * n + j] else { continue };
            let right = (j + 1 < n).then(|| values[i * n + j + 1]).flatten();
            let down = (i + 1 < n).then(|| values[(i + 1) * n + j]).flatten();
            for b in [right, down].into_iter().flatten() {
                lipschitz = lipschitz.max((a - b).abs() / h);
            }
        }
    }
    let grid_gap_bound = lipschitz * h * std::f64::consts::SQRT_2 / 2.0 + 1e-9;
    let residual = ug + fenchel - c.eval(g, p);
    Ok(FenchelIdentityReport {
        fenchel,
        residual,
        grid_gap_bound,
        holds: residual <= tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CConvexPoint {
    pub g: GroupPoint,
    pub u: f64,
    pub represented: bool,
    /// Best support pair `(v, alpha)` found.
    pub best_v: Option<HorizontalVector>,
    pub best_alpha: f64,
    /// `u(g) - (c(g, v) + alpha)` for the best pair.
    pub deficit: f64,
    pub singleton: Option<HorizontalVector>,
    pub singleton_member: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CConvexReport {
    pub passed: bool,
    pub points: Vec<CConvexPoint>,
    pub worst_deficit: f64,
    /// Points where the singleton candidate is a certified subgradient but
    /// the supremum representation failed, or the reverse.
    pub inconsistent_points: usize,
}

/// Samples points and, at each, searches support pairs `(v, -u^c_g(v))`
/// over the analytic candidate and a grid of `v` values.
#[allow(clippy::too_many_arguments)]
pub fn check_c_h_convex(
    u: &dyn ScalarField,
    c: &dyn CostFunction,
    region: &Region,
    sampling: &Sampling,
    plane_grid: &SquareGrid,
    v_grid: &SquareGrid,
    tol: f64,
) -> Result<CConvexReport> {
    if sampling.samples == 0 {
        return Err(usage("at least one sample is required"));
    }
    let v_nodes = v_grid.nodes();
    let points: Vec<CConvexPoint> = (0..sampling.samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(sampling.seed, i);
            let g = region.sample_point(&mut rng);
            let ug = u.eval(&g);
            let singleton = subdiff_singleton(u, c, &g, None).ok();
            let singleton_member = singleton.map(|p| {
                let probe = Sampling {
                    seed: sampling.seed ^ i.wrapping_mul(0x9E37_79B9_7F4A_7C15),
                    ..*sampling
                };
                in_c_h_subdifferential(u, c, &g, p, region, &probe, tol)
                    .map(|v| v.passed)
                    .unwrap_or(false)
            });
            let support = |v: HorizontalVector| {
                let alpha = -c_fenchel(u, c, &g, v, region, plane_grid);
                (v, alpha, c.eval(&g, v) + alpha)
            };
            let good = |value: f64| {
                if ug.is_finite() {
                    value >= ug - tol
                } else {
                    value == f64::INFINITY
                }
            };
            let mut best: Option<(HorizontalVector, f64, f64)> = None;
            let consider = |best: &mut Option<(HorizontalVector, f64, f64)>, cand: (HorizontalVector, f64, f64)| {
                if best.is_none_or(|b| cand.2 > b.2) {
                    *best = Some(cand);
                }
            };
            if let Some(p) = singleton {
                consider(&mut best, support(p));
            }
            if !best.is_some_and(|b| good(b.2)) {
                for v in &v_nodes {
                    consider(&mut best, support(*v));
                    if best.is_some_and(|b| good(b.2)) {
                        break;
                    }
                }
            }
            let (best_v, best_alpha, value) = match best {
                Some((v, a, val)) => (Some(v), a, val),
                None => (None, f64::NEG_INFINITY, f64::NEG_INFINITY),
            };
            let represented = good(value);
            let deficit = if ug.is_infinite() && value == f64::INFINITY {
                0.0
            } else {
                ug - value
            };
            CConvexPoint {
                g,
                u: ug,
                represented,
                best_v,
                best_alpha,
                deficit,
                singleton,
                singleton_member,
            }
        })
        .collect();
    let passed = points.iter().all(|p| p.represented);
    let worst_deficit = points.iter().map(|p| p.deficit).fold(f64::NEG_INFINITY, f64::max);
    let inconsistent_points = points
        .iter()
        .filter(|p| p.singleton_member.is_some_and(|m| m && !p.represented))
        .count();
    Ok(CConvexReport {
        passed,
        points,
        worst_deficit,
        inconsistent_points,
    })
}

/// `[X^2 u]*(g) >= [X^2 c]*(g, v*)` with `v*` the singleton candidate, at
/// sampled points.
pub fn necessary_second_order_check(
    u: &dyn ScalarField,
    c: &dyn CostFunction,
    region: &Region,
    sampling: &Sampling,
    tol: f64,
    fd_step: Option<f64>,
) -> Result<Verdict> {
    if sampling.samples == 0 {
        return Err(usage("at least one sample is required"));
    }
    // Surface a missing inverse as an error rather than as skipped samples.
    let probe = region.center();
    if u.eval(&probe).is_finite() {
        if let Ok(du) = gradient_of(u, &probe, fd_step) {
            invert_gradient(c, &probe, du)?;
        }
    }
    let worst = sample_max(sampling.samples, |i| {
        let mut rng = sample_rng(sampling.seed, i);
        let g = region.sample_point(&mut rng);
        let v = subdiff_singleton(u, c, &g, fd_step).ok()?;
        let hu = horizontal_hessian(u, &g, fd_step).ok()?;
        let hc = cost_hessian(c, &g, v, fd_step).ok()?;
        let diff = [
            [hu[0][0] - hc[0][0], hu[0][1] - hc[0][1]],
            [hu[1][0] - hc[1][0], hu[1][1] - hc[1][1]],
        ];
        Some((-min_eigenvalue(&diff), (g, None)))
    });
    Ok(Verdict {
        passed: worst.value <= tol,
        violation: worst.value,
        witness_g: worst.item.map(|(g, _): (GroupPoint, Option<GroupPoint>)| g),
        witness_g_prime: None,
        evaluated: worst.evaluated,
        skipped: worst.skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub claims: ConditionClaims,
    /// Empirical `K_B` from horizontal pairs.
    pub k_b_horizontal: f64,
    /// Empirical `K_B` from unrelated pairs in the region.
    pub k_b_random: f64,
    pub k_b: f64,
    /// Per direction: the sampled `max_{g'} c(g', n u) - c(g, n u)` for
    /// `n = 1, 2, 4, ...`.
    pub c2_growth: Vec<Vec<f64>>,
    /// Some direction whose sampled increments stopped growing.
    pub c2_falsified: bool,
    /// Smallest `||X c(g, v) - X c(g, v')|| / ||v - v'||` seen.
    pub c3_min_ratio: f64,
    pub c3_collision: bool,
    /// Worst `||X c(g, grad_inverse(g, w)) - w||`.
    pub c3_roundtrip_error: f64,
}

const C2_DIRECTIONS: usize = 8;
const C2_DOUBLINGS: usize = 10;
const C2_PLANE_SAMPLES: usize = 32;
const C3_COLLISION_TOL: f64 = 1e-9;

/// Empirical diagnostics for the Lipschitz, growth and injectivity
/// conditions on a cost.
pub fn condition_diagnostics(
    c: &dyn CostFunction,
    region: &Region,
    trials: usize,
    seed: u64,
) -> Result<ConditionReport> {
    if trials == 0 {
        return Err(usage("at least one trial is required"));
    }
    let plane_radius = region.radius().map_or(2.0, |r| r.min(2.0));
    let lipschitz = |i: u64, horizontal: bool| -> Option<f64> {
        let mut rng = sample_rng(seed, i);
        let g = region.sample_point(&mut rng);
        let g2 = if horizontal {
            g.translate_horizontal(region.sample_horizontal_move(&g, plane_radius, &mut rng))
        } else {
            region.sample_point(&mut rng)
        };
        let d = g.gauge_distance(&g2);
        if d < 1e-9 {
            return None;
        }
        let v = uniform_disc(&mut rng, SquareGrid::DEFAULT_V.radius);
        let a = cost_gradient(c, &g, v, None).ok()?;
        let b = cost_gradient(c, &g2, v, None).ok()?;
        Some((b - a).norm() / (2.0 * d))
    };
    let k_b_horizontal = sample_max(trials, |i| lipschitz(i, true).map(|k| (k, ())))
        .value
        .max(0.0);
    let k_b_random = sample_max(trials, |i| lipschitz(i + trials as u64, false).map(|k| (k, ())))
        .value
        .max(0.0);

    let mut rng = sample_rng(seed, 3 * trials as u64);
    let g = region.sample_point(&mut rng);
    let moves: Vec<HorizontalVector> = (0..C2_PLANE_SAMPLES)
        .map(|_| region.sample_horizontal_move(&g, plane_radius, &mut rng))
        .collect();
    let mut c2_growth = Vec::with_capacity(C2_DIRECTIONS);
    let mut c2_falsified = false;
    for k in 0..C2_DIRECTIONS {
        let theta = std::f64::consts::TAU * k as f64 / C2_DIRECTIONS as f64;
        let dir = HorizontalVector::new(theta.cos(), theta.sin());
        let series: Vec<f64> = (0..C2_DOUBLINGS)
            .map(|e| {
                let v = dir * (1u64 << e) as f64;
                moves
                    .iter()
                    .map(|w| c.increment(&g, &g.translate_horizontal(*w), v))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let half = C2_DOUBLINGS / 2;
        if series[C2_DOUBLINGS - 1] <= series[half] + 1e-9 {
            c2_falsified = true;
        }
        c2_growth.push(series);
    }

    let mut c3_min_ratio = f64::INFINITY;
    let mut c3_roundtrip_error: f64 = 0.0;
    for i in 0..trials as u64 {
        let mut rng = sample_rng(seed, 4 * trials as u64 + i);
        let g = region.sample_point(&mut rng);
        let v1 = uniform_disc(&mut rng, SquareGrid::DEFAULT_V.radius);
        let v2 = uniform_disc(&mut rng, SquareGrid::DEFAULT_V.radius);
        let dv = (v1 - v2).norm();
        if dv > 1e-3 {
            let a = cost_gradient(c, &g, v1, None)?;
            let b = cost_gradient(c, &g, v2, None)?;
            c3_min_ratio = c3_min_ratio.min((a - b).norm() / dv);
        }
        let w = uniform_disc(&mut rng, SquareGrid::DEFAULT_V.radius);
        if let Ok(v) = invert_gradient(c, &g, w) {
            let back = cost_gradient(c, &g, v, None)?;
            c3_roundtrip_error = c3_roundtrip_error.max((back - w).norm());
        } else {
            c3_roundtrip_error = f64::INFINITY;
        }
    }
    Ok(ConditionReport {
        claims: c.claims(),
        k_b_horizontal,
        k_b_random,
        k_b: k_b_horizontal.max(k_b_random),
        c2_growth,
        c2_falsified,
        c3_min_ratio,
        c3_collision: c3_min_ratio <= C3_COLLISION_TOL,
        c3_roundtrip_error,
    })
}
