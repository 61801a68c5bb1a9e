//! Numerical verification of H-convexity, H-semiconvexity and
//! H-subdifferential membership.
//!
//! Every check samples horizontal pairs `(g, g exp(w))` from a region and
//! reports the worst violation together with a witness, so that a failing
//! verdict can be re-evaluated standalone.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{usage, Error, Result};
use crate::field::{ScalarField, ShiftedBySqV1};
use crate::group::{GroupPoint, HorizontalVector};
use crate::sampling::{sample_rng, Region, Sampling};
use rand::Rng;

pub const DEFAULT_TOL: f64 = 1e-6;

/// A symmetric `m x m` matrix with `m = 2`.
pub type Matrix2 = [[f64; 2]; 2];

/// Default central-difference step `1e-4 max(1, ||g||)`.
pub fn default_fd_step(g: &GroupPoint) -> f64 {
    1e-4 * g.gauge_norm().max(1.0)
}

fn step_or_default(g: &GroupPoint, h: Option<f64>) -> f64 {
    h.unwrap_or_else(|| default_fd_step(g))
}

fn unit(i: usize) -> HorizontalVector {
    let mut v = [0.0; 2];
    v[i] = 1.0;
    HorizontalVector(v)
}

/// Central difference `(u(g exp(h X_i)) - u(g exp(-h X_i))) / 2h`.
pub fn horizontal_derivative(u: &dyn ScalarField, g: &GroupPoint, i: usize, h: f64) -> Result<f64> {
    if i >= g.model().horizontal_dim() {
        return Err(usage(format!("direction index {i} out of range")));
    }
    if !(h > 0.0) {
        return Err(usage(format!("finite-difference step must be positive, got {h}")));
    }
    let plus = u.eval(&g.translate_horizontal(unit(i) * h));
    let minus = u.eval(&g.translate_horizontal(unit(i) * -h));
    if !plus.is_finite() || !minus.is_finite() {
        return Err(Error::NotDifferentiable(format!("u = +inf on the stencil around {g}")));
    }
    Ok((plus - minus) / (2.0 * h))
}

/// Finite-difference horizontal gradient.
pub fn horizontal_gradient(u: &dyn ScalarField, g: &GroupPoint, h: Option<f64>) -> Result<HorizontalVector> {
    let h = step_or_default(g, h);
    Ok(HorizontalVector::new(
        horizontal_derivative(u, g, 0, h)?,
        horizontal_derivative(u, g, 1, h)?,
    ))
}

/// Symbolic gradient when the field provides one, finite differences
/// otherwise. Also fails when `u(g)` itself is infinite.
pub fn gradient_of(u: &dyn ScalarField, g: &GroupPoint, h: Option<f64>) -> Result<HorizontalVector> {
    if !u.eval(g).is_finite() {
        return Err(Error::NotDifferentiable(format!("u(g) = +inf at {g}")));
    }
    match u.grad(g) {
        Some(d) => Ok(d),
        None => horizontal_gradient(u, g, h),
    }
}

/// Symmetrized horizontal Hessian `[X^2 u]*` from nested central
/// differences: entry `(i, j)` of the raw matrix is `X_i X_j u`.
#[allow(clippy::needless_range_loop)]
pub fn horizontal_hessian(u: &dyn ScalarField, g: &GroupPoint, h: Option<f64>) -> Result<Matrix2> {
    let h = step_or_default(g, h);
    let mut raw = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let plus = horizontal_derivative(u, &g.translate_horizontal(unit(i) * h), j, h)?;
            let minus = horizontal_derivative(u, &g.translate_horizontal(unit(i) * -h), j, h)?;
            raw[i][j] = (plus - minus) / (2.0 * h);
        }
    }
    Ok(symmetrize(&raw))
}

pub fn symmetrize(m: &Matrix2) -> Matrix2 {
    let off = 0.5 * (m[0][1] + m[1][0]);
    [[m[0][0], off], [off, m[1][1]]]
}

/// Smallest eigenvalue of a symmetric 2x2 matrix.
pub fn min_eigenvalue(m: &Matrix2) -> f64 {
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    mean - half_diff.hypot(m[0][1])
}

/// A horizontal pair and segment parameter at which an inequality was
/// evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentWitness {
    pub g: GroupPoint,
    pub g_prime: GroupPoint,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiconvexityReport {
    pub is_h_convex: bool,
    pub witness: Option<SegmentWitness>,
    /// Maximum over samples of `u(sigma(lambda)) - (1-lambda)u(g) - lambda u(g')`
    /// (minus the semiconvexity allowance when one is tested).
    pub violation: f64,
    /// Smallest `l >= 0` making the sampled semiconvexity inequality hold.
    pub estimated_ell: f64,
    pub samples: usize,
    /// For semiconvexity checks: whether the equivalent test on
    /// `u + l ||xi_1||^2` returned the same verdict.
    pub shifted_agrees: Option<bool>,
}

/// Verdict of a sampled inequality check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub passed: bool,
    /// Worst value of the violated side (positive means violated).
    pub violation: f64,
    pub witness_g: Option<GroupPoint>,
    pub witness_g_prime: Option<GroupPoint>,
    pub evaluated: usize,
    pub skipped: usize,
}

pub(crate) struct Worst<T> {
    pub value: f64,
    pub item: Option<T>,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Evaluates `f` on sample indices `0..n` in parallel and keeps the largest
/// value; ties go to the smallest index so results do not depend on thread
/// scheduling. `None` marks a skipped sample.
pub(crate) fn sample_max<T, F>(n: usize, f: F) -> Worst<T>
where
    T: Send,
    F: Fn(u64) -> Option<(f64, T)> + Sync + Send,
{
    let best = (0..n as u64)
        .into_par_iter()
        .map(|i| match f(i) {
            Some((v, item)) => (Some((v, i, item)), 1usize, 0usize),
            None => (None, 0, 1),
        })
        .reduce(
            || (None, 0, 0),
            |a, b| {
                let best = match (a.0, b.0) {
                    (None, x) | (x, None) => x,
                    (Some(x), Some(y)) => {
                        let take_y = y.0 > x.0 || (y.0 == x.0 && y.1 < x.1);
                        Some(if take_y { y } else { x })
                    }
                };
                (best, a.1 + b.1, a.2 + b.2)
            },
        );
    let (value, item) = match best.0 {
        Some((v, _, item)) => (v, Some(item)),
        None => (f64::NEG_INFINITY, None),
    };
    Worst {
        value,
        item,
        evaluated: best.1,
        skipped: best.2,
    }
}

fn check_region(region: &Region, sampling: &Sampling) -> Result<()> {
    if sampling.samples == 0 {
        return Err(usage("at least one sample is required"));
    }
    if !(sampling.plane_radius > 0.0) {
        return Err(usage("plane radius must be positive"));
    }
    if let Some(r) = region.radius() {
        if !(r > 0.0) {
            return Err(usage("empty region"));
        }
    }
    Ok(())
}

fn draw_pair(region: &Region, sampling: &Sampling, i: u64) -> (GroupPoint, HorizontalVector, f64) {
    let mut rng = sample_rng(sampling.seed, i);
    let g = region.sample_point(&mut rng);
    let w = region.sample_horizontal_move(&g, sampling.plane_radius, &mut rng);
    let lambda: f64 = rng.gen();
    (g, w, lambda)
}

/// Excess of the (semi)convexity inequality along one horizontal segment.
/// `+inf` on the right-hand side makes the inequality hold.
fn segment_excess(u: &dyn ScalarField, g: &GroupPoint, g2: &GroupPoint, lambda: f64, ell: f64) -> f64 {
    let (ug, ug2) = (u.eval(g), u.eval(g2));
    if ug.is_infinite() || ug2.is_infinite() {
        return f64::NEG_INFINITY;
    }
    let mid = u.eval(&g.horizontal_segment(g2, lambda));
    if mid.is_infinite() {
        return f64::INFINITY;
    }
    let w2 = (g2.horizontal() - g.horizontal()).norm_sq();
    mid - (1.0 - lambda) * ug - lambda * ug2 - ell * lambda * (1.0 - lambda) * w2
}

fn segment_report(
    u: &dyn ScalarField,
    region: &Region,
    ell: f64,
    sampling: &Sampling,
    tol: f64,
) -> Result<SemiconvexityReport> {
    check_region(region, sampling)?;
    let worst = sample_max(sampling.samples, |i| {
        let (g, w, lambda) = draw_pair(region, sampling, i);
        let g2 = g.translate_horizontal(w);
        let excess = segment_excess(u, &g, &g2, lambda, ell);
        Some((excess, SegmentWitness { g, g_prime: g2, lambda }))
    });
    // Curvature needed to absorb each excess: excess / (lambda (1-lambda) |w|^2).
    let ell_needed = sample_max(sampling.samples, |i| {
        let (g, w, lambda) = draw_pair(region, sampling, i);
        let g2 = g.translate_horizontal(w);
        let excess = segment_excess(u, &g, &g2, lambda, ell);
        let denom = lambda * (1.0 - lambda) * w.norm_sq();
        if excess > 0.0 && denom > 0.0 {
            Some((ell + excess / denom, ()))
        } else {
            Some((0.0, ()))
        }
    });
    let is_h_convex = worst.value <= tol;
    Ok(SemiconvexityReport {
        is_h_convex,
        witness: worst.item,
        violation: worst.value,
        estimated_ell: if is_h_convex { 0.0 } else { ell_needed.value.max(0.0) },
        samples: worst.evaluated,
        shifted_agrees: None,
    })
}

/// Samples horizontal segments and checks
/// `u(g delta_l(g^-1 g')) <= (1-l) u(g) + l u(g')`.
pub fn check_h_convex_segmentwise(
    u: &dyn ScalarField,
    region: &Region,
    sampling: &Sampling,
    tol: f64,
) -> Result<SemiconvexityReport> {
    segment_report(u, region, 0.0, sampling, tol)
}

/// `l`-semiconvexity along horizontal segments. Also runs the segmentwise
/// convexity check on `u + l ||xi_1||^2` with the same samples and records
/// whether both verdicts agree.
pub fn check_h_semiconvex(
    u: &dyn ScalarField,
    region: &Region,
    ell: f64,
    sampling: &Sampling,
    tol: f64,
) -> Result<SemiconvexityReport> {
    if !(ell >= 0.0) {
        return Err(usage(format!("semiconvexity constant must be nonnegative, got {ell}")));
    }
    let mut report = segment_report(u, region, ell, sampling, tol)?;
    let shifted = ShiftedBySqV1 { base: u, k: ell };
    let convex = check_h_convex_segmentwise(&shifted, region, sampling, tol)?;
    report.shifted_agrees = Some(convex.is_h_convex == report.is_h_convex);
    if report.is_h_convex {
        report.estimated_ell = 0.0;
    }
    Ok(report)
}

fn verdict(worst: Worst<(GroupPoint, Option<GroupPoint>)>, tol: f64) -> Verdict {
    let (witness_g, witness_g_prime) = match worst.item {
        Some((g, g2)) => (Some(g), g2),
        None => (None, None),
    };
    Verdict {
        passed: worst.value <= tol,
        violation: worst.value,
        witness_g,
        witness_g_prime,
        evaluated: worst.evaluated,
        skipped: worst.skipped,
    }
}

/// `u(g') >= u(g) + <X u(g), xi_1(g') - xi_1(g)>` on sampled horizontal
/// pairs. Samples without a gradient are skipped and counted.
pub fn check_h_convex_first_order(
    u: &dyn ScalarField,
    region: &Region,
    sampling: &Sampling,
    tol: f64,
    fd_step: Option<f64>,
) -> Result<Verdict> {
    check_region(region, sampling)?;
    let worst = sample_max(sampling.samples, |i| {
        let (g, w, _) = draw_pair(region, sampling, i);
        let g2 = g.translate_horizontal(w);
        let grad = gradient_of(u, &g, fd_step).ok()?;
        let u2 = u.eval(&g2);
        if u2.is_infinite() {
            return Some((f64::NEG_INFINITY, (g, Some(g2))));
        }
        Some((u.eval(&g) + grad.dot(&w) - u2, (g, Some(g2))))
    });
    Ok(verdict(worst, tol))
}

/// `<X u(g) - X u(g'), xi_1(g) - xi_1(g')> >= -tol` on sampled horizontal
/// pairs.
pub fn check_gradient_monotone(
    u: &dyn ScalarField,
    region: &Region,
    sampling: &Sampling,
    tol: f64,
    fd_step: Option<f64>,
) -> Result<Verdict> {
    check_region(region, sampling)?;
    let worst = sample_max(sampling.samples, |i| {
        let (g, w, _) = draw_pair(region, sampling, i);
        let g2 = g.translate_horizontal(w);
        let d1 = gradient_of(u, &g, fd_step).ok()?;
        let d2 = gradient_of(u, &g2, fd_step).ok()?;
        // xi_1(g) - xi_1(g') = -w
        let pairing = (d1 - d2).dot(&(-w));
        Some((-pairing, (g, Some(g2))))
    });
    Ok(verdict(worst, tol))
}

/// Smallest eigenvalue of `[X^2 u]*` at least `-tol` at every sample.
pub fn check_hessian_psd(
    u: &dyn ScalarField,
    region: &Region,
    sampling: &Sampling,
    tol: f64,
    fd_step: Option<f64>,
) -> Result<Verdict> {
    check_region(region, sampling)?;
    let worst = sample_max(sampling.samples, |i| {
        let mut rng = sample_rng(sampling.seed, i);
        let g = region.sample_point(&mut rng);
        let hess = horizontal_hessian(u, &g, fd_step).ok()?;
        Some((-min_eigenvalue(&hess), (g, None)))
    });
    Ok(verdict(worst, tol))
}

/// Whether `p` is an H-subgradient of `u` at `g0`:
/// `u(g) >= u(g0) + <p, xi_1(g) - xi_1(g0)>` for sampled `g` in `H_{g0}`.
pub fn in_h_subdifferential(
    u: &dyn ScalarField,
    g0: &GroupPoint,
    p: HorizontalVector,
    region: &Region,
    sampling: &Sampling,
    tol: f64,
) -> Result<Verdict> {
    check_region(region, sampling)?;
    let u0 = u.eval(g0);
    if !u0.is_finite() {
        return Err(usage(format!("u(g0) must be finite, got {u0}")));
    }
    let worst = sample_max(sampling.samples, |i| {
        let mut rng = sample_rng(sampling.seed, i);
        let w = region.sample_horizontal_move(g0, sampling.membership_radius(i), &mut rng);
        let g = g0.translate_horizontal(w);
        let ug = u.eval(&g);
        if ug.is_infinite() {
            return Some((f64::NEG_INFINITY, (g, None)));
        }
        Some((u0 + p.dot(&(g.horizontal() - g0.horizontal())) - ug, (g, None)))
    });
    Ok(verdict(worst, tol))
}

/// Verdicts of the four characterizations on one field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityConcordance {
    pub segmentwise: SemiconvexityReport,
    pub first_order: Verdict,
    pub gradient_monotone: Verdict,
    pub hessian_psd: Verdict,
}

impl ConvexityConcordance {
    pub fn verdicts(&self) -> [bool; 4] {
        [
            self.segmentwise.is_h_convex,
            self.first_order.passed,
            self.gradient_monotone.passed,
            self.hessian_psd.passed,
        ]
    }

    pub fn agree(&self) -> bool {
        let v = self.verdicts();
        v.iter().all(|b| *b == v[0])
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts().iter().all(|b| *b)
    }
}

pub fn check_all_characterizations(
    u: &dyn ScalarField,
    region: &Region,
    sampling: &Sampling,
    tol: f64,
    fd_step: Option<f64>,
) -> Result<ConvexityConcordance> {
    Ok(ConvexityConcordance {
        segmentwise: check_h_convex_segmentwise(u, region, sampling, tol)?,
        first_order: check_h_convex_first_order(u, region, sampling, tol, fd_step)?,
        gradient_monotone: check_gradient_monotone(u, region, sampling, tol, fd_step)?,
        hessian_psd: check_hessian_psd(u, region, sampling, tol, fd_step)?,
    })
}
