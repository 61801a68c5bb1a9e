//! Fixtures shared by the benchmarks.

use hconvex_core::{GroupModel, GroupPoint, HorizontalVector, MonotonePairSet};

/// `n` points of the horizontal line through the identity along `(1, 0)`,
/// paired with the gradient `2 xi_1` of `||xi_1||^2`.
pub fn convex_line_pairs(n: usize) -> MonotonePairSet {
    let e = GroupModel::Heisenberg.identity();
    let pairs = (0..n)
        .map(|k| {
            let s = -1.0 + 2.0 * k as f64 / n.max(2).saturating_sub(1) as f64;
            let g: GroupPoint = e.translate_horizontal(HorizontalVector::new(s, 0.0));
            (g, g.horizontal() * 2.0)
        })
        .collect();
    MonotonePairSet::with_default_tol(pairs).expect("line pairs are valid")
}
