use std::sync::Arc;

use hconvex_core::cost::{c_fenchel, cost_gradient, in_c_h_subdifferential, subdiff_singleton};
use hconvex_core::group::horizontal_factorization_heisenberg;
use hconvex_core::hconvex::{
    check_h_convex_segmentwise, check_h_semiconvex, gradient_of, horizontal_gradient, DEFAULT_TOL,
};
use hconvex_core::monotone::{check_c_h_cyclic_monotone, reachable_set, rockafellar_potential, DEFAULT_CYCLE_TOL};
use hconvex_core::transport::{brute_force_oracle, certify_plan, solve_with, support_monotonicity_check, SolverMethod};
use hconvex_core::{
    BuiltinCost, BuiltinField, CostFunction, DiscreteMeasure, Error, FnField, GroupModel, GroupPoint, HorizontalVector,
    MonotonePairSet, Region, Sampling, ScalarField, SquareGrid, TransportInstance,
};
use proptest::prelude::*;

fn model() -> impl Strategy<Value = GroupModel> {
    prop_oneof![Just(GroupModel::Heisenberg), Just(GroupModel::Engel)]
}

fn point_in(model: GroupModel, r: f64) -> impl Strategy<Value = GroupPoint> {
    prop::collection::vec(-r..r, model.topological_dim()).prop_map(move |c| model.point(&c).unwrap())
}

fn heis(r: f64) -> impl Strategy<Value = GroupPoint> {
    point_in(GroupModel::Heisenberg, r)
}

fn hvec(r: f64) -> impl Strategy<Value = HorizontalVector> {
    (-r..r, -r..r).prop_map(|(a, b)| HorizontalVector::new(a, b))
}

fn close(a: &GroupPoint, b: &GroupPoint, tol: f64) -> bool {
    a.coords()
        .iter()
        .zip(b.coords())
        .all(|(x, y)| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0))
}

fn cost() -> impl Strategy<Value = BuiltinCost> {
    prop_oneof![Just(BuiltinCost::Linear), Just(BuiltinCost::NegQuadratic)]
}

fn convex_field() -> impl Strategy<Value = BuiltinField> {
    prop_oneof![
        (0.1..3.0f64).prop_map(BuiltinField::ScaledSqV1),
        Just(BuiltinField::QuarticV1),
        Just(BuiltinField::parse("poly:x^2 + x*y + 2*y^2", GroupModel::Heisenberg).unwrap()),
    ]
}

/// A node set in which every node is a horizontal move from an earlier one.
fn horizontal_tree(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<GroupPoint>> {
    (
        heis(1.0),
        prop::collection::vec((any::<prop::sample::Index>(), hvec(1.0)), n),
    )
        .prop_map(|(root, moves)| {
            let mut nodes = vec![root];
            for (from, w) in moves {
                let g = nodes[from.index(nodes.len())];
                nodes.push(g.translate_horizontal(w));
            }
            nodes
        })
}

fn gradient_pairs(u: &dyn ScalarField, c: &dyn CostFunction, nodes: &[GroupPoint]) -> MonotonePairSet {
    let pairs = nodes
        .iter()
        .map(|g| (*g, subdiff_singleton(u, c, g, None).unwrap()))
        .collect();
    MonotonePairSet::with_default_tol(pairs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn group_laws(m in model(), seeds in prop::collection::vec(-10.0..10.0f64, 12), lambda in 0.05..5.0f64) {
        let n = m.topological_dim();
        let g = m.point(&seeds[..n]).unwrap();
        let h = m.point(&seeds[4..4 + n]).unwrap();
        let k = m.point(&seeds[8..8 + n]).unwrap();
        prop_assert!(close(&g.compose(&h).compose(&k), &g.compose(&h.compose(&k)), 1e-9));
        prop_assert!(close(&g.compose(&g.inv()), &m.identity(), 1e-12));
        prop_assert_eq!(g.compose(&m.identity()), g);
        let d = |p: &GroupPoint| p.dilate(lambda).unwrap();
        prop_assert!(close(&d(&g.compose(&h)), &d(&g).compose(&d(&h)), 1e-9));
        let dist = g.gauge_distance(&h);
        prop_assert!((k.compose(&g).gauge_distance(&k.compose(&h)) - dist).abs() <= 1e-9 * dist.max(1.0));
    }

    #[test]
    fn gauge_is_homogeneous(m in model(), c in prop::collection::vec(-5.0..5.0f64, 4), lambda in 0.01..10.0f64) {
        let g = m.point(&c[..m.topological_dim()]).unwrap();
        let lhs = g.dilate(lambda).unwrap().gauge_norm();
        prop_assert!((lhs - lambda * g.gauge_norm()).abs() <= 1e-12 * lhs.max(1.0));
    }

    #[test]
    fn horizontality_is_symmetric_and_segments_stay_horizontal(
        m in model(),
        c in prop::collection::vec(-3.0..3.0f64, 4),
        w in hvec(2.0),
        lambda in 0.0..=1.0f64,
    ) {
        let g = m.point(&c[..m.topological_dim()]).unwrap();
        let g2 = g.translate_horizontal(w);
        prop_assert!(g.in_horizontal_plane(&g2, 1e-9) && g2.in_horizontal_plane(&g, 1e-9));
        let s = g.horizontal_segment(&g2, lambda);
        prop_assert!(s.in_horizontal_plane(&g, 1e-9) && s.in_horizontal_plane(&g2, 1e-9));
    }

    #[test]
    fn factorization_reproduces_the_point(g in heis(5.0)) {
        let factors = horizontal_factorization_heisenberg(&g).unwrap();
        let e = GroupModel::Heisenberg.identity();
        prop_assert!(factors.iter().all(|h| e.in_horizontal_plane(h, 1e-9)));
        let product = factors.iter().fold(e, |acc, h| acc.compose(h));
        prop_assert!(close(&product, &g, 1e-9));
    }

    #[test]
    fn finite_differences_match_symbolic_gradients(
        m in model(),
        c in prop::collection::vec(-2.0..2.0f64, 4),
        which in 0usize..5,
    ) {
        let g = m.point(&c[..m.topological_dim()]).unwrap();
        let fields = ["sq_v1", "quartic_v1", "linear:0.3,-1.2", "coord:t", "sq_v1:-2.5"];
        let u = BuiltinField::parse(fields[which], m).unwrap();
        let exact = u.grad(&g).unwrap();
        let fd = horizontal_gradient(&u, &g, None).unwrap();
        let tol = f64::max(1e-6, 1e-4 * exact.norm());
        prop_assert!((fd - exact).norm() <= tol, "{} at {:?}: {:?} vs {:?}", u, g, fd, exact);
    }

    #[test]
    fn euclidean_convex_quadratics_are_h_convex(
        b in prop::collection::vec(-1.0..1.0f64, 9),
        lin in prop::collection::vec(-1.0..1.0f64, 3),
        seed in any::<u64>(),
    ) {
        let u = FnField::new("quadratic", move |g: &GroupPoint| {
            let x = g.coords();
            let mut q = 0.0;
            for r in 0..3 {
                let row: f64 = (0..3).map(|k| b[3 * r + k] * x[k]).sum();
                q += row * row;
            }
            q + (0..3).map(|k| lin[k] * x[k]).sum::<f64>()
        });
        let region = Region::whole(GroupModel::Heisenberg);
        let r = check_h_convex_segmentwise(&u, &region, &Sampling::new(300, seed), DEFAULT_TOL).unwrap();
        prop_assert!(r.is_h_convex, "violation {}", r.violation);
    }

    #[test]
    fn semiconvexity_matches_the_shifted_field(k in -2.0..1.0f64, ell in 0.0..2.0f64, seed in any::<u64>()) {
        prop_assume!((k + ell).abs() > 0.05);
        let u = BuiltinField::ScaledSqV1(k);
        let region = Region::whole(GroupModel::Heisenberg);
        let s = Sampling::new(300, seed);
        let semi = check_h_semiconvex(&u, &region, ell, &s, DEFAULT_TOL).unwrap();
        let shifted = check_h_convex_segmentwise(&BuiltinField::ScaledSqV1(k + ell), &region, &s, DEFAULT_TOL).unwrap();
        prop_assert_eq!(semi.shifted_agrees, Some(true));
        prop_assert_eq!(semi.is_h_convex, shifted.is_h_convex);
        prop_assert_eq!(semi.is_h_convex, k + ell > 0.0);
    }

    #[test]
    fn closed_sequences_of_convex_gradients_are_monotone(u in convex_field(), nodes in horizontal_tree(2..=6)) {
        let set = gradient_pairs(&u, &BuiltinCost::Linear, &nodes);
        let r = check_c_h_cyclic_monotone(&set, &BuiltinCost::Linear, 5, DEFAULT_CYCLE_TOL).unwrap();
        prop_assert!(r.passed, "{:?}", r.witness);
    }

    #[test]
    fn fenchel_grows_under_refinement(
        u in convex_field(),
        c in cost(),
        g in heis(1.0),
        v in hvec(2.0),
        r in 0.5..3.0f64,
    ) {
        let region = Region::whole(GroupModel::Heisenberg);
        let grid = SquareGrid::new(r, 9).unwrap();
        let coarse = c_fenchel(&u, &c, &g, v, &region, &grid);
        let fine = c_fenchel(&u, &c, &g, v, &region, &grid.refine());
        prop_assert!(fine >= coarse);
        let wider = c_fenchel(&u, &c, &g, v, &region, &SquareGrid::new(2.0 * r, 17).unwrap());
        prop_assert!(wider >= coarse - 1e-12 * coarse.abs().max(1.0));
    }

    #[test]
    fn certified_subgradients_match_field_gradients(
        u in convex_field(),
        c in cost(),
        g in heis(1.0),
        scale in prop_oneof![Just(0.0), Just(1e-6), Just(1e-3)],
        d in hvec(1.0),
        seed in any::<u64>(),
    ) {
        let p = subdiff_singleton(&u, &c, &g, None).unwrap() + d * scale;
        let region = Region::whole(GroupModel::Heisenberg);
        // Membership up to `tol` only pins the gradient to O(sqrt(tol)).
        let tol = 1e-10;
        let verdict = in_c_h_subdifferential(&u, &c, &g, p, &region, &Sampling::new(200, seed), tol).unwrap();
        prop_assume!(verdict.passed);
        let gap = (cost_gradient(&c, &g, p, None).unwrap() - gradient_of(&u, &g, None).unwrap()).norm();
        prop_assert!(gap <= 1e-4, "gap {}", gap);
    }

    #[test]
    fn potential_dominates_single_steps(u in convex_field(), c in cost(), nodes in horizontal_tree(2..=7)) {
        let set = gradient_pairs(&u, &c, &nodes);
        let g0 = nodes[0];
        let t = rockafellar_potential(&set, &c, &g0).unwrap();
        prop_assert_eq!(t.value_at(&g0), Some(0.0));
        let p0 = set.pairs()[0].1;
        for (g, value) in t.nodes.iter().zip(&t.values) {
            if g0.in_horizontal_plane(g, set.tol_h()) {
                prop_assert!(*value >= c.eval(g, p0) - c.eval(&g0, p0) - 1e-12);
            }
        }
        let reachable = reachable_set(&set, &g0).unwrap();
        prop_assert!(reachable.iter().all(|g| t.value_at(g).is_some_and(f64::is_finite)));
    }

    #[test]
    fn potential_ignores_input_order(
        u in convex_field(),
        c in cost(),
        nodes in horizontal_tree(2..=7),
        perm in any::<u64>(),
    ) {
        let set = gradient_pairs(&u, &c, &nodes);
        let mut shuffled = set.pairs().to_vec();
        let n = shuffled.len();
        for i in (1..n).rev() {
            shuffled.swap(i, (perm.wrapping_mul(i as u64 + 7) % (i as u64 + 1)) as usize);
        }
        let other = MonotonePairSet::with_default_tol(shuffled).unwrap();
        let a = rockafellar_potential(&set, &c, &nodes[0]).unwrap();
        let b = rockafellar_potential(&other, &c, &nodes[0]).unwrap();
        for (g, v) in a.nodes.iter().zip(&a.values) {
            let w = b.value_at(g).unwrap();
            prop_assert!((v - w).abs() <= 1e-12, "{} vs {}", v, w);
        }
    }

    #[test]
    fn monotone_iff_bounded_potential(
        nodes in horizontal_tree(1..=6),
        targets in prop::collection::vec(hvec(2.0), 7),
        c in cost(),
    ) {
        let pairs = nodes.iter().zip(&targets).map(|(g, p)| (*g, *p)).collect();
        let set = MonotonePairSet::with_default_tol(pairs).unwrap();
        let verdict = check_c_h_cyclic_monotone(&set, &c, nodes.len(), DEFAULT_CYCLE_TOL).unwrap();
        match rockafellar_potential(&set, &c, &nodes[0]) {
            Ok(_) => prop_assert!(verdict.passed),
            Err(Error::Unbounded { .. }) => prop_assert!(!verdict.passed),
            Err(e) => prop_assert!(false, "unexpected error {}", e),
        }
    }
}

fn normalized(w: &[f64]) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

fn transport_instance() -> impl Strategy<Value = TransportInstance> {
    (1usize..=5, heis(1.0), 0.0..std::f64::consts::TAU).prop_flat_map(|(n, base, theta)| {
        let dir = HorizontalVector::new(theta.cos(), theta.sin());
        (
            prop::collection::vec(-1.0..1.0f64, n),
            prop::collection::vec((-1.0..1.0f64, 0.0..1.0f64), n),
            prop::collection::vec(0.1..1.0f64, n),
            prop::collection::vec(0.1..1.0f64, n),
        )
            .prop_map(move |(params, moves, wa, wb)| {
                let mu: Vec<GroupPoint> = params.iter().map(|s| base.translate_horizontal(dir * *s)).collect();
                // Every nu atom stays on the line, so every cell is admitted.
                let nu: Vec<GroupPoint> = moves.iter().map(|(s, _)| base.translate_horizontal(dir * *s)).collect();
                let mu = DiscreteMeasure::new(mu.into_iter().zip(normalized(&wa)).collect()).unwrap();
                let nu = DiscreteMeasure::new(nu.into_iter().zip(normalized(&wb)).collect()).unwrap();
                TransportInstance::new(mu, nu, Arc::new(BuiltinCost::NegQuadratic)).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transport_plans_are_feasible_and_dual_certified(inst in transport_instance()) {
        let plan = solve_with(&inst, SolverMethod::NetworkSimplex).unwrap();
        let cert = certify_plan(&plan, &inst);
        prop_assert!(cert.marginal_error <= 1e-9, "{:?}", cert);
        prop_assert!(cert.duality_gap.abs() <= 1e-9, "{:?}", cert);
        prop_assert!(cert.optimal);
        let n = inst.mu.len().max(inst.nu.len());
        prop_assert!(support_monotonicity_check(&plan, &inst, n, DEFAULT_CYCLE_TOL).unwrap().passed);
    }

    #[test]
    fn simplex_agrees_with_assignment_solvers(n in 1usize..=6, seed in any::<u64>()) {
        use hconvex_core::transport::{generate_instance, InstanceMode};
        let g = generate_instance(n, seed, InstanceMode::RandomHorizontal, Arc::new(BuiltinCost::NegQuadratic)).unwrap();
        let simplex = solve_with(&g.instance, SolverMethod::NetworkSimplex).unwrap();
        let hungarian = solve_with(&g.instance, SolverMethod::Hungarian).unwrap();
        let oracle = brute_force_oracle(&g.instance).unwrap();
        prop_assert!((simplex.value - hungarian.value).abs() <= 1e-9);
        prop_assert!((simplex.value - oracle.value).abs() <= 1e-9);
    }
}
