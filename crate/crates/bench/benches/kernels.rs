use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hconvex_bench::convex_line_pairs;
use hconvex_core::cost::{c_fenchel, in_c_h_subdifferential};
use hconvex_core::hconvex::check_all_characterizations;
use hconvex_core::monotone::{check_c_h_cyclic_monotone, rockafellar_potential, DEFAULT_CYCLE_TOL};
use hconvex_core::transport::{generate_instance, solve_with, InstanceMode, SolverMethod};
use hconvex_core::{BuiltinCost, BuiltinField, GroupModel, HorizontalVector, Region, Sampling, SquareGrid};

fn group_ops(c: &mut Criterion) {
    let mut group = c.benchmark_group("group");
    for model in [GroupModel::Heisenberg, GroupModel::Engel] {
        let coords = [0.3, -1.2, 0.7, 2.1];
        let g = model.point(&coords[..model.topological_dim()]).unwrap();
        let h = g.inv().dilate(1.7).unwrap();
        group.bench_function(BenchmarkId::new("compose", model.name()), |b| {
            b.iter(|| black_box(&g).compose(black_box(&h)))
        });
        group.bench_function(BenchmarkId::new("gauge_distance", model.name()), |b| {
            b.iter(|| black_box(&g).gauge_distance(black_box(&h)))
        });
    }
    group.finish();
}

fn verifiers(c: &mut Criterion) {
    let mut group = c.benchmark_group("verifiers");
    group.sample_size(20);
    let region = Region::whole(GroupModel::Heisenberg);
    let u = BuiltinField::QuarticV1;
    for samples in [500, 2000] {
        let s = Sampling::new(samples, 1);
        group.bench_with_input(BenchmarkId::new("all_characterizations", samples), &s, |b, s| {
            b.iter(|| check_all_characterizations(&u, &region, s, 1e-6, None).unwrap())
        });
    }
    let g = GroupModel::Heisenberg.point(&[0.4, -0.2, 1.0]).unwrap();
    let p = HorizontalVector::new(0.8, -0.4);
    group.bench_function("c_subdifferential_2000", |b| {
        b.iter(|| {
            in_c_h_subdifferential(
                &u,
                &BuiltinCost::NegQuadratic,
                &g,
                p,
                &region,
                &Sampling::new(2000, 1),
                1e-6,
            )
        })
    });
    for n in [21, 81] {
        let grid = SquareGrid::new(2.0, n).unwrap();
        group.bench_with_input(BenchmarkId::new("c_fenchel", n), &grid, |b, grid| {
            b.iter(|| c_fenchel(&u, &BuiltinCost::NegQuadratic, &g, p, &region, grid))
        });
    }
    group.finish();
}

fn monotone(c: &mut Criterion) {
    let mut group = c.benchmark_group("monotone");
    group.sample_size(20);
    for n in [8, 32, 128] {
        let set = convex_line_pairs(n);
        let g0 = set.pairs()[0].0;
        group.bench_with_input(BenchmarkId::new("cyclic_check_len3", n), &set, |b, set| {
            b.iter(|| check_c_h_cyclic_monotone(set, &BuiltinCost::Linear, 3, DEFAULT_CYCLE_TOL).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("potential", n), &set, |b, set| {
            b.iter(|| rockafellar_potential(set, &BuiltinCost::Linear, &g0).unwrap())
        });
    }
    group.finish();
}

fn transport(c: &mut Criterion) {
    let mut group = c.benchmark_group("transport");
    group.sample_size(20);
    for n in [8, 32] {
        let inst = generate_instance(n, 7, InstanceMode::Pushforward, Arc::new(BuiltinCost::NegQuadratic))
            .unwrap()
            .instance;
        for method in [SolverMethod::Hungarian, SolverMethod::NetworkSimplex] {
            group.bench_with_input(BenchmarkId::new(format!("{method:?}"), n), &inst, |b, inst| {
                b.iter(|| solve_with(inst, method).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, group_ops, verifiers, monotone, transport);
criterion_main!(benches);
