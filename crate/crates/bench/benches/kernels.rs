use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use einlab_core::constraints::constraint_residual;
use einlab_core::curvature::ricci;
use einlab_core::evolution::{evolution_rhs, evolve};
use einlab_core::homogeneous::{evolve_homogeneous, su2_chart};
use einlab_core::jets::formal_solution;
use einlab_core::random::band_limited_metric;
use einlab_core::spinor::spinor_derivative;
use einlab_core::{Chart, Field, LeftInvariantMetric, MetricState, Rank, SpinorField, Su2Model};
use num_complex::Complex64;

fn grid_metric(points: usize) -> Field {
    let chart = Arc::new(Chart::grid(3, points).unwrap());
    band_limited_metric(&chart, 42, 0.05, 2)
}

fn curvature(c: &mut Criterion) {
    let mut group = c.benchmark_group("ricci_grid");
    for n in [8, 16] {
        let g = grid_metric(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| {
            b.iter(|| ricci(black_box(g)).unwrap())
        });
    }
    group.finish();

    let g = grid_metric(16);
    let state = MetricState::umbilical(g, 0.1, 0.0).unwrap();
    c.bench_function("constraint_residual_grid_16", |b| {
        b.iter(|| constraint_residual(black_box(&state)).unwrap())
    });
}

fn evolution(c: &mut Criterion) {
    let g = grid_metric(8);
    let state = MetricState::umbilical(g, 0.1, 0.0).unwrap();
    c.bench_function("evolution_rhs_grid_8", |b| {
        b.iter(|| evolution_rhs(black_box(&state), Some(2)).unwrap())
    });

    let chart = su2_chart(Su2Model::Left);
    let cone = MetricState::umbilical(Field::identity(&chart, Rank::Sym2Cov), 1.0, 0.0).unwrap();
    c.bench_function("evolve_frame_cone_100_steps", |b| {
        b.iter(|| evolve(black_box(&cone), 0.1, 1e-3).unwrap())
    });

    let m = LeftInvariantMetric::new(1.0, 1.0, 4.0).unwrap();
    c.bench_function("evolve_homogeneous_berger_100_steps", |b| {
        b.iter(|| evolve_homogeneous(black_box(&m), [0.2, 0.2, -0.1], 0.0, 0.1, 1e-3).unwrap())
    });
}

fn jets(c: &mut Criterion) {
    let chart = su2_chart(Su2Model::Left);
    let sphere = MetricState::new(
        Field::identity(&chart, Rank::Sym2Cov),
        Field::zeros(&chart, Rank::Endomorphism),
        3.0,
    )
    .unwrap();
    let mut group = c.benchmark_group("formal_solution_frame");
    for k in [4, 8] {
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| formal_solution(black_box(&sphere), k).unwrap())
        });
    }
    group.finish();

    let grid = MetricState::umbilical(grid_metric(8), 0.1, 0.0).unwrap();
    c.bench_function("formal_solution_grid_8_k4", |b| {
        b.iter(|| formal_solution(black_box(&grid), 4).unwrap())
    });
}

fn spinors(c: &mut Criterion) {
    let g = grid_metric(16);
    let psi = SpinorField::from_fn(g.chart(), 2, |x| {
        vec![Complex64::new(x[0].cos(), 0.0), Complex64::new(0.0, x[1].sin())]
    });
    c.bench_function("spinor_derivative_grid_16", |b| {
        b.iter(|| spinor_derivative(black_box(&psi), black_box(&g)).unwrap())
    });
}

criterion_group!(benches, curvature, evolution, jets, spinors);
criterion_main!(benches);
