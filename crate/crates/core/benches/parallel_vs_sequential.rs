use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use minmax_hyper::gauss_stable::{identity, small_ball, ConvexSet, VectorLaw};
use minmax_hyper::hyper::{check_max_conditions, HyperParams};
use minmax_hyper::moments::{mc_moment, Word};
use minmax_hyper::{par, parse_spec};

fn tournament_mc(c: &mut Criterion) {
    let spec = parse_spec("weibull(1.5,2)").unwrap();
    let word: Word = "max3.min2".parse().unwrap();
    let mut group = c.benchmark_group("tournament_mc");
    group.sample_size(10);
    for n in [100_000usize, 400_000] {
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, &n| {
            b.iter(|| mc_moment(&spec, &word, 2.0, n, 7))
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, &n| {
            b.iter(|| par::sequential(|| mc_moment(&spec, &word, 2.0, n, 7)))
        });
    }
    group.finish();
}

fn max_conditions(c: &mut Criterion) {
    let spec = parse_spec("weibull(2,1)").unwrap();
    let params = HyperParams {
        n_grid: (0..=16).map(|k| 1u64 << k).collect(),
        t_grid_size: 100,
        ..HyperParams::default()
    };
    let mut group = c.benchmark_group("max_conditions");
    group.sample_size(10);
    group.bench_function("parallel", |b| b.iter(|| check_max_conditions(&spec, &params).unwrap()));
    group.bench_function("sequential", |b| {
        b.iter(|| par::sequential(|| check_max_conditions(&spec, &params).unwrap()))
    });
    group.finish();
}

fn gaussian_small_ball(c: &mut Criterion) {
    let law = VectorLaw::gaussian(3, identity(3), 1).unwrap();
    let ball = ConvexSet::euclidean_ball(1.0);
    let radii = [0.25, 0.5, 1.0, 2.0];
    let mut group = c.benchmark_group("small_ball");
    group.sample_size(10);
    let n = 1_000_000;
    group.bench_function("parallel", |b| b.iter(|| small_ball(&law, &ball, &[0.0; 3], &radii, n).unwrap()));
    group.bench_function("sequential", |b| {
        b.iter(|| par::sequential(|| small_ball(&law, &ball, &[0.0; 3], &radii, n).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, tournament_mc, max_conditions, gaussian_small_ball);
criterion_main!(benches);
