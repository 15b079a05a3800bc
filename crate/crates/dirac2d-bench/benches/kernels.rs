use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use dirac2d::decay::{fit_decay, geometric_times};
use dirac2d::discretize::{resolvent_matrix, Grid2, GridSpec, PotentialSpec};
use dirac2d::propagator::{free_evolution, spectral_density};
use dirac2d::specfun::hankel1_01;
use dirac2d::threshold::{ThresholdAnalysis, Tolerances};
use dirac2d::{CutoffSpec, Point2, Sign};

fn grid(n: usize) -> Arc<Grid2> {
    Grid2::new(GridSpec { n_per_axis: n, ..GridSpec::default() }).unwrap()
}

fn special_functions(c: &mut Criterion) {
    c.bench_function("hankel1_01", |b| b.iter(|| hankel1_01(black_box(3.7))));
    let cut = CutoffSpec::default();
    let (x, y) = (Point2::new(12.0, -3.0), Point2::new(0.5, 1.0));
    c.bench_function("free_evolution t=64", |b| b.iter(|| free_evolution(black_box(64.0), x, y, cut).unwrap()));
}

fn nystrom(c: &mut Criterion) {
    let mut g = c.benchmark_group("nystrom");
    g.sample_size(10);
    let grid = grid(14);
    g.bench_function("resolvent_matrix n=14", |b| b.iter(|| resolvent_matrix(&grid, Sign::Plus, black_box(0.05))));
    let analysis =
        Arc::new(ThresholdAnalysis::new(&PotentialSpec::attractive_gaussian(0.5, 2.0), &grid, Tolerances::default()).unwrap());
    let xs: Vec<Point2> = (0..16).map(|k| Point2::new(k as f64, 0.0)).collect();
    let ys = [Point2::new(0.0, 0.0)];
    g.bench_function("spectral_density n=14", |b| b.iter(|| spectral_density(&analysis, black_box(0.05), &xs, &ys).unwrap()));
    g.finish();
}

fn fitting(c: &mut Criterion) {
    let s: Vec<(f64, f64)> = geometric_times(4.0, 256.0, 1.1).unwrap().into_iter().map(|t| (t, t.powf(-0.5))).collect();
    c.bench_function("fit_decay", |b| b.iter(|| fit_decay(black_box(&s), 4.0, 256.0).unwrap()));
}

criterion_group!(benches, special_functions, nystrom, fitting);
criterion_main!(benches);
