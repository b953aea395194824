use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use pruefer::lemma_audit::{run_case_grid, GridConfig};
use pruefer::sensitivity::theta_dot;
use pruefer::{classify, eigenvalue, fd_spectrum, shoot, spectrum, FdConfig, IntegratorConfig, SpectrumConfig};
use pruefer_bench::fixture;

fn bench_shoot(c: &mut Criterion) {
    let p = fixture(7);
    let cfg = IntegratorConfig::default();
    let mut group = c.benchmark_group("shoot");
    for z in [5.0, 20.0, 40.0] {
        group.bench_with_input(BenchmarkId::from_parameter(z), &z, |b, &z| {
            b.iter(|| shoot(&p, black_box(z), 1.0, &cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_eigenvalue(c: &mut Criterion) {
    let p = fixture(7);
    let cfg = SpectrumConfig::default();
    let mut group = c.benchmark_group("eigenvalue");
    for n in [1, 6, 12] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| eigenvalue(&p, black_box(n), &cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_spectrum(c: &mut Criterion) {
    let p = fixture(7);
    c.bench_function("spectrum/12", |b| {
        b.iter(|| spectrum(&p, &SpectrumConfig::with_n_max(black_box(12))).unwrap())
    });
}

fn bench_fd(c: &mut Criterion) {
    let p = fixture(7);
    let mut group = c.benchmark_group("fd_spectrum");
    group.sample_size(10);
    for grid_n in [1024, 4096] {
        let cfg = FdConfig { grid_n, richardson: true };
        group.bench_with_input(BenchmarkId::from_parameter(grid_n), &cfg, |b, cfg| {
            b.iter(|| fd_spectrum(&p, cfg, 10).unwrap())
        });
    }
    group.finish();
}

fn bench_theta_dot(c: &mut Criterion) {
    let p = fixture(7);
    let x0 = classify(&p).x0;
    c.bench_function("theta_dot/z=20", |b| b.iter(|| theta_dot(&p, black_box(20.0), x0).unwrap()));
}

fn bench_audit(c: &mut Criterion) {
    let potentials = vec![("fixture".to_string(), fixture(7))];
    let mut group = c.benchmark_group("audit");
    group.sample_size(10);
    group.bench_function("case_grid", |b| {
        b.iter(|| run_case_grid(&potentials, &GridConfig::default()).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_shoot,
    bench_eigenvalue,
    bench_spectrum,
    bench_fd,
    bench_theta_dot,
    bench_audit
);
criterion_main!(benches);
