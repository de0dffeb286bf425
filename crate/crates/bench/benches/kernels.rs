use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ssts_bench::{fixture, BENCH_GRIDS};
use ssts_core::krylov::{gmres_complex, ssts_gmres, GmresConfig};
use ssts_core::stationary::{solve, SstsIteration, Sweep};
use ssts_core::{transform, InnerSolveConfig, Method, SolverConfig, SpdFactorization};

fn factorize(c: &mut Criterion) {
    let mut group = c.benchmark_group("factorize_wt");
    for m in BENCH_GRIDS {
        let f = fixture(m);
        let ts = transform(&f.sys, f.omega).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(m), &ts.wt, |b, wt| {
            b.iter(|| SpdFactorization::factorize(wt).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("ssts_sweep");
    for m in BENCH_GRIDS {
        let f = fixture(m);
        let it =
            SstsIteration::new(&f.sys, f.alpha, f.omega, &InnerSolveConfig::default()).unwrap();
        let n = f.sys.n();
        group.bench_function(BenchmarkId::from_parameter(m), |b| {
            let (mut x, mut y) = (vec![0.0; n], vec![0.0; n]);
            b.iter(|| it.sweep(&mut x, &mut y).unwrap())
        });
    }
    group.finish();
}

fn solves(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_to_tol");
    group.sample_size(10);
    for m in BENCH_GRIDS {
        let f = fixture(m);
        let cfg = SolverConfig::new(f.alpha, f.omega);
        group.bench_function(BenchmarkId::new("ssts", m), |b| {
            b.iter(|| solve(Method::Ssts, &f.sys, &cfg, None).unwrap())
        });
        let gcfg = GmresConfig::default();
        group.bench_function(BenchmarkId::new("ssts-gmres", m), |b| {
            b.iter(|| {
                ssts_gmres(
                    &f.sys,
                    f.alpha,
                    f.omega,
                    &InnerSolveConfig::default(),
                    &gcfg,
                )
                .unwrap()
            })
        });
        group.bench_function(BenchmarkId::new("gmres", m), |b| {
            b.iter(|| gmres_complex(&f.sys, &gcfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, factorize, sweep, solves);
criterion_main!(benches);
