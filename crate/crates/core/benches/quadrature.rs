use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fraclab::constants::CriticalParams;
use fraclab::funcspace::{gagliardo_1d, gagliardo_profile, moser_profile, PiecewiseFunction1D, QuadratureSpec};
use fraclab::poincare::{rayleigh_estimate_with, IntervalUnionDomain, RayleighConfig};

/// A single-thread pool against a pool sized like the default one.
fn pools() -> Vec<(String, rayon::ThreadPool)> {
    let all = rayon::current_num_threads();
    [("single".to_string(), 1), (format!("pool{all}"), all)]
        .into_iter()
        .map(|(name, t)| (name, rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap()))
        .collect()
}

fn seminorm(c: &mut Criterion) {
    let quad = QuadratureSpec { cells_per_dim: 256, ..QuadratureSpec::default() };
    let tents: Vec<(f64, f64, f64)> = (0..12).map(|k| (0.4 * k as f64, 0.3, 1.0 - 0.07 * k as f64)).collect();
    let line = PiecewiseFunction1D::tent_sum(&tents).unwrap();
    let params = CriticalParams::critical(2, 0.5).unwrap();
    let moser = moser_profile(&params, 1e-3).unwrap();
    let mut g = c.benchmark_group("seminorm");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_with_input(BenchmarkId::new("line_s0.3_p3", &name), &pool, |b, pool| {
            b.iter(|| pool.install(|| gagliardo_1d(&line, 0.3, 3.0, &quad).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("radial_moser_n2", &name), &pool, |b, pool| {
            b.iter(|| pool.install(|| gagliardo_profile(&moser, &params, &QuadratureSpec::default()).unwrap()))
        });
    }
    g.finish();
}

fn rayleigh(c: &mut Criterion) {
    let domain = IntervalUnionDomain::periodic(4, 1.0, 1.0).unwrap();
    let cfg = RayleighConfig { restarts: 0, ..RayleighConfig::with_grid(64) };
    let mut g = c.benchmark_group("rayleigh");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_with_input(BenchmarkId::new("periodic4_p2", &name), &pool, |b, pool| {
            b.iter(|| pool.install(|| rayleigh_estimate_with(&domain, 0.5, 2.0, 2.0, &cfg).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, seminorm, rayleigh);
criterion_main!(benches);
