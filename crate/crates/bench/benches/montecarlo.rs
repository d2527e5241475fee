use bubble_bench::{cutoff, prefs, uniform};
use bubble_core::{estimate, solve_optimal, Estimand, SimConfig, SolverOptions, Strategy};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn utility(c: &mut Criterion) {
    let model = cutoff();
    let sol = solve_optimal(&model, &prefs(4.0), &SolverOptions::default()).unwrap();
    let est = Estimand::utility(Strategy::optimal(&sol), &prefs(4.0));
    let mut g = c.benchmark_group("expected_utility");
    g.sample_size(10);
    for steps in [64, 256, 1024] {
        let cfg = SimConfig::new(10_000, steps, 1);
        g.throughput(Throughput::Elements(cfg.n_paths as u64));
        g.bench_with_input(BenchmarkId::from_parameter(steps), &cfg, |b, cfg| b.iter(|| estimate(&model, cfg, &est).unwrap()));
    }
    g.finish();
}

fn terminal_price(c: &mut Criterion) {
    let model = uniform();
    let cfg = SimConfig::new(100_000, 16, 1);
    let mut g = c.benchmark_group("terminal_price");
    g.sample_size(10);
    g.throughput(Throughput::Elements(cfg.n_paths as u64));
    g.bench_function("uniform", |b| b.iter(|| estimate(&model, &cfg, &Estimand::TerminalPrice).unwrap()));
    g.finish();
}

fn budget(c: &mut Criterion) {
    let model = cutoff();
    let sol = solve_optimal(&model, &prefs(0.25), &SolverOptions::default()).unwrap();
    let est = Estimand::budget(&sol).unwrap();
    let cfg = SimConfig::new(10_000, 256, 1);
    let mut g = c.benchmark_group("dual_budget");
    g.sample_size(10);
    g.bench_function("cutoff_p0.25", |b| b.iter(|| estimate(&model, &cfg, &est).unwrap()));
    g.finish();
}

criterion_group!(benches, utility, terminal_price, budget);
criterion_main!(benches);
