use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use iopo_bench::{config, random_decision, samples, scenario, zero_phases};
use iopo_core::iopo::{net_shape, woa_config};
use iopo_core::oppo::generate_candidates;
use iopo_core::policy::{build_features, PolicyNet};
use iopo_core::woa;
use iopo_core::Evaluator;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn evaluate(c: &mut Criterion) {
    let mut g = c.benchmark_group("evaluate");
    for (u, m) in [(5, 1), (10, 3), (20, 5)] {
        let s = scenario(u, m);
        let ev = Evaluator::new(&s).unwrap();
        let phases = zero_phases(&s);
        let d = random_decision(&mut ChaCha8Rng::seed_from_u64(1), u, m);
        g.bench_with_input(
            BenchmarkId::from_parameter(format!("{u}x{m}")),
            &d,
            |b, d| b.iter(|| ev.evaluate(black_box(d), &phases, 100.0).unwrap()),
        );
    }
    g.finish();
}

fn whale_search(c: &mut Criterion) {
    let cfg = config(10, 3);
    let s = scenario(10, 3);
    let ev = Evaluator::new(&s).unwrap();
    let d = random_decision(&mut ChaCha8Rng::seed_from_u64(2), 10, 3);
    let wc = woa_config(&cfg);
    c.bench_function("woa/10x3", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        b.iter(|| woa::optimize_phases(&ev, &d, &wc, cfg.overdue_penalty, &mut rng).unwrap())
    });
}

fn candidates(c: &mut Criterion) {
    let mut g = c.benchmark_group("oppo_candidates");
    for (u, m) in [(10, 3), (20, 5)] {
        let cfg = config(u, m);
        let net = PolicyNet::new(
            net_shape(&cfg),
            0.0,
            1e-3,
            &mut ChaCha8Rng::seed_from_u64(4),
        )
        .unwrap();
        let p = net.predict(&build_features(&scenario(u, m))).unwrap();
        g.bench_function(format!("{u}x{m}/H={}", cfg.oppo_candidates), |b| {
            b.iter(|| generate_candidates(black_box(&p), cfg.oppo_candidates).unwrap())
        });
    }
    g.finish();
}

fn train_step(c: &mut Criterion) {
    let cfg = config(10, 3);
    let batch = samples(&cfg, cfg.batch_size);
    let refs: Vec<_> = batch.iter().collect();
    let mut net = PolicyNet::new(
        net_shape(&cfg),
        cfg.dropout_rate,
        cfg.learning_rate,
        &mut ChaCha8Rng::seed_from_u64(5),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    c.bench_function("train_step/10x3", |b| {
        b.iter(|| net.train_step(&refs, &mut rng).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = evaluate, whale_search, candidates, train_step
}
criterion_main!(benches);
