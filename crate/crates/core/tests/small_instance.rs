use iopo_core::{compare, run, summarize, Baseline, Comparison, ExperimentConfig};

fn config() -> ExperimentConfig {
    ExperimentConfig {
        num_users: 2,
        num_uavs: 1,
        oppo_candidates: 4,
        frames: 500,
        ..ExperimentConfig::default()
    }
}

#[test]
fn learner_matches_greedy_on_two_users() {
    let cfg = config();
    let summary = run(cfg.clone()).unwrap();
    let tail = summary.trailing(100);
    let ours = tail.iter().map(|r| r.penalized_energy).sum::<f64>() / tail.len() as f64;

    let what = Comparison {
        baselines: vec![Baseline::GreedyOc],
        oracle: true,
        ..Comparison::default()
    };
    let series = compare(&cfg, 401..=500, &what).unwrap();
    let metrics = summarize(&series).unwrap();
    let greedy = metrics.iter().find(|m| m.method == "greedy_oc").unwrap();
    let oracle = metrics.iter().find(|m| m.method == "oracle").unwrap();
    assert!(
        ours <= greedy.mean_penalized_energy,
        "learner {ours} vs greedy {}",
        greedy.mean_penalized_energy
    );
    assert!(oracle.mean_penalized_energy <= ours);
}

#[test]
fn every_frame_keeps_the_better_reference() {
    let summary = run(ExperimentConfig {
        frames: 120,
        ..config()
    })
    .unwrap();
    assert_eq!(summary.records.len(), 120);
    for r in &summary.records {
        assert!(r.ref_penalized_energy <= r.initial_penalized_energy);
        assert!(r.ref_penalized_energy <= r.penalized_energy);
    }
    let improved = summary.records.iter().filter(|r| r.improved).count() as u64;
    assert_eq!(improved, summary.improved);
}
