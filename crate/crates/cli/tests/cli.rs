use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use iopo_cli::output::{read_frames, SummaryDocument};
use iopo_core::{MetricsSummary, Outcome};
use tempfile::TempDir;

const SMALL: &str =
    "U = 3\nM = 1\nH = 4\nN = 60\nbatch = 16\nhidden_layers = 2\nhidden_width = 16\nwindow = 20\n";

fn iopo(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_iopo"));
    cmd.args(args)
        .env("RUST_LOG", "warn")
        .env_remove("IOPO_CONFIG_DIR");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn iopo")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn train(dir: &Path, name: &str, config: &Path, extra: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let mut args = vec![
        "train",
        "--config",
        config.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    ok(&iopo(&args, &[]));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn single_frame_run_writes_one_row_with_fixed_columns() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let out = train(tmp.path(), "run", &cfg, &["--frames", "1"]);
    let text = std::fs::read_to_string(out.join("frames.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "frame,raw_energy,penalized_energy,overdue_count,improved,ref_raw_energy,ref_penalized_energy,loss"
    );
    assert_eq!(lines.count(), 1);
    for f in ["summary.json", "checkpoint.json", "config.toml"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
}

#[test]
fn identical_seeds_give_identical_frames() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let a = train(tmp.path(), "a", &cfg, &[]);
    let b = train(tmp.path(), "b", &cfg, &[]);
    let c = train(tmp.path(), "c", &cfg, &["--seed", "9"]);
    let read = |d: &Path| std::fs::read(d.join("frames.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn summary_matches_metrics_recomputed_from_frames() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let out = train(tmp.path(), "run", &cfg, &[]);
    let rows = read_frames(&out.join("frames.csv")).unwrap();
    assert_eq!(rows.len(), 60);
    let doc = SummaryDocument::load(&out.join("summary.json")).unwrap();
    assert_eq!((doc.window_start, doc.window_end), (41, 60));
    let stored = doc.metric("iopo").unwrap();

    let tail: Vec<Outcome> = rows[40..].iter().map(|r| r.outcome()).collect();
    let recomputed = MetricsSummary::from_outcomes("iopo", &tail).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
    assert!(close(
        stored.mean_penalized_energy,
        recomputed.mean_penalized_energy
    ));
    assert!(close(stored.mean_raw_energy, recomputed.mean_raw_energy));
    assert!(close(
        stored.overdue_plan_percent,
        recomputed.overdue_plan_percent
    ));
    assert!(close(
        stored.avg_overdue_users,
        recomputed.avg_overdue_users
    ));
    let improved: u64 = rows.iter().map(|r| u64::from(r.improved)).sum();
    assert_eq!(stored.improved, Some(improved));
    assert!(rows.iter().any(|r| r.loss.is_some()));
    assert!(rows.iter().all(|r| r.loss.is_none() || r.frame % 10 == 0));
}

#[test]
fn missing_config_exits_two_and_names_the_path() {
    let out = iopo(
        &[
            "train",
            "--config",
            "/nonexistent/cfg.toml",
            "--out-dir",
            "/tmp/unused",
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/cfg.toml"));
}

#[test]
fn invalid_config_value_exits_two() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "U = 0\n");
    let out = iopo(
        &[
            "train",
            "--config",
            s(&cfg),
            "--out-dir",
            s(&tmp.path().join("run")),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_is_found_through_the_directory_variable() {
    let tmp = TempDir::new().unwrap();
    write_config(tmp.path(), "small.toml", SMALL);
    let out_dir = tmp.path().join("run");
    ok(&iopo(
        &["train", "--config", "small.toml", "--out-dir", s(&out_dir)],
        &[("IOPO_CONFIG_DIR", tmp.path())],
    ));
    assert_eq!(read_frames(&out_dir.join("frames.csv")).unwrap().len(), 60);

    write_config(
        tmp.path(),
        "default.toml",
        &SMALL.replace("N = 60", "N = 7"),
    );
    let out_dir = tmp.path().join("default");
    ok(&iopo(
        &["train", "--out-dir", s(&out_dir)],
        &[("IOPO_CONFIG_DIR", tmp.path())],
    ));
    assert_eq!(read_frames(&out_dir.join("frames.csv")).unwrap().len(), 7);
}

#[test]
fn eval_reports_local_without_overdue_and_oracle_ratios() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "U = 5\nM = 1\nH = 10\nN = 80\nbatch = 16\nhidden_layers = 2\nhidden_width = 32\nwindow = 40\n",
    );
    let run = train(tmp.path(), "run", &cfg, &[]);
    let ck = run.join("checkpoint.json");
    ok(&iopo(
        &["eval", "--checkpoint", s(&ck), "--window", "30", "--oracle"],
        &[],
    ));
    let doc = SummaryDocument::load(&run.join("eval_summary.json")).unwrap();
    assert_eq!((doc.window_start, doc.window_end), (51, 80));
    let local = doc.metric("local").unwrap();
    assert_eq!(local.overdue_plan_percent, 0.0);
    let ours = doc.metric("iopo").unwrap();
    let oracle = doc.metric("oracle").unwrap();
    for m in &doc.metrics {
        let r = m.proximity_ratio.unwrap();
        assert!(r > 0.0 && r <= 1.0 + 1e-12, "{}: {r}", m.method);
    }
    assert_eq!(oracle.proximity_ratio, Some(1.0));
    assert!(local.proximity_ratio.unwrap() <= ours.proximity_ratio.unwrap());
    let csv = std::fs::read_to_string(run.join("eval_summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), doc.metrics.len() + 1);
}

#[test]
fn eval_rejects_zero_window_and_unknown_baselines() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let run = train(tmp.path(), "run", &cfg, &["--frames", "5"]);
    let ck = run.join("checkpoint.json");
    let out = iopo(&["eval", "--checkpoint", s(&ck), "--window", "0"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let out = iopo(
        &["eval", "--checkpoint", s(&ck), "--baselines", "nope"],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}

#[test]
fn oracle_writes_one_row_per_frame() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "U = 5\nM = 1\nH = 10\nN = 100\n");
    let out_dir = tmp.path().join("oracle");
    ok(&iopo(
        &["oracle", "--config", s(&cfg), "--out-dir", s(&out_dir)],
        &[],
    ));
    let mut rd = csv::Reader::from_path(out_dir.join("oracle.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| &r[5] == "32"));
}

#[test]
fn oracle_refuses_large_instances() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "U = 20\nM = 5\nH = 20\nN = 1\n");
    let out = iopo(
        &["oracle", "--config", s(&cfg), "--out-dir", s(tmp.path())],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("6^20"));
}

#[test]
fn report_plots_one_series_per_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let a = train(tmp.path(), "full", &cfg, &[]);
    let b = train(tmp.path(), "argmax", &cfg, &["--disable-oppo"]);
    let out_dir = tmp.path().join("report");
    ok(&iopo(
        &[
            "report",
            s(&a.join("summary.json")),
            s(&b.join("summary.json")),
            "--window",
            "10",
            "--out-dir",
            s(&out_dir),
        ],
        &[],
    ));
    let mut rd = csv::Reader::from_path(out_dir.join("series.csv")).unwrap();
    let labels: Vec<String> = rd.records().map(|r| r.unwrap()[0].to_string()).collect();
    assert_eq!(labels.len(), 120);
    assert_eq!(labels.iter().filter(|l| *l == "full").count(), 60);
    assert_eq!(labels.iter().filter(|l| *l == "argmax").count(), 60);
    let svg = std::fs::read_to_string(out_dir.join("energy.svg")).unwrap();
    assert!(svg.contains("full") && svg.contains("argmax"));

    let out = iopo(&["report", "--out-dir", s(&out_dir)], &[]);
    assert_eq!(out.status.code(), Some(2));
}
