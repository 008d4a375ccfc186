use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use iopo_core::baselines::{brute_force_optimal, enumeration_size};
use iopo_core::iopo::woa_config;
use iopo_core::metrics::trailing_frames;
use iopo_core::{
    compare, generate_scenario, learner_summary, run_with, summarize, Baseline, Checkpoint,
    Comparison, ExperimentConfig, FrameScorer, Iopo,
};
use log::{info, warn};

use crate::args::{ConfigArgs, EvalArgs, OracleArgs, ReportArgs, TrainArgs};
use crate::output::{self, FrameRow, OracleRow, SeriesRow, SummaryDocument};
use crate::plot::{self, Line};
use crate::usage;

pub const CONFIG_DIR_ENV: &str = "IOPO_CONFIG_DIR";
const DEFAULT_CONFIG: &str = "default.toml";

/// Finds and parses the config. Without `--config`, `$IOPO_CONFIG_DIR/default.toml`
/// is used when present, else built-in defaults.
pub fn resolve_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    let dir = std::env::var_os(CONFIG_DIR_ENV).map(PathBuf::from);
    let found = match path {
        Some(p) if p.exists() => Some(p.to_path_buf()),
        Some(p) => {
            let alt = dir.as_ref().filter(|_| p.is_relative()).map(|d| d.join(p));
            match alt {
                Some(a) if a.exists() => Some(a),
                _ => return Err(usage(format!("config file not found: {}", p.display()))),
            }
        }
        None => dir.map(|d| d.join(DEFAULT_CONFIG)).filter(|p| p.exists()),
    };
    match found {
        Some(p) => ExperimentConfig::load(&p)
            .map_err(|e| usage(format!("cannot load config {}: {e}", p.display()))),
        None => Ok(ExperimentConfig::default()),
    }
}

fn apply_overrides(
    mut cfg: ExperimentConfig,
    seed: Option<u64>,
    frames: Option<u64>,
) -> Result<ExperimentConfig> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = frames {
        cfg.frames = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_config(a: &ConfigArgs) -> Result<ExperimentConfig> {
    apply_overrides(resolve_config(a.config.as_deref())?, a.seed, a.frames)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let mut cfg = load_config(&a.config)?;
    cfg.disable_oppo |= a.disable_oppo;
    cfg.disable_initial_reference |= a.disable_initial_reference;
    create_dir(&a.out_dir)?;
    output::write_text(&a.out_dir.join(output::CONFIG_TOML), &cfg.to_flat_text())?;

    let mut frames = output::csv_writer(&a.out_dir.join(output::FRAMES_CSV))?;
    let total = cfg.frames;
    let every = a.checkpoint_every;
    let progress = (total / 20).max(1000);
    let mut recent = 0.0;
    info!(
        "training U={} M={} for {total} frames (seed {})",
        cfg.num_users, cfg.num_uavs, cfg.seed
    );
    let (learner, run) = run_with(cfg.clone(), |learner, r| -> Result<()> {
        frames.serialize(FrameRow::from(r))?;
        recent += r.penalized_energy;
        if r.frame % progress == 0 || r.frame == total {
            let span = (r.frame - 1) % progress + 1;
            info!(
                "frame {}/{total}: mean penalized energy {:.4} over the last {span}",
                r.frame,
                recent / span as f64
            );
            recent = 0.0;
        }
        if every > 0 && r.frame % every == 0 {
            let path = a.out_dir.join(format!("checkpoint-{:08}.json", r.frame));
            learner.checkpoint().save(&path)?;
        }
        Ok(())
    })?;
    frames.flush()?;
    learner
        .checkpoint()
        .save(a.out_dir.join(output::CHECKPOINT_JSON))?;

    let window = trailing_frames(cfg.frames, cfg.window)?;
    let doc = SummaryDocument {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        frames: cfg.frames,
        window_start: *window.start(),
        window_end: *window.end(),
        metrics: vec![learner_summary(&run.records, cfg.window)?],
    };
    doc.save(&a.out_dir.join(output::SUMMARY_JSON))?;
    let m = &doc.metrics[0];
    info!(
        "done: trailing mean penalized energy {:.4}, #Improved {}",
        m.mean_penalized_energy, run.improved
    );
    Ok(())
}

pub fn parse_baselines(names: &[String]) -> Result<Vec<Baseline>> {
    let mut out = Vec::new();
    for name in names.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        match name {
            "all" => out.extend(Baseline::ALL),
            "none" => {}
            _ => out.push(
                Baseline::ALL
                    .into_iter()
                    .find(|b| b.name() == name)
                    .ok_or_else(|| {
                        let known: Vec<_> = Baseline::ALL.iter().map(|b| b.name()).collect();
                        usage(format!(
                            "unknown baseline {name:?}; expected one of {}, all, none",
                            known.join(", ")
                        ))
                    })?,
            ),
        }
    }
    let mut seen = HashSet::new();
    out.retain(|b| seen.insert(*b));
    Ok(out)
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    if a.window == 0 {
        return Err(usage("--window must be positive"));
    }
    let baselines = parse_baselines(&a.baselines)?;
    let ck = Checkpoint::load(&a.checkpoint)
        .with_context(|| format!("loading checkpoint {}", a.checkpoint.display()))?;
    let dir = a
        .checkpoint
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let config_path = a
        .config
        .clone()
        .unwrap_or_else(|| dir.join(output::CONFIG_TOML));
    let cfg = apply_overrides(resolve_config(Some(&config_path))?, a.seed, a.frames)?;
    if ck.config_hash != cfg.hash() {
        warn!("checkpoint was trained under a different config");
    }
    let mut window = a.window;
    if window as u64 > cfg.frames {
        warn!(
            "window {window} exceeds {} frames; using {}",
            cfg.frames, cfg.frames
        );
        window = cfg.frames as usize;
    }
    let frames = trailing_frames(cfg.frames, window)?;
    let learner = Iopo::from_checkpoint(cfg.clone(), ck)?;
    info!(
        "evaluating frames {}..={} with {} baseline(s){}",
        frames.start(),
        frames.end(),
        baselines.len(),
        if a.oracle { " and the oracle" } else { "" }
    );
    let what = Comparison {
        learner: Some(&learner),
        baselines,
        oracle: a.oracle,
    };
    let series = compare(&cfg, frames.clone(), &what)?;
    let metrics = summarize(&series)?;
    let out = a.out_dir.clone().unwrap_or(dir);
    create_dir(&out)?;
    output::write_metrics_csv(&out.join(output::EVAL_CSV), &metrics)?;
    SummaryDocument {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        frames: cfg.frames,
        window_start: *frames.start(),
        window_end: *frames.end(),
        metrics,
    }
    .save(&out.join(output::EVAL_JSON))?;
    Ok(())
}

pub fn oracle(a: &OracleArgs) -> Result<()> {
    let cfg = load_config(&a.config)?;
    let size = enumeration_size(cfg.num_users, cfg.num_uavs, cfg.brute_force_cap)?;
    create_dir(&a.out_dir)?;
    info!(
        "searching {size} decisions per frame over {} frames",
        cfg.frames
    );
    let mut w = output::csv_writer(&a.out_dir.join(output::ORACLE_CSV))?;
    for n in 1..=cfg.frames {
        let scenario = generate_scenario(&cfg, n);
        let mut scorer =
            FrameScorer::new(&scenario, woa_config(&cfg), cfg.overdue_penalty, cfg.seed)?;
        let best = brute_force_optimal(&mut scorer, cfg.brute_force_cap)?;
        w.serialize(OracleRow {
            frame: n,
            decision: best.decision.to_string(),
            raw_energy: best.report.raw_energy,
            penalized_energy: best.penalized(),
            overdue_count: best.report.overdue_count,
            decisions_searched: size,
        })?;
    }
    w.flush()?;
    Ok(())
}

fn run_label(summary: &Path) -> String {
    summary
        .parent()
        .and_then(|d| d.file_name())
        .or_else(|| summary.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

pub fn report(a: &ReportArgs) -> Result<()> {
    if a.inputs.is_empty() {
        return Err(usage("report needs at least one summary.json"));
    }
    if a.window == 0 {
        return Err(usage("--window must be positive"));
    }
    let mut runs = Vec::new();
    let mut labels = HashSet::new();
    for (i, input) in a.inputs.iter().enumerate() {
        SummaryDocument::load(input)?;
        let frames_path = input
            .parent()
            .unwrap_or(Path::new("."))
            .join(output::FRAMES_CSV);
        let rows = output::read_frames(&frames_path)?;
        let mut label = run_label(input);
        if !labels.insert(label.clone()) {
            label = format!("{label}#{}", i + 1);
            labels.insert(label.clone());
        }
        runs.push((label, rows));
    }
    create_dir(&a.out_dir)?;
    let mut w = output::csv_writer(&a.out_dir.join(output::SERIES_CSV))?;
    let mut lines = Vec::new();
    for (label, rows) in &runs {
        let energy: Vec<f64> = rows.iter().map(|r| r.penalized_energy).collect();
        let mean = plot::moving_mean(&energy, a.window);
        for (r, m) in rows.iter().zip(&mean) {
            w.serialize(SeriesRow {
                label: label.clone(),
                frame: r.frame,
                penalized_energy: r.penalized_energy,
                moving_mean: *m,
            })?;
        }
        lines.push(Line {
            label,
            points: rows.iter().map(|r| r.frame as f64).zip(mean).collect(),
        });
    }
    w.flush()?;
    if !a.no_svg {
        let svg = plot::render(
            &format!("Penalized energy, {}-frame moving mean", a.window),
            "energy",
            &lines,
        );
        output::write_text(&a.out_dir.join(output::PLOT_SVG), &svg)?;
    }
    Ok(())
}
