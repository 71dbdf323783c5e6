//! Trial sweeps: every (config point, trial) pair becomes one CSV row.
//!
//! Trials run in parallel; a single writer appends rows in task order, so the
//! file is always a prefix of the full run and an interrupted run resumes by
//! skipping the rows already present.

use std::collections::{BTreeMap, HashSet};
use std::fs::OpenOptions;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use maxreg::bounds;
use maxreg::enumerate::{count_db_exact, count_regions_exact, count_regions_grid, EnumOptions, DEFAULT_GRID_CAP};
use maxreg::init::{sample_network, InitSpec};
use maxreg::rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigPoint, Counter, ExperimentConfig};
use crate::{with_workers, CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub config: usize,
    pub trial: usize,
    pub seed: u64,
    pub n0: usize,
    /// Hidden widths joined by `-`.
    pub widths: String,
    pub rank: usize,
    pub out_dim: usize,
    pub scheme: String,
    pub dist_shape: String,
    pub zero_bias: bool,
    pub regions: Option<u64>,
    pub grid_regions: Option<u64>,
    pub db_pieces: Option<u64>,
    pub lp_calls: Option<u64>,
    pub lp_breakdowns: Option<u64>,
    /// `K^N`.
    pub trivial_upper: String,
    /// `Σ_{j≤n0} C(n1, j)` for the first hidden layer.
    pub generic_lower: String,
    /// `Σ_{j≤n0} C(n1, j)(K−1)^j`, single hidden layer only.
    pub shallow_max: Option<String>,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub config: usize,
    pub n0: usize,
    pub widths: String,
    pub rank: usize,
    pub out_dim: usize,
    pub trials: usize,
    pub errors: usize,
    pub regions_mean: Option<f64>,
    pub regions_std: Option<f64>,
    pub grid_mean: Option<f64>,
    pub grid_std: Option<f64>,
    pub db_mean: Option<f64>,
    pub db_std: Option<f64>,
}

fn enum_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

/// Seed of trial `trial` at config point `config`.
pub fn trial_seed(master: u64, config: usize, trial: usize) -> u64 {
    rng::derive(master, &[config as u64, trial as u64])
}

pub fn run_trial(cfg: &ExperimentConfig, point: &ConfigPoint, trial: usize) -> TrialRow {
    let arch = &point.arch;
    let seed = trial_seed(cfg.seed, point.index, trial);
    let spec = InitSpec {
        seed,
        ..cfg.init.clone()
    };
    let n = arch.total_units() as u64;
    let k = arch.rank as u64;
    let n1 = arch.widths.first().copied().unwrap_or(0) as u64;
    let mut row = TrialRow {
        config: point.index,
        trial,
        seed,
        n0: arch.n0,
        widths: arch.widths.iter().map(usize::to_string).collect::<Vec<_>>().join("-"),
        rank: arch.rank,
        out_dim: arch.out_dim,
        scheme: enum_name(&spec.scheme),
        dist_shape: enum_name(&spec.dist_shape),
        zero_bias: spec.zero_bias,
        regions: None,
        grid_regions: None,
        db_pieces: None,
        lp_calls: None,
        lp_breakdowns: None,
        trivial_upper: bounds::trivial_pattern_bound(n, k, 0).to_string(),
        generic_lower: bounds::generic_lower_bound(arch.n0 as u64, n1).0.to_string(),
        shallow_max: (arch.depth() == 1).then(|| bounds::max_regions_shallow(arch.n0 as u64, n1, k).to_string()),
        wall_time_s: 0.0,
        error: None,
    };
    let start = Instant::now();
    let outcome = (|| -> maxreg::Result<()> {
        let net = sample_network(arch, &spec)?;
        let opts = EnumOptions::default();
        let report = if cfg.counters.contains(&Counter::Db) {
            Some(count_db_exact(&net, &point.window, &opts)?)
        } else if cfg.counters.contains(&Counter::Exact) {
            Some(count_regions_exact(&net, &point.window, &opts)?)
        } else {
            None
        };
        if let Some(r) = report {
            row.regions = Some(r.regions);
            row.db_pieces = r.db_pieces;
            row.lp_calls = Some(r.lp_calls);
            row.lp_breakdowns = Some(r.lp_breakdowns);
        }
        if cfg.counters.contains(&Counter::Grid) {
            row.grid_regions = Some(count_regions_grid(&net, &point.window, cfg.grid_pts, DEFAULT_GRID_CAP)? as u64);
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        log::warn!("config {} trial {trial}: {e}", point.index);
        row.error = Some(e.to_string());
    }
    row.wall_time_s = start.elapsed().as_secs_f64();
    row
}

pub fn read_rows(path: &Path) -> Result<Vec<TrialRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    Ok(reader.deserialize().collect::<Result<_, _>>()?)
}

/// `<stem>.summary.csv` next to the trial file.
pub fn summary_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map_or_else(|| "results".into(), |s| s.to_string_lossy().into_owned());
    output.with_file_name(format!("{stem}.summary.csv"))
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (Some(mean), Some(var.sqrt()))
}

/// Per-config means and sample standard deviations.
pub fn summarize(rows: &[TrialRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<usize, Vec<&TrialRow>> = BTreeMap::new();
    for r in rows {
        groups.entry(r.config).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(config, rs)| {
            let col = |f: fn(&TrialRow) -> Option<u64>| -> Vec<f64> { rs.iter().filter_map(|r| f(r)).map(|v| v as f64).collect() };
            let (regions_mean, regions_std) = mean_std(&col(|r| r.regions));
            let (grid_mean, grid_std) = mean_std(&col(|r| r.grid_regions));
            let (db_mean, db_std) = mean_std(&col(|r| r.db_pieces));
            let first = rs[0];
            SummaryRow {
                config,
                n0: first.n0,
                widths: first.widths.clone(),
                rank: first.rank,
                out_dim: first.out_dim,
                trials: rs.len(),
                errors: rs.iter().filter(|r| r.error.is_some()).count(),
                regions_mean,
                regions_std,
                grid_mean,
                grid_std,
                db_mean,
                db_std,
            }
        })
        .collect()
}

/// Run every missing trial, append it to `cfg.output`, then rewrite the summary.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<SummaryRow>> {
    let points = cfg.points()?;
    let fresh = std::fs::metadata(&cfg.output).map_or(true, |m| m.len() == 0);
    let done: HashSet<(usize, usize)> = if fresh {
        HashSet::new()
    } else {
        read_rows(&cfg.output)
            .map_err(|e| CliError::Config(format!("{}: cannot resume: {e}", cfg.output.display())))?
            .into_iter()
            .map(|r| (r.config, r.trial))
            .collect()
    };
    let tasks: Vec<(&ConfigPoint, usize)> = points
        .iter()
        .flat_map(|p| (0..cfg.trials).map(move |t| (p, t)))
        .filter(|(p, t)| !done.contains(&(p.index, *t)))
        .collect();
    log::info!("{} trials to run, {} already present", tasks.len(), done.len());

    let file = OpenOptions::new().create(true).append(true).open(&cfg.output)?;
    let mut writer = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    let (tx, rx) = mpsc::channel::<(usize, TrialRow)>();
    std::thread::scope(|scope| -> Result<()> {
        let handle = scope.spawn(move || -> Result<()> {
            let mut pending = BTreeMap::new();
            let mut next = 0;
            for (pos, row) in rx {
                pending.insert(pos, row);
                while let Some(row) = pending.remove(&next) {
                    writer.serialize(row)?;
                    writer.flush()?;
                    next += 1;
                }
            }
            Ok(())
        });
        with_workers(cfg.workers, || {
            tasks
                .par_iter()
                .enumerate()
                .for_each_with(tx, |tx, (pos, (point, trial))| {
                    let _ = tx.send((pos, run_trial(cfg, point, *trial)));
                });
        })?;
        handle.join().expect("writer thread panicked")
    })?;

    let summary = summarize(&read_rows(&cfg.output)?);
    let mut out = csv::Writer::from_path(summary_path(&cfg.output))?;
    for row in &summary {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(summary)
}
