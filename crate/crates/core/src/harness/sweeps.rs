//! Sweep drivers: grids of trials executed on a worker pool with
//! deterministic per-trial seeds, merged into CSV in `(cell, trial)` order.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::util::{linear_fit, median_f64, wilson_interval};

use super::config::{Cell, ExperimentConfig};
use super::csvio::{fmt_bool, fmt_f64, CsvTable};
use super::runner::{run_certification_trial, run_trial, CertRecord, TrialRecord};

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("worker pool")
}

/// Every `(cell, trial)` record, in deterministic order.
pub fn run_all_trials(config: &ExperimentConfig, threads: usize) -> Vec<TrialRecord> {
    let cells = config.cells();
    let jobs: Vec<(Cell, usize)> = cells
        .iter()
        .flat_map(|c| (0..config.trials).map(move |t| (*c, t)))
        .collect();
    pool(threads).install(|| {
        jobs.par_iter().map(|(cell, trial)| run_trial(config, cell, *trial)).collect()
    })
}

pub fn run_all_certifications(config: &ExperimentConfig, threads: usize) -> Vec<CertRecord> {
    let cells = config.cells();
    let jobs: Vec<(Cell, usize)> = cells
        .iter()
        .flat_map(|c| (0..config.trials).map(move |t| (*c, t)))
        .collect();
    pool(threads).install(|| {
        jobs.par_iter()
            .map(|(cell, trial)| run_certification_trial(config, cell, *trial))
            .collect()
    })
}

fn base_meta(table: &mut CsvTable, config: &ExperimentConfig, threads: usize, kind: &str) {
    table.meta("lrlab_version", env!("CARGO_PKG_VERSION"));
    table.meta("sweep", kind);
    table.meta("config_hash", format!("{:016x}", config.config_hash()));
    table.meta("master_seed", config.master_seed);
    table.meta("threads", threads);
    table.meta("success_threshold_noiseless", fmt_f64(config.success_threshold));
    table.meta("success_threshold_noisy", "3 * (2 tau / lambda_hat) / ||X0||_F, lambda_hat sampled per trial");
    table.meta("nondeterministic_columns", "wall_ms");
}

fn trial_row(rec: &TrialRecord, width: usize) -> Vec<String> {
    let mut row = vec![
        "trial".to_string(),
        rec.cell.n.to_string(),
        rec.cell.rank.to_string(),
        rec.cell.m.to_string(),
        fmt_f64(rec.cell.tau),
        rec.trial.to_string(),
        rec.seed.to_string(),
        fmt_f64(rec.rel_error),
        fmt_bool(rec.success),
        fmt_f64(rec.threshold),
        rec.iterations.to_string(),
        rec.status.clone(),
        fmt_f64(rec.wall_ms),
    ];
    row.resize(width, String::new());
    row
}

const TRIAL_COLS: [&str; 13] = [
    "row_type", "n", "r", "m", "tau", "trial", "seed", "rel_error", "success", "threshold",
    "iterations", "status", "wall_ms",
];

/// Trial rows only (the `trial` subcommand).
pub fn trial_table(config: &ExperimentConfig, threads: usize) -> CsvTable {
    let recs = run_all_trials(config, threads);
    let mut table = CsvTable::new(&TRIAL_COLS);
    base_meta(&mut table, config, threads, "trial");
    for r in &recs {
        table.push(trial_row(r, TRIAL_COLS.len()));
    }
    table
}

/// Success-probability grid over the sweep axes, with Wilson 95% intervals
/// in the per-cell summary rows.
pub fn phase_transition_sweep(config: &ExperimentConfig, threads: usize) -> CsvTable {
    let recs = run_all_trials(config, threads);
    let cols: Vec<&str> = TRIAL_COLS
        .iter()
        .copied()
        .chain(["successes", "trials", "p_hat", "wilson_lo", "wilson_hi"])
        .collect();
    let mut table = CsvTable::new(&cols);
    base_meta(&mut table, config, threads, "transition");
    for r in &recs {
        table.push(trial_row(r, cols.len()));
    }
    for cell in config.cells() {
        let in_cell: Vec<&TrialRecord> = recs.iter().filter(|r| r.cell.index == cell.index).collect();
        let successes = in_cell.iter().filter(|r| r.success).count();
        let (lo, hi) = wilson_interval(successes, in_cell.len());
        let mut row = vec![
            "summary".to_string(),
            cell.n.to_string(),
            cell.rank.to_string(),
            cell.m.to_string(),
            fmt_f64(cell.tau),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            successes.to_string(),
            in_cell.len().to_string(),
            fmt_f64(successes as f64 / in_cell.len() as f64),
            fmt_f64(lo),
            fmt_f64(hi),
        ];
        row.resize(cols.len(), String::new());
        table.push(row);
    }
    table
}

/// Median error per noise level plus a log-log slope fit per
/// `(n, r, m)` group over the positive-noise cells.
pub fn noise_sweep(config: &ExperimentConfig, threads: usize) -> Result<CsvTable> {
    let positive: Vec<f64> = config.tau_axis.iter().copied().filter(|&t| t > 0.0).collect();
    if positive.len() < 3 {
        return Err(Error::Config("noise sweep needs at least 3 positive tau points".into()));
    }
    let lo = positive.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = positive.iter().cloned().fold(0.0, f64::max);
    if hi / lo < 100.0 {
        return Err(Error::Config("noise sweep tau axis must span at least two decades".into()));
    }
    let recs = run_all_trials(config, threads);
    let cols: Vec<&str> =
        TRIAL_COLS.iter().copied().chain(["median_rel_error", "slope", "r_squared"]).collect();
    let mut table = CsvTable::new(&cols);
    base_meta(&mut table, config, threads, "noise");
    for r in &recs {
        table.push(trial_row(r, cols.len()));
    }

    // Per-cell medians.
    let cells = config.cells();
    let mut medians: Vec<(Cell, f64)> = Vec::new();
    for cell in &cells {
        let errs: Vec<f64> = recs
            .iter()
            .filter(|r| r.cell.index == cell.index && r.rel_error.is_finite())
            .map(|r| r.rel_error)
            .collect();
        if errs.is_empty() {
            continue;
        }
        let med = median_f64(&errs);
        medians.push((*cell, med));
        let mut row = vec![
            "summary".to_string(),
            cell.n.to_string(),
            cell.rank.to_string(),
            cell.m.to_string(),
            fmt_f64(cell.tau),
        ];
        row.resize(TRIAL_COLS.len(), String::new());
        row.push(fmt_f64(med));
        row.resize(cols.len(), String::new());
        table.push(row);
    }

    // Slope fits per (n, r, m) group.
    let mut groups: Vec<(usize, usize, usize)> = cells.iter().map(|c| (c.n, c.rank, c.m)).collect();
    groups.dedup();
    groups.sort_unstable();
    groups.dedup();
    for (n, r, m) in groups {
        let pts: Vec<(f64, f64)> = medians
            .iter()
            .filter(|(c, med)| c.n == n && c.rank == r && c.m == m && c.tau > 0.0 && *med > 0.0)
            .map(|(c, med)| (c.tau.ln(), med.ln()))
            .collect();
        if pts.len() < 3 {
            continue;
        }
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let (_a, slope, r2) = linear_fit(&xs, &ys);
        let mut row = vec![
            "fit".to_string(),
            n.to_string(),
            r.to_string(),
            m.to_string(),
        ];
        row.resize(TRIAL_COLS.len() + 1, String::new());
        row.push(fmt_f64(slope));
        row.push(fmt_f64(r2));
        table.push(row);
    }
    Ok(table)
}

const CERT_COLS: [&str; 24] = [
    "row_type", "n", "r", "m", "tau", "trial", "seed", "anchor_coherence", "delta", "z_norm",
    "alpha", "offtangent_norm", "pass_z_norm", "pass_alpha", "pass_offtangent", "approx_all_pass",
    "alpha_decay_rate", "putting_ran", "exact_valid", "solver_rel_error", "solver_success",
    "iterations", "status", "wall_ms",
];

fn cert_row(rec: &CertRecord) -> Vec<String> {
    vec![
        "trial".to_string(),
        rec.trial.cell.n.to_string(),
        rec.trial.cell.rank.to_string(),
        rec.trial.cell.m.to_string(),
        fmt_f64(rec.trial.cell.tau),
        rec.trial.trial.to_string(),
        rec.trial.seed.to_string(),
        fmt_f64(rec.anchor_coherence),
        fmt_f64(rec.delta),
        fmt_f64(rec.z_norm),
        fmt_f64(rec.alpha_final),
        fmt_f64(rec.offtangent_norm),
        fmt_bool(rec.pass_z_norm),
        fmt_bool(rec.pass_alpha),
        fmt_bool(rec.pass_offtangent),
        fmt_bool(rec.approx_all_pass),
        fmt_f64(rec.alpha_decay_rate),
        fmt_bool(rec.putting_ran),
        fmt_bool(rec.exact_valid),
        fmt_f64(rec.trial.rel_error),
        fmt_bool(rec.trial.success),
        rec.trial.iterations.to_string(),
        rec.trial.status.clone(),
        fmt_f64(rec.trial.wall_ms),
    ]
}

/// Golfing/putting pass rates cross-tabulated with solver success on the
/// same instances. The `inclusion_violations` summary counts rows with a
/// valid exact certificate and a failed noiseless solve; any nonzero count
/// is a correctness red flag.
pub fn certification_sweep(config: &ExperimentConfig, threads: usize) -> CsvTable {
    let recs = run_all_certifications(config, threads);
    let cols: Vec<&str> = CERT_COLS
        .iter()
        .copied()
        .chain([
            "trials",
            "approx_pass_rate",
            "exact_valid_rate",
            "solver_success_rate",
            "exact_wilson_lo",
            "exact_wilson_hi",
            "inclusion_violations",
        ])
        .collect();
    let mut table = CsvTable::new(&cols);
    base_meta(&mut table, config, threads, "certify");
    for r in &recs {
        let mut row = cert_row(r);
        row.resize(cols.len(), String::new());
        table.push(row);
    }
    for cell in config.cells() {
        let in_cell: Vec<&CertRecord> =
            recs.iter().filter(|r| r.trial.cell.index == cell.index).collect();
        if in_cell.is_empty() {
            continue;
        }
        let n_t = in_cell.len();
        let approx = in_cell.iter().filter(|r| r.approx_all_pass).count();
        let exact = in_cell.iter().filter(|r| r.exact_valid).count();
        let solved = in_cell.iter().filter(|r| r.trial.success).count();
        let violations = in_cell.iter().filter(|r| r.exact_valid && !r.trial.success).count();
        let (lo, hi) = wilson_interval(exact, n_t);
        let mut row = vec![
            "summary".to_string(),
            cell.n.to_string(),
            cell.rank.to_string(),
            cell.m.to_string(),
            fmt_f64(cell.tau),
        ];
        row.resize(CERT_COLS.len(), String::new());
        row.push(n_t.to_string());
        row.push(fmt_f64(approx as f64 / n_t as f64));
        row.push(fmt_f64(exact as f64 / n_t as f64));
        row.push(fmt_f64(solved as f64 / n_t as f64));
        row.push(fmt_f64(lo));
        row.push(fmt_f64(hi));
        row.push(violations.to_string());
        table.push(row);
    }
    table
}
