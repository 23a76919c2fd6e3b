//! `lrlab` command line: reproducible low-rank recovery experiments.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lrlab::harness::{
    certification_sweep, fmt_f64, noise_sweep, phase_transition_sweep, run_certification_trial,
    run_estimate, solver_trace_for, trial_table, CsvTable, ExperimentConfig,
};
use lrlab::kv::KvDoc;

#[derive(Parser)]
#[command(name = "lrlab", version, about = "Low-rank matrix recovery laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key-value experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for trial execution.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Side-channel CSV (solver traces / per-leg golfing residuals).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (cell, trial) of the config and write one row each.
    Trial(CommonArgs),
    /// Success-probability grid over the sweep axes.
    SweepTransition(CommonArgs),
    /// Median error vs noise level with log-log slope fits.
    SweepNoise(CommonArgs),
    /// Golfing / putting pass rates cross-tabulated with solver success.
    SweepCertify(CommonArgs),
    /// One golfing + putting run, reported in full.
    Certify(CommonArgs),
    /// Geometry estimators (widths, conic values, small-ball quantities).
    Estimate(CommonArgs),
}

fn load_config(args: &CommonArgs) -> Result<ExperimentConfig, lrlab::Error> {
    let text = fs::read_to_string(&args.config)?;
    let mut doc = KvDoc::parse(&text)?;
    if let Some(seed) = args.seed {
        doc.insert("seed", lrlab::kv::Value::Int(seed as i64));
    }
    ExperimentConfig::from_doc(&doc)
}

fn emit(table: &CsvTable, out: &Option<PathBuf>) -> Result<(), lrlab::Error> {
    match out {
        Some(path) => {
            let mut f = fs::File::create(path)?;
            table.write(&mut f)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            table.write(&mut lock)?;
        }
    }
    Ok(())
}

fn run() -> Result<(), lrlab::Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Trial(args) => {
            let config = load_config(&args)?;
            let table = trial_table(&config, args.threads);
            emit(&table, &args.out)?;
            if let Some(path) = &args.trace {
                write_solver_trace(&config, path)?;
            }
        }
        Command::SweepTransition(args) => {
            let config = load_config(&args)?;
            emit(&phase_transition_sweep(&config, args.threads), &args.out)?;
        }
        Command::SweepNoise(args) => {
            let config = load_config(&args)?;
            emit(&noise_sweep(&config, args.threads)?, &args.out)?;
        }
        Command::SweepCertify(args) => {
            let config = load_config(&args)?;
            emit(&certification_sweep(&config, args.threads), &args.out)?;
        }
        Command::Certify(args) => {
            let config = load_config(&args)?;
            let cells = config.cells();
            let cell = cells.first().expect("nonempty grid");
            let rec = run_certification_trial(&config, cell, 0);
            let mut table = CsvTable::new(&["quantity", "value"]);
            table.meta("lrlab_version", env!("CARGO_PKG_VERSION"));
            table.meta("config_hash", format!("{:016x}", config.config_hash()));
            table.meta("master_seed", config.master_seed);
            let rows: Vec<(&str, String)> = vec![
                ("anchor_coherence", fmt_f64(rec.anchor_coherence)),
                ("delta", fmt_f64(rec.delta)),
                ("z_norm", fmt_f64(rec.z_norm)),
                ("alpha", fmt_f64(rec.alpha_final)),
                ("offtangent_norm", fmt_f64(rec.offtangent_norm)),
                ("pass_z_norm", rec.pass_z_norm.to_string()),
                ("pass_alpha", rec.pass_alpha.to_string()),
                ("pass_offtangent", rec.pass_offtangent.to_string()),
                ("approx_all_pass", rec.approx_all_pass.to_string()),
                ("alpha_decay_rate", fmt_f64(rec.alpha_decay_rate)),
                ("putting_ran", rec.putting_ran.to_string()),
                ("exact_valid", rec.exact_valid.to_string()),
                ("solver_rel_error", fmt_f64(rec.trial.rel_error)),
                ("solver_status", rec.trial.status.clone()),
            ];
            for (k, v) in rows {
                table.push(vec![k.to_string(), v]);
            }
            emit(&table, &args.out)?;
            if let Some(path) = &args.trace {
                let mut f = fs::File::create(path)?;
                writeln!(f, "leg,alpha")?;
                for (q, a) in rec.alphas.iter().enumerate() {
                    writeln!(f, "{q},{}", fmt_f64(*a))?;
                }
            }
        }
        Command::Estimate(args) => {
            let text = fs::read_to_string(&args.config)?;
            let mut doc = KvDoc::parse(&text)?;
            if let Some(seed) = args.seed {
                doc.insert("seed", lrlab::kv::Value::Int(seed as i64));
            }
            emit(&run_estimate(&doc, args.threads)?, &args.out)?;
        }
    }
    Ok(())
}

/// Re-runs the first (cell, trial) with tracing enabled and writes the
/// per-iteration solver trace.
fn write_solver_trace(config: &ExperimentConfig, path: &PathBuf) -> Result<(), lrlab::Error> {
    let mut traced = config.clone();
    traced.solver.collect_trace = true;
    let cells = traced.cells();
    let cell = cells.first().expect("nonempty grid");
    let trace = solver_trace_for(&traced, cell, 0)?;
    let mut table = CsvTable::new(&[
        "iteration",
        "objective",
        "primal_residual",
        "dual_residual",
        "feasibility_gap",
        "merit",
    ]);
    table.meta("lrlab_version", env!("CARGO_PKG_VERSION"));
    table.meta("config_hash", format!("{:016x}", traced.config_hash()));
    for row in &trace {
        table.push(vec![
            row.iteration.to_string(),
            fmt_f64(row.objective),
            fmt_f64(row.primal_residual),
            fmt_f64(row.dual_residual),
            fmt_f64(row.feasibility_gap),
            fmt_f64(row.merit),
        ]);
    }
    let mut f = fs::File::create(path)?;
    table.write(&mut f)?;
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lrlab: {e}");
            ExitCode::FAILURE
        }
    }
}
