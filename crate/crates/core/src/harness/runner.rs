//! Trial execution: deterministic seed paths, signal generation, solve,
//! ambiguity-adjusted error.

use std::time::Instant;

use crate::certificates::{golfing_construct, putting, rip_on_tangent, validate_approx_certificate, validate_exact_certificate};
use crate::error::{Error, Result};
use crate::geometry::{blind_deconv_incoherence, coherence, min_conic_singular_value_estimate, signal_incoherence, SvdFactors, TangentSpace};
use crate::linalg::haar_isometry;
use crate::mat::{vec_norm, DenseMatrix, ScalarField, C64};
use crate::operators::{
    make_blind_deconv_ensemble, make_completion_ensemble, make_demixing_ensemble,
    make_gaussian_ensemble, make_phase_retrieval_ensemble, MeasurementOperator, Payload,
    PhaseRetrievalModel,
};
use crate::rng::{label, Stream};
use crate::solvers::{demixing_nucnorm_min, nucnorm_min, psd_l1_fit, RecoveryResult, SolverStatus};

use super::config::{Cell, EnsembleChoice, ExperimentConfig, SignalModel};

/// Outcome of one `(cell, trial)` execution. Wall time is informational
/// only; everything else is a pure function of `(config, cell, trial)`.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub cell: Cell,
    pub trial: usize,
    pub seed: u64,
    pub rel_error: f64,
    pub success: bool,
    pub threshold: f64,
    pub iterations: usize,
    pub status: String,
    pub wall_ms: f64,
}

/// Trial plus certification diagnostics (certification sweeps only).
#[derive(Debug, Clone)]
pub struct CertRecord {
    pub trial: TrialRecord,
    pub anchor_coherence: f64,
    pub delta: f64,
    pub z_norm: f64,
    pub alpha_final: f64,
    pub offtangent_norm: f64,
    pub pass_z_norm: bool,
    pub pass_alpha: bool,
    pub pass_offtangent: bool,
    pub approx_all_pass: bool,
    /// Geometric-mean per-leg decay factor `(alpha_0 / alpha_Q)^(1/Q)`.
    pub alpha_decay_rate: f64,
    /// `alpha_q` for `q = 0..=Q` (the Figure-style convergence data).
    pub alphas: Vec<f64>,
    pub putting_ran: bool,
    pub exact_valid: bool,
}

pub(crate) fn trial_stream(config: &ExperimentConfig, cell: &Cell, trial: usize) -> Stream {
    Stream::new(config.master_seed)
        .child(label::HARNESS)
        .child(cell.index as u64)
        .child(trial as u64)
}

fn seed_from(stream: &Stream, lab: u64) -> u64 {
    let mut s = stream.child(lab);
    s.next_u64()
}

/// Rank-r factors with Haar singular subspaces, accepted only when both
/// coherences sit at or below the target. Unit singular values.
fn incoherent_anchor(
    n1: usize,
    n2: usize,
    r: usize,
    field: ScalarField,
    target: f64,
    rng: &mut Stream,
) -> Result<SvdFactors> {
    for _ in 0..256 {
        let u = haar_isometry(n1, r, field, rng);
        let v = haar_isometry(n2, r, field, rng);
        if coherence(&u)? <= target && coherence(&v)? <= target {
            return Ok(SvdFactors::new(u, vec![1.0; r], v)?);
        }
    }
    Err(Error::InvalidArgument(format!(
        "no anchor with coherence <= {target} found after bounded retries"
    )))
}

/// Axis-aligned spike anchor `sum_i e_i e_i^T`-style (rank r).
fn spike_anchor(n1: usize, n2: usize, r: usize) -> Result<SvdFactors> {
    let mut u = DenseMatrix::zeros(n1, r, ScalarField::Real);
    let mut v = DenseMatrix::zeros(n2, r, ScalarField::Real);
    for i in 0..r {
        u.set(i, i, C64::new(1.0, 0.0));
        v.set(i, i, C64::new(1.0, 0.0));
    }
    SvdFactors::new(u, vec![1.0; r], v)
}

pub(crate) fn make_anchor(
    config: &ExperimentConfig,
    n1: usize,
    n2: usize,
    r: usize,
    field: ScalarField,
    rng: &mut Stream,
) -> Result<SvdFactors> {
    match config.signal {
        SignalModel::Incoherent => incoherent_anchor(n1, n2, r, field, config.coherence_target, rng),
        SignalModel::Spike => spike_anchor(n1, n2, r),
    }
}

/// Incoherence-filtered channel vector for the blind-deconvolution family.
fn bd_channel(k: usize, b_rows: &[Vec<C64>], target: f64, rng: &mut Stream) -> Result<Vec<C64>> {
    for _ in 0..256 {
        let h: Vec<C64> = (0..k).map(|_| rng.complex_normal()).collect();
        if blind_deconv_incoherence(&h, b_rows)? <= target {
            return Ok(h);
        }
    }
    Err(Error::InvalidArgument(format!("no channel with incoherence <= {target} after bounded retries")))
}

fn pr_signal(n: usize, model: SignalModel, target_rel: f64, rng: &mut Stream) -> Result<Vec<C64>> {
    match model {
        SignalModel::Spike => {
            let mut x = vec![C64::new(0.0, 0.0); n];
            x[0] = C64::new(1.0, 0.0);
            Ok(x)
        }
        SignalModel::Incoherent => {
            let cap = (target_rel / (n as f64).sqrt()).min(1.0);
            for _ in 0..256 {
                let x: Vec<C64> = (0..n).map(|_| rng.complex_normal()).collect();
                if signal_incoherence(&x)? <= cap {
                    return Ok(x);
                }
            }
            Err(Error::InvalidArgument("no incoherent signal after bounded retries".into()))
        }
    }
}

/// Complex noise of exact Euclidean norm `tau` (real when requested).
fn noise_vector(m: usize, tau: f64, real: bool, rng: &mut Stream) -> Vec<C64> {
    if tau == 0.0 {
        return vec![C64::new(0.0, 0.0); m];
    }
    let e: Vec<C64> = (0..m)
        .map(|_| if real { C64::new(rng.normal(), 0.0) } else { rng.complex_normal() })
        .collect();
    let norm = vec_norm(&e);
    e.into_iter().map(|z| z * (tau / norm)).collect()
}

pub(crate) struct PreparedInstance {
    pub op: MeasurementOperator,
    pub anchor: SvdFactors,
    pub x0: DenseMatrix,
    pub y: Vec<C64>,
}

/// Builds the operator, signal, and noisy data for one trial.
pub(crate) fn prepare_instance(
    config: &ExperimentConfig,
    cell: &Cell,
    trial: usize,
) -> Result<PreparedInstance> {
    let stream = trial_stream(config, cell, trial);
    let ens_seed = seed_from(&stream, label::ENSEMBLE);
    let mut signal_rng = stream.child(label::SIGNAL);
    let mut noise_rng = stream.child(label::NOISE);

    let (op, anchor, x0) = match config.ensemble {
        EnsembleChoice::Gaussian => {
            let op = make_gaussian_ensemble(cell.n, cell.n, cell.m, ens_seed)?;
            let anchor = make_anchor(config, cell.n, cell.n, cell.rank, ScalarField::Real, &mut signal_rng)?;
            let x0 = anchor.to_matrix();
            (op, anchor, x0)
        }
        EnsembleChoice::Completion => {
            let op = make_completion_ensemble(cell.n, cell.n, cell.m, ens_seed)?;
            let anchor = make_anchor(config, cell.n, cell.n, cell.rank, ScalarField::Real, &mut signal_rng)?;
            let x0 = anchor.to_matrix();
            (op, anchor, x0)
        }
        EnsembleChoice::PhaseRetrieval => {
            let model = PhaseRetrievalModel::parse(&config.pr_model)?;
            let op = make_phase_retrieval_ensemble(cell.n, cell.m, model, ens_seed)?;
            let x = pr_signal(cell.n, config.signal, config.coherence_target, &mut signal_rng)?;
            let x0 = DenseMatrix::outer(&x, &x);
            let anchor = SvdFactors::from_matrix(&x0)?;
            (op, anchor, x0)
        }
        EnsembleChoice::BlindDeconv => {
            let op = make_blind_deconv_ensemble(config.k_dim, config.n_signal, cell.m, ens_seed)?;
            let Payload::BlindDeconv(p) = op.payload() else { unreachable!() };
            let h = bd_channel(config.k_dim, &p.b_rows, config.coherence_target, &mut signal_rng)?;
            let w: Vec<C64> = (0..config.n_signal).map(|_| signal_rng.complex_normal()).collect();
            let x0 = DenseMatrix::outer(&h, &w);
            let x0 = x0.scale_re(1.0 / x0.frob_norm());
            let anchor = SvdFactors::from_matrix(&x0)?;
            (op, anchor, x0)
        }
        EnsembleChoice::Demixing => {
            let op = make_demixing_ensemble(config.k_dim, config.n_signal, cell.m, cell.rank, ens_seed)?;
            let Payload::Demixing(d) = op.payload() else { unreachable!() };
            let mut blocks = Vec::with_capacity(cell.rank);
            for comp in &d.components {
                let h = bd_channel(config.k_dim, &comp.b_rows, config.coherence_target, &mut signal_rng)?;
                let w: Vec<C64> = (0..config.n_signal).map(|_| signal_rng.complex_normal()).collect();
                let b = DenseMatrix::outer(&h, &w);
                let norm = b.frob_norm();
                blocks.push(b.scale_re(1.0 / norm));
            }
            let x0 = DenseMatrix::block_diag(&blocks);
            let anchor = SvdFactors::from_matrix(&x0)?;
            (op, anchor, x0)
        }
    };

    let clean = op.apply(&x0)?;
    let real_noise = config.ensemble == EnsembleChoice::PhaseRetrieval;
    let e = noise_vector(clean.len(), cell.tau, real_noise, &mut noise_rng);
    let y: Vec<C64> = clean.iter().zip(e.iter()).map(|(a, b)| a + b).collect();
    Ok(PreparedInstance { op, anchor, x0, y })
}

fn solve_instance(
    config: &ExperimentConfig,
    cell: &Cell,
    inst: &PreparedInstance,
) -> Result<RecoveryResult> {
    match config.ensemble {
        EnsembleChoice::PhaseRetrieval => {
            let Payload::PhaseRetrieval(p) = inst.op.payload() else { unreachable!() };
            let y_real: Vec<f64> = inst.y.iter().map(|z| z.re).collect();
            psd_l1_fit(&p.vectors, &y_real, &config.solver)
        }
        EnsembleChoice::Demixing => demixing_nucnorm_min(&inst.op, &inst.y, cell.tau, &config.solver),
        _ => nucnorm_min(&inst.op, &inst.y, cell.tau, &config.solver),
    }
}

/// Success threshold: the configured relative error when noiseless, three
/// times the sampled error-bound estimate `2 tau / lambda_hat` (relative)
/// when noisy. `lambda_hat` is the sampled conic estimate, itself an upper
/// bound on the true conic singular value, and is derived from the trial's
/// own seed path.
fn success_threshold(
    config: &ExperimentConfig,
    cell: &Cell,
    inst: &PreparedInstance,
    stream: &Stream,
) -> Result<f64> {
    if cell.tau == 0.0 {
        return Ok(config.success_threshold);
    }
    let mut rng = stream.child(label::GEOMETRY);
    let lambda_hat = min_conic_singular_value_estimate(&inst.op, &inst.anchor, 32, &mut rng)?;
    if lambda_hat <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(3.0 * (2.0 * cell.tau / lambda_hat) / inst.x0.frob_norm())
}

pub(crate) fn relative_error(config: &ExperimentConfig, inst: &PreparedInstance, res: &RecoveryResult) -> f64 {
    // Matrix-domain relative Frobenius error. All lifted ambiguities
    // (global phase, the blind-deconvolution scaling) cancel in the outer
    // product, so no extra alignment is needed here.
    let _ = config;
    res.x_hat.sub(&inst.x0).frob_norm() / inst.x0.frob_norm()
}

/// Per-iteration solver trace for one `(cell, trial)`; used by the
/// `--trace` CLI flag.
pub fn solver_trace_for(
    config: &ExperimentConfig,
    cell: &Cell,
    trial: usize,
) -> Result<Vec<crate::solvers::TraceRow>> {
    let mut traced = config.clone();
    traced.solver.collect_trace = true;
    let inst = prepare_instance(&traced, cell, trial)?;
    let res = solve_instance(&traced, cell, &inst)?;
    Ok(res.trace)
}

/// Runs a single `(cell, trial)` and records the outcome; solver errors
/// land in the record, never a panic.
pub fn run_trial(config: &ExperimentConfig, cell: &Cell, trial: usize) -> TrialRecord {
    let t0 = Instant::now();
    let stream = trial_stream(config, cell, trial);
    let seed = {
        let mut s = stream.child(label::ENSEMBLE);
        s.next_u64()
    };
    let fallible = || -> Result<(f64, f64, usize, SolverStatus)> {
        let inst = prepare_instance(config, cell, trial)?;
        let res = solve_instance(config, cell, &inst)?;
        let err = relative_error(config, &inst, &res);
        let threshold = success_threshold(config, cell, &inst, &stream)?;
        Ok((err, threshold, res.iterations, res.status))
    };
    match fallible() {
        Ok((rel_error, threshold, iterations, status)) => TrialRecord {
            cell: *cell,
            trial,
            seed,
            rel_error,
            success: rel_error < threshold,
            threshold,
            iterations,
            status: status.as_str().to_string(),
            wall_ms: t0.elapsed().as_secs_f64() * 1e3,
        },
        Err(e) => TrialRecord {
            cell: *cell,
            trial,
            seed,
            rel_error: f64::NAN,
            success: false,
            threshold: f64::NAN,
            iterations: 0,
            status: format!("error: {e}"),
            wall_ms: t0.elapsed().as_secs_f64() * 1e3,
        },
    }
}

/// Certification pipeline on one instance: golfing, Definition-style
/// validation, restricted isometry, putting, exact validation, and the
/// noiseless solve on the same instance.
pub fn run_certification_trial(config: &ExperimentConfig, cell: &Cell, trial: usize) -> CertRecord {
    let t0 = Instant::now();
    let stream = trial_stream(config, cell, trial);
    let seed = {
        let mut s = stream.child(label::ENSEMBLE);
        s.next_u64()
    };
    let mut record = CertRecord {
        trial: TrialRecord {
            cell: *cell,
            trial,
            seed,
            rel_error: f64::NAN,
            success: false,
            threshold: config.success_threshold,
            iterations: 0,
            status: "error: unset".into(),
            wall_ms: 0.0,
        },
        anchor_coherence: f64::NAN,
        delta: f64::NAN,
        z_norm: f64::NAN,
        alpha_final: f64::NAN,
        offtangent_norm: f64::NAN,
        pass_z_norm: false,
        pass_alpha: false,
        pass_offtangent: false,
        approx_all_pass: false,
        alpha_decay_rate: f64::NAN,
        alphas: Vec::new(),
        putting_ran: false,
        exact_valid: false,
    };
    let outcome = (|| -> Result<()> {
        let inst = prepare_instance(config, cell, trial)?;
        record.anchor_coherence = coherence(inst.anchor.u())?.max(coherence(inst.anchor.v())?);

        let trace = golfing_construct(&inst.op, &inst.anchor, config.q_legs)?;
        let report = validate_approx_certificate(&trace.z, &inst.op, &inst.anchor)?;
        record.z_norm = report.z_norm;
        record.alpha_final = report.alpha;
        record.offtangent_norm = report.offtangent_norm;
        record.pass_z_norm = report.pass_z_norm;
        record.pass_alpha = report.pass_alpha;
        record.pass_offtangent = report.pass_offtangent;
        record.approx_all_pass = report.all_pass();
        let q = trace.legs() as f64;
        let a0 = trace.alphas[0];
        let aq = *trace.alphas.last().unwrap();
        record.alpha_decay_rate = if aq > 0.0 { (a0 / aq).powf(1.0 / q) } else { f64::INFINITY };
        record.alphas = trace.alphas.clone();

        let t = TangentSpace::new(inst.anchor.clone());
        let rip = rip_on_tangent(&inst.op, &t, 1e-8)?;
        record.delta = rip.delta;
        if rip.delta < 0.75 {
            let cert = putting(&trace.z, &inst.op, &inst.anchor, &rip, 1e-12)?;
            record.putting_ran = true;
            record.exact_valid = validate_exact_certificate(&cert, &inst.op, &inst.anchor, &rip);
        }

        // Noiseless solve on the same instance for the
        // certificate-implies-recovery cross-tabulation.
        let res = nucnorm_min(&inst.op, &inst.y, cell.tau, &config.solver)?;
        record.trial.rel_error = relative_error(config, &inst, &res);
        record.trial.iterations = res.iterations;
        record.trial.status = res.status.as_str().to_string();
        record.trial.success = record.trial.rel_error < config.success_threshold;
        Ok(())
    })();
    if let Err(e) = outcome {
        record.trial.status = format!("error: {e}");
    }
    record.trial.wall_ms = t0.elapsed().as_secs_f64() * 1e3;
    record
}
