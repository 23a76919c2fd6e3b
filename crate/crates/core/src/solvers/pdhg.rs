//! Primal-dual splitting engine (Chambolle-Pock iteration with unit
//! relaxation).
//!
//! Solves `min_X f(X) + g(A(X))` where both proximal maps are closed form.
//! With step sizes `tau sigma ||A||^2 < 1` the iteration is a proximal
//! point method in the metric
//! `M = [[I/tau, -A^*], [-A, I/sigma]]`, so the M-norm displacement of the
//! iterate pair is non-increasing; that displacement is the merit value
//! reported in the trace and checked by the monotonicity tests.

use crate::mat::{vec_norm, DenseMatrix, ScalarField, C64};
use crate::operators::MeasurementOperator;
use crate::util::pairwise_sum_f64;

use super::{SolverOptions, SolverStatus};

/// One trace record per iteration.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub feasibility_gap: f64,
    pub merit: f64,
}

/// The regularizer side `f`.
pub trait ProxRegularizer {
    fn prox(&self, x: &DenseMatrix, step: f64) -> DenseMatrix;
    fn objective(&self, x: &DenseMatrix) -> f64;
}

/// The data-fit side `g`, entered through `prox of (sigma g^*)`.
pub trait DataFit {
    fn prox_conj(&self, v: &[C64], sigma: f64) -> Vec<C64>;
    /// Constraint violation used for the stopping test and the status.
    fn feasibility_gap(&self, ax: &[C64]) -> f64;
    /// Largest gap accepted at convergence; infinite for penalty-style
    /// fits with no hard constraint.
    fn feasibility_tolerance(&self, abs_tol: f64, rel_tol: f64) -> f64;
    fn objective(&self, ax: &[C64]) -> f64;
}

pub struct PdhgOutcome {
    pub x: DenseMatrix,
    pub iterations: usize,
    pub status: SolverStatus,
    pub trace: Vec<TraceRow>,
    pub last_adaptation_iter: usize,
}

pub fn run(
    op: &MeasurementOperator,
    reg: &dyn ProxRegularizer,
    fit: &dyn DataFit,
    opts: &SolverOptions,
) -> PdhgOutcome {
    let (n1, n2) = op.input_shape();
    let m = op.n_measurements();

    // Step sizes: tau * sigma * L^2 = kappa < 1, ratio tau/sigma = penalty^2.
    let norm_est = op.operator_norm(1e-6, 4000).expect("operator norm estimate");
    let l = if norm_est.converged { norm_est.value } else { norm_est.value * 1.2 };
    let l = (l * 1.000001).max(1e-12);
    let kappa = 0.98f64;
    let mut penalty = opts.penalty;
    let mut tau = kappa.sqrt() * penalty / l;
    let mut sigma = kappa.sqrt() / (penalty * l);

    let mut x = DenseMatrix::zeros(n1, n2, ScalarField::Complex);
    let mut w = vec![C64::new(0.0, 0.0); m];

    let mut trace = Vec::new();
    let mut last_adaptation = 0usize;
    let mut stall_counter = 0usize;
    let mut prev_merit = f64::INFINITY;
    let mut recent_gaps: Vec<f64> = Vec::new();
    let mut final_gap = fit.feasibility_gap(&op.apply(&x).unwrap());

    const ADAPT_WINDOW: usize = 64;
    const ADAPT_HORIZON: usize = 512;

    for it in 1..=opts.max_iters {
        // Primal descent, then dual ascent against the extrapolated
        // primal point. This ordering is memoryless in (x, w), which is
        // what makes the iteration a proximal point step in the M-metric
        // and the merit below provably non-increasing.
        let adj = op.adjoint(&w).unwrap();
        let x_new = reg.prox(&x.sub(&adj.scale_re(tau)), tau);
        let x_bar = x_new.scale_re(2.0).sub(&x);
        let ax_bar = op.apply(&x_bar).unwrap();
        let v: Vec<C64> = w.iter().zip(ax_bar.iter()).map(|(wi, ai)| wi + ai * sigma).collect();
        let w_new = fit.prox_conj(&v, sigma);

        // Residuals of the fixed-point map.
        let dx = x.sub(&x_new);
        let dw: Vec<C64> = w.iter().zip(w_new.iter()).map(|(a, b)| a - b).collect();
        let a_dx = op.apply(&dx).unwrap();
        let adj_dw = op.adjoint(&dw).unwrap();
        let primal_res = dx.scale_re(1.0 / tau).sub(&adj_dw).frob_norm();
        let dual_res = vec_norm(
            &dw.iter().zip(a_dx.iter()).map(|(d, a)| d / sigma - a).collect::<Vec<_>>(),
        );
        let cross = crate::mat::vec_inner(&a_dx, &dw).re;
        let merit = (dx.frob_norm_sq() / tau + vec_norm(&dw).powi(2) / sigma - 2.0 * cross)
            .max(0.0)
            .sqrt();

        let ax_new = op.apply(&x_new).unwrap();
        let gap = fit.feasibility_gap(&ax_new);
        final_gap = gap;
        recent_gaps.push(gap);
        if recent_gaps.len() > 64 {
            recent_gaps.remove(0);
        }

        if opts.collect_trace {
            trace.push(TraceRow {
                iteration: it,
                objective: reg.objective(&x_new) + fit.objective(&ax_new),
                primal_residual: primal_res,
                dual_residual: dual_res,
                feasibility_gap: gap,
                merit,
            });
        }
        if opts.verbosity >= 2 && it % 100 == 0 {
            eprintln!("iter {it}: obj {:.6e} pres {primal_res:.3e} dres {dual_res:.3e} gap {gap:.3e}", reg.objective(&x_new));
        }

        let scale_p = 1.0 + x_new.frob_norm();
        let scale_d = 1.0 + vec_norm(&w_new);
        let kkt = (primal_res / scale_p).max(dual_res / scale_d);
        let feas_ok = gap <= fit.feasibility_tolerance(opts.abs_tol, opts.rel_tol);

        x = x_new;
        w = w_new;

        if kkt <= opts.abs_tol.max(opts.rel_tol * 1e-2) && feas_ok {
            return PdhgOutcome {
                x,
                iterations: it,
                status: SolverStatus::Converged,

                trace,
                last_adaptation_iter: last_adaptation,
            };
        }

        // Residual balancing, frozen after the adaptation horizon so the
        // proximal-point metric stays fixed for the rest of the run.
        if opts.adaptive_balance && it <= ADAPT_HORIZON && it % ADAPT_WINDOW == 0 {
            let ratio = (primal_res / scale_p) / (dual_res / scale_d).max(1e-300);
            let factor = if ratio > 10.0 {
                2.0
            } else if ratio < 0.1 {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 {
                let bounded = (penalty * factor).clamp(opts.penalty / 64.0, opts.penalty * 64.0);
                if bounded != penalty {
                    penalty = bounded;
                    tau = kappa.sqrt() * penalty / l;
                    sigma = kappa.sqrt() / (penalty * l);
                    last_adaptation = it;
                }
            }
        }

        if opts.restart_on_stall {
            if merit > prev_merit * (1.0 - 1e-12) {
                stall_counter += 1;
            } else {
                stall_counter = 0;
            }
            if stall_counter >= 200 {
                // Restart the step policy from the observed residual ratio.
                let ratio = (primal_res / scale_p) / (dual_res / scale_d).max(1e-300);
                let bounded =
                    (penalty * ratio.sqrt().clamp(0.25, 4.0)).clamp(opts.penalty / 64.0, opts.penalty * 64.0);
                if bounded != penalty {
                    penalty = bounded;
                    tau = kappa.sqrt() * penalty / l;
                    sigma = kappa.sqrt() / (penalty * l);
                    last_adaptation = it;
                }
                stall_counter = 0;
            }
        }
        prev_merit = merit;
    }

    // Feasibility never reached: report infeasible when the residual gap
    // has stagnated, otherwise plain iteration exhaustion.
    let tol_gap = opts.abs_tol * 10.0 + opts.rel_tol;
    let status = if final_gap > tol_gap && residual_stagnated(&recent_gaps) {
        SolverStatus::Infeasible
    } else {
        SolverStatus::MaxIters
    };
    PdhgOutcome {
        x,
        iterations: opts.max_iters,
        status,

        trace,
        last_adaptation_iter: last_adaptation,
    }
}

fn residual_stagnated(gaps: &[f64]) -> bool {
    if gaps.len() < 16 {
        return false;
    }
    let mean = pairwise_sum_f64(gaps) / gaps.len() as f64;
    if mean <= 0.0 {
        return false;
    }
    let spread = gaps.iter().map(|g| (g - mean).abs()).fold(0.0, f64::max);
    spread <= 1e-6 * mean.max(1e-300) || spread <= 1e-14
}
