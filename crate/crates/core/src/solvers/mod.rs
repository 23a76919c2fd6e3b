//! First-order solvers for the three recovery programs: noise-ball
//! constrained nuclear-norm minimization, PSD l1 fitting, and
//! sum-of-nuclear-norms demixing.
//!
//! All three run on the same primal-dual splitting engine ([`pdhg`]): the
//! data-fit side enters through its conjugate prox (a ball projection or a
//! box clamp), the regularizer side through singular value thresholding or
//! a PSD eigenvalue clip, so every proximal step is closed form.

mod pdhg;
mod programs;

pub use pdhg::TraceRow;
pub use programs::{demixing_nucnorm_min, extract_lifted_signal, nucnorm_min, psd_l1_fit};

use crate::error::{Error, Result};
use crate::linalg;
use crate::mat::{DenseMatrix, C64};

/// Options shared by every solver.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Ratio of the primal step to the dual step; 1.0 balances them.
    pub penalty: f64,
    /// Rebalance the step ratio from observed residuals during the early
    /// iterations (frozen afterwards so the fixed-metric analysis applies).
    pub adaptive_balance: bool,
    /// On stagnation, drop the extrapolation point once and rebalance.
    pub restart_on_stall: bool,
    pub verbosity: u8,
    /// Record per-iteration trace rows in the result.
    pub collect_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: 5000,
            abs_tol: 1e-8,
            rel_tol: 1e-6,
            penalty: 1.0,
            adaptive_balance: true,
            restart_on_stall: false,
            verbosity: 0,
            collect_trace: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        if self.abs_tol <= 0.0 || self.rel_tol <= 0.0 {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.penalty <= 0.0 {
            return Err(Error::InvalidArgument("penalty must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Converged,
    MaxIters,
    Infeasible,
}

impl SolverStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverStatus::Converged => "converged",
            SolverStatus::MaxIters => "max_iters",
            SolverStatus::Infeasible => "infeasible",
        }
    }
}

/// Solver output. `x_hat` is always the full estimate; demixing solves also
/// report the per-component diagonal blocks.
#[derive(Debug, Clone)]
pub struct RecoveryResult {
    pub x_hat: DenseMatrix,
    pub blocks: Option<Vec<DenseMatrix>>,
    pub objective: f64,
    pub residual: f64,
    pub iterations: usize,
    pub status: SolverStatus,
    pub trace: Vec<TraceRow>,
    /// Iteration of the last step-ratio adaptation (0 when none happened);
    /// the splitting metric is fixed from here on.
    pub last_adaptation_iter: usize,
}

/// Singular value thresholding: `U max(Sigma - threshold, 0) V^*`, the
/// proximal map of `threshold * ||.||_*`.
pub fn svt(x: &DenseMatrix, threshold: f64) -> Result<DenseMatrix> {
    if threshold < 0.0 {
        return Err(Error::InvalidArgument("svt threshold must be nonnegative".into()));
    }
    if threshold == 0.0 {
        return Ok(x.clone());
    }
    let f = linalg::svd(x);
    Ok(f.reconstruct_with(|s| (s - threshold).max(0.0)))
}

/// Error modulo global phase: `min over |phi| = 1 of ||xhat - phi x0||_2`.
pub fn phase_aligned_error(xhat: &[C64], x0: &[C64]) -> f64 {
    assert_eq!(xhat.len(), x0.len());
    let s: C64 = xhat.iter().zip(x0.iter()).map(|(a, b)| a * b.conj()).sum();
    let na: f64 = xhat.iter().map(|z| z.norm_sqr()).sum();
    let nb: f64 = x0.iter().map(|z| z.norm_sqr()).sum();
    (na + nb - 2.0 * s.norm()).max(0.0).sqrt()
}
