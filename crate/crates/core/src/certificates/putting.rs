//! Deterministic upgrade of an approximate dual certificate to an exact
//! one: solve the tangent-restricted normal system and correct `z` in the
//! measurement domain. Well-posed whenever the tangent-space restricted
//! isometry constant is below 3/4, which bounds the condition number of
//! `P_T A^* A P_T` by `(1 + delta) / (1 - delta)`.

use crate::error::{Error, Result};
use crate::geometry::{SvdFactors, TangentProjector, TangentSpace};
use crate::linalg;
use crate::mat::{vec_norm, C64};
use crate::operators::MeasurementOperator;
use crate::rng::Stream;

use super::golfing::spectral_norm_power;
use super::rip::RipReport;

/// An exact dual certificate candidate `z' = z - x` with `Y' = A^*(z')`,
/// together with the diagnostics of the correction step.
#[derive(Debug, Clone)]
pub struct ExactCertificate {
    pub z_prime: Vec<C64>,
    pub y_prime: crate::mat::DenseMatrix,
    /// `||P_T Y' - U V^*||_F`; tiny by construction up to the CG tolerance.
    pub tangent_residual: f64,
    /// Spectral norm of `P_T_perp Y'`; validity needs this below 1.
    pub offtangent_norm: f64,
    /// `||x||_2` of the measurement-domain correction.
    pub correction_norm: f64,
    /// The proof-chain bound `1 / (8 sqrt(1 - delta) ||A||)` the correction
    /// is compared against; the report carries both actual and bound.
    pub correction_bound: f64,
    pub cg_iterations: usize,
    pub cg_converged: bool,
}

impl ExactCertificate {
    /// Validity per the exact-certificate conditions: the tangent part hits
    /// `U V^*` to within `1e-8 ||U V^*||_F` and the off-tangent part has
    /// spectral norm strictly below one.
    pub fn is_valid(&self, anchor_rank: usize) -> bool {
        self.tangent_residual <= 1e-8 * (anchor_rank as f64).sqrt() && self.offtangent_norm < 1.0
    }
}

/// Solves `P_T A^* A P_T w = U V^* - P_T A^*(z)` by conjugate gradients and
/// sets `z' = z + A(w)`, so that `P_T A^*(z') = U V^*` up to the CG
/// tolerance. Rejects `delta >= 3/4` (the hypothesis of the upgrade);
/// CG non-convergence is flagged in the output, not an error.
pub fn putting(
    z: &[C64],
    op: &MeasurementOperator,
    anchor: &SvdFactors,
    rip: &RipReport,
    tol: f64,
) -> Result<ExactCertificate> {
    if z.len() != op.n_measurements() {
        return Err(Error::ShapeMismatch("dual vector length disagrees with the operator".into()));
    }
    if !(rip.delta < 0.75) {
        return Err(Error::InvalidArgument(format!(
            "putting requires delta < 3/4 on the tangent space (got {})",
            rip.delta
        )));
    }
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("need tol > 0".into()));
    }
    let t = TangentSpace::new(anchor.clone());
    let uv = anchor.uv_star();
    let y = op.adjoint(z)?;
    let rhs = t.project(&uv.sub(&t.project(&y)?))?;

    let apply_l = |w: &crate::mat::DenseMatrix| -> crate::mat::DenseMatrix {
        let wt = t.project(w).unwrap();
        t.project(&op.adjoint(&op.apply(&wt).unwrap()).unwrap()).unwrap()
    };
    let max_cg = 1000;
    // Residuals at rounding level have nothing left to correct; running CG
    // on them only amplifies the components the operator annihilates.
    let (w, cg_iterations, cg_converged) = if rhs.frob_norm() <= 1e-13 * uv.frob_norm() {
        (crate::mat::DenseMatrix::zeros(rhs.rows(), rhs.cols(), crate::mat::ScalarField::Complex), 0, true)
    } else {
        linalg::conjugate_gradient(apply_l, &rhs, tol, max_cg)
    };

    // z' = z + A(w): then P_T A^*(z') = P_T A^*(z) + L(w) = U V^*.
    let aw = op.apply(&t.project(&w)?)?;
    let z_prime: Vec<C64> = z.iter().zip(aw.iter()).map(|(a, b)| a + b).collect();
    let y_prime = op.adjoint(&z_prime)?;

    let tangent_residual = uv.sub(&t.project(&y_prime)?).frob_norm();
    let off = t.project_complement(&y_prime)?;
    let mut rng = Stream::new(op.seed()).child(0x505554);
    let offtangent_norm = spectral_norm_power(&off, 1e-8, 20_000, &mut rng);
    let op_norm = op.operator_norm(1e-8, 20_000)?.value;
    let correction_norm = vec_norm(&aw);
    let correction_bound = 1.0 / (8.0 * (1.0 - rip.delta).sqrt() * op_norm);

    Ok(ExactCertificate {
        z_prime,
        y_prime,
        tangent_residual,
        offtangent_norm,
        correction_norm,
        correction_bound,
        cg_iterations,
        cg_converged,
    })
}

/// Exact-certificate validation: tangent part equals `U V^*` within
/// tolerance, off-tangent spectral norm strictly below one, and the
/// operator is injective on the tangent space (`lambda_min > 0`).
pub fn validate_exact_certificate(
    cert: &ExactCertificate,
    op: &MeasurementOperator,
    anchor: &SvdFactors,
    rip: &RipReport,
) -> bool {
    let t = TangentSpace::new(anchor.clone());
    let Ok(tangent) = t.project(&cert.y_prime) else { return false };
    let residual = anchor.uv_star().sub(&tangent).frob_norm();
    let Ok(off) = t.project_complement(&cert.y_prime) else { return false };
    let mut rng = Stream::new(op.seed()).child(0x564143);
    let off_norm = spectral_norm_power(&off, 1e-8, 20_000, &mut rng);
    residual <= 1e-8 * (anchor.rank() as f64).sqrt() && off_norm < 1.0 && rip.lambda_min_t > 0.0
}
