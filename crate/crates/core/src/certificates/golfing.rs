//! Golfing-scheme construction of approximate dual certificates.
//!
//! The measurement stream is split into contiguous, nearly equal legs
//! `Gamma_1 .. Gamma_Q` (the ensembles admitted here draw i.i.d. rows, so
//! contiguous chunks preserve independence between legs). With
//! `E[A^* A] = c Id`, the leg-q update uses the multiplier
//! `beta_q = m / (c |Gamma_q|)` so the normalized leg operator has unit
//! expected Gram; `beta_q` equals the leg count `Q` for an even split of a
//! unit-isotropy ensemble. The assembled dual vector carries the same
//! multiplier, which makes `A^*(z) = Y_Q` an exact algebraic identity
//! (tested, not assumed).

use std::ops::Range;

use crate::error::{Error, Result};
use crate::geometry::{SvdFactors, TangentProjector, TangentSpace};
use crate::mat::{vec_norm, DenseMatrix, ScalarField, C64};
use crate::operators::MeasurementOperator;
use crate::rng::Stream;

/// Record of a golfing run: partition, iterates, per-leg residuals, and
/// the assembled dual vector.
#[derive(Debug, Clone)]
pub struct GolfingTrace {
    pub partition: Vec<Range<usize>>,
    /// `Y_0 = 0` through `Y_Q`.
    pub iterates: Vec<DenseMatrix>,
    /// `alpha_q = ||U V^* - P_T Y_q||_F` for `q = 0..=Q`.
    pub alphas: Vec<f64>,
    pub z: Vec<C64>,
}

impl GolfingTrace {
    pub fn legs(&self) -> usize {
        self.partition.len()
    }

    pub fn final_iterate(&self) -> &DenseMatrix {
        self.iterates.last().unwrap()
    }

    /// Per-leg CSV (`leg,alpha`) for convergence plots.
    pub fn alphas_csv(&self) -> String {
        let mut out = String::from("leg,alpha\n");
        for (q, a) in self.alphas.iter().enumerate() {
            out.push_str(&format!("{q},{a:.17e}\n"));
        }
        out
    }
}

/// Runs the golfing iteration
/// `Y_q = Y_{q-1} + beta_q (A^q)^* A^q (UV^* - P_T Y_{q-1})` over a
/// contiguous partition of the measurements and assembles the dual vector
/// `z` with the same per-leg multipliers.
pub fn golfing_construct(
    op: &MeasurementOperator,
    anchor: &SvdFactors,
    q_legs: usize,
) -> Result<GolfingTrace> {
    if q_legs == 0 {
        return Err(Error::InvalidArgument("need at least one leg".into()));
    }
    let m = op.n_measurements();
    if m < q_legs {
        return Err(Error::InvalidArgument(format!(
            "cannot split {m} measurements into {q_legs} nonempty legs"
        )));
    }
    let c = op.isotropy_scale().ok_or_else(|| {
        Error::InvalidArgument(
            "golfing needs an ensemble with E[A^* A] proportional to the identity".into(),
        )
    })?;
    if op.input_shape() != (anchor.n1(), anchor.n2()) {
        return Err(Error::ShapeMismatch("anchor shape disagrees with the operator".into()));
    }

    let t = TangentSpace::new(anchor.clone());
    let uv = anchor.uv_star();
    let (n1, n2) = op.input_shape();

    // Contiguous, nearly equal chunks.
    let base = m / q_legs;
    let extra = m % q_legs;
    let mut partition = Vec::with_capacity(q_legs);
    let mut start = 0usize;
    for q in 0..q_legs {
        let len = base + usize::from(q < extra);
        partition.push(start..start + len);
        start += len;
    }

    let mut y = DenseMatrix::zeros(n1, n2, ScalarField::Complex);
    let mut iterates = vec![y.clone()];
    let mut alphas = vec![uv.frob_norm()];
    let mut z = vec![C64::new(0.0, 0.0); m];

    for leg in &partition {
        let delta = uv.sub(&t.project(&y)?);
        let beta = m as f64 / (c * leg.len() as f64);
        let mut update = DenseMatrix::zeros(n1, n2, ScalarField::Complex);
        for i in leg.clone() {
            let coeff = op.row_apply(i, &delta) * beta;
            z[i] = coeff;
            op.row_adjoint_into(i, coeff, &mut update);
        }
        y = y.add(&update);
        iterates.push(y.clone());
        alphas.push(uv.sub(&t.project(&y)?).frob_norm());
    }

    Ok(GolfingTrace { partition, iterates, alphas, z })
}

/// The three approximate-dual-certificate quantities and their pass flags:
/// `||z||_2 <= 2`, `alpha <= 1 / (8 ||A||)`, `||P_T_perp A^*(z)|| < 1/2`.
#[derive(Debug, Clone)]
pub struct CertificateReport {
    pub z_norm: f64,
    pub alpha: f64,
    pub offtangent_norm: f64,
    pub op_norm: f64,
    pub pass_z_norm: bool,
    pub pass_alpha: bool,
    pub pass_offtangent: bool,
}

impl CertificateReport {
    pub fn all_pass(&self) -> bool {
        self.pass_z_norm && self.pass_alpha && self.pass_offtangent
    }
}

/// Evaluates Definition-style certificate quantities for an arbitrary dual
/// vector `z`. Pure function of its inputs.
pub fn validate_approx_certificate(
    z: &[C64],
    op: &MeasurementOperator,
    anchor: &SvdFactors,
) -> Result<CertificateReport> {
    if z.len() != op.n_measurements() {
        return Err(Error::ShapeMismatch("dual vector length disagrees with the operator".into()));
    }
    let t = TangentSpace::new(anchor.clone());
    let y = op.adjoint(z)?;
    let uv = anchor.uv_star();
    let z_norm = vec_norm(z);
    let alpha = uv.sub(&t.project(&y)?).frob_norm();
    let off = t.project_complement(&y)?;
    let mut rng = Stream::new(op.seed()).child(0x4f4646);
    let offtangent_norm = spectral_norm_power(&off, 1e-8, 20_000, &mut rng);
    let op_norm = op.operator_norm(1e-8, 20_000)?.value;
    Ok(CertificateReport {
        z_norm,
        alpha,
        offtangent_norm,
        op_norm,
        pass_z_norm: z_norm <= 2.0,
        pass_alpha: alpha <= 1.0 / (8.0 * op_norm),
        pass_offtangent: offtangent_norm < 0.5,
    })
}

/// Spectral norm by power iteration on `M^* M` (1e-8 relative tolerance by
/// default at call sites).
pub(crate) fn spectral_norm_power(m: &DenseMatrix, tol: f64, max_iters: usize, rng: &mut Stream) -> f64 {
    if m.frob_norm() == 0.0 {
        return 0.0;
    }
    let out = crate::linalg::power_iteration(
        |v| {
            let mv = m.matmul(v);
            m.conj_transpose().matmul(&mv)
        },
        (m.cols(), 1),
        tol,
        max_iters,
        rng,
    );
    out.value.max(0.0).sqrt()
}
