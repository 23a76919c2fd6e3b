//! Restricted isometry of a measurement operator on a tangent space:
//! extreme eigenvalues of `P_T A^* A P_T` as a map on `T`, and
//! `delta = max(1 - lambda_min, lambda_max - 1)`.
//!
//! Ensembles that are isotropic up to a scale (`E[A^* A] = c Id`) are
//! measured against that normalization, so a raw N(0,1) Gaussian ensemble
//! reports the constant of `A / sqrt(m)`; unit-isotropy ensembles
//! (completion, blind deconvolution, demixing) report the raw operator.

use crate::error::{Error, Result};
use crate::geometry::TangentProjector;
use crate::linalg;
use crate::mat::{DenseMatrix, ScalarField, C64};
use crate::operators::MeasurementOperator;
use crate::rng::Stream;

/// Above this tangent dimension the dense Gram construction gives way to
/// power iteration.
const DENSE_CAP: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RipMethod {
    Dense { dim: usize },
    Iterative { iterations: usize, converged: bool },
}

#[derive(Debug, Clone, Copy)]
pub struct RipReport {
    pub delta: f64,
    pub lambda_min_t: f64,
    pub lambda_max_t: f64,
    pub method: RipMethod,
}

impl RipReport {
    /// False when the iterative eigenvalue bounds did not converge.
    pub fn converged(&self) -> bool {
        match self.method {
            RipMethod::Dense { .. } => true,
            RipMethod::Iterative { converged, .. } => converged,
        }
    }
}

fn check_shapes(op: &MeasurementOperator, t: &dyn TangentProjector) -> Result<()> {
    if op.input_shape() != t.shape() {
        return Err(Error::ShapeMismatch("operator and tangent space shapes disagree".into()));
    }
    Ok(())
}

fn report_from_extremes(
    lambda_min: f64,
    lambda_max: f64,
    iso_scale: f64,
    method: RipMethod,
) -> RipReport {
    let lambda_min = (lambda_min / iso_scale).max(0.0);
    let lambda_max = lambda_max / iso_scale;
    RipReport {
        delta: (1.0 - lambda_min).max(lambda_max - 1.0),
        lambda_min_t: lambda_min,
        lambda_max_t: lambda_max,
        method,
    }
}

/// Dense route: assemble the Hermitian Gram matrix of `A` on an
/// orthonormal basis of `T` and read off its extreme eigenvalues.
pub fn rip_on_tangent_dense(op: &MeasurementOperator, t: &dyn TangentProjector) -> Result<RipReport> {
    check_shapes(op, t)?;
    let basis = t.orthonormal_basis();
    let d = basis.len();
    if d == 0 {
        return Err(Error::InvalidArgument("tangent space is zero-dimensional".into()));
    }
    let images: Vec<Vec<C64>> = basis.iter().map(|b| op.apply(b).unwrap()).collect();
    let mut gram = DenseMatrix::zeros(d, d, ScalarField::Complex);
    for i in 0..d {
        for j in i..d {
            // <basis_i, A^* A basis_j>_F = sum_k conj(A b_i)_k (A b_j)_k.
            let g: C64 = images[i].iter().zip(images[j].iter()).map(|(a, b)| a.conj() * b).sum();
            gram.set(i, j, g);
            gram.set(j, i, g.conj());
        }
    }
    let eig = linalg::hermitian_eig(&gram);
    Ok(report_from_extremes(
        eig.values[0],
        *eig.values.last().unwrap(),
        op.isotropy_scale().unwrap_or(1.0),
        RipMethod::Dense { dim: d },
    ))
}

/// Iterative route: power iteration for the top eigenvalue of
/// `L = P_T A^* A P_T` on `T`, then for the top of `c Id_T - L` to reach
/// the bottom. Non-convergence is flagged in the report, not an error.
pub fn rip_on_tangent_iterative(
    op: &MeasurementOperator,
    t: &dyn TangentProjector,
    tol: f64,
    max_iters: usize,
) -> Result<RipReport> {
    check_shapes(op, t)?;
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("need tol > 0".into()));
    }
    let shape = t.shape();
    let mut rng = Stream::new(op.seed()).child(0x524950);
    let apply_l = |z: &DenseMatrix| -> DenseMatrix {
        let zt = t.project(z).unwrap();
        let y = op.apply(&zt).unwrap();
        t.project(&op.adjoint(&y).unwrap()).unwrap()
    };
    let top = linalg::power_iteration(apply_l, shape, tol, max_iters, &mut rng);
    let c = top.value * 1.01 + 1e-9;
    let shifted = linalg::power_iteration(
        |z| t.project(z).unwrap().scale_re(c).sub(&apply_l(z)),
        shape,
        tol,
        max_iters,
        &mut rng,
    );
    let lambda_min = c - shifted.value;
    Ok(report_from_extremes(
        lambda_min,
        top.value,
        op.isotropy_scale().unwrap_or(1.0),
        RipMethod::Iterative {
            iterations: top.iterations + shifted.iterations,
            converged: top.converged && shifted.converged,
        },
    ))
}

/// Dense below [`DENSE_CAP`] basis elements, iterative above.
pub fn rip_on_tangent(op: &MeasurementOperator, t: &dyn TangentProjector, tol: f64) -> Result<RipReport> {
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("need tol > 0".into()));
    }
    if t.dim() <= DENSE_CAP {
        rip_on_tangent_dense(op, t)
    } else {
        rip_on_tangent_iterative(op, t, tol, 50_000)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{SvdFactors, TangentSpace};
    use crate::linalg::haar_isometry;
    use crate::operators::{make_completion_with_indices, make_gaussian_ensemble};

    fn anchor(n1: usize, n2: usize, r: usize, seed: u64) -> TangentSpace {
        let mut rng = Stream::new(seed);
        let u = haar_isometry(n1, r, ScalarField::Complex, &mut rng);
        let v = haar_isometry(n2, r, ScalarField::Complex, &mut rng);
        TangentSpace::new(SvdFactors::new(u, vec![1.0; r], v).unwrap())
    }

    #[test]
    fn complete_orthonormal_sampling_has_zero_delta() {
        let idx: Vec<(usize, usize)> = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).collect();
        let op = make_completion_with_indices(4, 4, idx, 0).unwrap();
        let t = anchor(4, 4, 1, 3);
        let rep = rip_on_tangent(&op, &t, 1e-10).unwrap();
        assert!(rep.delta < 1e-10, "delta = {}", rep.delta);
        assert!((rep.lambda_min_t - 1.0).abs() < 1e-10);
        assert!((rep.lambda_max_t - 1.0).abs() < 1e-10);
    }

    #[test]
    fn scaling_is_quadratic_in_the_operator() {
        // Doubling every sample of a completion operator scales the
        // eigenvalue window by 4 (scale enters squared).
        let op1 = make_completion_with_indices(3, 3, vec![(0, 0), (1, 1), (2, 2), (0, 1)], 0).unwrap();
        // Same indices, but m twice smaller scale: use explicit list twice as long.
        let t = anchor(3, 3, 1, 5);
        let r1 = rip_on_tangent(&op1, &t, 1e-10).unwrap();
        // Manual check of homogeneity: apply the operator scaled by c by
        // scaling measurements; lambda scales by c^2.
        let c: f64 = 2.0;
        let basis = t.orthonormal_basis();
        let d = basis.len();
        let mut gram = DenseMatrix::zeros(d, d, ScalarField::Complex);
        for i in 0..d {
            let yi: Vec<C64> = op1.apply(&basis[i]).unwrap().iter().map(|z| z * c).collect();
            for j in 0..d {
                let yj: Vec<C64> = op1.apply(&basis[j]).unwrap().iter().map(|z| z * c).collect();
                let g: C64 = yi.iter().zip(yj.iter()).map(|(a, b)| a.conj() * b).sum();
                gram.set(i, j, g);
            }
        }
        let eig = linalg::hermitian_eig(&gram);
        assert!((eig.values.last().unwrap() - c * c * r1.lambda_max_t).abs() < 1e-8);
        assert!((eig.values[0] - c * c * r1.lambda_min_t).abs() < 1e-8);
    }

    #[test]
    fn dense_and_iterative_agree() {
        let op = make_gaussian_ensemble(5, 4, 30, 7).unwrap();
        let t = anchor(5, 4, 1, 11);
        let dense = rip_on_tangent_dense(&op, &t).unwrap();
        let iter = rip_on_tangent_iterative(&op, &t, 1e-12, 100_000).unwrap();
        assert!(iter.converged());
        assert!((dense.lambda_max_t - iter.lambda_max_t).abs() < 1e-5 * dense.lambda_max_t);
        assert!((dense.lambda_min_t - iter.lambda_min_t).abs() < 1e-5 * dense.lambda_max_t);
    }

    #[test]
    fn gaussian_desk_scale_delta_concentrates() {
        // 8x8, r=1 tangent space (dimension 15). The isotropy-normalized
        // constant straddles 3/4 at m = 100 (measured median 0.75), and
        // concentrates below it from m = 200 on; freeze the regime the
        // oracle certifies.
        let mut below = 0;
        for seed in 0..20u64 {
            let op = make_gaussian_ensemble(8, 8, 200, seed).unwrap();
            let t = anchor(8, 8, 1, seed ^ 0x55);
            let rep = rip_on_tangent(&op, &t, 1e-8).unwrap();
            if rep.delta < 0.75 {
                below += 1;
            }
        }
        assert!(below >= 19, "delta < 3/4 in only {below}/20 runs");
    }

    #[test]
    fn shape_mismatch_rejected() {
        let op = make_gaussian_ensemble(5, 4, 10, 7).unwrap();
        let t = anchor(4, 4, 1, 2);
        assert!(rip_on_tangent(&op, &t, 1e-8).is_err());
    }
}
