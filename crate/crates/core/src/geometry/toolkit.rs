//! Self-adjoint dilation, rectangular pinching, sign matrices, and the two
//! incoherence functionals.

use crate::error::{Error, Result};
use crate::linalg;
use crate::mat::{DenseMatrix, ScalarField, C64};

/// Self-adjoint dilation `[[0, Z], [Z^*, 0]]`, Hermitian by construction;
/// its eigenvalues are plus/minus the singular values of `Z` and its
/// nuclear norm doubles that of `Z`.
pub fn dilation(z: &DenseMatrix) -> DenseMatrix {
    let (n1, n2) = z.shape();
    let mut out = DenseMatrix::zeros(n1 + n2, n1 + n2, z.field());
    for i in 0..n1 {
        for j in 0..n2 {
            out.set(i, n1 + j, z.get(i, j));
            out.set(n1 + j, i, z.get(i, j).conj());
        }
    }
    out
}

fn check_resolution(p: &DenseMatrix, p_perp: &DenseMatrix, side: usize, name: &str) -> Result<()> {
    if p.shape() != (side, side) || p_perp.shape() != (side, side) {
        return Err(Error::ShapeMismatch(format!("{name} resolution has the wrong shape")));
    }
    let tol = 1e-8;
    for (label, proj) in [("projector", p), ("complement", p_perp)] {
        if !proj.is_hermitian(tol) {
            return Err(Error::InvalidArgument(format!("{name} {label} is not Hermitian")));
        }
        let sq = proj.matmul(proj);
        if sq.sub(proj).max_abs() > tol {
            return Err(Error::InvalidArgument(format!("{name} {label} is not idempotent")));
        }
    }
    let sum = p.add(p_perp);
    if sum.sub(&DenseMatrix::identity(side, ScalarField::Complex)).max_abs() > tol {
        return Err(Error::InvalidArgument(format!("{name} pair is not a resolution of the identity")));
    }
    Ok(())
}

/// Both sides of the rectangular pinching inequality
/// `||X||_* >= ||P X Q||_* + ||P_perp X Q_perp||_*` for a resolution of the
/// identity on each side. Returns `(lhs, rhs)`; the caller asserts
/// `lhs >= rhs - 1e-9`.
pub fn pinch_check(
    x: &DenseMatrix,
    p: &DenseMatrix,
    q: &DenseMatrix,
    p_perp: &DenseMatrix,
    q_perp: &DenseMatrix,
) -> Result<(f64, f64)> {
    check_resolution(p, p_perp, x.rows(), "row")?;
    check_resolution(q, q_perp, x.cols(), "column")?;
    let lhs = linalg::nuclear_norm(x);
    let rhs = linalg::nuclear_norm(&p.matmul(x).matmul(q))
        + linalg::nuclear_norm(&p_perp.matmul(x).matmul(q_perp));
    Ok((lhs, rhs))
}

/// Sign matrix `sign(X) = U V^*` from the compact SVD; satisfies
/// `<sign(X), X> = ||X||_*` and has unit spectral norm.
pub fn sign_matrix(x: &DenseMatrix) -> Result<DenseMatrix> {
    if x.frob_norm() == 0.0 {
        return Err(Error::InvalidArgument("sign matrix of the zero matrix is undefined".into()));
    }
    let f = linalg::svd(x);
    let mut out = DenseMatrix::zeros(x.rows(), x.cols(), ScalarField::Complex);
    for k in 0..f.rank() {
        for i in 0..x.rows() {
            let c = f.u.get(i, k);
            for j in 0..x.cols() {
                let v = out.get(i, j) + c * f.v.get(j, k).conj();
                out.set(i, j, v);
            }
        }
    }
    Ok(out)
}

/// Smallest `mu` with `h` in the incoherence set `H_mu`:
/// `sqrt(L) max_l |<b_l, h>| / ||h||_2`.
pub fn blind_deconv_incoherence(h: &[C64], b_rows: &[Vec<C64>]) -> Result<f64> {
    let hn = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if hn == 0.0 {
        return Err(Error::InvalidArgument("incoherence of the zero vector is undefined".into()));
    }
    if b_rows.is_empty() {
        return Err(Error::InvalidArgument("no subspace rows supplied".into()));
    }
    let l = b_rows.len() as f64;
    let mut max_corr = 0.0f64;
    for b in b_rows {
        if b.len() != h.len() {
            return Err(Error::ShapeMismatch("row length disagrees with h".into()));
        }
        let corr: C64 = b.iter().zip(h.iter()).map(|(bi, hi)| bi.conj() * hi).sum();
        max_corr = max_corr.max(corr.norm());
    }
    Ok(l.sqrt() * max_corr / hn)
}

/// `||x||_inf / ||x||_2`, in `(0, 1]`.
pub fn signal_incoherence(x: &[C64]) -> Result<f64> {
    let n2 = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n2 == 0.0 {
        return Err(Error::InvalidArgument("incoherence of the zero vector is undefined".into()));
    }
    let ninf = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(ninf / n2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{make_blind_deconv_ensemble, Payload};
    use crate::rng::Stream;

    #[test]
    fn dilation_of_zero_is_zero() {
        let z = DenseMatrix::zeros(2, 3, ScalarField::Real);
        assert!(dilation(&z).max_abs() == 0.0);
    }

    #[test]
    fn dilation_doubles_nuclear_norm() {
        let mut rng = Stream::new(2);
        let z = DenseMatrix::from_fn(3, 2, ScalarField::Complex, |_, _| rng.complex_normal());
        let d = dilation(&z);
        assert!(d.is_hermitian(1e-14));
        assert!((linalg::nuclear_norm(&d) - 2.0 * linalg::nuclear_norm(&z)).abs() < 1e-10);
    }

    #[test]
    fn dilation_eigenvalues_are_signed_singular_values() {
        let mut rng = Stream::new(3);
        let z = DenseMatrix::from_fn(3, 2, ScalarField::Complex, |_, _| rng.complex_normal());
        let sv = linalg::svd(&z).sigma;
        let eig = linalg::hermitian_eig(&dilation(&z));
        // Ascending eigenvalues: -s1 <= -s2 <= ... <= 0 ... <= s2 <= s1.
        let top: Vec<f64> = eig.values.iter().rev().take(sv.len()).cloned().collect();
        let bottom: Vec<f64> = eig.values.iter().take(sv.len()).map(|x| -x).collect();
        for (a, s) in top.iter().zip(sv.iter()) {
            assert!((a - s).abs() < 1e-10);
        }
        for (a, s) in bottom.iter().zip(sv.iter()) {
            assert!((a - s).abs() < 1e-10);
        }
    }

    #[test]
    fn pinching_identity_projectors() {
        let mut rng = Stream::new(4);
        let x = DenseMatrix::from_fn(3, 3, ScalarField::Complex, |_, _| rng.complex_normal());
        let id = DenseMatrix::identity(3, ScalarField::Complex);
        let zero = DenseMatrix::zeros(3, 3, ScalarField::Complex);
        let (lhs, rhs) = pinch_check(&x, &id, &id, &zero, &zero).unwrap();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn pinching_rejects_non_resolution() {
        let x = DenseMatrix::zeros(2, 2, ScalarField::Real);
        let id = DenseMatrix::identity(2, ScalarField::Complex);
        // id + id != id, so passing id twice must be rejected.
        assert!(pinch_check(&x, &id, &id, &id, &id).is_err());
    }

    #[test]
    fn sign_matrix_examples() {
        // X = 3 e1 e2^T -> e1 e2^T.
        let x = DenseMatrix::from_real(2, 2, &[0.0, 3.0, 0.0, 0.0]).unwrap();
        let s = sign_matrix(&x).unwrap();
        let expect = DenseMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(s.sub(&expect).max_abs() < 1e-12);
        // Zero rejected.
        assert!(sign_matrix(&DenseMatrix::zeros(2, 2, ScalarField::Real)).is_err());
    }

    #[test]
    fn sign_matrix_pairing_and_spectral_norm() {
        let mut rng = Stream::new(5);
        for _ in 0..10 {
            let x = DenseMatrix::from_fn(4, 3, ScalarField::Complex, |_, _| rng.complex_normal());
            let s = sign_matrix(&x).unwrap();
            let pairing = s.frob_inner(&x);
            assert!((pairing.re - linalg::nuclear_norm(&x)).abs() < 1e-10);
            assert!(pairing.im.abs() < 1e-10);
            assert!((linalg::spectral_norm(&s) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn unitary_sign_is_itself() {
        let u = crate::linalg::haar_isometry(3, 3, ScalarField::Complex, &mut Stream::new(6));
        let s = sign_matrix(&u).unwrap();
        assert!(s.sub(&u).max_abs() < 1e-10);
    }

    #[test]
    fn incoherence_examples() {
        let e1 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        assert!((signal_incoherence(&e1).unwrap() - 1.0).abs() < 1e-14);
        let flat = [C64::new(1.0, 0.0); 4];
        assert!((signal_incoherence(&flat).unwrap() - 0.5).abs() < 1e-14);
        let two = [C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        assert!((signal_incoherence(&two).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
        assert!(signal_incoherence(&[C64::new(0.0, 0.0)]).is_err());
    }

    #[test]
    fn blind_deconv_incoherence_dft_rows() {
        // L = K with the zero-padding isometry: the rows of conj(F) are
        // unimodular, so a spike is perfectly incoherent (mu = 1).
        let op = make_blind_deconv_ensemble(4, 2, 4, 0).unwrap();
        let Payload::BlindDeconv(p) = op.payload() else { panic!() };
        let h = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        let mu = blind_deconv_incoherence(&h, &p.b_rows).unwrap();
        assert!((mu - 1.0).abs() < 1e-10, "mu = {mu}");
        // Scaling invariance.
        let h2: Vec<C64> = h.iter().map(|z| z * 2.0).collect();
        let mu2 = blind_deconv_incoherence(&h2, &p.b_rows).unwrap();
        assert!((mu - mu2).abs() < 1e-12);
        // Zero vector rejected.
        assert!(blind_deconv_incoherence(&[C64::new(0.0, 0.0); 4], &p.b_rows).is_err());
    }

    #[test]
    fn blind_deconv_incoherence_at_least_one() {
        // With sum_l b_l b_l^* = Id, averaging forces mu >= 1.
        let op = make_blind_deconv_ensemble(3, 2, 9, 7).unwrap();
        let Payload::BlindDeconv(p) = op.payload() else { panic!() };
        let mut rng = Stream::new(17);
        for _ in 0..20 {
            let h: Vec<C64> = (0..3).map(|_| rng.complex_normal()).collect();
            let mu = blind_deconv_incoherence(&h, &p.b_rows).unwrap();
            assert!(mu >= 1.0 - 1e-9, "mu = {mu}");
        }
    }
}
