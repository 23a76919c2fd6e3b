//! Dense decompositions sized for desk-scale experiments.
//!
//! Everything here is written against [`DenseMatrix`] directly: one-sided
//! Jacobi for the SVD, two-sided Jacobi for Hermitian eigenproblems,
//! Householder QR for orthonormal draws, plus matrix-free CG and power
//! iteration. Jacobi converges slowly past a few hundred rows but delivers
//! high relative accuracy on the small spectra this crate works with, and
//! it is bitwise deterministic.


use crate::mat::{DenseMatrix, ScalarField, C64};
use crate::rng::Stream;

const JACOBI_MAX_SWEEPS: usize = 80;
const JACOBI_TOL: f64 = 1e-15;

/// Compact SVD `A = U diag(sigma) V^*`, singular values non-increasing.
/// Columns with `sigma <= 1e-14 * sigma_max` are dropped.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Reassembles `U diag(f(sigma)) V^*`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let (n1, n2) = (self.u.rows(), self.v.rows());
        let mut out = DenseMatrix::zeros(n1, n2, ScalarField::Complex);
        for k in 0..self.sigma.len() {
            let s = f(self.sigma[k]);
            if s == 0.0 {
                continue;
            }
            for i in 0..n1 {
                let uik = self.u.get(i, k) * s;
                for j in 0..n2 {
                    let v = out.get(i, j) + uik * self.v.get(j, k).conj();
                    out.set(i, j, v);
                }
            }
        }
        let f = out.classify_field();
        out.with_field(f)
    }
}

/// One-sided Jacobi SVD.
pub fn svd(a: &DenseMatrix) -> Svd {
    if a.rows() < a.cols() {
        let t = svd(&a.conj_transpose());
        return Svd { u: t.v, sigma: t.sigma, v: t.u };
    }
    let rows = a.rows();
    let cols = a.cols();
    let mut w = a.clone().with_field(ScalarField::Complex);
    let mut v = DenseMatrix::identity(cols, ScalarField::Complex);

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = C64::new(0.0, 0.0);
                for i in 0..rows {
                    let wp = w.get(i, p);
                    let wq = w.get(i, q);
                    app += wp.norm_sqr();
                    aqq += wq.norm_sqr();
                    apq += wp.conj() * wq;
                }
                if app == 0.0 || aqq == 0.0 {
                    continue;
                }
                if apq.norm() <= JACOBI_TOL * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let (c, s, phase) = jacobi_rotation(app, aqq, apq);
                for i in 0..rows {
                    let wp = w.get(i, p);
                    let wq = w.get(i, q);
                    w.set(i, p, wp * c - wq * phase.conj() * s);
                    w.set(i, q, wp * phase * s + wq * c);
                }
                for i in 0..cols {
                    let vp = v.get(i, p);
                    let vq = v.get(i, q);
                    v.set(i, p, vp * c - vq * phase.conj() * s);
                    v.set(i, q, vp * phase * s + vq * c);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..cols)
        .map(|j| (0..rows).map(|i| w.get(i, j).norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let smax = norms.iter().cloned().fold(0.0, f64::max);
    let cut = smax * 1e-14;
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));
    let kept: Vec<usize> = order.into_iter().filter(|&j| norms[j] > cut && norms[j] > 0.0).collect();

    let r = kept.len();
    let mut u = DenseMatrix::zeros(rows, r, ScalarField::Complex);
    let mut vv = DenseMatrix::zeros(cols, r, ScalarField::Complex);
    let mut sigma = Vec::with_capacity(r);
    for (k, &j) in kept.iter().enumerate() {
        sigma.push(norms[j]);
        let inv = 1.0 / norms[j];
        for i in 0..rows {
            u.set(i, k, w.get(i, j) * inv);
        }
        for i in 0..cols {
            vv.set(i, k, v.get(i, j));
        }
    }
    Svd { u, sigma, v: vv }
}

/// Stable Jacobi rotation parameters zeroing the (p,q) coupling of the
/// Hermitian 2x2 Gram block [[app, apq], [apq^*, aqq]].
fn jacobi_rotation(app: f64, aqq: f64, apq: C64) -> (f64, f64, C64) {
    let g = apq.norm();
    let phase = apq / g;
    let tau = (aqq - app) / (2.0 * g);
    let t = if tau == 0.0 {
        1.0
    } else {
        tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    (c, c * t, phase)
}

/// Sum of singular values.
pub fn nuclear_norm(a: &DenseMatrix) -> f64 {
    svd(a).sigma.iter().sum()
}

/// Largest singular value.
pub fn spectral_norm(a: &DenseMatrix) -> f64 {
    svd(a).sigma.first().copied().unwrap_or(0.0)
}

/// Hermitian eigendecomposition `H = V diag(lambda) V^*`, eigenvalues
/// ascending. The input must be Hermitian; only the symmetrized part is
/// honored.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

pub fn hermitian_eig(h: &DenseMatrix) -> HermEig {
    assert_eq!(h.rows(), h.cols(), "hermitian_eig needs a square matrix");
    let n = h.rows();
    // Symmetrize to wash out drift in callers that assemble H numerically.
    let mut a = DenseMatrix::zeros(n, n, ScalarField::Complex);
    for i in 0..n {
        for j in 0..n {
            a.set(i, j, (h.get(i, j) + h.get(j, i).conj()) * 0.5);
        }
    }
    let mut v = DenseMatrix::identity(n, ScalarField::Complex);
    let fro = a.frob_norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q).norm_sqr();
            }
        }
        if off.sqrt() <= 1e-14 * fro {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a.get(p, q);
                if g.norm() <= 1e-300 {
                    continue;
                }
                let (c, s, phase) = jacobi_rotation(a.get(p, p).re, a.get(q, q).re, g);
                // A <- J^* A J
                for i in 0..n {
                    let aip = a.get(i, p);
                    let aiq = a.get(i, q);
                    a.set(i, p, aip * c - aiq * phase.conj() * s);
                    a.set(i, q, aip * phase * s + aiq * c);
                }
                for i in 0..n {
                    let api = a.get(p, i);
                    let aqi = a.get(q, i);
                    a.set(p, i, api * c - aqi * phase * s);
                    a.set(q, i, api * phase.conj() * s + aqi * c);
                }
                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, vip * c - viq * phase.conj() * s);
                    v.set(i, q, vip * phase * s + viq * c);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).re.partial_cmp(&a.get(j, j).re).unwrap().then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| a.get(i, i).re).collect();
    let mut vectors = DenseMatrix::zeros(n, n, ScalarField::Complex);
    for (k, &j) in order.iter().enumerate() {
        for i in 0..n {
            vectors.set(i, k, v.get(i, j));
        }
    }
    HermEig { values, vectors }
}

/// Projection onto the positive semidefinite cone (eigenvalue clipping).
pub fn psd_project(h: &DenseMatrix) -> DenseMatrix {
    let eig = hermitian_eig(h);
    let n = h.rows();
    let mut out = DenseMatrix::zeros(n, n, ScalarField::Complex);
    for (k, &lam) in eig.values.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        for i in 0..n {
            let vik = eig.vectors.get(i, k) * lam;
            for j in 0..n {
                let v = out.get(i, j) + vik * eig.vectors.get(j, k).conj();
                out.set(i, j, v);
            }
        }
    }
    out
}

/// Thin QR via Householder reflections. Returns `(q, r)` with `q` an
/// isometry of the same shape class as the input (rows x cols, rows >= cols).
pub fn qr(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let rows = a.rows();
    let cols = a.cols();
    assert!(rows >= cols, "qr expects rows >= cols");
    let mut r = a.clone().with_field(ScalarField::Complex);
    // Householder vectors, stored per column.
    let mut vs: Vec<Vec<C64>> = Vec::with_capacity(cols);
    for k in 0..cols {
        let mut v: Vec<C64> = (k..rows).map(|i| r.get(i, k)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            let alpha = if v[0].norm() > 0.0 { v[0] / v[0].norm() } else { C64::new(1.0, 0.0) };
            v[0] += alpha * norm;
            let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if vnorm > 0.0 {
                for z in v.iter_mut() {
                    *z /= vnorm;
                }
                // r <- (I - 2 v v^*) r on the trailing block
                for j in k..cols {
                    let mut dot = C64::new(0.0, 0.0);
                    for i in k..rows {
                        dot += v[i - k].conj() * r.get(i, j);
                    }
                    let dot2 = dot * 2.0;
                    for i in k..rows {
                        let val = r.get(i, j) - v[i - k] * dot2;
                        r.set(i, j, val);
                    }
                }
            }
        }
        vs.push(v);
    }
    // Accumulate thin Q by applying reflectors to the first `cols` identity columns.
    let mut q = DenseMatrix::zeros(rows, cols, ScalarField::Complex);
    for j in 0..cols {
        q.set(j, j, C64::new(1.0, 0.0));
    }
    for k in (0..cols).rev() {
        let v = &vs[k];
        if v.iter().all(|z| z.norm_sqr() == 0.0) {
            continue;
        }
        for j in 0..cols {
            let mut dot = C64::new(0.0, 0.0);
            for i in k..rows {
                dot += v[i - k].conj() * q.get(i, j);
            }
            let dot2 = dot * 2.0;
            for i in k..rows {
                let val = q.get(i, j) - v[i - k] * dot2;
                q.set(i, j, val);
            }
        }
    }
    // Zero the numerically silent lower triangle of R.
    let mut r_thin = DenseMatrix::zeros(cols, cols, ScalarField::Complex);
    for i in 0..cols {
        for j in i..cols {
            r_thin.set(i, j, r.get(i, j));
        }
    }
    (q, r_thin)
}

/// Haar-distributed isometry (n x r), complex or real.
pub fn haar_isometry(n: usize, r: usize, field: ScalarField, rng: &mut Stream) -> DenseMatrix {
    assert!(r <= n, "haar_isometry needs r <= n");
    let g = match field {
        ScalarField::Complex => {
            DenseMatrix::from_fn(n, r, ScalarField::Complex, |_, _| C64::new(0.0, 0.0))
        }
        ScalarField::Real => DenseMatrix::zeros(n, r, ScalarField::Real),
    };
    let mut g = g;
    for i in 0..n {
        for j in 0..r {
            let z = match field {
                ScalarField::Complex => rng.complex_normal(),
                ScalarField::Real => C64::new(rng.normal(), 0.0),
            };
            g.set(i, j, z);
        }
    }
    let (q, rr) = qr(&g);
    // Phase-fix so the distribution is exactly Haar (unique QR with positive
    // diagonal R).
    let mut out = q;
    for j in 0..r {
        let d = rr.get(j, j);
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            let v = out.get(i, j) * ph;
            out.set(i, j, v);
        }
    }
    let f = out.classify_field();
    out.with_field(f)
}

/// Outcome of a power-iteration run.
#[derive(Debug, Clone, Copy)]
pub struct PowerOutcome {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration for the top eigenvalue of a self-adjoint PSD operator on
/// matrix space. Restarts from a fresh random point a bounded number of
/// times when progress stalls at zero.
pub fn power_iteration<F>(
    op: F,
    shape: (usize, usize),
    tol: f64,
    max_iters: usize,
    rng: &mut Stream,
) -> PowerOutcome
where
    F: Fn(&DenseMatrix) -> DenseMatrix,
{
    let (n1, n2) = shape;
    let mut total_iters = 0usize;
    for _restart in 0..4 {
        let v = DenseMatrix::from_fn(n1, n2, ScalarField::Complex, |_, _| rng.complex_normal());
        let nrm = v.frob_norm();
        if nrm == 0.0 {
            continue;
        }
        let mut v = v.scale_re(1.0 / nrm);
        let mut lambda = 0.0f64;
        while total_iters < max_iters {
            total_iters += 1;
            let w = op(&v);
            let new_lambda = v.frob_inner(&w).re;
            let wn = w.frob_norm();
            if wn == 0.0 {
                // Landed in the kernel; restart.
                break;
            }
            v = w.scale_re(1.0 / wn);
            if (new_lambda - lambda).abs() <= tol * new_lambda.abs().max(1e-300) {
                return PowerOutcome { value: new_lambda.max(0.0), iterations: total_iters, converged: true };
            }
            lambda = new_lambda;
        }
        if total_iters >= max_iters {
            return PowerOutcome { value: lambda.max(0.0), iterations: total_iters, converged: false };
        }
    }
    PowerOutcome { value: 0.0, iterations: total_iters, converged: true }
}

/// Matrix-free conjugate gradients for a Hermitian positive definite
/// operator on matrix space. Returns `(solution, iterations, converged)`.
pub fn conjugate_gradient<F>(
    op: F,
    rhs: &DenseMatrix,
    tol: f64,
    max_iters: usize,
) -> (DenseMatrix, usize, bool)
where
    F: Fn(&DenseMatrix) -> DenseMatrix,
{
    let mut x = DenseMatrix::zeros(rhs.rows(), rhs.cols(), ScalarField::Complex);
    let mut r = rhs.clone();
    let mut p = r.clone();
    let rhs_norm = rhs.frob_norm().max(f64::MIN_POSITIVE);
    let mut rs_old = r.frob_norm_sq();
    if rs_old.sqrt() <= tol * rhs_norm {
        return (x, 0, true);
    }
    for it in 1..=max_iters {
        let ap = op(&p);
        let pap = p.frob_inner(&ap).re;
        if pap <= 0.0 {
            return (x, it, false);
        }
        let alpha = rs_old / pap;
        x.axpy(C64::new(alpha, 0.0), &p);
        r.axpy(C64::new(-alpha, 0.0), &ap);
        let rs_new = r.frob_norm_sq();
        if rs_new.sqrt() <= tol * rhs_norm {
            return (x, it, true);
        }
        let beta = rs_new / rs_old;
        p = r.add(&p.scale_re(beta));
        rs_old = rs_new;
    }
    (x, max_iters, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::vec_norm;

    fn random_matrix(n1: usize, n2: usize, rng: &mut Stream) -> DenseMatrix {
        DenseMatrix::from_fn(n1, n2, ScalarField::Complex, |_, _| rng.complex_normal())
    }

    fn assert_isometry(u: &DenseMatrix, tol: f64) {
        let gram = u.conj_transpose().matmul(u);
        let id = DenseMatrix::identity(u.cols(), ScalarField::Complex);
        assert!(gram.sub(&id).max_abs() < tol, "not an isometry: {}", gram.sub(&id).max_abs());
    }

    #[test]
    fn svd_reconstructs_random_matrices() {
        let mut rng = Stream::new(11);
        for &(n1, n2) in &[(5usize, 3usize), (3, 5), (6, 6), (1, 4), (7, 2)] {
            let a = random_matrix(n1, n2, &mut rng);
            let f = svd(&a);
            assert_isometry(&f.u, 1e-12);
            assert_isometry(&f.v, 1e-12);
            for w in f.sigma.windows(2) {
                assert!(w[0] >= w[1]);
            }
            let back = f.reconstruct_with(|s| s);
            assert!(back.sub(&a).max_abs() < 1e-12 * (1.0 + a.max_abs()));
        }
    }

    #[test]
    fn svd_known_diagonal() {
        let a = DenseMatrix::from_real(2, 2, &[3.0, 0.0, 0.0, -1.0]).unwrap();
        let f = svd(&a);
        assert!((f.sigma[0] - 3.0).abs() < 1e-14);
        assert!((f.sigma[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn svd_rank_deficient() {
        // Outer product has rank one.
        let u = [C64::new(1.0, 0.0), C64::new(0.0, 2.0)];
        let v = [C64::new(1.0, 1.0), C64::new(0.5, 0.0), C64::new(0.0, -1.0)];
        let a = DenseMatrix::outer(&u, &v);
        let f = svd(&a);
        assert_eq!(f.rank(), 1);
        let expected = vec_norm(&u) * vec_norm(&v);
        assert!((f.sigma[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn hermitian_eig_recovers_spectrum() {
        let mut rng = Stream::new(3);
        let n = 6;
        let b = random_matrix(n, n, &mut rng);
        let h = b.add(&b.conj_transpose()).scale_re(0.5);
        let eig = hermitian_eig(&h);
        assert_isometry(&eig.vectors, 1e-12);
        // Reconstruct and compare.
        let mut back = DenseMatrix::zeros(n, n, ScalarField::Complex);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let v = back.get(i, j)
                        + eig.vectors.get(i, k) * eig.vectors.get(j, k).conj() * eig.values[k];
                    back.set(i, j, v);
                }
            }
        }
        assert!(back.sub(&h).max_abs() < 1e-12 * (1.0 + h.max_abs()));
        for w in eig.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn eig_matches_svd_on_gram() {
        let mut rng = Stream::new(9);
        let a = random_matrix(5, 4, &mut rng);
        let gram = a.conj_transpose().matmul(&a);
        let eig = hermitian_eig(&gram);
        let f = svd(&a);
        let mut eig_desc: Vec<f64> = eig.values.iter().rev().map(|x| x.max(0.0).sqrt()).collect();
        eig_desc.truncate(f.sigma.len());
        for (e, s) in eig_desc.iter().zip(f.sigma.iter()) {
            assert!((e - s).abs() < 1e-10, "{e} vs {s}");
        }
    }

    #[test]
    fn psd_project_clips_negative_part() {
        let h = DenseMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -2.0]).unwrap();
        let p = psd_project(&h);
        assert!((p.get(0, 0).re - 1.0).abs() < 1e-14);
        assert!(p.get(1, 1).norm() < 1e-14);
    }

    #[test]
    fn qr_orthonormal_and_reconstructs() {
        let mut rng = Stream::new(4);
        let a = random_matrix(6, 4, &mut rng);
        let (q, r) = qr(&a);
        assert_isometry(&q, 1e-12);
        let back = q.matmul(&r);
        assert!(back.sub(&a).max_abs() < 1e-12);
    }

    #[test]
    fn haar_isometry_is_isometry() {
        let mut rng = Stream::new(5);
        let u = haar_isometry(7, 3, ScalarField::Complex, &mut rng);
        assert_isometry(&u, 1e-12);
        let w = haar_isometry(5, 2, ScalarField::Real, &mut rng);
        assert_eq!(w.field(), ScalarField::Real);
        assert_isometry(&w, 1e-12);
    }

    #[test]
    fn power_iteration_matches_top_eigenvalue() {
        let mut rng = Stream::new(6);
        let a = random_matrix(5, 5, &mut rng);
        let h = a.conj_transpose().matmul(&a); // PSD
        let eig = hermitian_eig(&h);
        let top = *eig.values.last().unwrap();
        let out = power_iteration(|v| h.matmul(v), (5, 1), 1e-12, 10_000, &mut rng);
        assert!(out.converged);
        assert!((out.value - top).abs() < 1e-6 * top);
    }

    #[test]
    fn cg_solves_small_system() {
        let mut rng = Stream::new(8);
        let a = random_matrix(4, 4, &mut rng);
        let h = a.conj_transpose().matmul(&a).add(&DenseMatrix::identity(4, ScalarField::Complex));
        let x_true = random_matrix(4, 1, &mut rng);
        let rhs = h.matmul(&x_true);
        let (x, _iters, ok) = conjugate_gradient(|v| h.matmul(v), &rhs, 1e-14, 200);
        assert!(ok);
        assert!(x.sub(&x_true).max_abs() < 1e-10);
    }
}
