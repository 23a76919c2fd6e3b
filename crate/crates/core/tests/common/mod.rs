//! Shared oracles for the integration suites. Everything here recomputes
//! expected values through routes that are independent of the library
//! paths under test (direct summation, materialized matrices, a separate
//! first-order reference solver).

#![allow(dead_code)]

use lrlab::linalg;
use lrlab::mat::{DenseMatrix, ScalarField, C64};
use lrlab::operators::MeasurementOperator;
use lrlab::rng::Stream;

/// Unitary DFT of a vector by direct O(L^2) summation.
pub fn direct_dft(x: &[C64]) -> Vec<C64> {
    let l = x.len();
    let scale = 1.0 / (l as f64).sqrt();
    (0..l)
        .map(|j| {
            let mut acc = C64::new(0.0, 0.0);
            for (k, xv) in x.iter().enumerate() {
                let angle = -std::f64::consts::TAU * ((j * k) % l) as f64 / l as f64;
                acc += C64::new(angle.cos(), angle.sin()) * xv;
            }
            acc * scale
        })
        .collect()
}

/// Circular convolution by direct O(L^2) summation (indices mod L).
pub fn direct_circular_convolution(w: &[C64], x: &[C64]) -> Vec<C64> {
    let l = w.len();
    assert_eq!(l, x.len());
    (0..l)
        .map(|i| {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..l {
                acc += w[j] * x[(i + l - j) % l];
            }
            acc
        })
        .collect()
}

/// Unitary inverse DFT by direct summation.
pub fn direct_idft(x: &[C64]) -> Vec<C64> {
    let l = x.len();
    let scale = 1.0 / (l as f64).sqrt();
    (0..l)
        .map(|j| {
            let mut acc = C64::new(0.0, 0.0);
            for (k, xv) in x.iter().enumerate() {
                let angle = std::f64::consts::TAU * ((j * k) % l) as f64 / l as f64;
                acc += C64::new(angle.cos(), angle.sin()) * xv;
            }
            acc * scale
        })
        .collect()
}

/// Random complex matrix with standard normal entries.
pub fn random_complex(n1: usize, n2: usize, rng: &mut Stream) -> DenseMatrix {
    DenseMatrix::from_fn(n1, n2, ScalarField::Complex, |_, _| rng.complex_normal())
}

/// Random real matrix.
pub fn random_real(n1: usize, n2: usize, rng: &mut Stream) -> DenseMatrix {
    DenseMatrix::from_fn(n1, n2, ScalarField::Real, |_, _| C64::new(rng.normal(), 0.0))
}

/// Rank-r anchor with Haar factors and unit singular values.
pub fn haar_anchor(
    n1: usize,
    n2: usize,
    r: usize,
    field: ScalarField,
    rng: &mut Stream,
) -> lrlab::geometry::SvdFactors {
    let u = linalg::haar_isometry(n1, r, field, rng);
    let v = linalg::haar_isometry(n2, r, field, rng);
    lrlab::geometry::SvdFactors::new(u, vec![1.0; r], v).unwrap()
}

/// Exact affine projection onto `{X : A(X) = y}` through the materialized
/// operator and a pseudo-inverse of its Gram matrix.
pub struct AffineProjector {
    op_matrix: DenseMatrix,
    eig: linalg::HermEig,
    cut: f64,
    y: Vec<C64>,
    n1: usize,
    n2: usize,
}

impl AffineProjector {
    pub fn new(op: &MeasurementOperator, y: &[C64]) -> Self {
        let op_matrix = op.materialize();
        let gram = op_matrix.matmul(&op_matrix.conj_transpose());
        let eig = linalg::hermitian_eig(&gram);
        let cut = eig.values.last().copied().unwrap_or(0.0).max(0.0) * 1e-12;
        let (n1, n2) = op.input_shape();
        AffineProjector { op_matrix, eig, cut, y: y.to_vec(), n1, n2 }
    }

    fn pinv_gram(&self, v: &[C64]) -> Vec<C64> {
        let m = v.len();
        let mut out = vec![C64::new(0.0, 0.0); m];
        for k in 0..m {
            if self.eig.values[k] <= self.cut {
                continue;
            }
            let mut dot = C64::new(0.0, 0.0);
            for i in 0..m {
                dot += self.eig.vectors.get(i, k).conj() * v[i];
            }
            let coeff = dot / self.eig.values[k];
            for i in 0..m {
                out[i] += self.eig.vectors.get(i, k) * coeff;
            }
        }
        out
    }

    pub fn project(&self, x: &DenseMatrix) -> DenseMatrix {
        // residual = M vec(X) - y; X <- X - M^H G^+ residual.
        let vecx: Vec<C64> = x.data().to_vec();
        let ax = self.op_matrix.matvec(&vecx);
        let resid: Vec<C64> = ax.iter().zip(self.y.iter()).map(|(a, b)| a - b).collect();
        let corr = self.op_matrix.conj_transpose().matvec(&self.pinv_gram(&resid));
        let mut out = x.clone();
        for (idx, c) in corr.iter().enumerate() {
            let (i, j) = (idx / self.n2, idx % self.n2);
            out.set(i, j, out.get(i, j) - c);
        }
        out
    }
}

/// Independent reference for noiseless nuclear-norm minimization:
/// projected subgradient descent with geometric step decay, run to high
/// accuracy on materialized small instances. Returns the best feasible
/// objective seen.
pub fn subgradient_reference(op: &MeasurementOperator, y: &[C64], epochs: usize) -> f64 {
    let (n1, n2) = op.input_shape();
    let proj = AffineProjector::new(op, y);
    let mut x = proj.project(&DenseMatrix::zeros(n1, n2, ScalarField::Complex));
    let mut best = linalg::nuclear_norm(&x);
    let mut step = 0.5;
    for _epoch in 0..epochs {
        for _ in 0..400 {
            let f = linalg::svd(&x);
            let mut g = DenseMatrix::zeros(n1, n2, ScalarField::Complex);
            for k in 0..f.rank() {
                for i in 0..n1 {
                    let c = f.u.get(i, k);
                    for j in 0..n2 {
                        let val = g.get(i, j) + c * f.v.get(j, k).conj();
                        g.set(i, j, val);
                    }
                }
            }
            x = proj.project(&x.sub(&g.scale_re(step)));
            let obj = linalg::nuclear_norm(&x);
            if obj < best {
                best = obj;
            }
        }
        step *= 0.7;
    }
    best
}
