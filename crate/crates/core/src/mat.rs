//! Dense matrix carrier shared by every module.
//!
//! Inner-product conventions (used consistently everywhere):
//!
//! * Frobenius inner product on matrices conjugates the **first** argument,
//!   `<A, B> = tr(A^* B) = sum_ij conj(a_ij) b_ij`.
//! * Euclidean inner product on measurement vectors conjugates the
//!   **second** argument, `<u, v> = sum_i u_i conj(v_i)`.
//!
//! With these two conventions the adjoint of a measurement operator is the
//! plain linear combination `A^*(y) = sum_i y_i A_i` and the pairing
//! identity reads `<A(X), y>_vec = <A^*(y), X>_F`. Tests in the operators
//! module exercise this identity for every ensemble.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Scalar field tag for a [`DenseMatrix`]. Real-flagged matrices carry zero
/// imaginary parts in every entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarField {
    Real,
    Complex,
}

impl ScalarField {
    /// Field of the result of a binary operation.
    pub fn join(self, other: ScalarField) -> ScalarField {
        if self == ScalarField::Real && other == ScalarField::Real {
            ScalarField::Real
        } else {
            ScalarField::Complex
        }
    }
}

/// Dense row-major matrix over the complex numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
    field: ScalarField,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>, field: ScalarField) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "entry buffer has {} elements, expected {}x{}={}",
                data.len(),
                rows,
                cols,
                rows * cols
            )));
        }
        if field == ScalarField::Real && data.iter().any(|z| z.im != 0.0) {
            return Err(Error::InvalidArgument(
                "real-flagged matrix has nonzero imaginary part".into(),
            ));
        }
        Ok(Self { rows, cols, data, field })
    }

    pub fn zeros(rows: usize, cols: usize, field: ScalarField) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols], field }
    }

    pub fn identity(n: usize, field: ScalarField) -> Self {
        let mut m = Self::zeros(n, n, field);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, field: ScalarField, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data, field }
    }

    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        let data = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::new(rows, cols, data, ScalarField::Real)
    }

    /// Column vector from a complex slice.
    pub fn col_vector(v: &[C64]) -> Self {
        let field = if v.iter().all(|z| z.im == 0.0) { ScalarField::Real } else { ScalarField::Complex };
        Self { rows: v.len(), cols: 1, data: v.to_vec(), field }
    }

    /// Rank-one outer product `u v^*`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        let mut m = Self::zeros(u.len(), v.len(), ScalarField::Complex);
        for i in 0..u.len() {
            for j in 0..v.len() {
                m.set(i, j, u[i] * v[j].conj());
            }
        }
        m.field = m.classify_field();
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn field(&self) -> ScalarField {
        self.field
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Recomputed field tag: `Real` iff every imaginary part is exactly zero.
    pub fn classify_field(&self) -> ScalarField {
        if self.data.iter().all(|z| z.im == 0.0) {
            ScalarField::Real
        } else {
            ScalarField::Complex
        }
    }

    pub fn with_field(mut self, field: ScalarField) -> Self {
        self.field = field;
        self
    }

    /// Frobenius inner product `<A, B> = tr(A^* B)`; conjugates `self`.
    pub fn frob_inner(&self, other: &DenseMatrix) -> C64 {
        debug_assert_eq!(self.shape(), other.shape());
        crate::util::pairwise_sum_c64(
            &self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a.conj() * b)
                .collect::<Vec<_>>(),
        )
    }

    pub fn frob_norm_sq(&self) -> f64 {
        crate::util::pairwise_sum_f64(&self.data.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>())
    }

    pub fn frob_norm(&self) -> f64 {
        self.frob_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn conj_transpose(&self) -> DenseMatrix {
        let mut out = Self::zeros(self.cols, self.rows, self.field);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = Self::zeros(self.cols, self.rows, self.field);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn scale(&self, c: C64) -> DenseMatrix {
        let data = self.data.iter().map(|z| z * c).collect();
        let field = if c.im == 0.0 { self.field } else { ScalarField::Complex };
        DenseMatrix { rows: self.rows, cols: self.cols, data, field }
    }

    pub fn scale_re(&self, c: f64) -> DenseMatrix {
        self.scale(C64::new(c, 0.0))
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        debug_assert_eq!(self.shape(), other.shape());
        let data = self.data.iter().zip(other.data.iter()).map(|(a, b)| a + b).collect();
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
            field: self.field.join(other.field),
        }
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        debug_assert_eq!(self.shape(), other.shape());
        let data = self.data.iter().zip(other.data.iter()).map(|(a, b)| a - b).collect();
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
            field: self.field.join(other.field),
        }
    }

    /// `self += c * other`, in place.
    pub fn axpy(&mut self, c: C64, other: &DenseMatrix) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += c * b;
        }
        if c.im != 0.0 || other.field == ScalarField::Complex {
            self.field = ScalarField::Complex;
        }
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "matmul inner dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols, self.field.join(other.field));
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + aik * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..self.cols {
                    acc += self.get(i, j) * v[j];
                }
                acc
            })
            .collect()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in i..self.cols {
                if (self.get(i, j) - self.get(j, i).conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Extracts the `(i, i)` diagonal block of size `bk x bn` from a matrix
    /// laid out as an `r`-fold block-diagonal of `bk x bn` blocks.
    pub fn diag_block(&self, i: usize, bk: usize, bn: usize) -> DenseMatrix {
        let mut out = Self::zeros(bk, bn, self.field);
        for a in 0..bk {
            for b in 0..bn {
                out.set(a, b, self.get(i * bk + a, i * bn + b));
            }
        }
        out
    }

    /// Assembles a block-diagonal matrix from equally shaped blocks.
    pub fn block_diag(blocks: &[DenseMatrix]) -> DenseMatrix {
        assert!(!blocks.is_empty());
        let (bk, bn) = blocks[0].shape();
        let r = blocks.len();
        let mut field = ScalarField::Real;
        for b in blocks {
            assert_eq!(b.shape(), (bk, bn), "block shape mismatch");
            field = field.join(b.field);
        }
        let mut out = Self::zeros(r * bk, r * bn, field);
        for (i, b) in blocks.iter().enumerate() {
            for a in 0..bk {
                for c in 0..bn {
                    out.set(i * bk + a, i * bn + c, b.get(a, c));
                }
            }
        }
        out
    }
}

/// Euclidean inner product on measurement vectors; conjugates the second
/// argument: `<u, v> = sum_i u_i conj(v_i)`.
pub fn vec_inner(u: &[C64], v: &[C64]) -> C64 {
    debug_assert_eq!(u.len(), v.len());
    crate::util::pairwise_sum_c64(&u.iter().zip(v.iter()).map(|(a, b)| a * b.conj()).collect::<Vec<_>>())
}

pub fn vec_norm(u: &[C64]) -> f64 {
    crate::util::pairwise_sum_f64(&u.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>()).sqrt()
}

pub fn vec_norm_f64(u: &[f64]) -> f64 {
    crate::util::pairwise_sum_f64(&u.iter().map(|x| x * x).collect::<Vec<_>>()).sqrt()
}
