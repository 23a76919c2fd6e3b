//! Measurement ensembles: construction, apply, and adjoint.
//!
//! A measurement operator maps an `n1 x n2` matrix to `m` scalars,
//! `A(X)(i) = <A_i, X> = tr(A_i^* X)`. The adjoint is the linear
//! combination `A^*(y) = sum_i y_i A_i`; with the vector inner product
//! `<u, v> = sum u_i conj(v_i)` this satisfies
//! `<A(X), y>_vec = <A^*(y), X>_F` (see [`crate::mat`] for the convention
//! statement). Operators are immutable after construction and safe to share
//! across threads.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kv::{KvDoc, Value};
use crate::linalg;
use crate::mat::{DenseMatrix, ScalarField, C64};
use crate::rng::{label, Stream};

/// Ensemble discriminant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleKind {
    Gaussian,
    EntrySampling,
    BlindDeconv,
    PhaseRetrieval,
    Demixing,
}

impl EnsembleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EnsembleKind::Gaussian => "gaussian",
            EnsembleKind::EntrySampling => "entry_sampling",
            EnsembleKind::BlindDeconv => "blind_deconv",
            EnsembleKind::PhaseRetrieval => "phase_retrieval",
            EnsembleKind::Demixing => "demixing",
        }
    }
}

/// Measurement-vector models for lifted phase retrieval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseRetrievalModel {
    Gaussian,
    Rademacher,
    Unimodular,
    MaskedFourier,
}

impl PhaseRetrievalModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PhaseRetrievalModel::Gaussian => "gaussian",
            PhaseRetrievalModel::Rademacher => "rademacher",
            PhaseRetrievalModel::Unimodular => "unimodular",
            PhaseRetrievalModel::MaskedFourier => "masked_fourier",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "rademacher" => Ok(Self::Rademacher),
            "unimodular" => Ok(Self::Unimodular),
            "masked_fourier" => Ok(Self::MaskedFourier),
            other => Err(Error::InvalidArgument(format!("unknown phase retrieval model `{other}`"))),
        }
    }
}

/// Entry-sampling operator data: `A(X)(i) = scale * X[indices[i]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntrySamplePayload {
    pub indices: Vec<(usize, usize)>,
    pub scale: f64,
}

/// Blind-deconvolution operator data: `A(X)(l) = <b_l c_l^*, X>` with
/// `b_l` the rows of `conj(F B)` and `c_l` i.i.d. CN(0, Id) rows.
#[derive(Debug, Clone, PartialEq)]
pub struct BlindDeconvPayload {
    pub k: usize,
    pub n: usize,
    pub l: usize,
    pub b_rows: Vec<Vec<C64>>,
    pub c_rows: Vec<Vec<C64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRetrievalPayload {
    pub vectors: Vec<Vec<C64>>,
    pub model: PhaseRetrievalModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemixingPayload {
    pub r: usize,
    pub components: Vec<BlindDeconvPayload>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Gaussian { matrices: Vec<DenseMatrix>, field: ScalarField },
    Entry(EntrySamplePayload),
    BlindDeconv(BlindDeconvPayload),
    PhaseRetrieval(PhaseRetrievalPayload),
    Demixing(DemixingPayload),
}

/// A seeded, immutable description of the linear map `A` with
/// apply/adjoint semantics.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOperator {
    kind: EnsembleKind,
    n1: usize,
    n2: usize,
    m: usize,
    seed: u64,
    payload: Payload,
}

/// Flagged operator-norm estimate from power iteration.
#[derive(Debug, Clone, Copy)]
pub struct OperatorNormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn ensemble_stream(seed: u64) -> Stream {
    Stream::new(seed).child(label::ENSEMBLE)
}

/// Unitary DFT entry `exp(-2 pi i jk / size) / sqrt(size)`.
pub fn dft_entry(j: usize, k: usize, size: usize) -> C64 {
    let angle = -std::f64::consts::TAU * ((j * k) % size) as f64 / size as f64;
    Complex64::new(angle.cos(), angle.sin()) / (size as f64).sqrt()
}

fn build_blind_deconv_payload(
    b_iso: &DenseMatrix,
    n: usize,
    stream: &mut Stream,
) -> BlindDeconvPayload {
    let l = b_iso.rows();
    let k = b_iso.cols();
    // b_l = conj((F B)_{l,:}); F is the unitary DFT.
    let mut b_rows = Vec::with_capacity(l);
    for row in 0..l {
        let mut b = vec![C64::new(0.0, 0.0); k];
        for (col, item) in b.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..l {
                acc += dft_entry(row, t, l) * b_iso.get(t, col);
            }
            *item = acc.conj();
        }
        b_rows.push(b);
    }
    let mut c_rows = Vec::with_capacity(l);
    for _ in 0..l {
        let c: Vec<C64> = (0..n).map(|_| stream.complex_normal()).collect();
        c_rows.push(c);
    }
    BlindDeconvPayload { k, n, l, b_rows, c_rows }
}

/// Zero-padding isometry: embeds C^K into the first K coordinates of C^L.
pub fn zero_padding_isometry(l: usize, k: usize) -> DenseMatrix {
    let mut b = DenseMatrix::zeros(l, k, ScalarField::Real);
    for i in 0..k {
        b.set(i, i, C64::new(1.0, 0.0));
    }
    b
}

/// i.i.d. N(0,1)-entry measurement matrices. Real entries
/// by default; see [`make_gaussian_ensemble_complex`] for the complex
/// variant.
pub fn make_gaussian_ensemble(n1: usize, n2: usize, m: usize, seed: u64) -> Result<MeasurementOperator> {
    make_gaussian_with_field(n1, n2, m, seed, ScalarField::Real)
}

pub fn make_gaussian_ensemble_complex(
    n1: usize,
    n2: usize,
    m: usize,
    seed: u64,
) -> Result<MeasurementOperator> {
    make_gaussian_with_field(n1, n2, m, seed, ScalarField::Complex)
}

fn make_gaussian_with_field(
    n1: usize,
    n2: usize,
    m: usize,
    seed: u64,
    field: ScalarField,
) -> Result<MeasurementOperator> {
    if n1 == 0 || n2 == 0 || m == 0 {
        return Err(Error::InvalidArgument("gaussian ensemble needs n1, n2, m >= 1".into()));
    }
    let mut stream = ensemble_stream(seed);
    let matrices: Vec<DenseMatrix> = (0..m)
        .map(|_| {
            DenseMatrix::from_fn(n1, n2, field, |_, _| match field {
                ScalarField::Real => C64::new(stream.normal(), 0.0),
                ScalarField::Complex => stream.complex_normal(),
            })
        })
        .collect();
    Ok(MeasurementOperator { kind: EnsembleKind::Gaussian, n1, n2, m, seed, payload: Payload::Gaussian { matrices, field } })
}

/// Uniform-with-replacement entry sampling scaled by `sqrt(n1 n2 / m)`
/// (the matrix completion operator).
pub fn make_completion_ensemble(n1: usize, n2: usize, m: usize, seed: u64) -> Result<MeasurementOperator> {
    if n1 == 0 || n2 == 0 || m == 0 {
        return Err(Error::InvalidArgument("completion ensemble needs n1, n2, m >= 1".into()));
    }
    let mut stream = ensemble_stream(seed);
    let indices: Vec<(usize, usize)> =
        (0..m).map(|_| (stream.below(n1), stream.below(n2))).collect();
    let scale = ((n1 * n2) as f64 / m as f64).sqrt();
    Ok(MeasurementOperator {
        kind: EnsembleKind::EntrySampling,
        n1,
        n2,
        m,
        seed,
        payload: Payload::Entry(EntrySamplePayload { indices, scale }),
    })
}

/// Completion operator with a caller-chosen index list (duplicates kept).
pub fn make_completion_with_indices(
    n1: usize,
    n2: usize,
    indices: Vec<(usize, usize)>,
    seed: u64,
) -> Result<MeasurementOperator> {
    if indices.is_empty() {
        return Err(Error::InvalidArgument("index list is empty".into()));
    }
    if indices.iter().any(|&(a, b)| a >= n1 || b >= n2) {
        return Err(Error::InvalidArgument("sample index out of range".into()));
    }
    let m = indices.len();
    let scale = ((n1 * n2) as f64 / m as f64).sqrt();
    Ok(MeasurementOperator {
        kind: EnsembleKind::EntrySampling,
        n1,
        n2,
        m,
        seed,
        payload: Payload::Entry(EntrySamplePayload { indices, scale }),
    })
}

/// Blind-deconvolution ensemble on `K x N` matrices with `L` measurements,
/// `B` fixed to the zero-padding isometry.
pub fn make_blind_deconv_ensemble(k: usize, n: usize, l: usize, seed: u64) -> Result<MeasurementOperator> {
    if k == 0 || n == 0 {
        return Err(Error::InvalidArgument("blind deconvolution needs K, N >= 1".into()));
    }
    if l < k {
        return Err(Error::InvalidArgument(format!(
            "blind deconvolution needs L >= K for the zero-padding isometry (got L={l}, K={k})"
        )));
    }
    let b = zero_padding_isometry(l, k);
    make_blind_deconv_with_isometry(&b, n, seed)
}

/// Blind-deconvolution ensemble with a caller-provided subspace isometry
/// `B` (`L x K`, `B^* B = Id`).
pub fn make_blind_deconv_with_isometry(
    b_iso: &DenseMatrix,
    n: usize,
    seed: u64,
) -> Result<MeasurementOperator> {
    let l = b_iso.rows();
    let k = b_iso.cols();
    if l < k || k == 0 || n == 0 {
        return Err(Error::InvalidArgument("isometry must be tall (L >= K >= 1)".into()));
    }
    let gram = b_iso.conj_transpose().matmul(b_iso);
    let dev = gram.sub(&DenseMatrix::identity(k, ScalarField::Complex)).max_abs();
    if dev > 1e-10 {
        return Err(Error::InvalidArgument(format!("B is not an isometry (|B*B - Id| = {dev:.3e})")));
    }
    // Component stream 0 so a one-component demixing operator reproduces
    // this ensemble bit for bit.
    let mut stream = ensemble_stream(seed).child(0);
    let payload = build_blind_deconv_payload(b_iso, n, &mut stream);
    Ok(MeasurementOperator {
        kind: EnsembleKind::BlindDeconv,
        n1: k,
        n2: n,
        m: l,
        seed,
        payload: Payload::BlindDeconv(payload),
    })
}

/// Lifted phase retrieval: `A(X)(i) = <a_i a_i^*, X>` on `n x n` matrices.
pub fn make_phase_retrieval_ensemble(
    n: usize,
    m: usize,
    model: PhaseRetrievalModel,
    seed: u64,
) -> Result<MeasurementOperator> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("phase retrieval needs n, m >= 1".into()));
    }
    let mut stream = ensemble_stream(seed);
    let mut vectors = Vec::with_capacity(m);
    match model {
        PhaseRetrievalModel::Gaussian => {
            for _ in 0..m {
                vectors.push((0..n).map(|_| stream.complex_normal()).collect());
            }
        }
        PhaseRetrievalModel::Rademacher => {
            for _ in 0..m {
                vectors.push((0..n).map(|_| C64::new(stream.rademacher(), 0.0)).collect());
            }
        }
        PhaseRetrievalModel::Unimodular => {
            for _ in 0..m {
                vectors.push((0..n).map(|_| stream.unit_circle()).collect());
            }
        }
        PhaseRetrievalModel::MaskedFourier => {
            // ceil(m / n) Rademacher masks; within a mask the DFT column
            // cycles deterministically.
            let n_masks = m.div_ceil(n);
            let masks: Vec<Vec<f64>> =
                (0..n_masks).map(|_| (0..n).map(|_| stream.rademacher()).collect()).collect();
            for i in 0..m {
                let mask = &masks[i / n];
                let col = i % n;
                let a: Vec<C64> = (0..n).map(|j| dft_entry(j, col, n) * mask[j]).collect();
                vectors.push(a);
            }
        }
    }
    Ok(MeasurementOperator {
        kind: EnsembleKind::PhaseRetrieval,
        n1: n,
        n2: n,
        m,
        seed,
        payload: Payload::PhaseRetrieval(PhaseRetrievalPayload { vectors, model }),
    })
}

/// Lifted phase retrieval from caller-supplied measurement vectors (all of
/// one length). The descriptor of such an operator is not reconstructible
/// from `(kind, dims, seed)` alone; ensembles meant to round-trip should be
/// built with [`make_phase_retrieval_ensemble`].
pub fn make_phase_retrieval_from_vectors(vectors: Vec<Vec<C64>>) -> Result<MeasurementOperator> {
    if vectors.is_empty() {
        return Err(Error::InvalidArgument("need at least one measurement vector".into()));
    }
    let n = vectors[0].len();
    if n == 0 || vectors.iter().any(|v| v.len() != n) {
        return Err(Error::ShapeMismatch("measurement vectors must share one nonzero length".into()));
    }
    let m = vectors.len();
    Ok(MeasurementOperator {
        kind: EnsembleKind::PhaseRetrieval,
        n1: n,
        n2: n,
        m,
        seed: 0,
        payload: Payload::PhaseRetrieval(PhaseRetrievalPayload {
            vectors,
            model: PhaseRetrievalModel::Gaussian,
        }),
    })
}

/// Demixing: `r` independent blind-deconvolution operators sharing the
/// zero-padding `B` and the measurement length `L`; the input lives on the
/// block diagonal of an `rK x rN` matrix.
pub fn make_demixing_ensemble(
    k: usize,
    n: usize,
    l: usize,
    r: usize,
    seed: u64,
) -> Result<MeasurementOperator> {
    if r == 0 {
        return Err(Error::InvalidArgument("demixing needs r >= 1".into()));
    }
    if k == 0 || n == 0 {
        return Err(Error::InvalidArgument("demixing needs K, N >= 1".into()));
    }
    if l < k {
        return Err(Error::InvalidArgument(format!(
            "demixing needs L >= K for the zero-padding isometry (got L={l}, K={k})"
        )));
    }
    let b = zero_padding_isometry(l, k);
    let ens = ensemble_stream(seed);
    let components: Vec<BlindDeconvPayload> = (0..r)
        .map(|i| {
            let mut stream = ens.child(i as u64);
            build_blind_deconv_payload(&b, n, &mut stream)
        })
        .collect();
    Ok(MeasurementOperator {
        kind: EnsembleKind::Demixing,
        n1: r * k,
        n2: r * n,
        m: l,
        seed,
        payload: Payload::Demixing(DemixingPayload { r, components }),
    })
}

impl MeasurementOperator {
    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    /// Input shape `(n1, n2)`. For demixing this is the stacked
    /// block-diagonal shape `(r K, r N)`.
    pub fn input_shape(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn n_measurements(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    /// Block layout `(r, K, N)` for demixing operators.
    pub fn block_layout(&self) -> Option<(usize, usize, usize)> {
        match &self.payload {
            Payload::Demixing(d) => Some((d.r, d.components[0].k, d.components[0].n)),
            _ => None,
        }
    }

    fn check_input(&self, x: &DenseMatrix) -> Result<()> {
        if x.shape() != (self.n1, self.n2) {
            return Err(Error::ShapeMismatch(format!(
                "operator expects {}x{}, got {}x{}",
                self.n1,
                self.n2,
                x.rows(),
                x.cols()
            )));
        }
        Ok(())
    }

    /// `A(X)`: one Frobenius inner product per measurement.
    ///
    /// For demixing, off-block-diagonal content of `X` is outside the
    /// operator's domain and is ignored (every `A_i` is supported on the
    /// block diagonal).
    pub fn apply(&self, x: &DenseMatrix) -> Result<Vec<C64>> {
        self.check_input(x)?;
        Ok((0..self.m).map(|i| self.row_apply(i, x)).collect())
    }

    /// `A^*(y) = sum_i y_i A_i`.
    pub fn adjoint(&self, y: &[C64]) -> Result<DenseMatrix> {
        if y.len() != self.m {
            return Err(Error::ShapeMismatch(format!(
                "adjoint expects a length-{} vector, got {}",
                self.m,
                y.len()
            )));
        }
        let mut acc = DenseMatrix::zeros(self.n1, self.n2, ScalarField::Complex);
        for (i, &yi) in y.iter().enumerate() {
            if yi != C64::new(0.0, 0.0) {
                self.row_adjoint_into(i, yi, &mut acc);
            }
        }
        Ok(acc)
    }

    /// Measurement `i` only: `<A_i, X>`.
    pub fn row_apply(&self, i: usize, x: &DenseMatrix) -> C64 {
        match &self.payload {
            Payload::Gaussian { matrices, .. } => matrices[i].frob_inner(x),
            Payload::Entry(p) => {
                let (a, b) = p.indices[i];
                x.get(a, b) * p.scale
            }
            Payload::BlindDeconv(p) => bd_row_apply(p, i, x, 0, 0),
            Payload::PhaseRetrieval(p) => {
                let a = &p.vectors[i];
                let n = a.len();
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..n {
                    let mut inner = C64::new(0.0, 0.0);
                    for kk in 0..n {
                        inner += x.get(j, kk) * a[kk];
                    }
                    acc += a[j].conj() * inner;
                }
                acc
            }
            Payload::Demixing(d) => {
                let mut acc = C64::new(0.0, 0.0);
                for (c, comp) in d.components.iter().enumerate() {
                    acc += bd_row_apply(comp, i, x, c * comp.k, c * comp.n);
                }
                acc
            }
        }
    }

    /// Accumulates `coeff * A_i` into `acc`.
    pub fn row_adjoint_into(&self, i: usize, coeff: C64, acc: &mut DenseMatrix) {
        match &self.payload {
            Payload::Gaussian { matrices, .. } => acc.axpy(coeff, &matrices[i]),
            Payload::Entry(p) => {
                let (a, b) = p.indices[i];
                let v = acc.get(a, b) + coeff * p.scale;
                acc.set(a, b, v);
            }
            Payload::BlindDeconv(p) => bd_row_adjoint(p, i, coeff, acc, 0, 0),
            Payload::PhaseRetrieval(p) => {
                let a = &p.vectors[i];
                let n = a.len();
                for j in 0..n {
                    let cj = coeff * a[j];
                    for kk in 0..n {
                        let v = acc.get(j, kk) + cj * a[kk].conj();
                        acc.set(j, kk, v);
                    }
                }
            }
            Payload::Demixing(d) => {
                for (c, comp) in d.components.iter().enumerate() {
                    bd_row_adjoint(comp, i, coeff, acc, c * comp.k, c * comp.n);
                }
            }
        }
    }

    /// Materializes `A_i` as a dense matrix (block-diagonal for demixing).
    pub fn materialize_row(&self, i: usize) -> DenseMatrix {
        let mut acc = DenseMatrix::zeros(self.n1, self.n2, ScalarField::Complex);
        self.row_adjoint_into(i, C64::new(1.0, 0.0), &mut acc);
        acc
    }

    /// Stacks `conj(vec(A_i))` as the rows of an `m x (n1 n2)` matrix, so
    /// that `A(X) = M vec(X)` and the operator norm is `sigma_max(M)`.
    pub fn materialize(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.m, self.n1 * self.n2, ScalarField::Complex);
        for i in 0..self.m {
            let ai = self.materialize_row(i);
            for (j, z) in ai.data().iter().enumerate() {
                out.set(i, j, z.conj());
            }
        }
        out
    }

    /// `c` with `E[A^* A] = c Id` on the operator's domain, when the
    /// ensemble is isotropic in that sense.
    pub fn isotropy_scale(&self) -> Option<f64> {
        match &self.payload {
            Payload::Gaussian { .. } => Some(self.m as f64),
            Payload::Entry(_) => Some(1.0),
            Payload::BlindDeconv(_) => Some(1.0),
            Payload::PhaseRetrieval(_) => None,
            Payload::Demixing(_) => Some(1.0),
        }
    }

    /// Demixing view with the components relabeled by `perm` (a
    /// permutation of `0..r`); measurement `l` then reads the relabeled
    /// block stack. The descriptor of the permuted view still names the
    /// seed-ordered ensemble, so it is a derived object, not a
    /// serialization round-trip citizen.
    pub fn with_permuted_blocks(&self, perm: &[usize]) -> Result<MeasurementOperator> {
        let Payload::Demixing(d) = &self.payload else {
            return Err(Error::InvalidArgument("block permutation needs a demixing operator".into()));
        };
        if perm.len() != d.r {
            return Err(Error::InvalidArgument("permutation length disagrees with r".into()));
        }
        let mut seen = vec![false; d.r];
        for &p in perm {
            if p >= d.r || seen[p] {
                return Err(Error::InvalidArgument("not a permutation of the blocks".into()));
            }
            seen[p] = true;
        }
        let components: Vec<BlindDeconvPayload> =
            perm.iter().map(|&i| d.components[i].clone()).collect();
        Ok(MeasurementOperator {
            kind: self.kind,
            n1: self.n1,
            n2: self.n2,
            m: self.m,
            seed: self.seed,
            payload: Payload::Demixing(DemixingPayload { r: d.r, components }),
        })
    }

    /// Power-iteration estimate of `||A|| = sup ||A(X)||_2 / ||X||_F`.
    /// Non-convergence is reported in the flag, never panics.
    pub fn operator_norm(&self, tol: f64, max_iters: usize) -> Result<OperatorNormEstimate> {
        if tol <= 0.0 {
            return Err(Error::InvalidArgument("operator_norm needs tol > 0".into()));
        }
        let mut rng = Stream::new(self.seed).child(label::SOLVER).child(0x4f70);
        let out = linalg::power_iteration(
            |z| self.adjoint(&self.apply(z).unwrap()).unwrap(),
            (self.n1, self.n2),
            tol,
            max_iters,
            &mut rng,
        );
        Ok(OperatorNormEstimate {
            value: out.value.max(0.0).sqrt(),
            iterations: out.iterations,
            converged: out.converged,
        })
    }

    /// Plain-text key-value descriptor; round-trips through
    /// [`from_descriptor`].
    pub fn to_descriptor(&self) -> String {
        let mut doc = KvDoc::new();
        doc.insert("kind", Value::Str(self.kind.as_str().into()));
        doc.insert("seed", Value::Int(self.seed as i64));
        match &self.payload {
            Payload::Gaussian { field, .. } => {
                doc.insert("n1", Value::Int(self.n1 as i64));
                doc.insert("n2", Value::Int(self.n2 as i64));
                doc.insert("m", Value::Int(self.m as i64));
                doc.insert(
                    "field",
                    Value::Str(if *field == ScalarField::Real { "real" } else { "complex" }.into()),
                );
            }
            Payload::Entry(_) => {
                doc.insert("n1", Value::Int(self.n1 as i64));
                doc.insert("n2", Value::Int(self.n2 as i64));
                doc.insert("m", Value::Int(self.m as i64));
            }
            Payload::BlindDeconv(p) => {
                doc.insert("k", Value::Int(p.k as i64));
                doc.insert("n", Value::Int(p.n as i64));
                doc.insert("l", Value::Int(p.l as i64));
            }
            Payload::PhaseRetrieval(p) => {
                doc.insert("n", Value::Int(self.n1 as i64));
                doc.insert("m", Value::Int(self.m as i64));
                doc.insert("model", Value::Str(p.model.as_str().into()));
            }
            Payload::Demixing(d) => {
                let c = &d.components[0];
                doc.insert("k", Value::Int(c.k as i64));
                doc.insert("n", Value::Int(c.n as i64));
                doc.insert("l", Value::Int(c.l as i64));
                doc.insert("r", Value::Int(d.r as i64));
            }
        }
        doc.to_text()
    }

    /// Rebuilds an operator from its key-value descriptor.
    pub fn from_descriptor(text: &str) -> Result<MeasurementOperator> {
        let doc = KvDoc::parse(text)?;
        let kind = doc
            .get_str("kind")?
            .ok_or_else(|| Error::Config("descriptor is missing `kind`".into()))?;
        let seed = doc.get_u64("seed")?.ok_or_else(|| Error::Config("descriptor is missing `seed`".into()))?;
        let need = |key: &str| -> Result<usize> {
            doc.get_usize(key)?.ok_or_else(|| Error::Config(format!("descriptor is missing `{key}`")))
        };
        match kind {
            "gaussian" => {
                let field = match doc.get_str("field")?.unwrap_or("real") {
                    "real" => ScalarField::Real,
                    "complex" => ScalarField::Complex,
                    other => return Err(Error::Config(format!("unknown field `{other}`"))),
                };
                make_gaussian_with_field(need("n1")?, need("n2")?, need("m")?, seed, field)
            }
            "entry_sampling" => make_completion_ensemble(need("n1")?, need("n2")?, need("m")?, seed),
            "blind_deconv" => make_blind_deconv_ensemble(need("k")?, need("n")?, need("l")?, seed),
            "phase_retrieval" => {
                let model = PhaseRetrievalModel::parse(
                    doc.get_str("model")?.ok_or_else(|| Error::Config("descriptor is missing `model`".into()))?,
                )?;
                make_phase_retrieval_ensemble(need("n")?, need("m")?, model, seed)
            }
            "demixing" => make_demixing_ensemble(need("k")?, need("n")?, need("l")?, need("r")?, seed),
            other => Err(Error::Config(format!("unknown ensemble kind `{other}`"))),
        }
    }

    /// Long-format CSV of every materialized measurement matrix:
    /// `measurement,row,col,re,im`.
    pub fn export_materialized_csv(&self, out: &mut dyn std::io::Write) -> Result<()> {
        writeln!(out, "measurement,row,col,re,im")?;
        for i in 0..self.m {
            let ai = self.materialize_row(i);
            for r in 0..self.n1 {
                for c in 0..self.n2 {
                    let z = ai.get(r, c);
                    writeln!(out, "{i},{r},{c},{:.17e},{:.17e}", z.re, z.im)?;
                }
            }
        }
        Ok(())
    }
}

fn bd_row_apply(p: &BlindDeconvPayload, l: usize, x: &DenseMatrix, row_off: usize, col_off: usize) -> C64 {
    // <b c^*, X> = b^* X c on the component's block.
    let b = &p.b_rows[l];
    let c = &p.c_rows[l];
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..p.k {
        let mut inner = C64::new(0.0, 0.0);
        for t in 0..p.n {
            inner += x.get(row_off + j, col_off + t) * c[t];
        }
        acc += b[j].conj() * inner;
    }
    acc
}

fn bd_row_adjoint(
    p: &BlindDeconvPayload,
    l: usize,
    coeff: C64,
    acc: &mut DenseMatrix,
    row_off: usize,
    col_off: usize,
) {
    let b = &p.b_rows[l];
    let c = &p.c_rows[l];
    for j in 0..p.k {
        let cj = coeff * b[j];
        for t in 0..p.n {
            let v = acc.get(row_off + j, col_off + t) + cj * c[t].conj();
            acc.set(row_off + j, col_off + t, v);
        }
    }
}
