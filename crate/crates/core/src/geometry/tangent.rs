//! SVD factors, tangent spaces of the rank-r variety, and coherence.

use crate::error::{Error, Result};
use crate::linalg;
use crate::mat::{DenseMatrix, ScalarField, C64};

const ISOMETRY_TOL: f64 = 1e-10;
/// Compact-SVD truncation: singular values at or below this relative cut
/// count as zero when a rank is decided.
pub const RANK_CUT: f64 = 1e-12;

/// Compact SVD factors `X = U diag(sigma) V^*` of a rank-r matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    u: DenseMatrix,
    sigma: Vec<f64>,
    v: DenseMatrix,
}

impl SvdFactors {
    pub fn new(u: DenseMatrix, sigma: Vec<f64>, v: DenseMatrix) -> Result<Self> {
        let r = sigma.len();
        if u.cols() != r || v.cols() != r {
            return Err(Error::ShapeMismatch("factor width disagrees with sigma length".into()));
        }
        if r > u.rows().min(v.rows()) {
            return Err(Error::InvalidArgument("rank exceeds min(n1, n2)".into()));
        }
        for w in sigma.windows(2) {
            if w[0] < w[1] {
                return Err(Error::InvalidArgument("sigma must be non-increasing".into()));
            }
        }
        if sigma.iter().any(|&s| s < 0.0) {
            return Err(Error::InvalidArgument("sigma must be nonnegative".into()));
        }
        for (name, f) in [("U", &u), ("V", &v)] {
            let gram = f.conj_transpose().matmul(f);
            let dev = gram.sub(&DenseMatrix::identity(r, ScalarField::Complex)).max_abs();
            if dev > ISOMETRY_TOL {
                return Err(Error::InvalidArgument(format!("{name} is not an isometry (deviation {dev:.3e})")));
            }
        }
        Ok(Self { u, sigma, v })
    }

    /// Factors of `x`, truncated at `sigma > RANK_CUT * sigma_max`.
    pub fn from_matrix(x: &DenseMatrix) -> Result<Self> {
        let f = linalg::svd(x);
        let smax = f.sigma.first().copied().unwrap_or(0.0);
        let r = f.sigma.iter().filter(|&&s| s > RANK_CUT * smax).count();
        let mut u = DenseMatrix::zeros(x.rows(), r, ScalarField::Complex);
        let mut v = DenseMatrix::zeros(x.cols(), r, ScalarField::Complex);
        for k in 0..r {
            for i in 0..x.rows() {
                u.set(i, k, f.u.get(i, k));
            }
            for j in 0..x.cols() {
                v.set(j, k, f.v.get(j, k));
            }
        }
        SvdFactors::new(u, f.sigma[..r].to_vec(), v)
    }

    /// Rank-one factors from an outer product `h m^*`.
    pub fn from_outer(h: &[C64], m: &[C64]) -> Result<Self> {
        Self::from_matrix(&DenseMatrix::outer(h, m))
    }

    pub fn u(&self) -> &DenseMatrix {
        &self.u
    }

    pub fn v(&self) -> &DenseMatrix {
        &self.v
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn n1(&self) -> usize {
        self.u.rows()
    }

    pub fn n2(&self) -> usize {
        self.v.rows()
    }

    /// `U diag(sigma) V^*`.
    pub fn to_matrix(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n1(), self.n2(), ScalarField::Complex);
        for k in 0..self.rank() {
            for i in 0..self.n1() {
                let c = self.u.get(i, k) * self.sigma[k];
                for j in 0..self.n2() {
                    let v = out.get(i, j) + c * self.v.get(j, k).conj();
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// The sign matrix `U V^*` (the ideal dual certificate on the tangent
    /// space).
    pub fn uv_star(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n1(), self.n2(), ScalarField::Complex);
        for k in 0..self.rank() {
            for i in 0..self.n1() {
                let c = self.u.get(i, k);
                for j in 0..self.n2() {
                    let v = out.get(i, j) + c * self.v.get(j, k).conj();
                    out.set(i, j, v);
                }
            }
        }
        out
    }
}

/// Common surface of [`TangentSpace`] and [`BlockTangentSpace`]: the
/// orthogonal projection onto the tangent subspace and an orthonormal basis
/// for dense restricted-isometry work.
pub trait TangentProjector: Sync {
    fn shape(&self) -> (usize, usize);
    fn dim(&self) -> usize;
    fn project(&self, z: &DenseMatrix) -> Result<DenseMatrix>;
    fn project_complement(&self, z: &DenseMatrix) -> Result<DenseMatrix>;
    fn orthonormal_basis(&self) -> Vec<DenseMatrix>;
    /// `U V^*` for a plain tangent space; the block-diagonal sum of the
    /// per-block sign matrices for a block tangent space.
    fn ideal_certificate(&self) -> DenseMatrix;
}

/// Tangent space `T_X = { U A^* + B V^* }` of the rank-r variety at
/// `X = U Sigma V^*`, carried as the pair of projectors `P = U U^*`,
/// `Q = V V^*`.
#[derive(Debug, Clone)]
pub struct TangentSpace {
    factors: SvdFactors,
    p: DenseMatrix,
    q: DenseMatrix,
}

impl TangentSpace {
    pub fn new(factors: SvdFactors) -> Self {
        let p = factors.u().matmul(&factors.u().conj_transpose());
        let q = factors.v().matmul(&factors.v().conj_transpose());
        TangentSpace { factors, p, q }
    }

    pub fn factors(&self) -> &SvdFactors {
        &self.factors
    }

    pub fn projector_p(&self) -> &DenseMatrix {
        &self.p
    }

    pub fn projector_q(&self) -> &DenseMatrix {
        &self.q
    }

    fn check_shape(&self, z: &DenseMatrix) -> Result<()> {
        if z.shape() != self.shape() {
            return Err(Error::ShapeMismatch(format!(
                "tangent projection expects {}x{}, got {}x{}",
                self.shape().0,
                self.shape().1,
                z.rows(),
                z.cols()
            )));
        }
        Ok(())
    }
}

impl TangentProjector for TangentSpace {
    fn shape(&self) -> (usize, usize) {
        (self.factors.n1(), self.factors.n2())
    }

    fn dim(&self) -> usize {
        let r = self.factors.rank();
        r * (self.factors.n1() + self.factors.n2() - r)
    }

    /// `P Z + Z Q - P Z Q`.
    fn project(&self, z: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_shape(z)?;
        let pz = self.p.matmul(z);
        let zq = z.matmul(&self.q);
        let pzq = self.p.matmul(&zq);
        Ok(pz.add(&zq).sub(&pzq))
    }

    /// `P^perp Z Q^perp`, computed as `Z - P_T(Z)` so that the tangent and
    /// complement parts sum to `Z` exactly.
    fn project_complement(&self, z: &DenseMatrix) -> Result<DenseMatrix> {
        Ok(z.sub(&self.project(z)?))
    }

    fn orthonormal_basis(&self) -> Vec<DenseMatrix> {
        let (n1, n2) = self.shape();
        let r = self.factors.rank();
        let u_perp = orthonormal_complement(self.factors.u(), n1);
        let v_perp = orthonormal_complement(self.factors.v(), n2);
        let mut basis = Vec::with_capacity(self.dim());
        // u_i v_j^* for all pairs, u_i w_j^* and p_i v_j^* for the mixed blocks.
        for i in 0..r {
            let ui = self.factors.u().col(i);
            for j in 0..r {
                basis.push(DenseMatrix::outer(&ui, &self.factors.v().col(j)));
            }
            for j in 0..(n2 - r) {
                basis.push(DenseMatrix::outer(&ui, &v_perp.col(j)));
            }
        }
        for i in 0..(n1 - r) {
            let pi = u_perp.col(i);
            for j in 0..r {
                basis.push(DenseMatrix::outer(&pi, &self.factors.v().col(j)));
            }
        }
        basis
    }

    fn ideal_certificate(&self) -> DenseMatrix {
        self.factors.uv_star()
    }
}

/// Deterministic orthonormal basis of the orthogonal complement of
/// `range(u)` inside C^n: standard basis vectors orthogonalized against the
/// accepted set, with one re-orthogonalization pass.
fn orthonormal_complement(u: &DenseMatrix, n: usize) -> DenseMatrix {
    let r = u.cols();
    let want = n - r;
    let mut accepted: Vec<Vec<C64>> = Vec::with_capacity(want);
    for j in 0..n {
        if accepted.len() == want {
            break;
        }
        let mut w: Vec<C64> = (0..n).map(|i| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).collect();
        for _pass in 0..2 {
            for k in 0..r {
                let col = u.col(k);
                let dot: C64 = col.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum();
                for (wi, ci) in w.iter_mut().zip(col.iter()) {
                    *wi -= dot * ci;
                }
            }
            for acc in &accepted {
                let dot: C64 = acc.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum();
                for (wi, ai) in w.iter_mut().zip(acc.iter()) {
                    *wi -= dot * ai;
                }
            }
        }
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            for wi in w.iter_mut() {
                *wi /= norm;
            }
            accepted.push(w);
        }
    }
    assert_eq!(accepted.len(), want, "complement basis construction fell short");
    let mut out = DenseMatrix::zeros(n, want, ScalarField::Complex);
    for (j, w) in accepted.iter().enumerate() {
        for i in 0..n {
            out.set(i, j, w[i]);
        }
    }
    out
}

/// Coherence of an isometry: `mu(W) = sqrt(n/r) max_i ||W^* e_i||_2`,
/// always in `[1, sqrt(n/r)]`.
pub fn coherence(w: &DenseMatrix) -> Result<f64> {
    let n = w.rows();
    let r = w.cols();
    if r == 0 || n < r {
        return Err(Error::InvalidArgument("coherence needs a tall nonempty isometry".into()));
    }
    let gram = w.conj_transpose().matmul(w);
    let dev = gram.sub(&DenseMatrix::identity(r, ScalarField::Complex)).max_abs();
    if dev > 1e-8 {
        return Err(Error::InvalidArgument(format!("coherence input is not an isometry (deviation {dev:.3e})")));
    }
    let max_row = (0..n)
        .map(|i| w.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>())
        .fold(0.0, f64::max);
    Ok((n as f64 / r as f64).sqrt() * max_row.sqrt())
}

/// Block tangent space for demixing: per-block tangent spaces of the
/// diagonal blocks, extended by zero off the block diagonal.
#[derive(Debug, Clone)]
pub struct BlockTangentSpace {
    blocks: Vec<TangentSpace>,
    bk: usize,
    bn: usize,
}

impl BlockTangentSpace {
    pub fn new(anchors: Vec<SvdFactors>) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::InvalidArgument("block tangent space needs at least one block".into()));
        }
        let bk = anchors[0].n1();
        let bn = anchors[0].n2();
        if anchors.iter().any(|a| a.n1() != bk || a.n2() != bn) {
            return Err(Error::ShapeMismatch("demixing blocks must share a shape".into()));
        }
        Ok(Self { blocks: anchors.into_iter().map(TangentSpace::new).collect(), bk, bn })
    }

    pub fn blocks(&self) -> &[TangentSpace] {
        &self.blocks
    }

    fn check_shape(&self, z: &DenseMatrix) -> Result<()> {
        if z.shape() != self.shape() {
            return Err(Error::ShapeMismatch("block tangent projection shape mismatch".into()));
        }
        Ok(())
    }
}

impl TangentProjector for BlockTangentSpace {
    fn shape(&self) -> (usize, usize) {
        (self.blocks.len() * self.bk, self.blocks.len() * self.bn)
    }

    fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum()
    }

    fn project(&self, z: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_shape(z)?;
        let parts: Result<Vec<DenseMatrix>> = self
            .blocks
            .iter()
            .enumerate()
            .map(|(i, t)| t.project(&z.diag_block(i, self.bk, self.bn)))
            .collect();
        Ok(DenseMatrix::block_diag(&parts?))
    }

    fn project_complement(&self, z: &DenseMatrix) -> Result<DenseMatrix> {
        Ok(z.sub(&self.project(z)?))
    }

    fn orthonormal_basis(&self) -> Vec<DenseMatrix> {
        let r = self.blocks.len();
        let mut out = Vec::with_capacity(self.dim());
        for (i, t) in self.blocks.iter().enumerate() {
            for b in t.orthonormal_basis() {
                let mut blocks: Vec<DenseMatrix> =
                    (0..r).map(|_| DenseMatrix::zeros(self.bk, self.bn, ScalarField::Complex)).collect();
                blocks[i] = b;
                out.push(DenseMatrix::block_diag(&blocks));
            }
        }
        out
    }

    fn ideal_certificate(&self) -> DenseMatrix {
        let parts: Vec<DenseMatrix> = self.blocks.iter().map(|t| t.factors().uv_star()).collect();
        DenseMatrix::block_diag(&parts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::haar_isometry;
    use crate::rng::Stream;

    fn rank_r_anchor(n1: usize, n2: usize, r: usize, rng: &mut Stream) -> SvdFactors {
        let u = haar_isometry(n1, r, ScalarField::Complex, rng);
        let v = haar_isometry(n2, r, ScalarField::Complex, rng);
        let sigma: Vec<f64> = (0..r).map(|i| 1.5 - 0.2 * i as f64).collect();
        SvdFactors::new(u, sigma, v).unwrap()
    }

    #[test]
    fn factors_validate_isometry() {
        let u = DenseMatrix::from_real(2, 1, &[1.0, 1.0]).unwrap(); // not unit norm
        let v = DenseMatrix::from_real(2, 1, &[1.0, 0.0]).unwrap();
        assert!(SvdFactors::new(u, vec![1.0], v).is_err());
    }

    #[test]
    fn factors_validate_sigma_order() {
        let u = DenseMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let v = u.clone();
        assert!(SvdFactors::new(u.clone(), vec![1.0, 2.0], v.clone()).is_err());
        assert!(SvdFactors::new(u, vec![2.0, 1.0], v).is_ok());
    }

    #[test]
    fn projection_is_idempotent_and_decomposes() {
        let mut rng = Stream::new(21);
        let t = TangentSpace::new(rank_r_anchor(5, 4, 2, &mut rng));
        let z = DenseMatrix::from_fn(5, 4, ScalarField::Complex, |_, _| rng.complex_normal());
        let zt = t.project(&z).unwrap();
        let zp = t.project_complement(&z).unwrap();
        assert!(zt.add(&zp).sub(&z).max_abs() < 1e-12);
        assert!(t.project(&zt).unwrap().sub(&zt).max_abs() < 1e-10);
        assert!(t.project_complement(&zp).unwrap().sub(&zp).max_abs() < 1e-10);
        // Contractions in Frobenius norm.
        assert!(zt.frob_norm() <= z.frob_norm() + 1e-12);
        assert!(zp.frob_norm() <= z.frob_norm() + 1e-12);
    }

    #[test]
    fn anchor_projects_to_itself() {
        let mut rng = Stream::new(22);
        let f = rank_r_anchor(4, 4, 1, &mut rng);
        let x = f.to_matrix();
        let t = TangentSpace::new(f);
        assert!(t.project(&x).unwrap().sub(&x).max_abs() < 1e-12);
        assert!(t.project_complement(&x).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn axis_aligned_spike_example() {
        // X = e1 e1^T in 2x2: tangent part of e2 e2^T is zero.
        let x = DenseMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let t = TangentSpace::new(SvdFactors::from_matrix(&x).unwrap());
        let z = DenseMatrix::from_real(2, 2, &[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(t.project(&z).unwrap().max_abs() < 1e-14);
        assert!(t.project_complement(&z).unwrap().sub(&z).max_abs() < 1e-14);
    }

    #[test]
    fn basis_is_orthonormal_and_spans() {
        let mut rng = Stream::new(23);
        let t = TangentSpace::new(rank_r_anchor(5, 3, 2, &mut rng));
        let basis = t.orthonormal_basis();
        assert_eq!(basis.len(), t.dim());
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let g = a.frob_inner(b);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g - C64::new(expect, 0.0)).norm() < 1e-10, "gram[{i}][{j}] = {g}");
            }
        }
        // Every basis element is tangent; projecting a random Z onto the
        // basis reproduces the tangent projection.
        let z = DenseMatrix::from_fn(5, 3, ScalarField::Complex, |_, _| rng.complex_normal());
        let zt = t.project(&z).unwrap();
        let mut recon = DenseMatrix::zeros(5, 3, ScalarField::Complex);
        for b in &basis {
            recon.axpy(b.frob_inner(&z), b);
        }
        assert!(recon.sub(&zt).max_abs() < 1e-10);
    }

    #[test]
    fn coherence_examples() {
        // Spike: mu = sqrt(n).
        let spike = DenseMatrix::from_real(4, 1, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((coherence(&spike).unwrap() - 2.0).abs() < 1e-12);
        // Flat vector: mu = 1.
        let flat = DenseMatrix::from_real(4, 1, &[0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!((coherence(&flat).unwrap() - 1.0).abs() < 1e-12);
        // Non-isometry rejected.
        let bad = DenseMatrix::from_real(4, 1, &[1.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(coherence(&bad).is_err());
    }

    #[test]
    fn coherence_in_range_and_unitary_invariant() {
        let mut rng = Stream::new(31);
        for _ in 0..20 {
            let w = haar_isometry(6, 2, ScalarField::Complex, &mut rng);
            let mu = coherence(&w).unwrap();
            assert!(mu >= 1.0 - 1e-10 && mu <= (6.0f64 / 2.0).sqrt() + 1e-10);
            let rot = haar_isometry(2, 2, ScalarField::Complex, &mut rng);
            let mu2 = coherence(&w.matmul(&rot)).unwrap();
            assert!((mu - mu2).abs() < 1e-9);
        }
    }

    #[test]
    fn block_tangent_acts_blockwise() {
        let mut rng = Stream::new(33);
        let a0 = rank_r_anchor(3, 2, 1, &mut rng);
        let a1 = rank_r_anchor(3, 2, 1, &mut rng);
        let bt = BlockTangentSpace::new(vec![a0.clone(), a1.clone()]).unwrap();
        assert_eq!(bt.dim(), TangentSpace::new(a0.clone()).dim() + TangentSpace::new(a1.clone()).dim());
        let z = DenseMatrix::from_fn(6, 4, ScalarField::Complex, |_, _| rng.complex_normal());
        let zt = bt.project(&z).unwrap();
        let t0 = TangentSpace::new(a0);
        let blk0 = t0.project(&z.diag_block(0, 3, 2)).unwrap();
        assert!(zt.diag_block(0, 3, 2).sub(&blk0).max_abs() < 1e-12);
        // Off-diagonal blocks of the projection vanish.
        assert!(zt.get(0, 2).norm() < 1e-14);
    }
}
