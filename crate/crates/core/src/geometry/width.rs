//! Monte Carlo Gaussian-width estimation over sampled matrix sets.
//!
//! The estimator averages, over standard Gaussian probes `A`, the largest
//! value of `Re<A, Z>` seen across sampled elements of the set plus the
//! set's closed-form best response to `A` when one is available. Every
//! candidate lies inside the set, so the output is a **lower bound** on the
//! population width `l(E) = E sup_{Z in E} <A, Z>` up to Monte Carlo noise.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::haar_isometry;
use crate::mat::{DenseMatrix, ScalarField};
use crate::rng::Stream;
use crate::util::mean_f64;

use super::cones::{descent_direction_test, sample_descent_direction};
use super::tangent::{SvdFactors, TangentProjector, TangentSpace};

/// A sampled subset of the Frobenius unit sphere.
pub trait MatrixSetSampler: Sync {
    fn shape(&self) -> (usize, usize);
    /// A random unit-Frobenius element of the set.
    fn sample(&self, rng: &mut Stream) -> Result<DenseMatrix>;
    /// The element best aligned with `a` when the set admits a closed-form
    /// (or certified) maximizer; must itself belong to the set.
    fn best_aligned(&self, a: &DenseMatrix, rng: &mut Stream) -> Option<DenseMatrix>;
    fn label(&self) -> &'static str;
}

/// The full Frobenius unit sphere.
pub struct SphereSampler {
    pub n1: usize,
    pub n2: usize,
}

impl MatrixSetSampler for SphereSampler {
    fn shape(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    fn sample(&self, rng: &mut Stream) -> Result<DenseMatrix> {
        let g = DenseMatrix::from_fn(self.n1, self.n2, ScalarField::Real, |_, _| {
            crate::mat::C64::new(rng.normal(), 0.0)
        });
        let n = g.frob_norm();
        Ok(g.scale_re(1.0 / n))
    }

    fn best_aligned(&self, a: &DenseMatrix, _rng: &mut Stream) -> Option<DenseMatrix> {
        let n = a.frob_norm();
        if n == 0.0 {
            return None;
        }
        Some(a.scale_re(1.0 / n))
    }

    fn label(&self) -> &'static str {
        "frobenius_sphere"
    }
}

/// A one-point set.
pub struct SingletonSampler {
    z0: DenseMatrix,
}

impl SingletonSampler {
    /// Normalizes the element to unit Frobenius norm.
    pub fn new(z0: DenseMatrix) -> Result<Self> {
        let n = z0.frob_norm();
        if n == 0.0 {
            return Err(Error::InvalidArgument("singleton set needs a nonzero element".into()));
        }
        Ok(Self { z0: z0.scale_re(1.0 / n) })
    }
}

impl MatrixSetSampler for SingletonSampler {
    fn shape(&self) -> (usize, usize) {
        self.z0.shape()
    }

    fn sample(&self, _rng: &mut Stream) -> Result<DenseMatrix> {
        Ok(self.z0.clone())
    }

    fn best_aligned(&self, _a: &DenseMatrix, _rng: &mut Stream) -> Option<DenseMatrix> {
        Some(self.z0.clone())
    }

    fn label(&self) -> &'static str {
        "singleton"
    }
}

/// Unit-sphere slice of nuclear-norm descent cones: either a single fixed
/// anchor, or the union over rank-r anchors with Haar-random singular
/// subspaces (a sampled stand-in for the set E_r).
pub struct DescentConeSampler {
    n1: usize,
    n2: usize,
    rank: usize,
    field: ScalarField,
    fixed_anchor: Option<SvdFactors>,
    /// Anchors tried per best-response query.
    pub anchor_candidates: usize,
}

impl DescentConeSampler {
    pub fn fixed(anchor: SvdFactors) -> Self {
        Self {
            n1: anchor.n1(),
            n2: anchor.n2(),
            rank: anchor.rank(),
            field: anchor.u().field().join(anchor.v().field()),
            fixed_anchor: Some(anchor),
            anchor_candidates: 4,
        }
    }

    pub fn union_over_anchors(n1: usize, n2: usize, rank: usize, field: ScalarField) -> Self {
        Self { n1, n2, rank, field, fixed_anchor: None, anchor_candidates: 4 }
    }

    fn draw_anchor(&self, rng: &mut Stream) -> Result<SvdFactors> {
        match &self.fixed_anchor {
            Some(a) => Ok(a.clone()),
            None => {
                let u = haar_isometry(self.n1, self.rank, self.field, rng);
                let v = haar_isometry(self.n2, self.rank, self.field, rng);
                SvdFactors::new(u, vec![1.0; self.rank], v)
            }
        }
    }

    /// Pushes `a` into the cone at `anchor`: keep the tangent part, shrink
    /// the off-tangent part to 95% of the descent budget. `None` when the
    /// budget is nonpositive.
    fn project_into_cone(&self, anchor: &SvdFactors, a: &DenseMatrix) -> Option<DenseMatrix> {
        let t = TangentSpace::new(anchor.clone());
        let a_t = t.project(a).ok()?;
        let a_perp = a.sub(&a_t);
        let budget = -anchor.uv_star().frob_inner(&a_t).re;
        if budget <= 0.0 {
            return None;
        }
        let perp_nuc = crate::linalg::nuclear_norm(&a_perp);
        let shrink = if perp_nuc > 0.0 { (0.95 * budget / perp_nuc).min(1.0) } else { 1.0 };
        let z = a_t.add(&a_perp.scale_re(shrink));
        let n = z.frob_norm();
        if n <= 1e-12 {
            return None;
        }
        let z = z.scale_re(1.0 / n);
        match descent_direction_test(anchor, &z) {
            Ok((true, _)) => Some(z),
            _ => None,
        }
    }
}

impl MatrixSetSampler for DescentConeSampler {
    fn shape(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    fn sample(&self, rng: &mut Stream) -> Result<DenseMatrix> {
        let anchor = self.draw_anchor(rng)?;
        Ok(sample_descent_direction(&anchor, rng)?.direction)
    }

    fn best_aligned(&self, a: &DenseMatrix, rng: &mut Stream) -> Option<DenseMatrix> {
        let mut best: Option<(f64, DenseMatrix)> = None;
        for _ in 0..self.anchor_candidates.max(1) {
            let anchor = self.draw_anchor(rng).ok()?;
            if let Some(z) = self.project_into_cone(&anchor, a) {
                let v = a.frob_inner(&z).re;
                if best.as_ref().map_or(true, |(bv, _)| v > *bv) {
                    best = Some((v, z));
                }
            }
        }
        best.map(|(_, z)| z)
    }

    fn label(&self) -> &'static str {
        "descent_cone"
    }
}

/// Monte Carlo lower estimate of the Gaussian width of the sampled set.
pub fn gaussian_width_estimate(
    sampler: &dyn MatrixSetSampler,
    n_outer: usize,
    n_inner: usize,
    rng: &mut Stream,
) -> Result<f64> {
    if n_outer == 0 || n_inner == 0 {
        return Err(Error::InvalidArgument("need n_outer, n_inner >= 1".into()));
    }
    let (n1, n2) = sampler.shape();
    // Per-sample derived streams: results are independent of execution
    // order, so the loop parallelizes and reduces by pairwise mean.
    let base = rng.child(0x5749445448);
    let vals: Result<Vec<f64>> = (0..n_outer)
        .into_par_iter()
        .map(|i| {
            let mut local = base.child(i as u64);
            let a = DenseMatrix::from_fn(n1, n2, ScalarField::Real, |_, _| {
                crate::mat::C64::new(local.normal(), 0.0)
            });
            let mut best = f64::NEG_INFINITY;
            if let Some(z) = sampler.best_aligned(&a, &mut local) {
                best = best.max(a.frob_inner(&z).re);
            }
            for _ in 0..n_inner {
                let z = sampler.sample(&mut local)?;
                best = best.max(a.frob_inner(&z).re);
            }
            Ok(best)
        })
        .collect();
    Ok(mean_f64(&vals?))
}
