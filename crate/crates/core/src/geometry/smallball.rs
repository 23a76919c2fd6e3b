//! Sampled surrogates for the small-ball quantities `Q_xi` and `W_m`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mat::DenseMatrix;
use crate::rng::Stream;
use crate::util::mean_f64;

use super::width::MatrixSetSampler;

/// Sampled small-ball estimates. Both quantities are one-sided Monte Carlo
/// surrogates: `q_xi` minimizes an empirical tail probability over sampled
/// set elements (an upper bound on the population infimum in expectation),
/// and `w_m` is a sampled lower estimate of the empirical width.
#[derive(Debug, Clone)]
pub struct SmallBallEstimates {
    pub q_xi: f64,
    pub w_m: f64,
    pub xi: f64,
    pub n_samples: usize,
}

/// Estimates `Q_xi(E; A) = inf_Y Pr[|<A, Y>| >= xi]` and
/// `W_m(E; A) = E sup_Y <Y, H>` with `H = m^{-1/2} sum_i eps_i A_i`,
/// over the sampled set `E` and the measurement-matrix distribution drawn
/// by `op_sampler`. Every draw runs on its own derived stream and the
/// reductions (candidate minimum, pairwise mean) are order-independent, so
/// the sampling loops parallelize.
pub fn small_ball_estimates(
    op_sampler: &(dyn Fn(&mut Stream) -> DenseMatrix + Sync),
    cone_sampler: &dyn MatrixSetSampler,
    xi: f64,
    m: usize,
    n_samples: usize,
    rng: &mut Stream,
) -> Result<SmallBallEstimates> {
    if xi <= 0.0 {
        return Err(Error::InvalidArgument("need xi > 0".into()));
    }
    if m == 0 || n_samples == 0 {
        return Err(Error::InvalidArgument("need m, n_samples >= 1".into()));
    }
    let base = rng.child(0x534d414c4c);

    // Candidate set elements; the infimum and supremum are taken over
    // these throughout.
    let n_y = (n_samples / 16).clamp(1, 32);
    let cand_base = base.child(1);
    let mut candidates = Vec::with_capacity(n_y);
    for i in 0..n_y {
        let mut local = cand_base.child(i as u64);
        candidates.push(cone_sampler.sample(&mut local)?);
    }

    // Marginal tail: empirical Pr[|<A, Y>| >= xi] per candidate, minimized.
    // One measurement-matrix draw per (candidate, sample) pair, each on
    // its own stream.
    let tail_base = base.child(2);
    let q_best = candidates
        .iter()
        .enumerate()
        .map(|(ci, y)| {
            let y_base = tail_base.child(ci as u64);
            let hits: usize = (0..n_samples)
                .into_par_iter()
                .map(|i| {
                    let mut local = y_base.child(i as u64);
                    let a = op_sampler(&mut local);
                    usize::from(a.frob_inner(y).norm() >= xi)
                })
                .sum();
            hits as f64 / n_samples as f64
        })
        .fold(1.0f64, f64::min);

    // Empirical width: Rademacher-signed sums of fresh ensembles.
    let n_rep = (n_samples / m).clamp(8, 256);
    let rep_base = base.child(3);
    let vals: Vec<f64> = (0..n_rep)
        .into_par_iter()
        .map(|rep| {
            let mut local = rep_base.child(rep as u64);
            let mut h: Option<DenseMatrix> = None;
            for _ in 0..m {
                let a = op_sampler(&mut local);
                let signed = a.scale_re(local.rademacher());
                h = Some(match h {
                    None => signed,
                    Some(acc) => acc.add(&signed),
                });
            }
            let h = h.unwrap().scale_re(1.0 / (m as f64).sqrt());
            let mut best = f64::NEG_INFINITY;
            if let Some(z) = cone_sampler.best_aligned(&h, &mut local) {
                best = best.max(h.frob_inner(&z).re);
            }
            for y in &candidates {
                best = best.max(h.frob_inner(y).re);
            }
            best
        })
        .collect();

    Ok(SmallBallEstimates { q_xi: q_best, w_m: mean_f64(&vals), xi, n_samples })
}
