//! Experiment configuration: a flat key-value file (TOML-compatible
//! subset) with per-kind semantics documented in the README.

use crate::error::{Error, Result};
use crate::kv::KvDoc;
use crate::solvers::SolverOptions;
use crate::util::fnv1a;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleChoice {
    Gaussian,
    Completion,
    BlindDeconv,
    PhaseRetrieval,
    Demixing,
}

impl EnsembleChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "completion" | "entry_sampling" => Ok(Self::Completion),
            "blind_deconv" => Ok(Self::BlindDeconv),
            "phase_retrieval" => Ok(Self::PhaseRetrieval),
            "demixing" => Ok(Self::Demixing),
            other => Err(Error::Config(format!("unknown ensemble `{other}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Completion => "completion",
            Self::BlindDeconv => "blind_deconv",
            Self::PhaseRetrieval => "phase_retrieval",
            Self::Demixing => "demixing",
        }
    }
}

/// How trial signals are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalModel {
    /// Haar singular vectors accepted only below the coherence target.
    Incoherent,
    /// Axis-aligned spike (the classic negative control).
    Spike,
}

impl SignalModel {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "incoherent" => Ok(Self::Incoherent),
            "spike" => Ok(Self::Spike),
            other => Err(Error::Config(format!("unknown signal model `{other}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Incoherent => "incoherent",
            Self::Spike => "spike",
        }
    }
}

/// Parsed experiment description. Sweep axes are lists; single trials use
/// one-element axes.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub ensemble: EnsembleChoice,
    pub signal: SignalModel,
    /// Ambient-dimension axis: `n1 = n2 = n` for matrix ensembles, the
    /// signal dimension for phase retrieval. Blind deconvolution and
    /// demixing fix `(k, n_signal)` instead and must not set this axis.
    pub n_axis: Vec<usize>,
    /// Rank axis for matrix ensembles; component count for demixing.
    pub rank_axis: Vec<usize>,
    /// Measurement-count axis (`L` for blind deconvolution and demixing).
    pub m_axis: Vec<usize>,
    pub tau_axis: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    /// Coherence acceptance target for incoherent anchors.
    pub coherence_target: f64,
    /// Noiseless success threshold (relative Frobenius error).
    pub success_threshold: f64,
    /// Subspace dimension `K` (blind deconvolution / demixing).
    pub k_dim: usize,
    /// Signal-side subspace dimension `N` (blind deconvolution / demixing).
    pub n_signal: usize,
    /// Phase-retrieval vector model.
    pub pr_model: String,
    /// Golfing legs for certification runs.
    pub q_legs: usize,
    pub solver: SolverOptions,
    /// Raw canonical text, hashed into output headers.
    pub canonical_text: String,
}

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let doc = KvDoc::parse(text)?;
        Self::from_doc(&doc)
    }

    pub fn from_doc(doc: &KvDoc) -> Result<Self> {
        for key in doc.keys() {
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::Config(format!("unknown config key `{key}`")));
            }
        }
        let ensemble = EnsembleChoice::parse(
            doc.get_str("ensemble")?.ok_or_else(|| Error::Config("missing `ensemble`".into()))?,
        )?;
        let signal = match doc.get_str("signal")? {
            Some(s) => SignalModel::parse(s)?,
            None => SignalModel::Incoherent,
        };
        let n_axis = doc.get_usize_list("n")?.unwrap_or_default();
        let rank_axis = doc.get_usize_list("r")?.unwrap_or_else(|| vec![1]);
        let m_axis = doc
            .get_usize_list("m")?
            .ok_or_else(|| Error::Config("missing measurement axis `m`".into()))?;
        let tau_axis = doc.get_f64_list("tau")?.unwrap_or_else(|| vec![0.0]);
        let trials = doc.get_usize("trials")?.unwrap_or(1);
        let master_seed = doc.get_u64("seed")?.unwrap_or(0);
        let coherence_target = doc.get_f64("coherence_target")?.unwrap_or(3.0);
        let success_threshold = doc.get_f64("success_threshold")?.unwrap_or(1e-3);
        let k_dim = doc.get_usize("k")?.unwrap_or(0);
        let n_signal = doc.get_usize("n_signal")?.unwrap_or(0);
        let pr_model = doc.get_str("model")?.unwrap_or("gaussian").to_string();
        let q_legs = doc.get_usize("q_legs")?.unwrap_or(3);

        let mut solver = SolverOptions::default();
        if let Some(v) = doc.get_usize("max_iters")? {
            solver.max_iters = v;
        }
        if let Some(v) = doc.get_f64("abs_tol")? {
            solver.abs_tol = v;
        }
        if let Some(v) = doc.get_f64("rel_tol")? {
            solver.rel_tol = v;
        }
        if let Some(v) = doc.get_f64("penalty")? {
            solver.penalty = v;
        }
        if let Some(v) = doc.get_bool("adaptive_balance")? {
            solver.adaptive_balance = v;
        }

        let needs_n = matches!(
            ensemble,
            EnsembleChoice::Gaussian | EnsembleChoice::Completion | EnsembleChoice::PhaseRetrieval
        );
        if needs_n && n_axis.is_empty() {
            return Err(Error::Config("this ensemble needs the `n` axis".into()));
        }
        if !needs_n && !n_axis.is_empty() {
            return Err(Error::Config(
                "blind deconvolution and demixing fix `k`/`n_signal`; drop the `n` axis".into(),
            ));
        }
        if !needs_n && (k_dim == 0 || n_signal == 0) {
            return Err(Error::Config("set `k` and `n_signal` for this ensemble".into()));
        }
        let axes: [(&str, bool); 4] = [
            ("n", needs_n && n_axis.is_empty()),
            ("r", rank_axis.is_empty()),
            ("m", m_axis.is_empty()),
            ("tau", tau_axis.is_empty()),
        ];
        for (name, empty) in axes {
            if empty {
                return Err(Error::Config(format!("axis `{name}` is empty")));
            }
        }
        if trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        solver.validate()?;

        let config = ExperimentConfig {
            ensemble,
            signal,
            n_axis,
            rank_axis,
            m_axis,
            tau_axis,
            trials,
            master_seed,
            coherence_target,
            success_threshold,
            k_dim,
            n_signal,
            pr_model,
            q_legs,
            solver,
            canonical_text: doc.to_text(),
        };
        Ok(config)
    }

    pub fn config_hash(&self) -> u64 {
        fnv1a(self.canonical_text.as_bytes())
    }

    /// Cartesian product of the sweep axes, in deterministic order.
    pub fn cells(&self) -> Vec<Cell> {
        let ns: &[usize] = if self.n_axis.is_empty() { &[0] } else { &self.n_axis };
        let mut out = Vec::new();
        let mut index = 0usize;
        for &n in ns {
            for &r in &self.rank_axis {
                for &m in &self.m_axis {
                    for &tau in &self.tau_axis {
                        out.push(Cell { index, n, rank: r, m, tau });
                        index += 1;
                    }
                }
            }
        }
        out
    }
}

const KNOWN_KEYS: &[&str] = &[
    "ensemble",
    "signal",
    "n",
    "r",
    "m",
    "tau",
    "trials",
    "seed",
    "coherence_target",
    "success_threshold",
    "k",
    "n_signal",
    "model",
    "q_legs",
    "max_iters",
    "abs_tol",
    "rel_tol",
    "penalty",
    "adaptive_balance",
    "estimator",
    "n_samples",
    "xi",
];

/// One sweep cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: usize,
    /// Ambient dimension (0 for the blind-deconvolution family).
    pub n: usize,
    pub rank: usize,
    pub m: usize,
    /// Noise-ball radius scaled in units of `||A(X0)||_2`; see the runner.
    pub tau: f64,
}

impl Cell {
    pub fn tau_bits(&self) -> u64 {
        self.tau.to_bits()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let c = ExperimentConfig::from_text(
            "ensemble = \"gaussian\"\nn = [10]\nm = [120]\ntrials = 5\nseed = 3\n",
        )
        .unwrap();
        assert_eq!(c.ensemble, EnsembleChoice::Gaussian);
        assert_eq!(c.cells().len(), 1);
        assert_eq!(c.trials, 5);
    }

    #[test]
    fn rejects_unknown_keys_and_empty_axes() {
        assert!(ExperimentConfig::from_text("ensemble = \"gaussian\"\nn = [10]\nm = [1]\nbogus = 1\n").is_err());
        assert!(ExperimentConfig::from_text("ensemble = \"gaussian\"\nm = [1]\n").is_err());
        assert!(ExperimentConfig::from_text("ensemble = \"gaussian\"\nn = [10]\nm = [1]\ntrials = 0\n").is_err());
    }

    #[test]
    fn blind_deconv_needs_subspace_dims() {
        assert!(ExperimentConfig::from_text("ensemble = \"blind_deconv\"\nm = [32]\n").is_err());
        let ok = ExperimentConfig::from_text(
            "ensemble = \"blind_deconv\"\nm = [32]\nk = 4\nn_signal = 4\n",
        )
        .unwrap();
        assert_eq!(ok.k_dim, 4);
        // The n axis clashes with k/n_signal.
        assert!(ExperimentConfig::from_text(
            "ensemble = \"blind_deconv\"\nm = [32]\nk = 4\nn_signal = 4\nn = [8]\n"
        )
        .is_err());
    }

    #[test]
    fn cell_grid_is_the_cartesian_product() {
        let c = ExperimentConfig::from_text(
            "ensemble = \"completion\"\nn = [8, 16]\nr = [1, 2]\nm = [10, 20, 30]\ntau = [0.0]\n",
        )
        .unwrap();
        let cells = c.cells();
        assert_eq!(cells.len(), 12);
        assert_eq!(cells[0].n, 8);
        assert_eq!(cells.last().unwrap().m, 30);
        assert!(cells.iter().enumerate().all(|(i, c)| c.index == i));
    }
}
