//! Experiment harness: configs, the trial runner, sweep drivers, and CSV
//! output. Everything written to disk is a pure function of the config
//! file (the wall-time column excepted).

mod config;
mod csvio;
mod estimate;
mod runner;
mod sweeps;

pub use config::{Cell, EnsembleChoice, ExperimentConfig, SignalModel};
pub use csvio::{fmt_bool, fmt_f64, CsvTable};
pub use estimate::run_estimate;
pub use runner::{run_certification_trial, run_trial, solver_trace_for, CertRecord, TrialRecord};
pub use sweeps::{
    certification_sweep, noise_sweep, phase_transition_sweep, run_all_certifications,
    run_all_trials, trial_table,
};

use crate::error::{Error, Result};
use crate::kv::KvDoc;
use crate::operators::{
    make_blind_deconv_ensemble, make_completion_ensemble, make_demixing_ensemble,
    make_gaussian_ensemble, make_phase_retrieval_ensemble, MeasurementOperator,
    PhaseRetrievalModel,
};

/// Builds a single ensemble straight from a flat config document (used by
/// the `estimate` and `certify` subcommands).
pub fn ensemble_from_doc(doc: &KvDoc) -> Result<MeasurementOperator> {
    let kind = doc.get_str("ensemble")?.ok_or_else(|| Error::Config("missing `ensemble`".into()))?;
    let seed = doc.get_u64("seed")?.unwrap_or(0);
    let need = |key: &str| -> Result<usize> {
        doc.get_usize(key)?.ok_or_else(|| Error::Config(format!("ensemble needs `{key}`")))
    };
    match EnsembleChoice::parse(kind)? {
        EnsembleChoice::Gaussian => {
            let n = need("n")?;
            make_gaussian_ensemble(n, n, need("m")?, seed)
        }
        EnsembleChoice::Completion => {
            let n = need("n")?;
            make_completion_ensemble(n, n, need("m")?, seed)
        }
        EnsembleChoice::BlindDeconv => {
            make_blind_deconv_ensemble(need("k")?, need("n_signal")?, need("m")?, seed)
        }
        EnsembleChoice::PhaseRetrieval => {
            let model = PhaseRetrievalModel::parse(doc.get_str("model")?.unwrap_or("gaussian"))?;
            make_phase_retrieval_ensemble(need("n")?, need("m")?, model, seed)
        }
        EnsembleChoice::Demixing => {
            make_demixing_ensemble(need("k")?, need("n_signal")?, need("m")?, need("r")?, seed)
        }
    }
}
