//! Comparator, regret, regret bounds, experiment configuration and the trial
//! runner.

pub mod bounds;
pub mod comparator;
pub mod config;
pub mod csv;
pub mod trials;

pub use bounds::{
    certified_bound, certified_terms, classical_bound, evaluate, lemma1_bound, lemma_exceedances, regret,
    sqrt_t_envelope, BoundTerms, RegretReport,
};
pub use comparator::{minimize, solve_comparator, total_loss, Comparator, ComparatorOptions, MAPPING_TOLERANCE};
pub use config::{Experiment, ExperimentConfig, GeometryConfig, RuntimeConfig, ScheduleConfig};
pub use trials::{
    check_memory, gradcheck, play, run_one, run_summary, run_trials, trials_summary, write_atomic, Aggregate,
    GradcheckReport, TrialResult, TrialsReport,
};
