//! Maximum-likelihood temperature estimation for token sequences.
//!
//! Given the per-step logits a next-token model assigns to a text, the
//! temperature that makes the text most likely is the one at which the sum
//! of expected logits equals the sum of observed logits. [`estimation`]
//! holds the numerical kernels, [`solver`] the bracketed root solve,
//! [`textgen`] seeded synthetic models for controlled experiments,
//! [`experiments`] sweeps and cross-model grids, and [`storage`] the file
//! formats.

pub mod estimation;
pub mod experiments;
pub mod rng;
pub mod solver;
pub mod storage;
pub mod textgen;

pub use estimation::{
    expected_logit, log_likelihood, residual, step_variance, tempered_softmax, InputError, LogitSequence, Temperature,
    TokenSequence,
};
pub use experiments::{
    corpus_stats, cross_grid, mae, pearson, r2, run_sweep, CorpusStats, CrossGridResult, ExperimentError, SweepConfig,
    SweepResult, TemperatureGrid,
};
pub use solver::{
    estimate_temperature, find_root, EstimateStatus, RootError, RootMethod, SolveError, SolverConfig,
    TemperatureEstimate,
};
pub use storage::{ResultTable, Schema, StorageError};
pub use textgen::{
    generate_text, sample_token, score_text, GeneratedText, GenerationConfig, ModelError, SyntheticModel,
    SyntheticModelSpec,
};
