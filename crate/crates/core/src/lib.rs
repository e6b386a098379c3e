//! Variable-wise quantile classification.
//!
//! A supervised classifier that scores an observation against each class
//! by summing per-variable quantile discrepancies, with a separate
//! quantile level and scale weight per variable estimated by alternating
//! closed-form updates. The crate also ships the quantile-family
//! baselines it generalises (median, centroid, single-theta quantile
//! classifier), deterministic synthetic-scenario generators, and a
//! cross-validation / benchmark harness.

pub mod baselines;
pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod quantile;
pub mod seed;
pub mod simgen;
pub mod vwqc;

pub use data::{load_csv, CsvOptions, Dataset, LabelColumn};
pub use error::{Error, Result};
pub use eval::{
    cross_validate, misclassification_rate, relative_performance, run_benchmark, BenchmarkRecord,
    ClassifierSpec, CvSpec, FittedClassifier,
};
pub use model::{load_model, save_model, QuantileModel};
pub use quantile::{empirical_quantile, phi, variability, DiscrepancyParams};
pub use simgen::{build_covariance, generate, ScenarioKind, ScenarioSpec};
pub use vwqc::{decision_scores, fit, fit_detailed, predict, FitConfig, FitReport};
