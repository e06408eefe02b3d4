//! Score-matching estimators for Gaussian time-series panels.
//!
//! The dependence parameter λ of a stationary AR(1), MA(1) or ARFIMA(0,d,0)
//! process is estimated by minimizing the total Hyvärinen score (`HT`), the
//! Hyvärinen score of the Wishart sufficient statistic (`HW`), or, as
//! baselines, by maximum likelihood (`MLE`) and first-order pairwise
//! likelihood (`PL`). Standard errors come from the Godambe sandwich.

pub mod error;
pub mod estimation;
pub mod linalg;
pub mod models;
pub mod report;
pub mod scoring;
pub mod simulation;

pub use error::{Error, Result};
pub use estimation::{are, fit, fit_single_series, godambe_sd, EstimatorKind, FitOptions, FitResult, GodambeInfo};
pub use models::{CovarianceModel, Family, ModelSpec, Theta};
pub use scoring::SeriesPanel;
pub use simulation::{run_experiment, ExperimentConfig, ExperimentSummary};
