//! Restricted almost-unbiased Liu estimation for logistic regression.

pub mod commands;
pub mod dataset;
pub mod dominance;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod model;
pub mod records;
pub mod risk;
pub mod simulation;
pub mod table;

pub use error::{Error, Result};
pub use estimators::{estimate, Estimate, EstimatorKind, EstimatorSpec, InfoSpectrum};
pub use linalg::{SymMatrix, Tolerance};
pub use model::{irls_fit, Dataset, FitOptions, FittedLogit, LinearRestriction};
pub use risk::{risk, RiskReport, RiskScenario};
