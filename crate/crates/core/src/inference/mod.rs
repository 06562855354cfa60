//! Rank transform, censored likelihood and fitting.

pub mod bootstrap;
pub mod data;
pub mod fit;
pub mod likelihood;
pub mod study;

pub use bootstrap::{block_bootstrap, BootstrapConfig, BootstrapResult};
pub use data::{rank_transform, Dataset, PseudoUniformData};
pub use fit::{aic, fit, fit_uniform, profile_loglik, FitOptions, FitResult, Interval, OptimConfig, ProfilePoint};
pub use likelihood::{censored_loglik, contributions, model_loglik, Case, CensorConfig, Contribution, LikelihoodConfig};
pub use study::{simulation_study, CellResult, Scenario, StudyConfig};
