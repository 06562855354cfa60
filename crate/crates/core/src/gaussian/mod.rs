//! Gaussian building blocks: correlation models, dense covariance algebra,
//! densities and orthant probabilities.

pub mod bvn;
pub mod matrix;
pub mod mvn;
pub mod normal;
pub mod sites;

pub use bvn::{bvn_cdf, bvn_upper};
pub use matrix::{conditional_gaussian, mvn_pdf, CovarianceBlocks, GaussianConditional, MvnDensity};
pub use mvn::{mvn_cdf, mvn_cdf_with, MvnCdfEstimate, MvnConfig};
pub use sites::{build_correlation, mahalanobis_distance, CorrelationModel, SiteSet};
