//! Adaptors and composition strategies that turn point learners and samples
//! into probabilistic predictors.
//!
//! The strategies themselves are variants of
//! [`ProbEstimator`](crate::learners::ProbEstimator) and
//! [`PointLearner`](crate::learners::PointLearner): parametric composites,
//! residual and minimum-bounded dispersion learners, elicitation composites,
//! the classical point-plus-residual-density baseline and the capping mixture.
//! This module holds the sample adaptors they are built from.

mod adaptors;
mod point_adaptor;

pub use adaptors::{
    convolution_adaptor, histogram_adaptor, kernel_density_adaptor, silverman_bandwidth, sturges_edges,
    FALLBACK_BANDWIDTH,
};
pub use point_adaptor::{elicit, point_adaptor, PointMode};
