//! Datasets, estimator contracts and point learners.

mod dataset;
mod params;
mod point;
pub(crate) mod prob;
mod tuning;

pub use dataset::Dataset;
pub use params::{Grid, ParamMap, ParamValue};
pub use point::{ConstantSpec, FittedPoint, Functional, PointContext, PointLearner, ResidualTransform};
pub use prob::{
    CapReference, DensityAdaptor, ElicitedShape, FittedProb, PredictedBatch, ProbEstimator, Shape,
};
pub(crate) use tuning::complement;
pub use tuning::{grid_search, grid_search_point, kfold_indices, TuningReport};

/// Divisor used for standard deviations of labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StdDenominator {
    /// Population form, dividing by `N`.
    #[default]
    N,
    /// Sample form, dividing by `N − 1`.
    NMinusOne,
}

impl StdDenominator {
    pub fn ddof(self) -> usize {
        match self {
            StdDenominator::N => 0,
            StdDenominator::NMinusOne => 1,
        }
    }
}

/// Settings shared by every fit call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub seed: u64,
    pub std_denominator: StdDenominator,
    /// Inner folds used by tuning.
    pub inner_folds: usize,
}

impl FitOptions {
    pub fn new(seed: u64) -> Self {
        FitOptions { seed, std_denominator: StdDenominator::N, inner_folds: 5 }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        FitOptions { seed, ..*self }
    }
}

impl Default for FitOptions {
    fn default() -> Self {
        Self::new(0)
    }
}

/// Smallest dispersion handed to a distribution constructor.
pub const TINY: f64 = 1e-12;
