//! Probabilistic supervised learning.
//!
//! Predict full distributions from features, score them with proper losses,
//! build probabilistic predictors out of point predictors, and compare models
//! with paired tests on out-of-sample losses.

pub mod composite;
pub mod distributions;
mod error;
pub mod independence;
pub mod json;
pub mod learners;
pub mod losses;
pub mod meta;
pub mod validation;
pub mod numeric;
pub mod seeds;

pub use distributions::{Diffeomorphism, Distribution, KernelShape, Kind};
pub use error::{Error, Result};
pub use losses::Loss;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/distributions.md")]
    mod distributions {}
    #[doc = include_str!("../../../book/src/losses.md")]
    mod losses {}
    #[doc = include_str!("../../../book/src/composite.md")]
    mod composite {}
    #[doc = include_str!("../../../book/src/validation.md")]
    mod validation {}
    #[doc = include_str!("../../../book/src/meta.md")]
    mod meta {}
    #[doc = include_str!("../../../book/src/independence.md")]
    mod independence {}
}
