//! Ensembles, boosting, and residual diagnostics of predicted distributions.

mod bagging;
mod boosting;
mod residuals;

pub(crate) use bagging::{fit_bagged, predict_bagged};
pub(crate) use boosting::{fit_gentle, fit_greedy};
pub use boosting::{unit_weak_learner, FittedGentle, FittedGreedy, GENTLE_LINE_SEARCH_STEPS};
pub use residuals::{
    diagnostics, diagnostics_csv, loss_residuals, probability_residuals, DiagnosticRow, DIAGNOSTIC_QUANTILES,
};
