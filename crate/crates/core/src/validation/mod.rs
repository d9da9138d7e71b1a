//! Out-of-sample loss estimation, cross-validation, paired model comparison,
//! result tables and information-theoretic probes.
//!
//! A single train/test split estimates the expected loss conditional on the
//! training set; averaging over cross-validation folds targets the expected
//! loss over training sets of the fold size.

mod cv;
mod probes;
mod stats;
mod table;

pub use crate::learners::kfold_indices;
pub use cv::{cross_validate, kfold_cv, kfold_cv_losses, Aggregation, CvOutcome};
pub use probes::{bias_variance_probe, entropy_estimates, BiasVarianceReport, EntropyEstimates, TruthOracle};
pub use stats::{
    average_ranks, paired_t_test, student_t_upper, wilcoxon_signed_rank, Alternative, ComparisonResult, TestKind,
    EXACT_WILCOXON_MAX_N,
};
pub use table::{format_sig4, ResultCell, ResultTable};

use crate::learners::PredictedBatch;
use crate::numeric::mean;
use crate::{Error, Loss, Result};

/// Per-point out-of-sample losses with their mean and standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSample {
    pub losses: Vec<f64>,
    pub mean: f64,
    /// `√(Σ(Lᵢ − mean)² / (M(M − 1)))`; `+∞` when any loss is infinite, NaN when `M < 2`.
    pub stderr: f64,
    pub model: String,
    pub fold: Option<usize>,
    /// Number of `+∞` losses.
    pub infinite: usize,
}

impl LossSample {
    pub fn new(losses: Vec<f64>, model: impl Into<String>, fold: Option<usize>) -> Self {
        let (m, se) = mean_and_stderr(&losses);
        let infinite = losses.iter().filter(|l| **l == f64::INFINITY).count();
        LossSample { losses, mean: m, stderr: se, model: model.into(), fold, infinite }
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    if let Some(first) = xs.first() {
        if xs.len() > 1 && xs.iter().all(|x| x == first) {
            return (*first, if first.is_finite() { 0.0 } else { f64::INFINITY });
        }
    }
    let m = mean(xs);
    if !m.is_finite() {
        return (m, f64::INFINITY);
    }
    let n = xs.len() as f64;
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    (m, (ss / (n * (n - 1.0))).sqrt())
}

/// Loss of each prediction at its label, summarized.
pub fn estimate_generalization(batch: &PredictedBatch, y: &[f64], loss: &Loss) -> Result<LossSample> {
    if batch.len() != y.len() {
        return Err(Error::Shape { expected: batch.len(), got: y.len() });
    }
    Ok(LossSample::new(loss.eval_batch(&batch.dists, y)?, batch.estimator.clone(), None))
}

/// Pairwise two-sided tests on the paired loss differences `L_i − L_j`.
///
/// Entry `[i][j]` compares model `i` against model `j`; the diagonal is degenerate with `p = 1`.
pub fn compare_models(losses: &[Vec<f64>], test: TestKind) -> Result<Vec<Vec<ComparisonResult>>> {
    let n = losses.first().map_or(0, Vec::len);
    if let Some(bad) = losses.iter().find(|l| l.len() != n) {
        return Err(Error::Shape { expected: n, got: bad.len() });
    }
    losses
        .iter()
        .map(|a| {
            losses
                .iter()
                .map(|b| {
                    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                    test.run_or_degenerate(&diffs, Alternative::TwoSided)
                })
                .collect()
        })
        .collect()
}
