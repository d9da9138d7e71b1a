use rayon::prelude::*;

use super::{mean_and_stderr, LossSample};
use crate::learners::{complement, kfold_indices, Dataset, FitOptions, ProbEstimator};
use crate::numeric::mean;
use crate::{seeds, Distribution, Loss, Result};

/// How fold-wise estimates combine into one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Mean of fold means and mean of fold standard errors.
    #[default]
    MeanOfFolds,
    /// Mean and standard error of all out-of-sample losses taken together.
    Pooled,
}

/// Result of k-fold cross-validation of one estimator.
#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub folds: Vec<LossSample>,
    pub fold_indices: Vec<Vec<usize>>,
    /// Out-of-sample loss of every row, in original row order.
    pub row_losses: Vec<f64>,
    /// Out-of-sample prediction of every row, in original row order.
    pub predictions: Vec<Distribution>,
}

impl CvOutcome {
    pub fn aggregate(&self, how: Aggregation) -> (f64, f64) {
        match how {
            Aggregation::MeanOfFolds => (
                mean(&self.folds.iter().map(|f| f.mean).collect::<Vec<_>>()),
                mean(&self.folds.iter().map(|f| f.stderr).collect::<Vec<_>>()),
            ),
            Aggregation::Pooled => mean_and_stderr(&self.row_losses),
        }
    }
}

/// Cross-validates `est` over the given test folds.
///
/// Fold `i` is fitted with seed `derive_index(opts.seed, i)`; the loss is
/// resolved against each training fold's labels.
pub fn kfold_cv(
    est: &ProbEstimator,
    data: &Dataset,
    folds: &[Vec<usize>],
    loss: &Loss,
    opts: &FitOptions,
) -> Result<CvOutcome> {
    let mut out = kfold_cv_losses(est, data, folds, std::slice::from_ref(loss), opts)?;
    Ok(out.remove(0))
}

/// Like [`kfold_cv`], scoring one set of fold fits under several losses.
/// Returns one outcome per loss, in order.
pub fn kfold_cv_losses(
    est: &ProbEstimator,
    data: &Dataset,
    folds: &[Vec<usize>],
    losses: &[Loss],
    opts: &FitOptions,
) -> Result<Vec<CvOutcome>> {
    let n = data.n_rows();
    let model = est.to_string();
    let per_fold = folds
        .par_iter()
        .enumerate()
        .map(|(i, test)| {
            let train = data.subset(&complement(n, test));
            let test_data = data.subset(test);
            let fitted = est.fit(&train, &opts.with_seed(seeds::derive_index(opts.seed, i as u64)))?;
            let batch = fitted.predict(&test_data.x)?;
            let samples = losses
                .iter()
                .map(|loss| {
                    let values = loss.resolve(&train.y)?.eval_batch(&batch.dists, &test_data.y)?;
                    Ok(LossSample::new(values, model.clone(), Some(i)))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((samples, batch.dists))
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut predictions = vec![None; n];
    for ((_, dists), test) in per_fold.iter().zip(folds) {
        for (&r, d) in test.iter().zip(dists) {
            predictions[r] = Some(d.clone());
        }
    }
    let predictions: Vec<Distribution> = predictions.into_iter().map(|p| p.expect("folds cover every row")).collect();
    let outcomes = (0..losses.len())
        .map(|j| {
            let mut row_losses = vec![f64::NAN; n];
            for ((samples, _), test) in per_fold.iter().zip(folds) {
                for (&r, l) in test.iter().zip(&samples[j].losses) {
                    row_losses[r] = *l;
                }
            }
            CvOutcome {
                folds: per_fold.iter().map(|(s, _)| s[j].clone()).collect(),
                fold_indices: folds.to_vec(),
                row_losses,
                predictions: predictions.clone(),
            }
        })
        .collect();
    Ok(outcomes)
}

/// Shuffled `k`-fold cross-validation, splitting and fitting from one seed.
pub fn cross_validate(est: &ProbEstimator, data: &Dataset, k: usize, loss: &Loss, opts: &FitOptions) -> Result<CvOutcome> {
    let folds = kfold_indices(data.n_rows(), k, seeds::derive(opts.seed, "folds"))?;
    kfold_cv(est, data, &folds, loss, opts)
}
