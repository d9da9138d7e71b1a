use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::params::{grid_points, Grid, ParamMap};
use super::point::{FittedPoint, Functional, PointContext, PointLearner};
use super::prob::{FittedProb, ProbEstimator};
use super::{Dataset, FitOptions};
use crate::numeric::mean;
use crate::{seeds, Error, Loss, Result};

/// Scores of every grid candidate and the winner.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningReport {
    pub candidates: Vec<ParamMap>,
    /// Mean inner-fold loss per candidate; failed fits score `+∞`.
    pub scores: Vec<f64>,
    pub best: usize,
}

impl TuningReport {
    pub fn best_params(&self) -> &ParamMap {
        &self.candidates[self.best]
    }
}

/// Shuffled partition of `0..n` into `k` folds of near-equal size, each sorted.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 folds, got {k}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seeds::rng(seed));
    let folds: Vec<Vec<usize>> = (0..k)
        .map(|i| {
            let mut f = perm[i * n / k..(i + 1) * n / k].to_vec();
            f.sort_unstable();
            f
        })
        .collect();
    if let Some((fold, f)) = folds.iter().enumerate().find(|(_, f)| f.len() < 2) {
        return Err(Error::FoldTooSmall { fold, size: f.len() });
    }
    Ok(folds)
}

/// Indices of `0..n` outside `test`, which must be sorted.
pub(crate) fn complement(n: usize, test: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| test.binary_search(i).is_err()).collect()
}

fn pick(candidates: Vec<ParamMap>, scores: Vec<f64>) -> Result<TuningReport> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if s.is_finite() && best.is_none_or(|b| *s < scores[b]) {
            best = Some(i);
        }
    }
    let best = best.ok_or(Error::TuningFailed)?;
    Ok(TuningReport { candidates, scores, best })
}

fn cv_score<F>(data: &Dataset, opts: &FitOptions, fold_loss: F) -> Result<f64>
where
    F: Fn(&Dataset, &Dataset, &FitOptions) -> Result<Vec<f64>>,
{
    let folds = kfold_indices(data.n_rows(), opts.inner_folds, seeds::derive(opts.seed, "tune"))?;
    let mut means = Vec::with_capacity(folds.len());
    for (i, test) in folds.iter().enumerate() {
        let train = data.subset(&complement(data.n_rows(), test));
        let inner = FitOptions { seed: seeds::derive_index(opts.seed, i as u64), ..*opts };
        let losses = match fold_loss(&train, &data.subset(test), &inner) {
            Ok(l) => l,
            Err(e) => {
                log::warn!("tuning candidate failed on fold {i}: {e}");
                return Ok(f64::INFINITY);
            }
        };
        means.push(mean(&losses));
    }
    let m = mean(&means);
    Ok(if m.is_nan() { f64::INFINITY } else { m })
}

/// Exhaustive search over `grid` by inner k-fold mean loss, then a refit of the winner on all of `data`.
///
/// Ties go to the earliest candidate in grid order.
pub fn grid_search(
    est: &ProbEstimator,
    grid: &Grid,
    loss: &Loss,
    data: &Dataset,
    opts: &FitOptions,
) -> Result<(FittedProb, TuningReport)> {
    let candidates = grid_points(grid);
    let scores = candidates
        .par_iter()
        .map(|params| {
            let e = est.with_params(params)?;
            cv_score(data, opts, |train, test, o| {
                let fitted = e.fit(train, o)?;
                loss.resolve(&train.y)?.eval_batch(&fitted.predict(&test.x)?.dists, &test.y)
            })
        })
        .collect::<Vec<Result<f64>>>()
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let report = pick(candidates, scores)?;
    let fitted = est.with_params(report.best_params())?.fit(data, opts)?;
    Ok((fitted, report))
}

/// Grid search for a point learner, scored by the loss that elicits `functional`.
pub fn grid_search_point(
    learner: &PointLearner,
    grid: &Grid,
    functional: Functional,
    data: &Dataset,
    opts: &FitOptions,
) -> Result<(FittedPoint, TuningReport)> {
    let candidates = grid_points(grid);
    let scores = candidates
        .par_iter()
        .map(|params| {
            let l = learner.with_params(params)?;
            cv_score(data, opts, |train, test, o| {
                let ctx = PointContext { functional, ..PointContext::new(o) };
                let pred = l.fit(train, &ctx)?.predict(&test.x)?;
                pred.iter().zip(&test.y).map(|(p, y)| functional.loss(*y, *p)).collect()
            })
        })
        .collect::<Vec<Result<f64>>>()
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let report = pick(candidates, scores)?;
    let ctx = PointContext { functional, ..PointContext::new(opts) };
    let fitted = learner.with_params(report.best_params())?.fit(data, &ctx)?;
    Ok((fitted, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{ConstantSpec, ParamValue, Shape};
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn folds_partition_the_rows() {
        let folds = kfold_indices(23, 5, 4).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert!(folds.iter().all(|f| f.len() == 4 || f.len() == 5));
        assert_eq!(folds, kfold_indices(23, 5, 4).unwrap());
        assert!(matches!(kfold_indices(7, 5, 0), Err(Error::FoldTooSmall { .. })));
        assert_eq!(complement(6, &[1, 4]), vec![0, 2, 3, 5]);
    }

    #[test]
    fn single_candidate_equals_plain_fit() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..30).map(|i| ((i * 17) % 5) as f64 + i as f64 * 0.1).collect();
        let data = Dataset::from_rows(&rows, y).unwrap();
        let est = ProbEstimator::parametric(Shape::Normal, PointLearner::Knn { k: 4 }, PointLearner::Constant(ConstantSpec::Std));
        let mut grid = Grid::new();
        grid.insert("p.k".into(), vec![ParamValue::Int(4)]);
        let opts = FitOptions::new(1);
        let (tuned, report) = grid_search(&est, &grid, &Loss::Log, &data, &opts).unwrap();
        assert_eq!(report.best, 0);
        let q = DMatrix::from_fn(6, 1, |i, _| i as f64 * 4.5);
        assert_eq!(tuned.predict(&q).unwrap().dists, est.fit(&data, &opts).unwrap().predict(&q).unwrap().dists);
    }

    #[test]
    fn all_infinite_candidates_fail() {
        let data = Dataset::from_rows(&(0..20).map(|i| vec![i as f64]).collect::<Vec<_>>(), (0..20).map(|i| i as f64).collect()).unwrap();
        let est = ProbEstimator::Fixed(crate::Distribution::uniform(100.0, 101.0).unwrap());
        let err = grid_search(&est, &Grid::new(), &Loss::Log, &data, &FitOptions::default()).unwrap_err();
        assert_eq!(err, Error::TuningFailed);
    }

    #[test]
    fn knn_prefers_smoothing_on_noise() {
        let mut picked_large = 0;
        for seed in 0..10u64 {
            let mut rng = seeds::rng(seed);
            let rows: Vec<Vec<f64>> = (0..120).map(|_| vec![rng.random_range(0.0..1.0)]).collect();
            let y: Vec<f64> = (0..120).map(|_| rng.sample(StandardNormal)).collect();
            let data = Dataset::from_rows(&rows, y).unwrap();
            let mut grid = Grid::new();
            grid.insert("k".into(), vec![ParamValue::Int(1), ParamValue::Int(50)]);
            let (_, report) =
                grid_search_point(&PointLearner::Knn { k: 1 }, &grid, Functional::Mean, &data, &FitOptions::new(seed)).unwrap();
            if report.best == 1 {
                picked_large += 1;
            }
        }
        assert!(picked_large >= 8, "{picked_large}");
    }
}
