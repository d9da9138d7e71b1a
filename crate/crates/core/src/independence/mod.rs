//! Hypothesis tests phrased as prediction problems.
//!
//! Features and label are dependent exactly when some informed predictor
//! beats the best uninformed one out of sample. The tests here check that
//! with a one-sided paired test on held-out losses. A two-sample problem is
//! reduced to the same question by predicting which sample a point came from.

mod mmd;
mod two_sample;

pub use mmd::{mmd_identity_check, mmd_statistic, MmdIdentity};
pub use two_sample::{two_sample_test, Classifier, TwoSampleOptions, TwoSampleReport, DEFAULT_KNN_GRID};

use crate::learners::{Dataset, FitOptions, ProbEstimator};
use crate::validation::{Alternative, ComparisonResult, TestKind};
use crate::{Error, Loss, Result};

/// Paired held-out losses of an informed and an uninformed predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceReport {
    pub comparison: ComparisonResult,
    pub informed: Vec<f64>,
    pub uninformed: Vec<f64>,
}

/// Tests the null "the informed predictor is no better than the uninformed one".
///
/// Both estimators are fitted on `train` and scored on `test`, which must be
/// an independent sample. The uninformed estimator should ignore the
/// features. A rejection certifies that the label depends on the features.
/// Identical losses on every test point give `p = 1`.
pub fn predictive_independence_test(
    train: &Dataset,
    test: &Dataset,
    informed: &ProbEstimator,
    uninformed: &ProbEstimator,
    loss: &Loss,
    kind: TestKind,
    opts: &FitOptions,
) -> Result<IndependenceReport> {
    let loss = loss.resolve(&train.y)?;
    let score = |est: &ProbEstimator| -> Result<Vec<f64>> {
        let batch = est.fit(train, opts)?.predict(&test.x)?;
        loss.eval_batch(&batch.dists, &test.y)
    };
    let informed = score(informed)?;
    let uninformed = score(uninformed)?;
    let diffs: Vec<f64> = informed.iter().zip(&uninformed).map(|(a, b)| a - b).collect();
    if diffs.iter().filter(|d| d.is_finite()).count() < 2 {
        return Err(Error::DegenerateSample("fewer than two finite loss differences".into()));
    }
    let comparison = kind.run_or_degenerate(&diffs, Alternative::Less)?;
    Ok(IndependenceReport { comparison, informed, uninformed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{ConstantSpec, PointLearner, ResidualTransform, Shape};
    use crate::seeds;
    use rand::Rng;
    use rand_distr::StandardNormal;
    use rayon::prelude::*;

    fn draw(seed: u64, n: usize, noise: Option<f64>) -> Dataset {
        let mut rng = seeds::rng(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|xi| {
                let e: f64 = rng.sample(StandardNormal);
                match noise {
                    Some(s) => xi + s * e,
                    None => e,
                }
            })
            .collect();
        let rows: Vec<Vec<f64>> = x.iter().map(|v| vec![*v]).collect();
        Dataset::from_rows(&rows, y).unwrap()
    }

    fn informed() -> ProbEstimator {
        let disp = PointLearner::residual(PointLearner::Constant(ConstantSpec::Mean), ResidualTransform::Squared);
        ProbEstimator::parametric(Shape::Normal, PointLearner::Ols, disp)
    }

    fn p_value(seed: u64, noise: Option<f64>, n: usize) -> f64 {
        let train = draw(seeds::derive(seed, "train"), n / 2, noise);
        let test = draw(seeds::derive(seed, "test"), n / 2, noise);
        let opts = FitOptions::new(seed);
        predictive_independence_test(&train, &test, &informed(), &ProbEstimator::normal_baseline(), &Loss::Log, TestKind::Wilcoxon, &opts)
            .unwrap()
            .comparison
            .p_value
    }

    #[test]
    fn null_rejection_rate_is_controlled() {
        let ps: Vec<f64> = (0..500u64).into_par_iter().map(|s| p_value(s, None, 200)).collect();
        for alpha in [0.01, 0.05, 0.1, 0.2] {
            let rate = ps.iter().filter(|p| **p < alpha).count() as f64 / 500.0;
            assert!(rate <= alpha + 3.0 * (alpha * (1.0 - alpha) / 500.0).sqrt(), "alpha {alpha}: {rate}");
        }
        assert!(ps.iter().filter(|p| **p < 0.05).count() as f64 / 500.0 <= 0.08);
    }

    #[test]
    fn dependence_is_detected() {
        let rejections = (0..100u64).into_par_iter().filter(|&s| p_value(1000 + s, Some(0.1), 400) < 0.05).count();
        assert!(rejections >= 90, "{rejections} of 100");
    }

    #[test]
    fn identical_predictors_give_p_one() {
        let train = draw(1, 50, Some(1.0));
        let test = draw(2, 50, Some(1.0));
        let base = ProbEstimator::normal_baseline();
        let r = predictive_independence_test(&train, &test, &base, &base, &Loss::Log, TestKind::Wilcoxon, &FitOptions::new(3))
            .unwrap();
        assert_eq!(r.comparison.p_value, 1.0);
    }

    #[test]
    fn infinite_losses_are_degenerate() {
        let train = draw(1, 20, Some(1.0));
        let mut test = draw(2, 20, Some(1.0));
        test.y.iter_mut().for_each(|y| *y += 1e6);
        let point = ProbEstimator::Fixed(crate::Distribution::uniform(-1.0, 1.0).unwrap());
        let r = predictive_independence_test(&train, &test, &point, &point, &Loss::Log, TestKind::Wilcoxon, &FitOptions::new(3));
        assert!(matches!(r, Err(Error::DegenerateSample(_))));
    }
}
