use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::learners::{Dataset, FitOptions, FittedProb, ProbEstimator};
use crate::{seeds, Distribution, Error, Result};

const MAX_REDRAWS: usize = 10;

fn resample<R: Rng>(rng: &mut R, n: usize, m: usize, bootstrap: bool) -> Vec<usize> {
    if bootstrap {
        (0..m).map(|_| rng.random_range(0..n)).collect()
    } else {
        let mut idx = sample(rng, n, m).into_vec();
        idx.sort_unstable();
        idx
    }
}

/// Fits `n` copies of `inner` on random subsets of `frac · N` rows.
///
/// A member whose fit fails on its subset is refitted on a fresh draw, up to ten times.
pub(crate) fn fit_bagged(
    inner: &ProbEstimator,
    n: usize,
    frac: f64,
    bootstrap: bool,
    data: &Dataset,
    opts: &FitOptions,
) -> Result<Vec<FittedProb>> {
    if n == 0 {
        return Err(Error::InvalidParameter("bagging needs at least one member".into()));
    }
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(Error::InvalidParameter(format!("sample fraction must lie in (0, 1], got {frac}")));
    }
    let rows = data.n_rows();
    let m = ((frac * rows as f64).round() as usize).clamp(1, rows);
    let root = seeds::derive(opts.seed, "bag");
    (0..n)
        .into_par_iter()
        .map(|i| {
            let seed = seeds::derive_index(root, i as u64);
            let mut rng = seeds::rng(seed);
            let member_opts = opts.with_seed(seed);
            let mut last = None;
            for _ in 0..=MAX_REDRAWS {
                let idx = resample(&mut rng, rows, m, bootstrap);
                match inner.fit(&data.subset(&idx), &member_opts) {
                    Ok(f) => return Ok(f),
                    Err(e) => {
                        log::warn!("bagging member {i} failed on its resample, redrawing: {e}");
                        last = Some(e);
                    }
                }
            }
            Err(last.expect("at least one attempt"))
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect()
}

/// Row-wise uniform mixture of the members' predictions.
pub(crate) fn predict_bagged(members: &[FittedProb], x: &DMatrix<f64>) -> Result<Vec<Distribution>> {
    let preds = members.iter().map(|m| m.predict_dists(x)).collect::<Result<Vec<_>>>()?;
    let w = vec![1.0 / members.len() as f64; members.len()];
    (0..x.nrows())
        .map(|r| Distribution::mixture(preds.iter().map(|p| p[r].clone()).collect(), w.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{ConstantSpec, PointLearner, Shape};
    use crate::losses::log_loss;

    fn data() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![i as f64 / 10.0]).collect();
        let y = rows.iter().enumerate().map(|(i, r)| 2.0 * r[0] + ((i * 37) % 11) as f64 / 5.0).collect();
        Dataset::from_rows(&rows, y).unwrap()
    }

    fn base() -> ProbEstimator {
        ProbEstimator::parametric(Shape::Normal, PointLearner::Ols, PointLearner::Constant(ConstantSpec::Std))
    }

    #[test]
    fn single_member_without_bootstrap_is_the_base() {
        let d = data();
        let opts = FitOptions::new(3);
        let bag = ProbEstimator::Bag { inner: Box::new(base()), n: 1, frac: 1.0, bootstrap: false };
        let q = DMatrix::from_fn(8, 1, |i, _| i as f64 - 2.0);
        assert_eq!(
            bag.fit(&d, &opts).unwrap().predict(&q).unwrap().dists,
            base().fit(&d, &opts).unwrap().predict(&q).unwrap().dists
        );
    }

    #[test]
    fn identical_members_collapse() {
        let d = data();
        let bag = ProbEstimator::Bag { inner: Box::new(base()), n: 5, frac: 1.0, bootstrap: false };
        let q = DMatrix::from_fn(3, 1, |i, _| i as f64);
        let p = bag.fit(&d, &FitOptions::new(0)).unwrap().predict(&q).unwrap();
        let single = base().fit(&d, &FitOptions::new(0)).unwrap().predict(&q).unwrap();
        for (a, b) in p.dists.iter().zip(&single.dists) {
            assert!((a.pdf(4.0) - b.pdf(4.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn bagged_log_loss_obeys_jensen() {
        let d = data();
        let bag = ProbEstimator::Bag { inner: Box::new(base()), n: 7, frac: 0.6, bootstrap: true };
        let fitted = bag.fit(&d, &FitOptions::new(8)).unwrap();
        let q = DMatrix::from_fn(25, 1, |i, _| i as f64 / 4.0);
        let mixed = fitted.predict(&q).unwrap().dists;
        let crate::learners::prob::FittedState::Bag(members) = &fitted.state else { panic!() };
        let preds: Vec<Vec<Distribution>> = members.iter().map(|m| m.predict_dists(&q).unwrap()).collect();
        for r in 0..q.nrows() {
            let y = q[(r, 0)] * 2.0 + 0.7;
            let member_mean = preds.iter().map(|p| log_loss(&p[r], y).unwrap()).sum::<f64>() / preds.len() as f64;
            assert!(log_loss(&mixed[r], y).unwrap() <= member_mean + 1e-12);
        }
    }

    #[test]
    fn member_order_does_not_matter() {
        let d = data();
        let fitted = fit_bagged(&base(), 4, 0.5, true, &d, &FitOptions::new(2)).unwrap();
        let mut rev = fitted.clone();
        rev.reverse();
        let q = DMatrix::from_fn(4, 1, |i, _| i as f64);
        let a = predict_bagged(&fitted, &q).unwrap();
        let b = predict_bagged(&rev, &q).unwrap();
        for (a, b) in a.iter().zip(&b) {
            for y in [-1.0, 2.0, 5.5] {
                assert!((a.pdf(y) - b.pdf(y)).abs() < 1e-14);
            }
        }
    }
}
