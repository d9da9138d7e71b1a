use nalgebra::DMatrix;
use rand::Rng;

use crate::learners::{ConstantSpec, Dataset, FitOptions, FittedProb, PointLearner, ProbEstimator, ResidualTransform, Shape, TINY};
use crate::losses::DEFAULT_CAP_EPS;
use crate::numeric::{logit, mean, std_dev};
use crate::{seeds, Diffeomorphism, Distribution, Error, Loss, Result};

/// Number of equal steps of the line search over `β ∈ [0, 1]`.
pub const GENTLE_LINE_SEARCH_STEPS: usize = 100;

const UNIT_CLAMP: f64 = 1e-15;

fn weak_estimator() -> ProbEstimator {
    let residual_sd = PointLearner::residual(PointLearner::Constant(ConstantSpec::Mean), ResidualTransform::Squared);
    ProbEstimator::parametric(Shape::Normal, PointLearner::Ols, residual_sd)
}

/// Weak prediction on the unit interval: `(1 − alpha)·s♯d + alpha·U(0, 1)` for a real-line `d`.
pub fn unit_weak_learner(d: &Distribution, alpha: f64) -> Result<Distribution> {
    let u = Distribution::uniform(0.0, 1.0)?;
    if alpha >= 1.0 {
        return Ok(u);
    }
    let squashed = d.pushforward(&Diffeomorphism::Sigmoid)?;
    Distribution::mixture(vec![squashed, u], vec![1.0 - alpha, alpha])
}

/// Greedy residual boosting: the prediction is `g_k` pushed through the
/// quantile maps of `g_{k−1}, …, g_1` and of the uninformed start `f_0`.
#[derive(Debug, Clone)]
pub struct FittedGreedy {
    /// Quantile map of the logistic start distribution `f_0`.
    pub start: Diffeomorphism,
    pub weak: Vec<FittedProb>,
    pub alpha: f64,
    n_features: usize,
}

pub(crate) fn fit_greedy(k: usize, alpha: f64, data: &Dataset, opts: &FitOptions) -> Result<FittedGreedy> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("uniform weight must lie in [0, 1], got {alpha}")));
    }
    let ddof = opts.std_denominator.ddof();
    let s = if data.n_rows() > ddof { std_dev(&data.y, ddof) } else { 0.0 };
    let scale = (s * 3f64.sqrt() / std::f64::consts::PI).max(TINY);
    let start = Diffeomorphism::Logit.then(Diffeomorphism::affine(scale, mean(&data.y))?);
    let mut rho: Vec<f64> = data.y.iter().map(|y| start.inverse(*y)).collect();
    let mut weak = Vec::with_capacity(k);
    for j in 0..k {
        let z: Vec<f64> = rho.iter().map(|r| logit(r.clamp(UNIT_CLAMP, 1.0 - UNIT_CLAMP))).collect();
        let fitted = weak_estimator().fit(&data.with_labels(z)?, &opts.with_seed(seeds::derive_index(opts.seed, j as u64)))?;
        let pred = fitted.predict_dists(&data.x)?;
        for (r, d) in rho.iter_mut().zip(&pred) {
            *r = unit_weak_learner(d, alpha)?.cdf(*r);
        }
        weak.push(fitted);
    }
    Ok(FittedGreedy { start, weak, alpha, n_features: data.n_features() })
}

impl FittedGreedy {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// The uninformed start distribution.
    pub fn start_distribution(&self) -> Result<Distribution> {
        Distribution::uniform(0.0, 1.0)?.pushforward(&self.start)
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<Distribution>> {
        let weak = self
            .weak
            .iter()
            .map(|w| w.predict_dists(x)?.iter().map(|d| unit_weak_learner(d, self.alpha)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        (0..x.nrows())
            .map(|r| {
                let Some((last, rest)) = weak.split_last() else {
                    return self.start_distribution();
                };
                let mut chain: Option<Diffeomorphism> = None;
                for g in rest.iter().rev() {
                    let q = Diffeomorphism::quantile_of(g[r].clone())?;
                    chain = Some(match chain {
                        None => q,
                        Some(c) => c.then(q),
                    });
                }
                let map = match chain {
                    None => self.start.clone(),
                    Some(c) => c.then(self.start.clone()),
                };
                last[r].pushforward(&map)
            })
            .collect()
    }
}

/// Gentle boosting: a mixture of an uninformed start and weak learners fitted on reweighted resamples.
#[derive(Debug, Clone)]
pub struct FittedGentle {
    pub components: Vec<FittedProb>,
    pub weights: Vec<f64>,
    /// Mean training loss after each round, starting with the uninformed fit.
    pub training_loss: Vec<f64>,
    /// Sample weights after each round.
    pub sample_weights: Vec<Vec<f64>>,
}

fn mixture_loss(loss: &Loss, comps: &[Distribution], weights: &[f64], y: f64) -> Result<f64> {
    if matches!(loss, Loss::Log) {
        let d: f64 = comps.iter().zip(weights).map(|(c, w)| w * c.pdf(y)).sum();
        return Ok(-d.ln());
    }
    loss.eval(&Distribution::mixture(comps.to_vec(), weights.to_vec())?, y)
}

fn draw_weighted<R: Rng>(rng: &mut R, cumulative: &[f64]) -> usize {
    let u: f64 = rng.random::<f64>() * cumulative[cumulative.len() - 1];
    cumulative.partition_point(|c| *c <= u).min(cumulative.len() - 1)
}

pub(crate) fn fit_gentle(
    rounds: usize,
    alpha: f64,
    gamma: f64,
    loss: &Loss,
    data: &Dataset,
    opts: &FitOptions,
) -> Result<FittedGentle> {
    if !(0.0..=1.0).contains(&gamma) || alpha.is_nan() || alpha < 0.0 {
        return Err(Error::InvalidParameter(format!("need gamma in [0, 1] and alpha >= 0, got {gamma}, {alpha}")));
    }
    let n = data.n_rows();
    let loss = loss.resolve(&data.y)?;
    let clip = -DEFAULT_CAP_EPS.ln();
    let start = ProbEstimator::normal_baseline().fit(data, opts)?;
    let mut rows: Vec<Vec<Distribution>> = start.predict_dists(&data.x)?.into_iter().map(|d| vec![d]).collect();
    let mut components = vec![start];
    let mut weights = vec![1.0];
    let mean_loss = |rows: &[Vec<Distribution>], weights: &[f64], extra: Option<(&[Distribution], f64)>| -> Result<f64> {
        let mut total = 0.0;
        for (i, comps) in rows.iter().enumerate() {
            let l = match extra {
                None => mixture_loss(&loss, comps, weights, data.y[i])?,
                Some((new, t)) => {
                    let mut c = comps.clone();
                    c.push(new[i].clone());
                    let mut w: Vec<f64> = weights.iter().map(|w| w * (1.0 - t)).collect();
                    w.push(t);
                    mixture_loss(&loss, &c, &w, data.y[i])?
                }
            };
            total += l;
        }
        Ok(total / n as f64)
    };
    let mut training_loss = vec![mean_loss(&rows, &weights, None)?];
    let mut w = vec![1.0 / n as f64; n];
    let mut sample_weights = Vec::with_capacity(rounds);
    let root = seeds::derive(opts.seed, "gentle");
    for round in 0..rounds {
        if gamma == 0.0 {
            training_loss.push(training_loss[training_loss.len() - 1]);
            sample_weights.push(w.clone());
            continue;
        }
        let seed = seeds::derive_index(root, round as u64);
        let mut rng = seeds::rng(seed);
        let cumulative: Vec<f64> = w.iter().scan(0.0, |acc, x| { *acc += x; Some(*acc) }).collect();
        let idx: Vec<usize> = (0..n).map(|_| draw_weighted(&mut rng, &cumulative)).collect();
        let weak = weak_estimator().fit(&data.subset(&idx), &opts.with_seed(seed))?;
        let pred = weak.predict_dists(&data.x)?;
        let current = training_loss[training_loss.len() - 1];
        let (mut best_beta, mut best_loss) = (0.0, current);
        for step in 1..=GENTLE_LINE_SEARCH_STEPS {
            let beta = step as f64 / GENTLE_LINE_SEARCH_STEPS as f64;
            let l = mean_loss(&rows, &weights, Some((&pred, gamma * beta)))?;
            if l < best_loss {
                best_loss = l;
                best_beta = beta;
            }
        }
        if best_beta > 0.0 {
            let t = gamma * best_beta;
            weights.iter_mut().for_each(|v| *v *= 1.0 - t);
            weights.push(t);
            for (r, d) in rows.iter_mut().zip(&pred) {
                r.push(d.clone());
            }
            components.push(weak);
        }
        training_loss.push(best_loss);
        for (i, wi) in w.iter_mut().enumerate() {
            let l = loss.eval(&pred[i], data.y[i])?;
            let l = if l == f64::INFINITY { clip } else { l };
            *wi = (*wi + alpha * *wi * l).max(0.0);
        }
        let total: f64 = w.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::WeightCollapse { round });
        }
        w.iter_mut().for_each(|v| *v /= total);
        sample_weights.push(w.clone());
    }
    Ok(FittedGentle { components, weights, training_loss, sample_weights })
}

impl FittedGentle {
    pub fn n_features(&self) -> usize {
        self.components[0].n_features()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<Distribution>> {
        let preds = self.components.iter().map(|c| c.predict_dists(x)).collect::<Result<Vec<_>>>()?;
        (0..x.nrows())
            .map(|r| Distribution::mixture(preds.iter().map(|p| p[r].clone()).collect(), self.weights.clone()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::log_loss;
    use rand_distr::StandardNormal;

    fn hetero(n: usize, seed: u64) -> Dataset {
        let mut rng = seeds::rng(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-2.0..2.0)]).collect();
        let y = rows.iter().map(|r| 3.0 * r[0] + 1.0 + (0.3 + r[0].abs()) * rng.sample::<f64, _>(StandardNormal)).collect();
        Dataset::from_rows(&rows, y).unwrap()
    }

    #[test]
    fn greedy_without_learners_is_the_start() {
        let d = hetero(50, 1);
        let g = fit_greedy(0, 0.1, &d, &FitOptions::default()).unwrap();
        let q = DMatrix::from_fn(3, 1, |i, _| i as f64);
        let p = g.predict(&q).unwrap();
        let f0 = g.start_distribution().unwrap();
        assert!(p.iter().all(|d| *d == f0));
        assert!((f0.quantile(0.5).unwrap() - mean(&d.y)).abs() < 1e-9);
    }

    #[test]
    fn one_step_satisfies_the_residual_identity() {
        let d = hetero(80, 2);
        let g = fit_greedy(1, 0.2, &d, &FitOptions::default()).unwrap();
        let q = DMatrix::from_fn(5, 1, |i, _| i as f64 - 2.0);
        let boosted = g.predict(&q).unwrap();
        let f0 = g.start_distribution().unwrap();
        let weak = g.weak[0].predict_dists(&q).unwrap();
        for (r, b) in boosted.iter().enumerate() {
            let gx = unit_weak_learner(&weak[r], 0.2).unwrap();
            for y in [-4.0, 0.5, 3.0, 7.0] {
                let lhs = -log_loss(&gx, f0.cdf(y)).unwrap();
                let rhs = log_loss(&f0, y).unwrap() - log_loss(b, y).unwrap();
                assert!((lhs - rhs).abs() < 1e-10, "{lhs} {rhs}");
            }
        }
    }

    #[test]
    fn chain_matches_composed_map() {
        let d = hetero(60, 3);
        let g = fit_greedy(2, 0.1, &d, &FitOptions::default()).unwrap();
        let q = DMatrix::from_element(1, 1, 0.7);
        let boosted = &g.predict(&q).unwrap()[0];
        let weak: Vec<Distribution> =
            g.weak.iter().map(|w| unit_weak_learner(&w.predict_dists(&q).unwrap()[0], 0.1).unwrap()).collect();
        let inner = weak[1].pushforward(&Diffeomorphism::quantile_of(weak[0].clone()).unwrap()).unwrap();
        let nested = inner.pushforward(&g.start).unwrap();
        for y in [-2.0, 1.0, 3.3, 6.0] {
            assert!((boosted.pdf(y) - nested.pdf(y)).abs() < 1e-9 * (1.0 + nested.pdf(y)));
            assert!((boosted.cdf(y) - nested.cdf(y)).abs() < 1e-9);
        }
    }

    #[test]
    fn greedy_beats_start_on_informative_features() {
        let train = hetero(300, 4);
        let test = hetero(300, 5);
        let g = fit_greedy(1, 0.1, &train, &FitOptions::default()).unwrap();
        let boosted = g.predict(&test.x).unwrap();
        let f0 = g.start_distribution().unwrap();
        let lb = mean(&boosted.iter().zip(&test.y).map(|(d, y)| log_loss(d, *y).unwrap()).collect::<Vec<_>>());
        let l0 = mean(&test.y.iter().map(|y| log_loss(&f0, *y).unwrap()).collect::<Vec<_>>());
        assert!(lb < l0, "{lb} {l0}");
    }

    #[test]
    fn gentle_degenerate_settings_return_the_start() {
        let d = hetero(40, 6);
        let opts = FitOptions::default();
        let start = ProbEstimator::normal_baseline().fit(&d, &opts).unwrap().predict_dists(&d.x).unwrap();
        for (m, gamma) in [(0, 0.5), (5, 0.0)] {
            let g = fit_gentle(m, 0.1, gamma, &Loss::Log, &d, &opts).unwrap();
            assert_eq!(g.predict(&d.x).unwrap(), start);
        }
    }

    #[test]
    fn gentle_training_loss_is_monotone_and_weights_stay_on_simplex() {
        let d = hetero(120, 7);
        let g = fit_gentle(6, 0.3, 0.8, &Loss::Log, &d, &FitOptions::new(4)).unwrap();
        assert!(g.training_loss.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{:?}", g.training_loss);
        assert!(g.training_loss.last().unwrap() < &g.training_loss[0]);
        for w in &g.sample_weights {
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(w.iter().all(|v| *v >= 0.0));
        }
        assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gentle_weights_can_collapse() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64]).collect();
        let y = rows.iter().map(|r| 3.0 * r[0] + 1.0).collect();
        let d = Dataset::from_rows(&rows, y).unwrap();
        let err = fit_gentle(3, 1.0, 0.5, &Loss::Log, &d, &FitOptions::default()).unwrap_err();
        assert!(matches!(err, Error::WeightCollapse { .. }), "{err:?}");
    }
}
