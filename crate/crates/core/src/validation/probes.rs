use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::mean_and_stderr;
use crate::learners::{Dataset, FitOptions, PredictedBatch, ProbEstimator};
use crate::numeric::{golden_section_min, mean, std_dev};
use crate::{seeds, Distribution, Error, Loss, Result};

/// Entropy estimates from out-of-sample losses of an uninformed and an informed predictor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyEstimates {
    /// Mean loss of the uninformed predictor, estimating `H(Y)`.
    pub h_y: f64,
    /// Mean loss of the informed predictor, estimating `H(Y | X)`.
    pub h_y_given_x: f64,
    pub gap: f64,
    /// Standard error of the paired differences.
    pub gap_stderr: f64,
}

pub fn entropy_estimates(
    informed: &PredictedBatch,
    uninformed: &PredictedBatch,
    y: &[f64],
    loss: &Loss,
) -> Result<EntropyEstimates> {
    if informed.len() != y.len() || uninformed.len() != y.len() {
        return Err(Error::Shape { expected: y.len(), got: informed.len().min(uninformed.len()) });
    }
    let li = loss.eval_batch(&informed.dists, y)?;
    let lu = loss.eval_batch(&uninformed.dists, y)?;
    let diffs: Vec<f64> = lu.iter().zip(&li).map(|(u, i)| u - i).collect();
    let (gap, gap_stderr) = mean_and_stderr(&diffs);
    Ok(EntropyEstimates { h_y: mean(&lu), h_y_given_x: mean(&li), gap, gap_stderr })
}

/// Synthetic data generator with a known conditional law.
pub struct TruthOracle<'a> {
    /// Draws one feature row.
    pub sample_x: &'a (dyn Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync),
    /// Law of the label given a feature row.
    pub conditional: &'a (dyn Fn(&[f64]) -> Distribution + Sync),
}

impl TruthOracle<'_> {
    pub fn draw(&self, n: usize, seed: u64) -> Result<(Dataset, Vec<Distribution>)> {
        let mut rng = seeds::rng(seed);
        let mut rows = Vec::with_capacity(n);
        let mut truth = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let x = (self.sample_x)(&mut rng);
            let d = (self.conditional)(&x);
            y.push(d.sample_one(&mut rng));
            truth.push(d);
            rows.push(x);
        }
        Ok((Dataset::from_rows(&rows, y)?, truth))
    }
}

/// Monte Carlo decomposition of the expected loss of a strategy.
///
/// `total = err + var + bias` up to rounding; `bias = dbias + pbias`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasVarianceReport {
    /// Mean loss of the true conditional.
    pub err: f64,
    /// Mean loss of the fitted strategy over training replicates.
    pub total: f64,
    /// Excess of the strategy over its replicate mixture `Ef`.
    pub var: f64,
    /// Excess of `Ef` over the truth.
    pub bias: f64,
    /// Part of the bias removed by the best constant shift of the labels.
    pub dbias: f64,
    pub pbias: f64,
    pub var_stderr: f64,
    pub bias_stderr: f64,
}

/// Fits `est` on `replicates` training sets of size `n_train` and evaluates on `n_test` fresh draws.
pub fn bias_variance_probe(
    truth: &TruthOracle<'_>,
    est: &ProbEstimator,
    n_train: usize,
    replicates: usize,
    n_test: usize,
    loss: &Loss,
    opts: &FitOptions,
) -> Result<BiasVarianceReport> {
    if replicates < 2 {
        return Err(Error::Domain(format!("need at least 2 training replicates, got {replicates}")));
    }
    let (test, truth_test) = truth.draw(n_test, seeds::derive(opts.seed, "probe-test"))?;
    let root = seeds::derive(opts.seed, "probe-train");
    let preds: Vec<Vec<Distribution>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let seed = seeds::derive_index(root, r as u64);
            let (train, _) = truth.draw(n_train, seed)?;
            Ok(est.fit(&train, &opts.with_seed(seed))?.predict(&test.x)?.dists)
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<_>>()?;
    let w = vec![1.0 / replicates as f64; replicates];
    let ef: Vec<Distribution> = (0..n_test)
        .map(|j| Distribution::mixture(preds.iter().map(|p| p[j].clone()).collect(), w.clone()))
        .collect::<Result<_>>()?;
    let mut err_j = Vec::with_capacity(n_test);
    let mut var_j = Vec::with_capacity(n_test);
    let mut bias_j = Vec::with_capacity(n_test);
    let mut total_j = Vec::with_capacity(n_test);
    for j in 0..n_test {
        let y = test.y[j];
        let l_truth = loss.eval(&truth_test[j], y)?;
        let l_ef = loss.eval(&ef[j], y)?;
        let l_f: Vec<f64> = preds.iter().map(|p| loss.eval(&p[j], y)).collect::<Result<_>>()?;
        let v = l_f.iter().map(|l| l - l_ef).sum::<f64>() / replicates as f64;
        total_j.push(mean(&l_f));
        err_j.push(l_truth);
        var_j.push(v);
        bias_j.push(l_ef - l_truth);
    }
    let (err, _) = mean_and_stderr(&err_j);
    let (var, var_stderr) = mean_and_stderr(&var_j);
    let (bias, bias_stderr) = mean_and_stderr(&bias_j);
    let shifted = |alpha: f64| -> f64 {
        let ls: Result<Vec<f64>> = ef.iter().zip(&test.y).map(|(d, y)| loss.eval(d, y - alpha)).collect();
        ls.map(|l| mean(&l)).unwrap_or(f64::INFINITY)
    };
    let reach = 4.0 * (std_dev(&test.y, 0) + 1.0);
    let alpha = golden_section_min(shifted, -reach, reach, 1e-6 * reach);
    let at_zero = shifted(0.0);
    let dbias = (at_zero - shifted(alpha).min(at_zero)).max(0.0);
    Ok(BiasVarianceReport {
        err,
        total: mean(&total_j),
        var,
        bias,
        dbias,
        pbias: bias - dbias,
        var_stderr,
        bias_stderr,
    })
}
