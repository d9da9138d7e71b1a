use nalgebra::DMatrix;
use rand::seq::SliceRandom;

use crate::learners::{complement, kfold_indices};
use crate::seeds;
use crate::validation::{Alternative, ComparisonResult, TestKind};
use crate::{Error, Result};

/// Neighbourhood sizes tried by the default classifier.
pub const DEFAULT_KNN_GRID: [usize; 3] = [5, 15, 31];

const INNER_FOLDS: usize = 5;

/// Probabilistic classifier predicting which sample a point came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    /// Class frequencies among the `k` nearest training points, smoothed to
    /// `(c + 1) / (k + 2)`, with `k` chosen from the grid by inner
    /// cross-validated log-loss.
    Knn { ks: Vec<usize> },
    /// The training class frequencies, ignoring the features.
    Frequencies,
}

impl Default for Classifier {
    fn default() -> Self {
        Classifier::Knn { ks: DEFAULT_KNN_GRID.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoSampleOptions {
    /// Share of each sample used for training.
    pub split: f64,
    pub classifier: Classifier,
    pub seed: u64,
    pub test: TestKind,
}

impl TwoSampleOptions {
    pub fn new(seed: u64) -> Self {
        TwoSampleOptions { split: 0.5, classifier: Classifier::default(), seed, test: TestKind::Wilcoxon }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoSampleReport {
    pub comparison: ComparisonResult,
    /// Neighbourhood size used, for the kNN classifier.
    pub k: Option<usize>,
    /// Entropy of the training class frequencies, the uninformed loss.
    pub entropy: f64,
    /// Held-out log-losses of the classifier.
    pub losses: Vec<f64>,
}

/// Tests whether two samples of feature vectors share a distribution.
///
/// Points are labelled `+1` (first sample) or `−1` (second), split stratified
/// into training and test parts, and a classifier is trained to predict the
/// label. Its held-out log-losses are tested against the entropy of the
/// training class frequencies with a one-sided test; a rejection means the
/// samples differ.
pub fn two_sample_test(s1: &DMatrix<f64>, s2: &DMatrix<f64>, opts: &TwoSampleOptions) -> Result<TwoSampleReport> {
    if s1.nrows() == 0 || s2.nrows() == 0 {
        return Err(Error::InvalidParameter("both samples must be nonempty".into()));
    }
    if s1.ncols() != s2.ncols() {
        return Err(Error::Shape { expected: s1.ncols(), got: s2.ncols() });
    }
    if !(opts.split > 0.0 && opts.split < 1.0) {
        return Err(Error::InvalidParameter(format!("split fraction must lie in (0, 1), got {}", opts.split)));
    }
    let rows: Vec<Vec<f64>> = [s1, s2]
        .iter()
        .flat_map(|m| m.row_iter().map(|r| r.iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>())
        .collect();
    let labels: Vec<bool> = (0..rows.len()).map(|i| i < s1.nrows()).collect();

    let (train, test) = stratified_split(s1.nrows(), s2.nrows(), opts.split, seeds::derive(opts.seed, "split"))?;
    if test.len() < 2 {
        return Err(Error::DegenerateSample("the test split has fewer than two points".into()));
    }
    let ones = train.iter().filter(|&&i| labels[i]).count();
    let p1 = ones as f64 / train.len() as f64;
    let entropy = -p1 * p1.ln() - (1.0 - p1) * (1.0 - p1).ln();

    let (k, probs) = match &opts.classifier {
        Classifier::Frequencies => (None, vec![p1; test.len()]),
        Classifier::Knn { ks } => {
            if ks.is_empty() || ks.contains(&0) {
                return Err(Error::InvalidParameter("kNN grid needs positive neighbourhood sizes".into()));
            }
            let k = choose_k(&rows, &labels, &train, ks, seeds::derive(opts.seed, "inner"));
            (Some(k), knn_probs(&rows, &labels, &train, &test, k))
        }
    };
    let losses: Vec<f64> =
        test.iter().zip(&probs).map(|(&i, &p)| -(if labels[i] { p } else { 1.0 - p }).ln()).collect();
    let diffs: Vec<f64> = losses.iter().map(|l| l - entropy).collect();
    let comparison = opts.test.run_or_degenerate(&diffs, Alternative::Less)?;
    Ok(TwoSampleReport { comparison, k, entropy, losses })
}

/// Training and test indices into the pooled sample, each sorted.
fn stratified_split(n1: usize, n2: usize, frac: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = seeds::rng(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, offset, n) in [(1, 0, n1), (-1, n1, n2)] {
        let mut idx: Vec<usize> = (offset..offset + n).collect();
        idx.shuffle(&mut rng);
        let m = (frac * n as f64).round() as usize;
        if m == 0 {
            return Err(Error::Stratification { class });
        }
        train.extend_from_slice(&idx[..m]);
        test.extend_from_slice(&idx[m..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Training positions ordered by distance to `query`, ties by position.
fn neighbours(rows: &[Vec<f64>], train: &[usize], query: usize) -> Vec<usize> {
    let mut order: Vec<(f64, usize)> =
        train.iter().enumerate().map(|(pos, &i)| (sq_dist(&rows[i], &rows[query]), pos)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    order.into_iter().map(|(_, pos)| pos).collect()
}

fn smoothed(labels: &[bool], train: &[usize], order: &[usize], k: usize) -> f64 {
    let k = k.min(order.len());
    let ones = order[..k].iter().filter(|&&pos| labels[train[pos]]).count();
    (ones as f64 + 1.0) / (k as f64 + 2.0)
}

fn knn_probs(rows: &[Vec<f64>], labels: &[bool], train: &[usize], test: &[usize], k: usize) -> Vec<f64> {
    test.iter().map(|&q| smoothed(labels, train, &neighbours(rows, train, q), k)).collect()
}

/// First grid entry with the smallest inner cross-validated log-loss.
fn choose_k(rows: &[Vec<f64>], labels: &[bool], train: &[usize], ks: &[usize], seed: u64) -> usize {
    let folds = match kfold_indices(train.len(), INNER_FOLDS, seed) {
        Ok(f) if ks.len() > 1 => f,
        _ => return ks[0],
    };
    let mut totals = vec![0.0; ks.len()];
    for fold in &folds {
        let inner_train: Vec<usize> = complement(train.len(), fold).into_iter().map(|p| train[p]).collect();
        for &p in fold {
            let q = train[p];
            let order = neighbours(rows, &inner_train, q);
            for (t, &k) in totals.iter_mut().zip(ks) {
                let p1 = smoothed(labels, &inner_train, &order, k);
                *t -= if labels[q] { p1 } else { 1.0 - p1 }.ln();
            }
        }
    }
    let mut best = 0;
    for (i, t) in totals.iter().enumerate() {
        if *t < totals[best] {
            best = i;
        }
    }
    ks[best]
}
