use super::Loss;
use crate::distributions::Distribution;
use crate::Result;

/// Outcome of checking properness of a loss at one true pmf.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub truth: Vec<f64>,
    /// Grid pmf with the smallest expected loss (first in grid order on ties).
    pub argmin: Vec<f64>,
    pub expected_at_truth: f64,
    pub min_expected: f64,
    /// Largest coordinate difference between `argmin` and `truth`.
    pub max_deviation: f64,
    /// Grid pmfs whose expected loss undercuts the truth by more than the tolerance.
    pub violations: usize,
    /// Grid pmfs whose expected loss ties the minimum within the tolerance.
    pub ties: usize,
    pub grid_size: usize,
}

/// All pmfs on `n` outcomes whose entries are multiples of `1 / steps`.
pub fn simplex_grid(n: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, steps: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == n {
            cur.push(left);
            out.push(cur.iter().map(|k| *k as f64 / steps as f64).collect());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(n, left - k, steps, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(n, steps, steps, &mut Vec::new(), &mut out);
    }
    out
}

/// Kullback-Leibler divergence `Σ p log(p / q)` of two pmfs on the same outcomes.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| if *qi > 0.0 { pi * (pi / qi).ln() } else { f64::INFINITY })
        .sum()
}

fn expected(loss: &Loss, q: &[f64], truth: &[f64]) -> Result<f64> {
    let labels: Vec<f64> = (0..q.len()).map(|i| i as f64).collect();
    let pred = Distribution::categorical(labels, q.to_vec())?;
    let mut total = 0.0;
    for (i, p) in truth.iter().enumerate() {
        if *p > 0.0 {
            total += p * loss.eval(&pred, i as f64)?;
        }
    }
    Ok(total)
}

/// Expected loss over every grid pmf, compared against the expected loss of the truth.
pub fn properness_probe(loss: &Loss, truth: &[f64], steps: usize) -> Result<ProbeReport> {
    const TOL: f64 = 1e-12;
    let grid = simplex_grid(truth.len(), steps);
    let at_truth = expected(loss, truth, truth)?;
    let mut best = (f64::INFINITY, 0usize);
    let mut values = Vec::with_capacity(grid.len());
    for (i, q) in grid.iter().enumerate() {
        let v = expected(loss, q, truth)?;
        if v < best.0 {
            best = (v, i);
        }
        values.push(v);
    }
    let argmin = grid[best.1].clone();
    let max_deviation = argmin.iter().zip(truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(ProbeReport {
        truth: truth.to_vec(),
        argmin,
        expected_at_truth: at_truth,
        min_expected: best.0,
        max_deviation,
        violations: values.iter().filter(|v| **v < at_truth - TOL * at_truth.abs().max(1.0)).count(),
        ties: values.iter().filter(|v| (**v - best.0).abs() <= TOL * best.0.abs().max(1.0)).count(),
        grid_size: grid.len(),
    })
}
