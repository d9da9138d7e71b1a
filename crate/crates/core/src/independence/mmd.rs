use crate::losses::KernelFn;
use crate::{Distribution, Error, Loss, Result};

fn mean_kernel(a: &[f64], b: &[f64], kernel: &KernelFn) -> f64 {
    let total: f64 = a.iter().map(|x| b.iter().map(|z| kernel.eval(*x, *z)).sum::<f64>()).sum();
    total / (a.len() * b.len()) as f64
}

fn require_nonempty(s: &[f64], which: &str) -> Result<()> {
    if s.is_empty() {
        return Err(Error::InvalidParameter(format!("{which} sample is empty")));
    }
    Ok(())
}

/// Biased kernel maximum mean discrepancy between two univariate samples.
///
/// `mean k(S1, S1) + mean k(S2, S2) − 2 mean k(S1, S2)`.
pub fn mmd_statistic(s1: &[f64], s2: &[f64], kernel: &KernelFn) -> Result<f64> {
    require_nonempty(s1, "first")?;
    require_nonempty(s2, "second")?;
    Ok(mean_kernel(s1, s1, kernel) + mean_kernel(s2, s2, kernel) - 2.0 * mean_kernel(s1, s2, kernel))
}

/// Both sides of the kernel-loss/MMD identity on one pair of samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmdIdentity {
    /// In-sample kernel loss of the per-sample empirical predictor minus that
    /// of the pooled empirical predictor.
    pub predictive_difference: f64,
    pub mmd: f64,
    /// `−(N1·N2 / N²) · mmd`, which the predictive difference equals exactly.
    pub scaled_mmd: f64,
}

impl MmdIdentity {
    /// Whether the predictive difference equals the MMD itself within `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        (self.predictive_difference - self.mmd).abs() <= tol
    }

    /// Whether the predictive difference equals the sample-share scaled MMD within `tol`.
    pub fn holds_scaled(&self, tol: f64) -> bool {
        (self.predictive_difference - self.scaled_mmd).abs() <= tol
    }
}

/// Evaluates the kernel-loss difference between the informed predictor (the
/// empirical distribution of the sample a point came from) and the
/// uninformed one (the pooled empirical distribution), scoring on the same
/// points that built the predictors, next to the MMD statistic.
pub fn mmd_identity_check(s1: &[f64], s2: &[f64], kernel: &KernelFn) -> Result<MmdIdentity> {
    let mmd = mmd_statistic(s1, s2, kernel)?;
    let loss = Loss::kernel(*kernel);
    let p1 = Distribution::empirical_uniform(s1.to_vec())?;
    let p2 = Distribution::empirical_uniform(s2.to_vec())?;
    let pooled = Distribution::empirical_uniform(s1.iter().chain(s2).copied().collect())?;
    let n = (s1.len() + s2.len()) as f64;
    let mut informed = 0.0;
    let mut uninformed = 0.0;
    for (p, s) in [(&p1, s1), (&p2, s2)] {
        for &y in s {
            informed += loss.eval(p, y)?;
            uninformed += loss.eval(&pooled, y)?;
        }
    }
    let share = s1.len() as f64 * s2.len() as f64 / (n * n);
    Ok(MmdIdentity { predictive_difference: (informed - uninformed) / n, mmd, scaled_mmd: -share * mmd })
}
