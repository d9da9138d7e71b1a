use std::fmt;

use statrs::function::beta::beta_reg;

use crate::numeric::{mean, std_dev, std_normal_cdf};
use crate::{Error, Result};

/// Largest effective sample size for which the exact signed-rank null is enumerated.
pub const EXACT_WILCOXON_MAX_N: usize = 25;

/// Which paired test produced a [`ComparisonResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TestKind {
    #[default]
    Wilcoxon,
    PairedT,
}

impl TestKind {
    pub fn name(self) -> &'static str {
        match self {
            TestKind::Wilcoxon => "wilcoxon",
            TestKind::PairedT => "paired_t",
        }
    }

    pub fn run(self, diffs: &[f64], alternative: Alternative) -> Result<ComparisonResult> {
        match self {
            TestKind::Wilcoxon => wilcoxon_signed_rank(diffs, alternative),
            TestKind::PairedT => paired_t_test(diffs, alternative),
        }
    }

    /// Runs the test, reporting a degenerate sample as `p = 1` instead of an error.
    pub fn run_or_degenerate(self, diffs: &[f64], alternative: Alternative) -> Result<ComparisonResult> {
        match self.run(diffs, alternative) {
            Err(Error::DegenerateSample(_)) => Ok(ComparisonResult::degenerate(self, diffs)),
            other => other,
        }
    }
}

impl std::str::FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wilcoxon" => Ok(TestKind::Wilcoxon),
            "paired_t" | "t" => Ok(TestKind::PairedT),
            other => Err(Error::InvalidParameter(format!("unknown test `{other}`"))),
        }
    }
}

/// Alternative hypothesis about the location of the differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alternative {
    TwoSided,
    /// Differences tend to be negative.
    Less,
    /// Differences tend to be positive.
    Greater,
}

/// Outcome of a paired location test.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonResult {
    pub test: TestKind,
    pub statistic: f64,
    pub p_value: f64,
    /// Sign of the mean finite difference: −1, 0 or 1.
    pub direction: i8,
    /// Pairs that entered the test.
    pub n: usize,
    /// Pairs dropped because their difference was not finite.
    pub excluded: usize,
    pub degenerate: bool,
}

impl ComparisonResult {
    pub fn degenerate(test: TestKind, diffs: &[f64]) -> Self {
        let (finite, excluded) = split_finite(diffs);
        ComparisonResult {
            test,
            statistic: 0.0,
            p_value: 1.0,
            direction: direction(&finite),
            n: finite.len(),
            excluded,
            degenerate: true,
        }
    }
}

impl fmt::Display for ComparisonResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} statistic={:.4} p={:.4} n={}", self.test.name(), self.statistic, self.p_value, self.n)
    }
}

fn split_finite(diffs: &[f64]) -> (Vec<f64>, usize) {
    let finite: Vec<f64> = diffs.iter().copied().filter(|d| d.is_finite()).collect();
    let excluded = diffs.len() - finite.len();
    (finite, excluded)
}

fn direction(diffs: &[f64]) -> i8 {
    let m = if diffs.is_empty() { 0.0 } else { mean(diffs) };
    if m > 0.0 {
        1
    } else if m < 0.0 {
        -1
    } else {
        0
    }
}

/// Average ranks of `values` (1-based), ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Null distribution of the doubled positive-rank sum over all sign assignments.
fn exact_null(doubled_ranks: &[usize]) -> Vec<f64> {
    let total: usize = doubled_ranks.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in doubled_ranks {
        for s in (0..=reach).rev() {
            if counts[s] > 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let scale = 0.5f64.powi(doubled_ranks.len() as i32);
    counts.iter().map(|c| c * scale).collect()
}

/// Wilcoxon signed-rank test on paired differences.
///
/// Zero and non-finite differences are dropped; tied magnitudes get average
/// ranks. The statistic is the sum of ranks of positive differences.
pub fn wilcoxon_signed_rank(diffs: &[f64], alternative: Alternative) -> Result<ComparisonResult> {
    let (finite, excluded) = split_finite(diffs);
    let nonzero: Vec<f64> = finite.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nonzero.len();
    if n == 0 {
        return Err(Error::DegenerateSample("every paired difference is zero".into()));
    }
    let ranks = average_ranks(&nonzero.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let w: f64 = nonzero.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let p = if n <= EXACT_WILCOXON_MAX_N {
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let null = exact_null(&doubled);
        let obs = (2.0 * w).round() as usize;
        let upper: f64 = null[obs..].iter().sum();
        let lower: f64 = null[..=obs].iter().sum();
        match alternative {
            Alternative::Greater => upper,
            Alternative::Less => lower,
            Alternative::TwoSided => (2.0 * upper.min(lower)).min(1.0),
        }
    } else {
        let nf = n as f64;
        let mu = nf * (nf + 1.0) / 4.0;
        let mut ties = 0.0;
        let mut sorted = ranks.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let mut i = 0;
        while i < sorted.len() {
            let j = sorted[i..].iter().take_while(|r| **r == sorted[i]).count();
            let t = j as f64;
            ties += t * t * t - t;
            i += j;
        }
        let sigma = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0).sqrt();
        match alternative {
            Alternative::Greater => 1.0 - std_normal_cdf((w - mu - 0.5) / sigma),
            Alternative::Less => std_normal_cdf((w - mu + 0.5) / sigma),
            Alternative::TwoSided => {
                let z = ((w - mu).abs() - 0.5).max(0.0) / sigma;
                (2.0 * (1.0 - std_normal_cdf(z))).min(1.0)
            }
        }
    };
    Ok(ComparisonResult {
        test: TestKind::Wilcoxon,
        statistic: w,
        p_value: p.clamp(0.0, 1.0),
        direction: direction(&finite),
        n,
        excluded,
        degenerate: false,
    })
}

/// Upper tail `P(T ≥ t)` of Student's t with `df` degrees of freedom.
pub fn student_t_upper(t: f64, df: f64) -> f64 {
    let tail = 0.5 * beta_reg(df / 2.0, 0.5, df / (df + t * t));
    if t >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Paired t-test with `n − 1` degrees of freedom.
pub fn paired_t_test(diffs: &[f64], alternative: Alternative) -> Result<ComparisonResult> {
    let (finite, excluded) = split_finite(diffs);
    let n = finite.len();
    if n < 2 {
        return Err(Error::DegenerateSample(format!("a t-test needs two finite differences, got {n}")));
    }
    let sd = std_dev(&finite, 1);
    if sd.is_nan() || sd <= 0.0 {
        return Err(Error::DegenerateSample("paired differences have zero variance".into()));
    }
    let t = mean(&finite) / (sd / (n as f64).sqrt());
    let df = (n - 1) as f64;
    let p = match alternative {
        Alternative::Greater => student_t_upper(t, df),
        Alternative::Less => student_t_upper(-t, df),
        Alternative::TwoSided => (2.0 * student_t_upper(t.abs(), df)).min(1.0),
    };
    Ok(ComparisonResult {
        test: TestKind::PairedT,
        statistic: t,
        p_value: p.clamp(0.0, 1.0),
        direction: direction(&finite),
        n,
        excluded,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    /// Brute-force enumeration of all sign assignments.
    fn enumerate(diffs: &[f64], alternative: Alternative) -> f64 {
        let ranks = average_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
        let w: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
        let n = diffs.len();
        let (mut ge, mut le) = (0u64, 0u64);
        for mask in 0..(1u64 << n) {
            let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            if s >= w - 1e-9 {
                ge += 1;
            }
            if s <= w + 1e-9 {
                le += 1;
            }
        }
        let total = (1u64 << n) as f64;
        match alternative {
            Alternative::Greater => ge as f64 / total,
            Alternative::Less => le as f64 / total,
            Alternative::TwoSided => (2.0 * (ge.min(le) as f64) / total).min(1.0),
        }
    }

    #[test]
    fn all_positive_five() {
        let r = wilcoxon_signed_rank(&[0.3, 1.0, 2.0, 0.1, 5.0], Alternative::Greater).unwrap();
        assert_eq!(r.p_value, 1.0 / 32.0);
        assert_eq!(r.statistic, 15.0);
        assert_eq!(r.direction, 1);
    }

    #[test]
    fn exact_matches_enumeration() {
        let mut rng = crate::seeds::rng(21);
        for trial in 0..60 {
            let n = 1 + trial % 12;
            // Rounded values create ties among the magnitudes.
            let d: Vec<f64> = (0..n).map(|_| (rng.sample::<f64, _>(StandardNormal) * 2.0).round() + 0.5 * rng.random_range(0..2) as f64).filter(|v| *v != 0.0).collect();
            if d.is_empty() {
                continue;
            }
            for alt in [Alternative::Greater, Alternative::Less, Alternative::TwoSided] {
                let got = wilcoxon_signed_rank(&d, alt).unwrap().p_value;
                let want = enumerate(&d, alt);
                assert!((got - want).abs() < 1e-15, "{d:?} {alt:?} {got} {want}");
            }
        }
    }

    #[test]
    fn mirrored_diffs_share_two_sided_p() {
        let d = [0.4, -1.2, 2.5, 3.1, -0.2, 0.9, 1.7];
        let m: Vec<f64> = d.iter().map(|x| -x).collect();
        let a = wilcoxon_signed_rank(&d, Alternative::TwoSided).unwrap();
        let b = wilcoxon_signed_rank(&m, Alternative::TwoSided).unwrap();
        assert_eq!(a.p_value, b.p_value);
        assert_eq!(a.direction, -b.direction);
    }

    #[test]
    fn degenerate_samples() {
        assert!(matches!(wilcoxon_signed_rank(&[0.0, 0.0], Alternative::TwoSided), Err(Error::DegenerateSample(_))));
        assert!(matches!(paired_t_test(&[1.0; 4], Alternative::TwoSided), Err(Error::DegenerateSample(_))));
        let r = TestKind::Wilcoxon.run_or_degenerate(&[0.0; 3], Alternative::TwoSided).unwrap();
        assert!(r.degenerate && r.p_value == 1.0);
    }

    #[test]
    fn t_test_values() {
        let r = paired_t_test(&[-1.0, 1.0], Alternative::TwoSided).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-15);
        // t = 2 with 4 degrees of freedom: two-sided p = 0.116117...
        let d = [1.0, 2.0, 3.0, 0.0, 4.0];
        let sd = std_dev(&d, 1);
        let shift = 2.0 * sd / 5f64.sqrt() - 2.0;
        let d: Vec<f64> = d.iter().map(|x| x + shift).collect();
        let r = paired_t_test(&d, Alternative::TwoSided).unwrap();
        assert!((r.statistic - 2.0).abs() < 1e-12);
        assert!((r.p_value - 0.116_116_523_516_815_6).abs() < 1e-9, "{}", r.p_value);
    }

    #[test]
    fn large_sample_p_values_are_uniform_under_the_null() {
        let mut ps: Vec<f64> = (0..500u64)
            .map(|s| {
                let mut rng = crate::seeds::rng(crate::seeds::derive_index(77, s));
                let d: Vec<f64> = (0..30).map(|_| rng.sample(StandardNormal)).collect();
                wilcoxon_signed_rank(&d, Alternative::TwoSided).unwrap().p_value
            })
            .collect();
        ps.sort_by(|a, b| a.total_cmp(b));
        let n = ps.len() as f64;
        let ks = ps
            .iter()
            .enumerate()
            .map(|(i, p)| (p - i as f64 / n).abs().max(((i + 1) as f64 / n - p).abs()))
            .fold(0.0, f64::max);
        assert!(ks < 1.628 / n.sqrt(), "{ks}");
    }

    #[test]
    fn tests_agree_on_strong_shifts() {
        let mut rng = crate::seeds::rng(5);
        let d: Vec<f64> = (0..200).map(|_| 0.8 + rng.sample::<f64, _>(StandardNormal)).collect();
        let w = wilcoxon_signed_rank(&d, Alternative::Greater).unwrap();
        let t = paired_t_test(&d, Alternative::Greater).unwrap();
        assert!(w.p_value < 0.01 && t.p_value < 0.01);
        assert!(w.excluded == 0 && t.n == 200);
        let with_inf = [1.0, f64::INFINITY, 2.0, -0.5];
        assert_eq!(wilcoxon_signed_rank(&with_inf, Alternative::TwoSided).unwrap().excluded, 1);
    }
}
