use crate::learners::{Functional, PredictedBatch};
use crate::{Distribution, Error, Kind, Result};

const GRID_POINTS: usize = 401;
const TAIL: f64 = 1e-3;

/// Summary used to turn a predicted distribution into a point prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointMode {
    Mean,
    /// Minimizer of the expected loss that elicits the functional.
    Elicited(Functional),
}

/// Smallest minimizer of `c ↦ E_d[L(Y, c)]`, by grid search refined with golden sections.
///
/// The grid spans the central `1 − 2·10⁻³` probability range plus every atom of `d`.
pub fn elicit(d: &Distribution, functional: Functional) -> Result<f64> {
    if functional == Functional::Variance {
        functional.loss(0.0, 0.0)?;
    }
    let risk = |c: f64| d.expect(&|y| functional.loss(y, c).unwrap_or(f64::NAN));
    let (lo, hi) = (d.quantile(TAIL)?, d.quantile(1.0 - TAIL)?);
    let mut grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64)
        .chain(d.atoms().into_iter().map(|(a, _)| a))
        .collect();
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup();
    let values: Vec<f64> = grid.iter().map(|c| risk(*c)).collect();
    let best_value = values.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * (1.0 + best_value.abs());
    let best = values.iter().position(|v| *v <= best_value + tol).ok_or_else(|| {
        Error::Domain("expected loss is undefined on the whole grid".into())
    })?;
    if d.kind() != Kind::Continuous || grid.len() < 3 {
        return Ok(grid[best]);
    }
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(grid.len() - 1)];
    let refined = crate::numeric::golden_section_min(risk, a, b, 1e-10 * (1.0 + (b - a).abs()));
    Ok(if risk(refined) < values[best] { refined } else { grid[best] })
}

/// One point prediction per row of `batch`.
pub fn point_adaptor(batch: &PredictedBatch, mode: PointMode) -> Result<Vec<f64>> {
    batch
        .dists
        .iter()
        .map(|d| match mode {
            PointMode::Mean => d.mean(),
            PointMode::Elicited(f) => elicit(d, f),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_pmf() {
        let d = Distribution::categorical(vec![0.0, 10.0], vec![0.5, 0.5]).unwrap();
        assert!((elicit(&d, Functional::Mean).unwrap() - 5.0).abs() < 1e-9);
        assert_eq!(elicit(&d, Functional::Median).unwrap(), 0.0);
        assert!(elicit(&d, Functional::Variance).is_err());
    }

    #[test]
    fn continuous_functionals() {
        let n = Distribution::normal(3.0, 5.0).unwrap();
        let batch = PredictedBatch { dists: vec![n.clone()], estimator: "n".into(), seed: 0 };
        assert_eq!(point_adaptor(&batch, PointMode::Mean).unwrap(), vec![3.0]);
        let m = point_adaptor(&batch, PointMode::Elicited(Functional::Median)).unwrap()[0];
        assert!((m - 3.0).abs() < 1e-4, "{m}");
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        let q = elicit(&u, Functional::Quantile(0.9)).unwrap();
        assert!((q - 0.9).abs() < 1e-4, "{q}");
    }

    #[test]
    fn quantile_of_a_uniform_sample() {
        use rand::Rng;
        let mut rng = crate::seeds::rng(2);
        let sample: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let d = Distribution::empirical_uniform(sample).unwrap();
        let q = elicit(&d, Functional::Quantile(0.25)).unwrap();
        assert!((q - 0.25).abs() < 0.02, "{q}");
    }
}
