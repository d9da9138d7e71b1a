use std::fmt;

use nalgebra::DMatrix;

use super::params::{nest, split_path, Grid, ParamMap, ParamValue};
use super::point::{ConstantSpec, FittedPoint, Functional, PointContext, PointLearner};
use super::tuning::{grid_search, TuningReport};
use super::{Dataset, FitOptions, TINY};
use crate::composite::{histogram_adaptor, kernel_density_adaptor, silverman_bandwidth, sturges_edges};
use crate::distributions::{Diffeomorphism, Distribution, KernelShape};
use crate::meta::{self, FittedGentle, FittedGreedy};
use crate::numeric::{mean, std_dev};
use crate::{Error, Loss, Result};

/// Density estimator applied to a one-dimensional sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityAdaptor {
    /// Gaussian kernel density with Silverman's bandwidth.
    Kernel,
    /// Histogram on Sturges bins.
    Histogram,
    /// Normal with the sample mean and standard deviation.
    Normal,
}

impl DensityAdaptor {
    pub fn name(self) -> &'static str {
        match self {
            DensityAdaptor::Kernel => "kernel",
            DensityAdaptor::Histogram => "hist",
            DensityAdaptor::Normal => "normal",
        }
    }

    pub fn estimate(self, sample: &[f64], opts: &FitOptions) -> Result<Distribution> {
        match self {
            DensityAdaptor::Kernel => {
                let h = silverman_bandwidth(sample);
                let w = vec![1.0 / sample.len() as f64; sample.len()];
                kernel_density_adaptor(sample, &w, sample.len(), 1, KernelShape::Gaussian, h, opts.seed)
            }
            DensityAdaptor::Histogram => histogram_adaptor(sample, &sturges_edges(sample)),
            DensityAdaptor::Normal => {
                let ddof = opts.std_denominator.ddof();
                let s = if sample.len() > ddof { std_dev(sample, ddof) } else { 0.0 };
                Distribution::normal(mean(sample), s.max(TINY))
            }
        }
    }
}

impl std::str::FromStr for DensityAdaptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kernel" | "kde" => Ok(DensityAdaptor::Kernel),
            "hist" | "histogram" => Ok(DensityAdaptor::Histogram),
            "normal" => Ok(DensityAdaptor::Normal),
            other => Err(Error::InvalidParameter(format!("unknown density adaptor `{other}`"))),
        }
    }
}

/// Location-scale family of a parametric composite. The dispersion is always a standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Normal,
    /// Scale `b = s/√2`.
    Laplace,
    /// Half-width `√3·s` around the location.
    Uniform,
}

impl Shape {
    pub fn name(self) -> &'static str {
        match self {
            Shape::Normal => "N",
            Shape::Laplace => "Laplace",
            Shape::Uniform => "Uniform",
        }
    }

    pub fn build(self, loc: f64, s: f64) -> Result<Distribution> {
        let s = if s.is_nan() { TINY } else { s.max(TINY) };
        match self {
            Shape::Normal => Distribution::normal(loc, s),
            Shape::Laplace => Distribution::laplace(loc, s / std::f64::consts::SQRT_2),
            Shape::Uniform => {
                let w = 3f64.sqrt() * s;
                Distribution::uniform(loc - w, loc + w)
            }
        }
    }
}

impl std::str::FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N" | "normal" => Ok(Shape::Normal),
            "Laplace" | "laplace" => Ok(Shape::Laplace),
            "Uniform" | "uniform" => Ok(Shape::Uniform),
            other => Err(Error::InvalidParameter(format!("unknown shape `{other}`"))),
        }
    }
}

/// Shapes whose parameters are fitted by learners of elicitable functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElicitedShape {
    /// Median location and mean absolute deviation from it as the scale.
    Laplace,
    /// Interval recovered from the `alpha` and `1 − alpha` quantiles.
    Uniform { alpha: f64 },
}

/// Reference density mixed in by the capping wrapper.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapReference {
    Uniform01,
    /// Pull-back of the uniform through the logistic sigmoid, with pdf `s(x)(1 − s(x))`.
    Sigmoid,
}

impl CapReference {
    pub fn name(self) -> &'static str {
        match self {
            CapReference::Uniform01 => "uniform01",
            CapReference::Sigmoid => "sigmoid",
        }
    }

    pub fn distribution(self) -> Result<Distribution> {
        let u = Distribution::uniform(0.0, 1.0)?;
        match self {
            CapReference::Uniform01 => Ok(u),
            CapReference::Sigmoid => u.pullback(&Diffeomorphism::Sigmoid),
        }
    }
}

impl std::str::FromStr for CapReference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform01" | "uniform" => Ok(CapReference::Uniform01),
            "sigmoid" => Ok(CapReference::Sigmoid),
            other => Err(Error::InvalidParameter(format!("unknown cap reference `{other}`"))),
        }
    }
}

/// Probabilistic prediction strategy, unfitted.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbEstimator {
    /// One density estimated from the training labels, predicted for every row.
    Baseline(DensityAdaptor),
    /// `shape(loc(x), disp(x))`; the dispersion learner sees the location's in-sample predictions.
    Parametric { shape: Shape, loc: PointLearner, disp: PointLearner },
    /// Point prediction plus a density of its signed training residuals.
    Classical { point: PointLearner, residual: DensityAdaptor },
    /// Shape parameters fitted as elicitable functionals.
    Elicited { shape: ElicitedShape, first: PointLearner, second: PointLearner },
    /// `eps · reference + (1 − eps) · inner`.
    Cap { inner: Box<ProbEstimator>, eps: f64, reference: CapReference },
    /// Uniform mixture of members fitted on random subsets.
    Bag { inner: Box<ProbEstimator>, n: usize, frac: f64, bootstrap: bool },
    /// Greedy residual boosting with `k` weak learners on the unit interval.
    BoostGreedy { k: usize, alpha: f64 },
    /// Gentle boosting over `rounds` reweighted fits.
    BoostGentle { rounds: usize, alpha: f64, gamma: f64 },
    /// Inner estimator with parameters chosen by inner cross-validation.
    Tuned { inner: Box<ProbEstimator>, grid: Grid, loss: Loss },
    /// Always predicts the given distribution.
    Fixed(Distribution),
}

/// Predictions for a batch of query rows, in row order.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedBatch {
    pub dists: Vec<Distribution>,
    pub estimator: String,
    pub seed: u64,
}

impl PredictedBatch {
    pub fn len(&self) -> usize {
        self.dists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dists.is_empty()
    }
}

/// A fitted probabilistic estimator.
#[derive(Debug, Clone)]
pub struct FittedProb {
    pub estimator: String,
    pub seed: u64,
    pub(crate) state: FittedState,
}

#[derive(Debug, Clone)]
pub(crate) enum FittedState {
    Constant { dist: Distribution, n_features: usize },
    Parametric { shape: Shape, loc: FittedPoint, disp: FittedPoint },
    Classical { point: FittedPoint, residual: Distribution },
    Elicited { shape: ElicitedShape, first: FittedPoint, second: FittedPoint },
    Cap { inner: Box<FittedProb>, eps: f64, reference: Distribution },
    Bag(Vec<FittedProb>),
    Greedy(FittedGreedy),
    Gentle(FittedGentle),
    Tuned { inner: Box<FittedProb>, report: TuningReport },
}

impl ProbEstimator {
    pub fn parametric(shape: Shape, loc: PointLearner, disp: PointLearner) -> Self {
        ProbEstimator::Parametric { shape, loc, disp }
    }

    /// `N(p=C(mean(y)), s=C(std(y)))`.
    pub fn normal_baseline() -> Self {
        Self::parametric(Shape::Normal, PointLearner::Constant(ConstantSpec::Mean), PointLearner::Constant(ConstantSpec::Std))
    }

    pub fn capped(self, eps: f64, reference: CapReference) -> Self {
        ProbEstimator::Cap { inner: Box::new(self), eps, reference }
    }

    pub fn tuned(self, grid: Grid, loss: Loss) -> Self {
        ProbEstimator::Tuned { inner: Box::new(self), grid, loss }
    }

    pub fn fit(&self, data: &Dataset, opts: &FitOptions) -> Result<FittedProb> {
        let state = match self {
            ProbEstimator::Baseline(adaptor) => {
                FittedState::Constant { dist: adaptor.estimate(&data.y, opts)?, n_features: data.n_features() }
            }
            ProbEstimator::Fixed(d) => FittedState::Constant { dist: d.clone(), n_features: data.n_features() },
            ProbEstimator::Parametric { shape, loc, disp } => {
                let ctx = PointContext::new(opts);
                let loc = loc.fit(data, &ctx)?;
                let base = loc.predict(&data.x)?;
                let disp = disp.fit(data, &PointContext { base: Some(&base), ..ctx })?;
                FittedState::Parametric { shape: *shape, loc, disp }
            }
            ProbEstimator::Classical { point, residual } => {
                let point = point.fit(data, &PointContext::new(opts))?;
                let pred = point.predict(&data.x)?;
                let r: Vec<f64> = data.y.iter().zip(&pred).map(|(y, p)| y - p).collect();
                if r.iter().all(|v| v.abs() <= TINY) {
                    log::warn!("point learner interpolates the training labels; residual density is degenerate");
                }
                FittedState::Classical { point, residual: residual.estimate(&r, opts)? }
            }
            ProbEstimator::Elicited { shape, first, second } => fit_elicited(*shape, first, second, data, opts)?,
            ProbEstimator::Cap { inner, eps, reference } => {
                if !(0.0..1.0).contains(eps) {
                    return Err(Error::InvalidParameter(format!("cap weight must lie in [0, 1), got {eps}")));
                }
                FittedState::Cap { inner: Box::new(inner.fit(data, opts)?), eps: *eps, reference: reference.distribution()? }
            }
            ProbEstimator::Bag { inner, n, frac, bootstrap } => {
                FittedState::Bag(meta::fit_bagged(inner, *n, *frac, *bootstrap, data, opts)?)
            }
            ProbEstimator::BoostGreedy { k, alpha } => FittedState::Greedy(meta::fit_greedy(*k, *alpha, data, opts)?),
            ProbEstimator::BoostGentle { rounds, alpha, gamma } => {
                FittedState::Gentle(meta::fit_gentle(*rounds, *alpha, *gamma, &Loss::Log, data, opts)?)
            }
            ProbEstimator::Tuned { inner, grid, loss } => {
                let (fitted, report) = grid_search(inner, grid, loss, data, opts)?;
                FittedState::Tuned { inner: Box::new(fitted), report }
            }
        };
        Ok(FittedProb { estimator: self.to_string(), seed: opts.seed, state })
    }

    pub fn params(&self) -> ParamMap {
        let mut m = ParamMap::new();
        let text = |s: &str| ParamValue::Text(s.to_string());
        match self {
            ProbEstimator::Baseline(a) => {
                m.insert("adaptor".into(), text(a.name()));
            }
            ProbEstimator::Parametric { shape, loc, disp } => {
                m.insert("shape".into(), text(shape.name()));
                nest(&mut m, "p", loc.params());
                nest(&mut m, "s", disp.params());
            }
            ProbEstimator::Classical { point, residual } => {
                m.insert("residual".into(), text(residual.name()));
                nest(&mut m, "point", point.params());
            }
            ProbEstimator::Elicited { shape, first, second } => {
                if let ElicitedShape::Uniform { alpha } = shape {
                    m.insert("alpha".into(), ParamValue::Float(*alpha));
                }
                nest(&mut m, "first", first.params());
                nest(&mut m, "second", second.params());
            }
            ProbEstimator::Cap { inner, eps, reference } => {
                m.insert("eps".into(), ParamValue::Float(*eps));
                m.insert("ref".into(), text(reference.name()));
                nest(&mut m, "inner", inner.params());
            }
            ProbEstimator::Bag { inner, n, frac, bootstrap } => {
                m.insert("n".into(), ParamValue::Int(*n as i64));
                m.insert("frac".into(), ParamValue::Float(*frac));
                m.insert("boot".into(), ParamValue::Bool(*bootstrap));
                nest(&mut m, "inner", inner.params());
            }
            ProbEstimator::BoostGreedy { k, alpha } => {
                m.insert("k".into(), ParamValue::Int(*k as i64));
                m.insert("alpha".into(), ParamValue::Float(*alpha));
            }
            ProbEstimator::BoostGentle { rounds, alpha, gamma } => {
                m.insert("M".into(), ParamValue::Int(*rounds as i64));
                m.insert("alpha".into(), ParamValue::Float(*alpha));
                m.insert("gamma".into(), ParamValue::Float(*gamma));
            }
            ProbEstimator::Tuned { inner, .. } => nest(&mut m, "inner", inner.params()),
            ProbEstimator::Fixed(_) => {}
        }
        m
    }

    pub fn set_param(&mut self, path: &str, value: &ParamValue) -> Result<()> {
        match (self, split_path(path)) {
            (ProbEstimator::Baseline(a), ("adaptor", None)) => *a = value.as_text()?.parse()?,
            (ProbEstimator::Parametric { shape, .. }, ("shape", None)) => *shape = value.as_text()?.parse()?,
            (ProbEstimator::Parametric { loc, .. }, ("p", Some(rest))) => loc.set_param(rest, value)?,
            (ProbEstimator::Parametric { disp, .. }, ("s", Some(rest))) => disp.set_param(rest, value)?,
            (ProbEstimator::Classical { residual, .. }, ("residual", None)) => *residual = value.as_text()?.parse()?,
            (ProbEstimator::Classical { point, .. }, ("point", Some(rest))) => point.set_param(rest, value)?,
            (ProbEstimator::Elicited { shape: ElicitedShape::Uniform { alpha }, .. }, ("alpha", None)) => {
                *alpha = value.as_f64()?
            }
            (ProbEstimator::Elicited { first, .. }, ("first", Some(rest))) => first.set_param(rest, value)?,
            (ProbEstimator::Elicited { second, .. }, ("second", Some(rest))) => second.set_param(rest, value)?,
            (ProbEstimator::Cap { eps, .. }, ("eps", None)) => *eps = value.as_f64()?,
            (ProbEstimator::Cap { reference, .. }, ("ref", None)) => *reference = value.as_text()?.parse()?,
            (ProbEstimator::Bag { n, .. }, ("n", None)) => *n = value.as_usize()?,
            (ProbEstimator::Bag { frac, .. }, ("frac", None)) => *frac = value.as_f64()?,
            (ProbEstimator::Bag { bootstrap, .. }, ("boot", None)) => *bootstrap = value.as_bool()?,
            (ProbEstimator::BoostGreedy { k, .. }, ("k", None)) => *k = value.as_usize()?,
            (ProbEstimator::BoostGreedy { alpha, .. }, ("alpha", None)) => *alpha = value.as_f64()?,
            (ProbEstimator::BoostGentle { rounds, .. }, ("M", None)) => *rounds = value.as_usize()?,
            (ProbEstimator::BoostGentle { alpha, .. }, ("alpha", None)) => *alpha = value.as_f64()?,
            (ProbEstimator::BoostGentle { gamma, .. }, ("gamma", None)) => *gamma = value.as_f64()?,
            (
                ProbEstimator::Cap { inner, .. } | ProbEstimator::Bag { inner, .. } | ProbEstimator::Tuned { inner, .. },
                ("inner", Some(rest)),
            ) => inner.set_param(rest, value)?,
            _ => return Err(Error::UnknownParameter(path.to_string())),
        }
        Ok(())
    }

    pub fn with_params(&self, params: &ParamMap) -> Result<Self> {
        let mut out = self.clone();
        for (k, v) in params {
            out.set_param(k, v)?;
        }
        Ok(out)
    }
}

fn fit_elicited(
    shape: ElicitedShape,
    first: &PointLearner,
    second: &PointLearner,
    data: &Dataset,
    opts: &FitOptions,
) -> Result<FittedState> {
    let ctx = PointContext::new(opts);
    let (first, second) = match shape {
        ElicitedShape::Laplace => {
            let m = first.fit(data, &PointContext { functional: Functional::Median, ..ctx })?;
            let pred = m.predict(&data.x)?;
            let dev: Vec<f64> = data.y.iter().zip(&pred).map(|(y, p)| (y - p).abs()).collect();
            let b = second.fit(&data.with_labels(dev)?, &PointContext { functional: Functional::MeanAbsDeviation, ..ctx })?;
            (m, b)
        }
        ElicitedShape::Uniform { alpha } => {
            if !(alpha > 0.0 && alpha < 0.5) {
                return Err(Error::InvalidParameter(format!("quantile level must lie in (0, 0.5), got {alpha}")));
            }
            let lo = first.fit(data, &PointContext { functional: Functional::Quantile(alpha), ..ctx })?;
            let hi = second.fit(data, &PointContext { functional: Functional::Quantile(1.0 - alpha), ..ctx })?;
            (lo, hi)
        }
    };
    Ok(FittedState::Elicited { shape, first, second })
}

fn elicited_distribution(shape: ElicitedShape, a: f64, b: f64) -> Result<Distribution> {
    match shape {
        ElicitedShape::Laplace => Distribution::laplace(a, b.max(TINY)),
        ElicitedShape::Uniform { alpha } => {
            let (qa, qb) = if a <= b { (a, b) } else { (b, a) };
            let width = ((qb - qa) / (1.0 - 2.0 * alpha)).max(TINY);
            let lo = qa - alpha * width;
            Distribution::uniform(lo, lo + width)
        }
    }
}

impl FittedProb {
    pub fn n_features(&self) -> usize {
        match &self.state {
            FittedState::Constant { n_features, .. } => *n_features,
            FittedState::Parametric { loc, .. } => loc.n_features(),
            FittedState::Classical { point, .. } => point.n_features(),
            FittedState::Elicited { first, .. } => first.n_features(),
            FittedState::Cap { inner, .. } | FittedState::Tuned { inner, .. } => inner.n_features(),
            FittedState::Bag(members) => members[0].n_features(),
            FittedState::Greedy(g) => g.n_features(),
            FittedState::Gentle(g) => g.n_features(),
        }
    }

    /// Grid-search outcome when the estimator was tuned.
    pub fn tuning(&self) -> Option<&TuningReport> {
        match &self.state {
            FittedState::Tuned { report, .. } => Some(report),
            _ => None,
        }
    }

    /// Ensemble members of a fitted `Bag`.
    pub fn members(&self) -> Option<&[FittedProb]> {
        match &self.state {
            FittedState::Bag(members) => Some(members),
            FittedState::Tuned { inner, .. } => inner.members(),
            _ => None,
        }
    }

    pub fn greedy(&self) -> Option<&FittedGreedy> {
        match &self.state {
            FittedState::Greedy(g) => Some(g),
            FittedState::Tuned { inner, .. } => inner.greedy(),
            _ => None,
        }
    }

    /// Whether a least-squares learner inside needed the ridge fallback.
    pub fn used_ridge_fallback(&self) -> bool {
        match &self.state {
            FittedState::Parametric { loc, disp, .. } => loc.used_ridge_fallback() || disp.used_ridge_fallback(),
            FittedState::Classical { point, .. } => point.used_ridge_fallback(),
            FittedState::Elicited { first, second, .. } => first.used_ridge_fallback() || second.used_ridge_fallback(),
            FittedState::Cap { inner, .. } | FittedState::Tuned { inner, .. } => inner.used_ridge_fallback(),
            FittedState::Bag(members) => members.iter().any(FittedProb::used_ridge_fallback),
            _ => false,
        }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<PredictedBatch> {
        Ok(PredictedBatch { dists: self.predict_dists(x)?, estimator: self.estimator.clone(), seed: self.seed })
    }

    pub(crate) fn predict_dists(&self, x: &DMatrix<f64>) -> Result<Vec<Distribution>> {
        if x.ncols() != self.n_features() {
            return Err(Error::Shape { expected: self.n_features(), got: x.ncols() });
        }
        let rows = x.nrows();
        match &self.state {
            FittedState::Constant { dist, .. } => Ok(vec![dist.clone(); rows]),
            FittedState::Parametric { shape, loc, disp } => {
                let (m, s) = (loc.predict(x)?, disp.predict(x)?);
                m.iter().zip(&s).map(|(m, s)| shape.build(*m, *s)).collect()
            }
            FittedState::Classical { point, residual } => point
                .predict(x)?
                .into_iter()
                .map(|p| residual.pushforward(&Diffeomorphism::affine(1.0, p)?))
                .collect(),
            FittedState::Elicited { shape, first, second } => {
                let (a, b) = (first.predict(x)?, second.predict(x)?);
                a.iter().zip(&b).map(|(a, b)| elicited_distribution(*shape, *a, *b)).collect()
            }
            FittedState::Cap { inner, eps, reference } => {
                let base = inner.predict_dists(x)?;
                if *eps == 0.0 {
                    return Ok(base);
                }
                base.into_iter()
                    .map(|d| Distribution::mixture(vec![reference.clone(), d], vec![*eps, 1.0 - eps]))
                    .collect()
            }
            FittedState::Bag(members) => meta::predict_bagged(members, x),
            FittedState::Greedy(g) => g.predict(x),
            FittedState::Gentle(g) => g.predict(x),
            FittedState::Tuned { inner, .. } => inner.predict_dists(x),
        }
    }
}

impl fmt::Display for ProbEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbEstimator::Baseline(a) => write!(f, "Baseline({})", a.name()),
            ProbEstimator::Parametric { shape, loc, disp } => write!(f, "{}(p={loc}, s={disp})", shape.name()),
            ProbEstimator::Classical { point, residual } => write!(f, "Resid({point}, {})", residual.name()),
            ProbEstimator::Elicited { shape: ElicitedShape::Laplace, first, second } => {
                write!(f, "ElicitLaplace(m={first}, b={second})")
            }
            ProbEstimator::Elicited { shape: ElicitedShape::Uniform { alpha }, first, second } => {
                write!(f, "ElicitUniform(lo={first}, hi={second}, alpha={alpha})")
            }
            ProbEstimator::Cap { inner, eps, reference } => write!(f, "Cap({inner}, eps={eps}, ref={})", reference.name()),
            ProbEstimator::Bag { inner, n, frac, bootstrap } => write!(f, "Bag({inner}, n={n}, frac={frac}, boot={bootstrap})"),
            ProbEstimator::BoostGreedy { k, alpha } => write!(f, "BoostGreedy(k={k}, alpha={alpha})"),
            ProbEstimator::BoostGentle { rounds, alpha, gamma } => write!(f, "BoostGentle(M={rounds}, alpha={alpha}, gamma={gamma})"),
            ProbEstimator::Tuned { inner, .. } => write!(f, "{inner}*"),
            ProbEstimator::Fixed(d) => write!(f, "Fixed({})", d.variant_name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::ResidualTransform;
    use crate::losses::log_loss;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn two_point() -> Dataset {
        Dataset::from_rows(&[vec![3.0], vec![-1.0]], vec![0.0, 2.0]).unwrap()
    }

    fn probe(rows: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows, 1, |i, _| i as f64 * 0.37 - 5.0)
    }

    #[test]
    fn normal_baseline_on_two_points() {
        let opts = FitOptions::default();
        let fitted = ProbEstimator::normal_baseline().fit(&two_point(), &opts).unwrap();
        let batch = fitted.predict(&probe(100)).unwrap();
        assert_eq!(batch.len(), 100);
        assert!(batch.dists.iter().all(|d| *d == Distribution::normal(1.0, 1.0).unwrap()));
        let fitted = ProbEstimator::Baseline(DensityAdaptor::Normal).fit(&two_point(), &opts).unwrap();
        assert_eq!(fitted.predict(&probe(1)).unwrap().dists[0], Distribution::normal(1.0, 1.0).unwrap());
    }

    #[test]
    fn laplace_and_uniform_are_variance_matched() {
        let opts = FitOptions::default();
        let est = ProbEstimator::parametric(Shape::Laplace, PointLearner::Constant(ConstantSpec::Mean), PointLearner::Constant(ConstantSpec::Std));
        let d = &est.fit(&two_point(), &opts).unwrap().predict(&probe(1)).unwrap().dists[0];
        assert!(matches!(d, Distribution::Laplace { mu, b } if *mu == 1.0 && (b - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15));
        let (m, v) = d.moments().unwrap();
        assert!((m - 1.0).abs() < 1e-12 && (v - 1.0).abs() < 1e-12);
        let mut est = est;
        est.set_param("shape", &ParamValue::Text("Uniform".into())).unwrap();
        let d = &est.fit(&two_point(), &opts).unwrap().predict(&probe(1)).unwrap().dists[0];
        let (m, v) = d.moments().unwrap();
        assert!((m - 1.0).abs() < 1e-12 && (v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn baseline_log_loss_matches_entropy() {
        let mut rng = crate::seeds::rng(3);
        let n = 10_000;
        let y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let x = DMatrix::zeros(n, 1);
        let data = Dataset::new(x.clone(), y.clone(), vec!["x".into()], "y").unwrap();
        let fitted = ProbEstimator::Baseline(DensityAdaptor::Normal).fit(&data, &FitOptions::default()).unwrap();
        let batch = fitted.predict(&x).unwrap();
        let loss = mean(&Loss::Log.eval_batch(&batch.dists, &y).unwrap());
        let entropy = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert!((loss - entropy).abs() < 0.02, "{loss}");
    }

    #[test]
    fn baselines_ignore_features() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i * 7 % 11) as f64]).collect();
        let y: Vec<f64> = (0..30).map(|i| (i as f64).sin() * 3.0).collect();
        let data = Dataset::from_rows(&rows, y).unwrap();
        let q = DMatrix::from_fn(12, 2, |i, j| (i * 3 + j) as f64);
        let mut permuted = q.clone();
        permuted.swap_rows(0, 7);
        for a in [DensityAdaptor::Kernel, DensityAdaptor::Histogram, DensityAdaptor::Normal] {
            let f = ProbEstimator::Baseline(a).fit(&data, &FitOptions::default()).unwrap();
            let p1 = f.predict(&q).unwrap().dists;
            let p2 = f.predict(&permuted).unwrap().dists;
            assert_eq!(p1, p2);
            assert!(p1.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn classical_with_normal_residuals_matches_parametric() {
        let mut rng = crate::seeds::rng(11);
        let rows: Vec<Vec<f64>> = (0..80).map(|_| vec![rng.random_range(-2.0..2.0)]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 1.5 * r[0] - 0.5 + rng.sample::<f64, _>(StandardNormal) * 0.3).collect();
        let data = Dataset::from_rows(&rows, y).unwrap();
        let opts = FitOptions::default();
        let classical = ProbEstimator::Classical { point: PointLearner::Ols, residual: DensityAdaptor::Normal }.fit(&data, &opts).unwrap();
        let resid_sd = ProbEstimator::parametric(
            Shape::Normal,
            PointLearner::Ols,
            PointLearner::residual(PointLearner::Constant(ConstantSpec::Mean), ResidualTransform::Squared),
        )
        .fit(&data, &opts)
        .unwrap();
        let q = probe(9);
        let a = classical.predict(&q).unwrap().dists;
        let b = resid_sd.predict(&q).unwrap().dists;
        for (a, b) in a.iter().zip(&b) {
            for y in [-3.0, 0.0, 1.2] {
                assert!((a.pdf(y) - b.pdf(y)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn noiseless_classical_clamps_dispersion() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y = rows.iter().map(|r| 2.0 * r[0] + 1.0).collect();
        let data = Dataset::from_rows(&rows, y).unwrap();
        let f = ProbEstimator::Classical { point: PointLearner::Ols, residual: DensityAdaptor::Normal }
            .fit(&data, &FitOptions::default())
            .unwrap();
        let d = &f.predict(&probe(1)).unwrap().dists[0];
        let (_, sd) = d.moments().unwrap();
        assert!(sd < 1e-8, "{sd}");
    }

    #[test]
    fn elicited_shapes() {
        let mut rng = crate::seeds::rng(5);
        let n = 4000;
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(2.0..6.0)).collect();
        let data = Dataset::new(DMatrix::zeros(n, 1), y, vec!["x".into()], "y").unwrap();
        let opts = FitOptions::default();
        let c = PointLearner::Constant(ConstantSpec::Mean);
        let u = ProbEstimator::Elicited { shape: ElicitedShape::Uniform { alpha: 0.25 }, first: c.clone(), second: c.clone() };
        let d = &u.fit(&data, &opts).unwrap().predict(&DMatrix::zeros(1, 1)).unwrap().dists[0];
        let (lo, hi) = d.support();
        assert!((lo - 2.0).abs() < 0.1 && (hi - 6.0).abs() < 0.1, "{lo} {hi}");
        let l = ProbEstimator::Elicited { shape: ElicitedShape::Laplace, first: c.clone(), second: c };
        let d = &l.fit(&data, &opts).unwrap().predict(&DMatrix::zeros(1, 1)).unwrap().dists[0];
        match d {
            Distribution::Laplace { mu, b } => assert!((mu - 4.0).abs() < 0.1 && (b - 1.0).abs() < 0.05),
            other => panic!("{other:?}"),
        }
        let bad = ProbEstimator::Elicited { shape: ElicitedShape::Laplace, first: PointLearner::Ols, second: PointLearner::Ols };
        assert!(bad.fit(&data, &opts).is_err());
    }

    #[test]
    fn cap_wrapper() {
        let data = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], vec![0.2, 0.4, 0.9]).unwrap();
        let opts = FitOptions::default();
        let base = ProbEstimator::normal_baseline();
        let plain = base.fit(&data, &opts).unwrap().predict(&probe(3)).unwrap().dists;
        let same = base.clone().capped(0.0, CapReference::Uniform01).fit(&data, &opts).unwrap().predict(&probe(3)).unwrap().dists;
        assert_eq!(plain, same);
        let eps = 0.05;
        let capped = base.capped(eps, CapReference::Uniform01).fit(&data, &opts).unwrap().predict(&probe(1)).unwrap();
        for y in [0.0, 0.001, 0.5, 0.999] {
            assert!(log_loss(&capped.dists[0], y).unwrap() <= -eps.ln() + 1e-12);
        }
    }

    #[test]
    fn params_round_trip_predictions() {
        let rows: Vec<Vec<f64>> = (0..25).map(|i| vec![i as f64 / 5.0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] * r[0] - 1.0).collect();
        let data = Dataset::from_rows(&rows, y).unwrap();
        let est = ProbEstimator::parametric(
            Shape::Normal,
            PointLearner::Knn { k: 3 },
            PointLearner::min(PointLearner::residual(PointLearner::Ols, ResidualTransform::Abs), 0.5),
        )
        .capped(0.01, CapReference::Sigmoid);
        let mut rebuilt = est.clone();
        rebuilt.set_param("eps", &ParamValue::Float(0.3)).unwrap();
        rebuilt.set_param("inner.p.k", &ParamValue::Int(9)).unwrap();
        rebuilt.set_param("inner.s.kappa", &ParamValue::Float(0.0)).unwrap();
        assert_ne!(rebuilt, est);
        let rebuilt = rebuilt.with_params(&est.params()).unwrap();
        assert_eq!(rebuilt, est);
        let opts = FitOptions::default();
        let q = probe(7);
        let a = est.fit(&data, &opts).unwrap().predict(&q).unwrap().dists;
        let b = rebuilt.fit(&data, &opts).unwrap().predict(&q).unwrap().dists;
        for (a, b) in a.iter().zip(&b) {
            assert!((a.pdf(0.3) - b.pdf(0.3)).abs() < 1e-12);
        }
    }

    #[test]
    fn refit_is_deterministic() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 9) as f64, i as f64]).collect();
        let y: Vec<f64> = (0..40).map(|i| ((i * 13) % 7) as f64).collect();
        let data = Dataset::from_rows(&rows, y).unwrap();
        let est = ProbEstimator::Bag { inner: Box::new(ProbEstimator::Baseline(DensityAdaptor::Kernel)), n: 4, frac: 0.7, bootstrap: true };
        let opts = FitOptions::new(99);
        let q = DMatrix::from_fn(5, 2, |i, j| (i + j) as f64);
        let a = est.fit(&data, &opts).unwrap().predict(&q).unwrap();
        let b = est.fit(&data, &opts).unwrap().predict(&q).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.seed, 99);
    }
}
