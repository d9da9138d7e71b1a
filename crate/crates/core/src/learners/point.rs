use std::fmt;

use nalgebra::{DMatrix, DVector};

use super::params::{nest, split_path, ParamMap, ParamValue};
use super::{Dataset, FitOptions};
use crate::numeric::{mean, std_dev};
use crate::{Error, Result};

const LOG_RESIDUAL_OFFSET: f64 = 1e-12;
const OLS_RIDGE: f64 = 1e-8;

/// What a constant learner predicts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstantSpec {
    Literal(f64),
    /// Label mean, or the functional requested at fit time.
    Mean,
    /// Label standard deviation.
    Std,
}

/// Transform applied to residuals before the residual learner sees them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResidualTransform {
    #[default]
    Squared,
    Abs,
    Log,
}

impl ResidualTransform {
    pub fn name(self) -> &'static str {
        match self {
            ResidualTransform::Squared => "squared",
            ResidualTransform::Abs => "abs",
            ResidualTransform::Log => "log",
        }
    }

    pub fn forward(self, residual: f64) -> f64 {
        match self {
            ResidualTransform::Squared => residual * residual,
            ResidualTransform::Abs => residual.abs(),
            ResidualTransform::Log => (residual.abs() + LOG_RESIDUAL_OFFSET).ln(),
        }
    }

    /// Maps a residual prediction back to the dispersion scale; never negative.
    pub fn back(self, prediction: f64) -> f64 {
        match self {
            ResidualTransform::Squared => prediction.max(0.0).sqrt(),
            ResidualTransform::Abs => prediction.max(0.0),
            ResidualTransform::Log => prediction.exp(),
        }
    }
}

impl std::str::FromStr for ResidualTransform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" | "squared_error" => Ok(ResidualTransform::Squared),
            "abs" | "abs_error" => Ok(ResidualTransform::Abs),
            "log" | "log_error" => Ok(ResidualTransform::Log),
            other => Err(Error::InvalidParameter(format!("unknown residual transform `{other}`"))),
        }
    }
}

/// Statistical functional a point learner is asked to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Functional {
    /// Elicited by the squared loss.
    #[default]
    Mean,
    /// Elicited by the absolute loss; ties resolve to the lower median.
    Median,
    /// Elicited by the pinball loss at level `α`; ties resolve downwards.
    Quantile(f64),
    /// Mean absolute deviation from a location, elicited by the squared loss on absolute residuals.
    MeanAbsDeviation,
    /// Not elicitable by any loss; requesting it is an error.
    Variance,
}

impl Functional {
    pub fn name(&self) -> String {
        match self {
            Functional::Mean => "mean".into(),
            Functional::Median => "median".into(),
            Functional::Quantile(a) => format!("quantile({a})"),
            Functional::MeanAbsDeviation => "mean_abs_deviation".into(),
            Functional::Variance => "variance".into(),
        }
    }

    /// The loss `L(y, c)` whose expected-value minimizer is this functional.
    pub fn loss(&self, y: f64, c: f64) -> Result<f64> {
        match self {
            Functional::Mean | Functional::MeanAbsDeviation => Ok((y - c).powi(2)),
            Functional::Median => Ok((y - c).abs()),
            Functional::Quantile(a) => Ok(if y >= c { a * (y - c) } else { (1.0 - a) * (c - y) }),
            Functional::Variance => Err(not_elicitable()),
        }
    }

    /// Value of the functional on an equally weighted sample.
    pub fn of_sample(&self, values: &[f64]) -> Result<f64> {
        match self {
            Functional::Mean | Functional::MeanAbsDeviation => Ok(mean(values)),
            Functional::Median => Ok(lower_quantile(values, 0.5)),
            Functional::Quantile(a) => Ok(lower_quantile(values, *a)),
            Functional::Variance => Err(not_elicitable()),
        }
    }
}

fn not_elicitable() -> Error {
    Error::InvalidParameter("the variance of a distribution cannot be elicited by a loss".into())
}

/// Smallest sample value whose empirical cdf reaches `alpha`.
fn lower_quantile(values: &[f64], alpha: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let k = ((alpha * v.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    v[k.min(v.len()) - 1]
}

/// Point prediction strategy, unfitted.
#[derive(Debug, Clone, PartialEq)]
pub enum PointLearner {
    Constant(ConstantSpec),
    /// Ordinary least squares with intercept.
    Ols,
    /// Average label of the `k` nearest rows in Euclidean distance.
    Knn { k: usize },
    /// Kernel ridge regression with an RBF kernel `exp(−γ‖x − x′‖²)`.
    KernelRidge { lambda: f64, gamma: f64, scale: bool },
    /// Learner fitted on transformed residuals of a location prediction.
    Residual { learner: Box<PointLearner>, transform: ResidualTransform },
    /// Lower bound `kappa` on the inner prediction.
    Min { inner: Box<PointLearner>, kappa: f64 },
}

/// Extra inputs to [`PointLearner::fit`].
#[derive(Debug, Clone, Copy)]
pub struct PointContext<'a> {
    /// In-sample location predictions, required by residual learners.
    pub base: Option<&'a [f64]>,
    pub functional: Functional,
    pub options: &'a FitOptions,
}

impl<'a> PointContext<'a> {
    pub fn new(options: &'a FitOptions) -> Self {
        PointContext { base: None, functional: Functional::Mean, options }
    }
}

/// A fitted point learner.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedPoint {
    Constant { value: f64, n_features: usize },
    Linear { intercept: f64, coef: DVector<f64>, ridge_fallback: bool },
    Knn { x: DMatrix<f64>, y: Vec<f64>, k: usize, functional: Functional },
    KernelRidge { x: DMatrix<f64>, alpha: DVector<f64>, gamma: f64, shift: Vec<f64>, scale: Vec<f64> },
    Residual { inner: Box<FittedPoint>, transform: ResidualTransform },
    Min { inner: Box<FittedPoint>, kappa: f64 },
}

impl PointLearner {
    pub fn residual(learner: PointLearner, transform: ResidualTransform) -> Self {
        PointLearner::Residual { learner: Box::new(learner), transform }
    }

    pub fn min(inner: PointLearner, kappa: f64) -> Self {
        PointLearner::Min { inner: Box::new(inner), kappa }
    }

    pub fn fit(&self, data: &Dataset, ctx: &PointContext<'_>) -> Result<FittedPoint> {
        let restricted = |what: &str| {
            if ctx.functional == Functional::Mean || ctx.functional == Functional::MeanAbsDeviation {
                Ok(())
            } else if ctx.functional == Functional::Variance {
                Err(not_elicitable())
            } else {
                Err(Error::InvalidParameter(format!("{what} only estimates the mean, not the {}", ctx.functional.name())))
            }
        };
        match self {
            PointLearner::Constant(spec) => {
                let value = match spec {
                    ConstantSpec::Literal(c) => *c,
                    ConstantSpec::Mean => ctx.functional.of_sample(&data.y)?,
                    ConstantSpec::Std => {
                        let ddof = ctx.options.std_denominator.ddof();
                        if data.n_rows() <= ddof {
                            0.0
                        } else {
                            std_dev(&data.y, ddof)
                        }
                    }
                };
                Ok(FittedPoint::Constant { value, n_features: data.n_features() })
            }
            PointLearner::Ols => {
                restricted("least squares")?;
                fit_ols(data)
            }
            PointLearner::Knn { k } => {
                if *k == 0 {
                    return Err(Error::InvalidParameter("k must be at least 1".into()));
                }
                if ctx.functional == Functional::Variance {
                    return Err(not_elicitable());
                }
                let k = if *k > data.n_rows() {
                    log::warn!("k = {k} exceeds the {} training rows; clamping", data.n_rows());
                    data.n_rows()
                } else {
                    *k
                };
                Ok(FittedPoint::Knn { x: data.x.clone(), y: data.y.clone(), k, functional: ctx.functional })
            }
            PointLearner::KernelRidge { lambda, gamma, scale } => {
                restricted("kernel ridge regression")?;
                fit_kernel_ridge(data, *lambda, *gamma, *scale)
            }
            PointLearner::Residual { learner, transform } => {
                let base = ctx.base.ok_or_else(|| {
                    Error::InvalidParameter("a residual learner needs location predictions to fit against".into())
                })?;
                if base.len() != data.n_rows() {
                    return Err(Error::Shape { expected: data.n_rows(), got: base.len() });
                }
                let rho: Vec<f64> = base.iter().zip(&data.y).map(|(p, y)| transform.forward(p - y)).collect();
                let inner_ctx = PointContext { base: None, functional: Functional::Mean, options: ctx.options };
                let inner = learner.fit(&data.with_labels(rho)?, &inner_ctx)?;
                Ok(FittedPoint::Residual { inner: Box::new(inner), transform: *transform })
            }
            PointLearner::Min { inner, kappa } => {
                if kappa.is_nan() || *kappa < 0.0 {
                    return Err(Error::InvalidParameter(format!("lower bound must be nonnegative, got {kappa}")));
                }
                Ok(FittedPoint::Min { inner: Box::new(inner.fit(data, ctx)?), kappa: *kappa })
            }
        }
    }

    /// Whether fitting needs location predictions.
    pub fn needs_base(&self) -> bool {
        match self {
            PointLearner::Residual { .. } => true,
            PointLearner::Min { inner, .. } => inner.needs_base(),
            _ => false,
        }
    }

    pub fn params(&self) -> ParamMap {
        let mut m = ParamMap::new();
        match self {
            PointLearner::Constant(spec) => {
                let v = match spec {
                    ConstantSpec::Literal(c) => ParamValue::Float(*c),
                    ConstantSpec::Mean => ParamValue::Text("mean(y)".into()),
                    ConstantSpec::Std => ParamValue::Text("std(y)".into()),
                };
                m.insert("value".into(), v);
            }
            PointLearner::Ols => {}
            PointLearner::Knn { k } => {
                m.insert("k".into(), ParamValue::Int(*k as i64));
            }
            PointLearner::KernelRidge { lambda, gamma, scale } => {
                m.insert("lambda".into(), ParamValue::Float(*lambda));
                m.insert("gamma".into(), ParamValue::Float(*gamma));
                m.insert("scale".into(), ParamValue::Bool(*scale));
            }
            PointLearner::Residual { learner, transform } => {
                m.insert("transform".into(), ParamValue::Text(transform.name().into()));
                nest(&mut m, "learner", learner.params());
            }
            PointLearner::Min { inner, kappa } => {
                m.insert("kappa".into(), ParamValue::Float(*kappa));
                nest(&mut m, "inner", inner.params());
            }
        }
        m
    }

    pub fn set_param(&mut self, path: &str, value: &ParamValue) -> Result<()> {
        let unknown = || Error::UnknownParameter(path.to_string());
        match (self, split_path(path)) {
            (PointLearner::Constant(spec), ("value", None)) => {
                *spec = match value {
                    ParamValue::Text(t) if t == "mean(y)" => ConstantSpec::Mean,
                    ParamValue::Text(t) if t == "std(y)" => ConstantSpec::Std,
                    other => ConstantSpec::Literal(other.as_f64()?),
                };
            }
            (PointLearner::Knn { k }, ("k", None)) => *k = value.as_usize()?,
            (PointLearner::KernelRidge { lambda, .. }, ("lambda", None)) => *lambda = value.as_f64()?,
            (PointLearner::KernelRidge { gamma, .. }, ("gamma", None)) => *gamma = value.as_f64()?,
            (PointLearner::KernelRidge { scale, .. }, ("scale", None)) => *scale = value.as_bool()?,
            (PointLearner::Residual { transform, .. }, ("transform", None)) => *transform = value.as_text()?.parse()?,
            (PointLearner::Residual { learner, .. }, ("learner", Some(rest))) => learner.set_param(rest, value)?,
            (PointLearner::Min { kappa, .. }, ("kappa", None)) => *kappa = value.as_f64()?,
            (PointLearner::Min { inner, .. }, ("inner", Some(rest))) => inner.set_param(rest, value)?,
            _ => return Err(unknown()),
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

impl fmt::Display for PointLearner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointLearner::Constant(ConstantSpec::Literal(c)) => write!(f, "C({c})"),
            PointLearner::Constant(ConstantSpec::Mean) => write!(f, "C(mean(y))"),
            PointLearner::Constant(ConstantSpec::Std) => write!(f, "C(std(y))"),
            PointLearner::Ols => write!(f, "LR"),
            PointLearner::Knn { k } => write!(f, "KNN(k={k})"),
            PointLearner::KernelRidge { lambda, gamma, scale } => {
                write!(f, "KRR(lambda={lambda}, gamma={gamma}, scale={scale})")
            }
            PointLearner::Residual { learner, transform } => write!(f, "RE(p, {learner}, {})", transform.name()),
            PointLearner::Min { inner, kappa } => write!(f, "Min({inner}, {kappa})"),
        }
    }
}

fn fit_ols(data: &Dataset) -> Result<FittedPoint> {
    let (n, p) = (data.n_rows(), data.n_features());
    let y_mean = mean(&data.y);
    if p == 0 {
        return Ok(FittedPoint::Linear { intercept: y_mean, coef: DVector::zeros(0), ridge_fallback: false });
    }
    let col_means: Vec<f64> = (0..p).map(|j| data.x.column(j).mean()).collect();
    let xc = DMatrix::from_fn(n, p, |i, j| data.x[(i, j)] - col_means[j]);
    let yc = DVector::from_iterator(n, data.y.iter().map(|y| y - y_mean));
    let gram = xc.transpose() * &xc;
    let rhs = xc.transpose() * yc;
    let (coef, ridge_fallback) = match gram.clone().cholesky() {
        Some(ch) if well_conditioned(&ch.l()) => (ch.solve(&rhs), false),
        _ => {
            log::warn!("singular design matrix; falling back to ridge {OLS_RIDGE:e}");
            let ridged = gram + DMatrix::identity(p, p) * OLS_RIDGE;
            let coef = match ridged.clone().cholesky() {
                Some(ch) => ch.solve(&rhs),
                None => ridged.pseudo_inverse(1e-12).map_err(|e| Error::Domain(e.to_string()))? * rhs,
            };
            (coef, true)
        }
    };
    let intercept = y_mean - coef.iter().zip(&col_means).map(|(b, m)| b * m).sum::<f64>();
    Ok(FittedPoint::Linear { intercept, coef, ridge_fallback })
}

/// Rejects Cholesky factors whose pivots collapse relative to the largest one.
fn well_conditioned(l: &DMatrix<f64>) -> bool {
    let d: Vec<f64> = (0..l.nrows()).map(|i| l[(i, i)].abs()).collect();
    let max = d.iter().copied().fold(0.0, f64::max);
    max > 0.0 && d.iter().all(|x| *x > 1e-7 * max)
}

fn standardization(data: &Dataset, scale: bool) -> (Vec<f64>, Vec<f64>) {
    let p = data.n_features();
    if !scale {
        return (vec![0.0; p], vec![1.0; p]);
    }
    let col: Vec<Vec<f64>> = (0..p).map(|j| data.x.column(j).iter().copied().collect()).collect();
    let shift: Vec<f64> = col.iter().map(|c| mean(c)).collect();
    let spread: Vec<f64> = col.iter().map(|c| {
        let s = std_dev(c, 0);
        if s > 0.0 { s } else { 1.0 }
    }).collect();
    (shift, spread)
}

fn transform_rows(x: &DMatrix<f64>, shift: &[f64], scale: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - shift[j]) / scale[j])
}

fn rbf(x: &DMatrix<f64>, i: usize, z: &DMatrix<f64>, j: usize, gamma: f64) -> f64 {
    let d2: f64 = (0..x.ncols()).map(|c| (x[(i, c)] - z[(j, c)]).powi(2)).sum();
    (-gamma * d2).exp()
}

fn fit_kernel_ridge(data: &Dataset, lambda: f64, gamma: f64, scale: bool) -> Result<FittedPoint> {
    if lambda.is_nan() || lambda <= 0.0 || gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::InvalidParameter(format!("kernel ridge needs lambda > 0 and gamma > 0, got {lambda}, {gamma}")));
    }
    let (shift, spread) = standardization(data, scale);
    let x = transform_rows(&data.x, &shift, &spread);
    let n = x.nrows();
    let k = DMatrix::from_fn(n, n, |i, j| rbf(&x, i, &x, j, gamma)) + DMatrix::identity(n, n) * lambda;
    let y = DVector::from_column_slice(&data.y);
    let alpha = k
        .cholesky()
        .ok_or_else(|| Error::Domain("kernel matrix is not positive definite".into()))?
        .solve(&y);
    Ok(FittedPoint::KernelRidge { x, alpha, gamma, shift, scale: spread })
}

impl FittedPoint {
    pub fn n_features(&self) -> usize {
        match self {
            FittedPoint::Constant { n_features, .. } => *n_features,
            FittedPoint::Linear { coef, .. } => coef.len(),
            FittedPoint::Knn { x, .. } | FittedPoint::KernelRidge { x, .. } => x.ncols(),
            FittedPoint::Residual { inner, .. } | FittedPoint::Min { inner, .. } => inner.n_features(),
        }
    }

    /// Whether the least-squares fit needed the ridge fallback somewhere in this learner.
    pub fn used_ridge_fallback(&self) -> bool {
        match self {
            FittedPoint::Linear { ridge_fallback, .. } => *ridge_fallback,
            FittedPoint::Residual { inner, .. } | FittedPoint::Min { inner, .. } => inner.used_ridge_fallback(),
            _ => false,
        }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::Shape { expected: self.n_features(), got: x.ncols() });
        }
        Ok(match self {
            FittedPoint::Constant { value, .. } => vec![*value; x.nrows()],
            FittedPoint::Linear { intercept, coef, .. } => {
                (0..x.nrows()).map(|i| intercept + (0..coef.len()).map(|j| coef[j] * x[(i, j)]).sum::<f64>()).collect()
            }
            FittedPoint::Knn { x: train, y, k, functional } => {
                let mut out = Vec::with_capacity(x.nrows());
                let mut order: Vec<(f64, usize)> = Vec::with_capacity(train.nrows());
                for i in 0..x.nrows() {
                    order.clear();
                    for r in 0..train.nrows() {
                        let d2: f64 = (0..train.ncols()).map(|c| (train[(r, c)] - x[(i, c)]).powi(2)).sum();
                        order.push((d2, r));
                    }
                    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
                    if *k < order.len() {
                        order.select_nth_unstable_by(*k, by_distance);
                    }
                    let labels: Vec<f64> = order[..*k].iter().map(|(_, r)| y[*r]).collect();
                    out.push(functional.of_sample(&labels)?);
                }
                out
            }
            FittedPoint::KernelRidge { x: train, alpha, gamma, shift, scale } => {
                let z = transform_rows(x, shift, scale);
                (0..z.nrows())
                    .map(|i| (0..train.nrows()).map(|r| alpha[r] * rbf(&z, i, train, r, *gamma)).sum())
                    .collect()
            }
            FittedPoint::Residual { inner, transform } => {
                inner.predict(x)?.into_iter().map(|v| transform.back(v)).collect()
            }
            FittedPoint::Min { inner, kappa } => inner.predict(x)?.into_iter().map(|v| v.max(*kappa)).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn opts() -> FitOptions {
        FitOptions::new(0)
    }

    fn line_data() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 * 0.5 - 3.0]).collect();
        let y = rows.iter().map(|r| 2.0 * r[0] + 1.0).collect();
        Dataset::from_rows(&rows, y).unwrap()
    }

    #[test]
    fn constant_learners() {
        let d = Dataset::from_rows(&[vec![0.0], vec![1.0]], vec![0.0, 2.0]).unwrap();
        let o = opts();
        let ctx = PointContext::new(&o);
        let f = PointLearner::Constant(ConstantSpec::Mean).fit(&d, &ctx).unwrap();
        assert_eq!(f.predict(&d.x).unwrap(), vec![1.0, 1.0]);
        let f = PointLearner::Constant(ConstantSpec::Std).fit(&d, &ctx).unwrap();
        assert_eq!(f.predict(&d.x).unwrap(), vec![1.0, 1.0]);
        let f = PointLearner::Constant(ConstantSpec::Literal(42.0)).fit(&d, &ctx).unwrap();
        assert_eq!(f.predict(&DMatrix::from_element(3, 1, 7.0)).unwrap(), vec![42.0; 3]);
        let sample = FitOptions { std_denominator: super::super::StdDenominator::NMinusOne, ..o };
        let f = PointLearner::Constant(ConstantSpec::Std).fit(&d, &PointContext::new(&sample)).unwrap();
        assert!((f.predict(&d.x).unwrap()[0] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ols_recovers_a_line() {
        let d = line_data();
        let o = opts();
        let f = PointLearner::Ols.fit(&d, &PointContext::new(&o)).unwrap();
        let pred = f.predict(&d.x).unwrap();
        assert!(pred.iter().zip(&d.y).all(|(p, y)| (p - y).abs() < 1e-9));
        let probe = DMatrix::from_column_slice(2, 1, &[10.0, -7.5]);
        let out = f.predict(&probe).unwrap();
        assert!((out[0] - 21.0).abs() < 1e-9 && (out[1] + 14.0).abs() < 1e-9);
        assert!(!f.used_ridge_fallback());
        assert!(matches!(f.predict(&DMatrix::zeros(1, 2)), Err(Error::Shape { .. })));
    }

    #[test]
    fn ols_falls_back_on_collinear_columns() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let y = rows.iter().map(|r| r[0] + 3.0).collect();
        let d = Dataset::from_rows(&rows, y).unwrap();
        let o = opts();
        let f = PointLearner::Ols.fit(&d, &PointContext::new(&o)).unwrap();
        assert!(f.used_ridge_fallback());
        let pred = f.predict(&d.x).unwrap();
        assert!(pred.iter().zip(&d.y).all(|(p, y)| (p - y).abs() < 1e-5));
    }

    #[test]
    fn knn_behaviour() {
        let d = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![3.0]], vec![5.0, 7.0, 11.0]).unwrap();
        let o = opts();
        let f = PointLearner::Knn { k: 1 }.fit(&d, &PointContext::new(&o)).unwrap();
        assert_eq!(f.predict(&d.x).unwrap(), vec![5.0, 7.0, 11.0]);
        // Equidistant neighbours resolve to the lower row index.
        let f = PointLearner::Knn { k: 1 }.fit(&d, &PointContext::new(&o)).unwrap();
        assert_eq!(f.predict(&DMatrix::from_element(1, 1, 0.5)).unwrap(), vec![5.0]);
        let f = PointLearner::Knn { k: 10 }.fit(&d, &PointContext::new(&o)).unwrap();
        assert_eq!(f.predict(&DMatrix::from_element(1, 1, 0.5)).unwrap(), vec![23.0 / 3.0]);
    }

    #[test]
    fn kernel_ridge_with_identical_rows() {
        let (n, lambda, gamma) = (6, 0.7, 0.3);
        let rows = vec![vec![1.5, -2.0]; n];
        let y = vec![1.0, 2.0, 4.0, -1.0, 0.5, 3.0];
        let d = Dataset::from_rows(&rows, y.clone()).unwrap();
        let o = opts();
        let f = PointLearner::KernelRidge { lambda, gamma, scale: false }.fit(&d, &PointContext::new(&o)).unwrap();
        let kxx = 1.0;
        let expected = y.iter().sum::<f64>() / (n as f64 + lambda / kxx);
        assert!((f.predict(&DMatrix::from_row_slice(1, 2, &[1.5, -2.0])).unwrap()[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn residual_transforms_agree_on_constant_residuals() {
        let d = line_data();
        let base: Vec<f64> = d.y.iter().enumerate().map(|(i, y)| if i % 2 == 0 { y + 0.8 } else { y - 0.8 }).collect();
        let o = opts();
        let ctx = PointContext { base: Some(&base), ..PointContext::new(&o) };
        for t in [ResidualTransform::Squared, ResidualTransform::Abs, ResidualTransform::Log] {
            let f = PointLearner::residual(PointLearner::Constant(ConstantSpec::Mean), t).fit(&d, &ctx).unwrap();
            assert!(f.predict(&d.x).unwrap().iter().all(|s| (s - 0.8).abs() < 1e-9), "{t:?}");
        }
        assert!(PointLearner::residual(PointLearner::Ols, ResidualTransform::Abs).fit(&d, &PointContext::new(&o)).is_err());
    }

    #[test]
    fn residual_back_transform_is_nonnegative() {
        let mut rng = crate::seeds::rng(1);
        for _ in 0..200 {
            let v: f64 = rng.random_range(-50.0..50.0);
            for t in [ResidualTransform::Squared, ResidualTransform::Abs, ResidualTransform::Log] {
                assert!(t.back(v) >= 0.0);
            }
        }
    }

    #[test]
    fn min_wrapper() {
        let d = line_data();
        let o = opts();
        let ctx = PointContext::new(&o);
        let plain = PointLearner::Ols.fit(&d, &ctx).unwrap().predict(&d.x).unwrap();
        let zero = PointLearner::min(PointLearner::Ols, 0.0).fit(&d, &ctx).unwrap().predict(&d.x).unwrap();
        assert_eq!(plain.iter().map(|v| v.max(0.0)).collect::<Vec<_>>(), zero);
        let two = PointLearner::min(PointLearner::Constant(ConstantSpec::Literal(0.0)), 2.0).fit(&d, &ctx).unwrap();
        assert!(two.predict(&d.x).unwrap().iter().all(|v| *v == 2.0));
    }

    #[test]
    fn functionals_on_samples() {
        let pmf_sample = [0.0, 10.0];
        assert_eq!(Functional::Mean.of_sample(&pmf_sample).unwrap(), 5.0);
        assert_eq!(Functional::Median.of_sample(&pmf_sample).unwrap(), 0.0);
        assert_eq!(Functional::Quantile(0.25).of_sample(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 1.0);
        assert!(Functional::Variance.of_sample(&pmf_sample).is_err());
        let d = line_data();
        let o = opts();
        let ctx = PointContext { functional: Functional::Median, ..PointContext::new(&o) };
        assert!(PointLearner::Ols.fit(&d, &ctx).is_err());
    }

    #[test]
    fn params_round_trip() {
        let learners = vec![
            PointLearner::Constant(ConstantSpec::Std),
            PointLearner::Knn { k: 7 },
            PointLearner::KernelRidge { lambda: 0.5, gamma: 2.0, scale: true },
            PointLearner::min(PointLearner::residual(PointLearner::Knn { k: 3 }, ResidualTransform::Log), 4.0),
        ];
        for l in learners {
            let mut blank = l.clone();
            if let PointLearner::Min { kappa, .. } = &mut blank {
                *kappa = 0.0;
            }
            assert_eq!(blank.with_params(&l.params()).unwrap(), l);
        }
        let mut k = PointLearner::Knn { k: 1 };
        assert!(matches!(k.set_param("gamma", &ParamValue::Float(1.0)), Err(Error::UnknownParameter(_))));
    }
}
