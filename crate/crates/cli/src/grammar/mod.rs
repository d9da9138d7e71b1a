//! Model specification grammar.
//!
//! ```text
//! model  := SHAPE "(" "p=" point "," "s=" disp ")"           SHAPE ∈ N | Laplace | Uniform
//!         | "Baseline(" ("kernel" | "hist" | "normal") ")"
//!         | "Resid(" point "," ADAPTOR ")"
//!         | "ElicitLaplace(m=" point ", b=" point ")"
//!         | "ElicitUniform(lo=" point ", hi=" point ", alpha=" F ")"
//!         | "Cap(" model ", eps=" F [", ref=" ("uniform01" | "sigmoid")] ")"
//!         | "Bag(" model [", n=" INT] [", frac=" F] [", boot=" BOOL] ")"
//!         | "BoostGreedy(k=" INT ", alpha=" F ")"
//!         | "BoostGentle(M=" INT ", alpha=" F ", gamma=" F ")"
//! point  := "C(" (F | "mean(y)" | "std(y)") ")" | "LR" | "KNN(k=" INT ")"
//!         | "KRR(" [lambda=F] [, gamma=F] [, scale=BOOL] ")"
//!         | "Min(" point [", " F (";" F)*] ")"
//! disp   := point | "RE(p, " point [", " ("squared" | "abs" | "log")] ")" | "Min(" disp [", " kappas] ")"
//! ```
//!
//! Whitespace is ignored and identifiers are case-sensitive. A `Min` node
//! with no bound or several bounds is tuned by inner cross-validated log-loss
//! over its list, defaulting to `0;1;2;4;8;32`.

mod syntax;

use std::fmt;

use distpred::learners::{
    CapReference, ConstantSpec, DensityAdaptor, ElicitedShape, Grid, ParamValue, PointLearner, ProbEstimator,
    ResidualTransform, Shape,
};
use distpred::Loss;

use crate::error::{CliError, CliResult};
use syntax::{parse_expr, Arg, Expr, ExprKind};

/// Lower bounds tried by a `Min` node that lists none.
pub const DEFAULT_KAPPAS: [f64; 6] = [0.0, 1.0, 2.0, 4.0, 8.0, 32.0];

/// Probabilistic model node.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Parametric { shape: Shape, loc: PointSpec, disp: PointSpec },
    Baseline(DensityAdaptor),
    Resid { point: PointSpec, adaptor: DensityAdaptor },
    ElicitLaplace { median: PointSpec, scale: PointSpec },
    ElicitUniform { lo: PointSpec, hi: PointSpec, alpha: f64 },
    Cap { inner: Box<ModelSpec>, eps: f64, reference: CapReference },
    Bag { inner: Box<ModelSpec>, n: usize, frac: f64, boot: bool },
    BoostGreedy { k: usize, alpha: f64 },
    BoostGentle { rounds: usize, alpha: f64, gamma: f64 },
}

/// Point learner node.
#[derive(Debug, Clone, PartialEq)]
pub enum PointSpec {
    Constant(ConstantSpec),
    Lr,
    Knn { k: usize },
    Krr { lambda: f64, gamma: f64, scale: bool },
    Residual { learner: Box<PointSpec>, transform: Option<ResidualTransform> },
    /// `None` tunes over [`DEFAULT_KAPPAS`].
    Min { inner: Box<PointSpec>, kappas: Option<Vec<f64>> },
}

/// Parses a model specification.
pub fn parse_model_spec(text: &str) -> CliResult<ModelSpec> {
    model(&parse_expr(text)?)
}

#[derive(Clone, Copy, PartialEq)]
enum Slot {
    Location,
    Dispersion,
    Other,
}

/// Arguments of one call, consumed by position or name.
struct Args<'a> {
    name: &'a str,
    call: &'a Expr,
    items: Vec<Option<&'a Arg>>,
}

impl<'a> Args<'a> {
    fn of(e: &'a Expr) -> Option<Self> {
        match &e.kind {
            ExprKind::Call { name, args } => Some(Args { name, call: e, items: args.iter().map(Some).collect() }),
            _ => None,
        }
    }

    fn positional(&mut self) -> Option<&'a Expr> {
        let slot = self.items.iter_mut().find(|a| matches!(a, Some(arg) if arg.key.is_none()))?;
        slot.take().map(|a| &a.value)
    }

    fn required(&mut self, what: &str) -> CliResult<&'a Expr> {
        self.positional().ok_or_else(|| self.missing(what))
    }

    fn named(&mut self, key: &str) -> CliResult<Option<&'a Expr>> {
        let mut found = None;
        for slot in self.items.iter_mut() {
            if let Some(arg) = slot {
                if let Some((k, at)) = &arg.key {
                    if k == key {
                        if found.is_some() {
                            return Err(CliError::parse(*at, format!("argument `{key}` given twice")));
                        }
                        found = slot.take().map(|a| &a.value);
                    }
                }
            }
        }
        Ok(found)
    }

    fn named_required(&mut self, key: &str) -> CliResult<&'a Expr> {
        self.named(key)?.ok_or_else(|| self.missing(&format!("`{key}=`")))
    }

    fn missing(&self, what: &str) -> CliError {
        CliError::parse(self.call.end.saturating_sub(1), format!("`{}` is missing {what}", self.name))
    }

    /// Rejects leftover arguments.
    fn finish(self) -> CliResult<()> {
        match self.items.into_iter().flatten().next() {
            None => Ok(()),
            Some(arg) => {
                let at = arg.key.as_ref().map_or(arg.value.start, |k| k.1);
                let what = arg.key.as_ref().map_or("positional argument".to_string(), |k| format!("argument `{}`", k.0));
                Err(CliError::parse(at, format!("unexpected {what} to `{}`", self.name)))
            }
        }
    }
}

fn ident(e: &Expr) -> Option<&str> {
    match &e.kind {
        ExprKind::Ident(s) => Some(s),
        _ => None,
    }
}

fn number(e: &Expr) -> CliResult<f64> {
    match e.kind {
        ExprKind::Number(x) => Ok(x),
        _ => Err(CliError::parse(e.start, "expected a number")),
    }
}

fn integer(e: &Expr) -> CliResult<usize> {
    match e.kind {
        ExprKind::Number(x) if x >= 0.0 && x.fract() == 0.0 && x < 1e15 => Ok(x as usize),
        _ => Err(CliError::parse(e.start, "expected a nonnegative integer")),
    }
}

fn boolean(e: &Expr) -> CliResult<bool> {
    match ident(e) {
        Some("true") => Ok(true),
        Some("false") => Ok(false),
        _ => Err(CliError::parse(e.start, "expected `true` or `false`")),
    }
}

fn keyword<T: std::str::FromStr>(e: &Expr, what: &str) -> CliResult<T> {
    ident(e)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CliError::parse(e.start, format!("expected {what}")))
}

const POINT_NAMES: [&str; 6] = ["C", "LR", "KNN", "KRR", "RE", "Min"];

fn model(e: &Expr) -> CliResult<ModelSpec> {
    let Some(mut a) = Args::of(e) else {
        return match ident(e) {
            Some(name) if POINT_NAMES.contains(&name) => {
                Err(CliError::parse(e.start, format!("`{name}` is a point learner, expected a probabilistic model")))
            }
            Some(name) => Err(CliError::parse(e.start, format!("unknown token `{name}`"))),
            None => Err(CliError::parse(e.start, "expected a probabilistic model")),
        };
    };
    let spec = match a.name {
        "N" | "Laplace" | "Uniform" => {
            let shape = a.name.parse().map_err(|_| CliError::parse(e.start, "unknown shape"))?;
            let loc = point(a.named_required("p")?, Slot::Location)?;
            let disp = point(a.named_required("s")?, Slot::Dispersion)?;
            ModelSpec::Parametric { shape, loc, disp }
        }
        "Baseline" => ModelSpec::Baseline(keyword(a.required("a density adaptor")?, "`kernel`, `hist` or `normal`")?),
        "Resid" => {
            let p = point(a.required("a point learner")?, Slot::Other)?;
            let adaptor = keyword(a.required("a density adaptor")?, "`kernel`, `hist` or `normal`")?;
            ModelSpec::Resid { point: p, adaptor }
        }
        "ElicitLaplace" => ModelSpec::ElicitLaplace {
            median: point(a.named_required("m")?, Slot::Other)?,
            scale: point(a.named_required("b")?, Slot::Other)?,
        },
        "ElicitUniform" => ModelSpec::ElicitUniform {
            lo: point(a.named_required("lo")?, Slot::Other)?,
            hi: point(a.named_required("hi")?, Slot::Other)?,
            alpha: number(a.named_required("alpha")?)?,
        },
        "Cap" => {
            let inner = Box::new(model(a.required("a model")?)?);
            let eps = number(a.named_required("eps")?)?;
            let reference = match a.named("ref")? {
                Some(r) => keyword(r, "`uniform01` or `sigmoid`")?,
                None => CapReference::Uniform01,
            };
            ModelSpec::Cap { inner, eps, reference }
        }
        "Bag" => {
            let inner = Box::new(model(a.required("a model")?)?);
            let n = a.named("n")?.map(integer).transpose()?.unwrap_or(10);
            let frac = a.named("frac")?.map(number).transpose()?.unwrap_or(1.0);
            let boot = a.named("boot")?.map(boolean).transpose()?.unwrap_or(true);
            ModelSpec::Bag { inner, n, frac, boot }
        }
        "BoostGreedy" => {
            ModelSpec::BoostGreedy { k: integer(a.named_required("k")?)?, alpha: number(a.named_required("alpha")?)? }
        }
        "BoostGentle" => ModelSpec::BoostGentle {
            rounds: integer(a.named_required("M")?)?,
            alpha: number(a.named_required("alpha")?)?,
            gamma: number(a.named_required("gamma")?)?,
        },
        name if POINT_NAMES.contains(&name) => {
            return Err(CliError::parse(e.start, format!("`{name}` is a point learner, expected a probabilistic model")))
        }
        name => return Err(CliError::parse(e.start, format!("unknown token `{name}`"))),
    };
    a.finish()?;
    Ok(spec)
}

fn point(e: &Expr, slot: Slot) -> CliResult<PointSpec> {
    if ident(e) == Some("LR") {
        return Ok(PointSpec::Lr);
    }
    let Some(mut a) = Args::of(e) else {
        return Err(match ident(e) {
            Some(name) => CliError::parse(e.start, format!("unknown token `{name}`")),
            None => CliError::parse(e.start, "expected a point learner"),
        });
    };
    let spec = match a.name {
        "C" => {
            let v = a.required("a constant")?;
            let spec = match &v.kind {
                ExprKind::Number(x) => ConstantSpec::Literal(*x),
                ExprKind::Call { name, args } if args.len() == 1 && ident(&args[0].value) == Some("y") && args[0].key.is_none() => {
                    match name.as_str() {
                        "mean" => ConstantSpec::Mean,
                        "std" => ConstantSpec::Std,
                        other => return Err(CliError::parse(v.start, format!("unknown statistic `{other}`"))),
                    }
                }
                _ => return Err(CliError::parse(v.start, "expected a number, `mean(y)` or `std(y)`")),
            };
            PointSpec::Constant(spec)
        }
        "KNN" => PointSpec::Knn { k: integer(a.named_required("k")?)? },
        "KRR" => PointSpec::Krr {
            lambda: a.named("lambda")?.map(number).transpose()?.unwrap_or(1.0),
            gamma: a.named("gamma")?.map(number).transpose()?.unwrap_or(1.0),
            scale: a.named("scale")?.map(boolean).transpose()?.unwrap_or(true),
        },
        "RE" => {
            if slot != Slot::Dispersion {
                return Err(CliError::parse(e.start, "`RE` is only allowed in a dispersion slot"));
            }
            let base = a.required("the location reference `p`")?;
            if ident(base) != Some("p") {
                return Err(CliError::parse(base.start, "the first argument of `RE` must be `p`"));
            }
            let learner = Box::new(point(a.required("a residual learner")?, Slot::Other)?);
            let transform = a.positional().map(|t| keyword(t, "`squared`, `abs` or `log`")).transpose()?;
            PointSpec::Residual { learner, transform }
        }
        "Min" => {
            let inner = Box::new(point(a.required("a point learner")?, slot)?);
            let kappas = match a.positional() {
                None => None,
                Some(k) => Some(match &k.kind {
                    ExprKind::Number(x) => vec![*x],
                    ExprKind::List(xs) => xs.clone(),
                    _ => return Err(CliError::parse(k.start, "expected a bound or a `;`-separated list of bounds")),
                }),
            };
            if let Some(bad) = kappas.iter().flatten().find(|k| k.is_nan() || **k < 0.0) {
                return Err(CliError::parse(e.start, format!("lower bound {bad} is negative")));
            }
            PointSpec::Min { inner, kappas }
        }
        "LR" => return Err(CliError::parse(e.start, "`LR` takes no arguments")),
        name => return Err(CliError::parse(e.start, format!("unknown token `{name}`"))),
    };
    a.finish()?;
    Ok(spec)
}

fn kappa_list(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

impl fmt::Display for PointSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointSpec::Constant(ConstantSpec::Literal(c)) => write!(f, "C({c})"),
            PointSpec::Constant(ConstantSpec::Mean) => write!(f, "C(mean(y))"),
            PointSpec::Constant(ConstantSpec::Std) => write!(f, "C(std(y))"),
            PointSpec::Lr => write!(f, "LR"),
            PointSpec::Knn { k } => write!(f, "KNN(k={k})"),
            PointSpec::Krr { lambda, gamma, scale } => write!(f, "KRR(lambda={lambda}, gamma={gamma}, scale={scale})"),
            PointSpec::Residual { learner, transform: None } => write!(f, "RE(p, {learner})"),
            PointSpec::Residual { learner, transform: Some(t) } => write!(f, "RE(p, {learner}, {})", t.name()),
            PointSpec::Min { inner, kappas: None } => write!(f, "Min({inner})"),
            PointSpec::Min { inner, kappas: Some(k) } => write!(f, "Min({inner}, {})", kappa_list(k)),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Parametric { shape, loc, disp } => write!(f, "{}(p={loc}, s={disp})", shape.name()),
            ModelSpec::Baseline(a) => write!(f, "Baseline({})", a.name()),
            ModelSpec::Resid { point, adaptor } => write!(f, "Resid({point}, {})", adaptor.name()),
            ModelSpec::ElicitLaplace { median, scale } => write!(f, "ElicitLaplace(m={median}, b={scale})"),
            ModelSpec::ElicitUniform { lo, hi, alpha } => write!(f, "ElicitUniform(lo={lo}, hi={hi}, alpha={alpha})"),
            ModelSpec::Cap { inner, eps, reference } => write!(f, "Cap({inner}, eps={eps}, ref={})", reference.name()),
            ModelSpec::Bag { inner, n, frac, boot } => write!(f, "Bag({inner}, n={n}, frac={frac}, boot={boot})"),
            ModelSpec::BoostGreedy { k, alpha } => write!(f, "BoostGreedy(k={k}, alpha={alpha})"),
            ModelSpec::BoostGentle { rounds, alpha, gamma } => write!(f, "BoostGentle(M={rounds}, alpha={alpha}, gamma={gamma})"),
        }
    }
}

impl PointSpec {
    fn build(&self, path: &str, grid: &mut Grid) -> PointLearner {
        match self {
            PointSpec::Constant(c) => PointLearner::Constant(*c),
            PointSpec::Lr => PointLearner::Ols,
            PointSpec::Knn { k } => PointLearner::Knn { k: *k },
            PointSpec::Krr { lambda, gamma, scale } => PointLearner::KernelRidge { lambda: *lambda, gamma: *gamma, scale: *scale },
            PointSpec::Residual { learner, transform } => PointLearner::residual(
                learner.build(&format!("{path}learner."), grid),
                transform.unwrap_or(ResidualTransform::Squared),
            ),
            PointSpec::Min { inner, kappas } => {
                let inner = inner.build(&format!("{path}inner."), grid);
                let kappas = kappas.clone().unwrap_or_else(|| DEFAULT_KAPPAS.to_vec());
                if kappas.len() > 1 {
                    grid.insert(format!("{path}kappa"), kappas.iter().map(|k| ParamValue::Float(*k)).collect());
                }
                PointLearner::min(inner, kappas[0])
            }
        }
    }

    fn is_tuned(&self) -> bool {
        match self {
            PointSpec::Residual { learner, .. } => learner.is_tuned(),
            PointSpec::Min { inner, kappas } => kappas.as_ref().is_none_or(|k| k.len() > 1) || inner.is_tuned(),
            _ => false,
        }
    }
}

impl ModelSpec {
    /// Builds the estimator. Tuned `Min` bounds are searched jointly by
    /// wrapping the whole model in a log-loss grid search.
    pub fn build(&self) -> ProbEstimator {
        self.build_with(Grid::new())
    }

    /// Like [`ModelSpec::build`], also searching `extra` (paths as in
    /// [`ProbEstimator::params`]).
    pub fn build_with(&self, mut grid: Grid) -> ProbEstimator {
        let est = self.build_at("", &mut grid);
        if grid.is_empty() {
            est
        } else {
            est.tuned(grid, Loss::Log)
        }
    }

    fn build_at(&self, path: &str, grid: &mut Grid) -> ProbEstimator {
        match self {
            ModelSpec::Parametric { shape, loc, disp } => ProbEstimator::parametric(
                *shape,
                loc.build(&format!("{path}p."), grid),
                disp.build(&format!("{path}s."), grid),
            ),
            ModelSpec::Baseline(a) => ProbEstimator::Baseline(*a),
            ModelSpec::Resid { point, adaptor } => {
                ProbEstimator::Classical { point: point.build(&format!("{path}point."), grid), residual: *adaptor }
            }
            ModelSpec::ElicitLaplace { median, scale } => ProbEstimator::Elicited {
                shape: ElicitedShape::Laplace,
                first: median.build(&format!("{path}first."), grid),
                second: scale.build(&format!("{path}second."), grid),
            },
            ModelSpec::ElicitUniform { lo, hi, alpha } => ProbEstimator::Elicited {
                shape: ElicitedShape::Uniform { alpha: *alpha },
                first: lo.build(&format!("{path}first."), grid),
                second: hi.build(&format!("{path}second."), grid),
            },
            ModelSpec::Cap { inner, eps, reference } => {
                inner.build_at(&format!("{path}inner."), grid).capped(*eps, *reference)
            }
            ModelSpec::Bag { inner, n, frac, boot } => ProbEstimator::Bag {
                inner: Box::new(inner.build_at(&format!("{path}inner."), grid)),
                n: *n,
                frac: *frac,
                bootstrap: *boot,
            },
            ModelSpec::BoostGreedy { k, alpha } => ProbEstimator::BoostGreedy { k: *k, alpha: *alpha },
            ModelSpec::BoostGentle { rounds, alpha, gamma } => {
                ProbEstimator::BoostGentle { rounds: *rounds, alpha: *alpha, gamma: *gamma }
            }
        }
    }

    /// Whether any node is tuned by inner cross-validation.
    pub fn is_tuned(&self) -> bool {
        match self {
            ModelSpec::Parametric { loc, disp, .. } => loc.is_tuned() || disp.is_tuned(),
            ModelSpec::Resid { point, .. } => point.is_tuned(),
            ModelSpec::ElicitLaplace { median: a, scale: b } | ModelSpec::ElicitUniform { lo: a, hi: b, .. } => {
                a.is_tuned() || b.is_tuned()
            }
            ModelSpec::Cap { inner, .. } | ModelSpec::Bag { inner, .. } => inner.is_tuned(),
            _ => false,
        }
    }
}
