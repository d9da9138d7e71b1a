//! Loss functionals that score a predicted distribution against an observation.
//!
//! Losses return extended reals: `+∞` signals a zero predicted density at the
//! observation and propagates through means.

mod kernel;
mod probe;

pub use kernel::KernelFn;
pub use probe::{kl_divergence, properness_probe, simplex_grid, ProbeReport};

use std::fmt;
use std::str::FromStr;

use crate::composite::convolution_adaptor;
use crate::distributions::{Distribution, Kind};
use crate::numeric::LN_SQRT_2PI;
use crate::{seeds, Error, Result};

pub const DEFAULT_CAP_EPS: f64 = 1e-10;
pub const DEFAULT_KERNEL_MC: usize = 2000;
pub const DEFAULT_CRPS_GRID: usize = 2001;
const DEFAULT_LOSS_SEED: u64 = 0x6c6f_7373;

/// Theoretical properties of a loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LossProperties {
    pub proper: bool,
    pub strictly_proper: bool,
    /// Depends on the prediction only through its density at the observation.
    pub strictly_local: bool,
}

/// A loss `L(p, y)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Loss {
    Log,
    /// `min(−log eps, −log p(y))`.
    CappedLog { eps: f64 },
    /// Log-loss of `eps · reference + (1 − eps) · p`.
    EpsMixtureLog { eps: f64, reference: Distribution },
    /// Integrated squared loss `−2 p(y) + ‖p‖²`.
    Gneiting,
    /// Weighted integral of Brier losses of the cdf cut-offs. A missing weight
    /// must be resolved against the labels with [`Loss::resolve`] first.
    Crps { weight: Option<Distribution>, grid: usize },
    /// `−2 k(p, y) + k(p, p)`.
    Kernel { kernel: KernelFn, mc: usize, seed: u64 },
    /// Expected base loss of `p ∗ Z` at `y + Z`.
    Convolution { base: Box<Loss>, noise: Distribution, m: usize, seed: u64 },
    /// Separate scoring of the binary "on the atom locus" event, the continuous
    /// part off the locus and the discrete part on it.
    SplitMixed {
        alpha_b: f64,
        alpha_c: f64,
        alpha_d: f64,
        locus: Vec<f64>,
        binary: Box<Loss>,
        continuous: Box<Loss>,
        discrete: Box<Loss>,
    },
    /// `ν⁻¹ (μ − y)² + log ν` with `μ`, `ν` the predicted mean and variance.
    MeanVariance,
}

fn reject_mixed(p: &Distribution, what: &str) -> Result<()> {
    if p.kind() == Kind::Mixed {
        return Err(Error::UnsupportedKind { kind: "mixed", what: what.to_string() });
    }
    Ok(())
}

/// `−log p(y)`, rejecting mixed predictions.
pub fn log_loss(p: &Distribution, y: f64) -> Result<f64> {
    reject_mixed(p, "log-loss")?;
    Ok(-p.log_pdf(y))
}

pub fn capped_log_loss(p: &Distribution, y: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("cap eps must lie in (0, 1), got {eps}")));
    }
    Ok(log_loss(p, y)?.min(-eps.ln()))
}

pub fn gneiting_loss(p: &Distribution, y: f64) -> Result<f64> {
    reject_mixed(p, "Gneiting loss")?;
    Ok(-2.0 * p.pdf(y) + p.lp2_norm_sq()?)
}

pub fn mean_variance_loss(mu: f64, nu: f64, y: f64) -> Result<f64> {
    if nu.is_nan() || nu <= 0.0 {
        return Err(Error::Domain(format!("variance must be positive, got {nu}")));
    }
    Ok((mu - y).powi(2) / nu + nu.ln())
}

/// Weighted CRPS by the trapezoid rule over the weight's central `1 − 2·10⁻⁶` mass,
/// with the observation inserted as an extra node.
pub fn crps(f: &Distribution, y: f64, weight: &Distribution, grid: usize) -> Result<f64> {
    Ok(CrpsTable::new(f, weight, grid)?.eval(f, y))
}

/// Weight density and prediction cdf on the CRPS grid, reusable across
/// observations scored against one prediction.
struct CrpsTable {
    weight: Distribution,
    taus: Vec<f64>,
    wpdf: Vec<f64>,
    cdf: Vec<f64>,
}

impl CrpsTable {
    fn new(f: &Distribution, weight: &Distribution, grid: usize) -> Result<Self> {
        if weight.kind() != Kind::Continuous {
            return Err(Error::UnsupportedKind { kind: weight.kind().name(), what: "CRPS weight".into() });
        }
        let grid = grid.max(2);
        let lo = weight.quantile(1e-6)?;
        let hi = weight.quantile(1.0 - 1e-6)?;
        let taus: Vec<f64> = (0..grid).map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64).collect();
        let wpdf = taus.iter().map(|t| weight.pdf(*t)).collect();
        let cdf = taus.iter().map(|t| f.cdf(*t)).collect();
        Ok(CrpsTable { weight: weight.clone(), taus, wpdf, cdf })
    }

    /// `f` must be the prediction the table was built from.
    fn eval(&self, f: &Distribution, y: f64) -> f64 {
        let (lo, hi) = (self.taus[0], self.taus[self.taus.len() - 1]);
        // Nodes as (τ, weight pdf, cdf); the observation joins the grid when inside it.
        let mut nodes: Vec<(f64, f64, f64)> =
            self.taus.iter().zip(&self.wpdf).zip(&self.cdf).map(|((t, w), c)| (*t, *w, *c)).collect();
        if y > lo && y < hi {
            let at = self.taus.partition_point(|t| *t < y);
            if self.taus[at] != y {
                nodes.insert(at, (y, self.weight.pdf(y), f.cdf(y)));
            }
        }
        let mass_y = f.mass_at(y);
        let integrand = |(tau, w, c): (f64, f64, f64), above: bool| {
            // Below the observation the cut-off at τ = y sees the left limit of the cdf.
            let c = if !above && tau == y { c - mass_y } else { c };
            let brier = if above { (1.0 - c).powi(2) } else { c * c };
            w * brier
        };
        let mut total = 0.0;
        for w in nodes.windows(2) {
            // Evaluate the indicator on the open interval so the jump at y is resolved exactly.
            let above = y <= 0.5 * (w[0].0 + w[1].0);
            total += 0.5 * (w[1].0 - w[0].0) * (integrand(w[0], above) + integrand(w[1], above));
        }
        total
    }
}

/// Kernel discrepancy loss with exact sums for discrete predictions and
/// seeded Monte Carlo otherwise.
pub fn kernel_loss(p: &Distribution, y: f64, kernel: &KernelFn, mc: usize, seed: u64) -> Result<f64> {
    if let KernelFn::Constant { c } = kernel {
        return Ok(-c);
    }
    if p.kind() == Kind::Discrete {
        let atoms = p.atoms();
        let kpy: f64 = atoms.iter().map(|(a, w)| w * kernel.eval(*a, y)).sum();
        let mut kpp = 0.0;
        for (a, wa) in &atoms {
            for (b, wb) in &atoms {
                kpp += wa * wb * kernel.eval(*a, *b);
            }
        }
        return Ok(-2.0 * kpy + kpp);
    }
    if mc == 0 {
        return Err(Error::Domain("kernel loss needs at least one Monte Carlo draw".into()));
    }
    let mut rng = seeds::rng(seed);
    let xs = p.sample(&mut rng, mc);
    let xs2 = p.sample(&mut rng, mc);
    let kpy = xs.iter().map(|x| kernel.eval(*x, y)).sum::<f64>() / mc as f64;
    let kpp = xs.iter().zip(&xs2).map(|(a, b)| kernel.eval(*a, *b)).sum::<f64>() / mc as f64;
    Ok(-2.0 * kpy + kpp)
}

/// Monte Carlo estimate of `E[base(p ∗ Z, y + Z)]`.
pub fn convolution_loss(base: &Loss, p: &Distribution, y: f64, noise: &Distribution, m: usize, seed: u64) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("convolution loss needs at least one draw".into()));
    }
    let conv = convolution_adaptor(p, noise, m, seeds::derive(seed, "adaptor"))?;
    let mut rng = seeds::rng(seeds::derive(seed, "shift"));
    let shifts = noise.sample(&mut rng, m);
    let mut total = 0.0;
    for z in shifts {
        total += base.eval(&conv, y + z)?;
    }
    Ok(total / m as f64)
}

impl Loss {
    /// Capped log-loss with the default cap.
    pub fn capped() -> Self {
        Loss::CappedLog { eps: DEFAULT_CAP_EPS }
    }

    pub fn kernel(kernel: KernelFn) -> Self {
        Loss::Kernel { kernel, mc: DEFAULT_KERNEL_MC, seed: DEFAULT_LOSS_SEED }
    }

    pub fn crps() -> Self {
        Loss::Crps { weight: None, grid: DEFAULT_CRPS_GRID }
    }

    pub fn convolution(base: Loss, sigma: f64, m: usize) -> Result<Self> {
        Ok(Loss::Convolution {
            base: Box::new(base),
            noise: Distribution::normal(0.0, sigma)?,
            m,
            seed: DEFAULT_LOSS_SEED,
        })
    }

    pub fn properties(&self) -> LossProperties {
        let p = |proper, strictly_proper, strictly_local| LossProperties { proper, strictly_proper, strictly_local };
        match self {
            Loss::Log => p(true, true, true),
            Loss::CappedLog { .. } | Loss::EpsMixtureLog { .. } => p(false, false, true),
            Loss::Gneiting => p(true, true, false),
            Loss::Crps { .. } => p(true, true, false),
            Loss::Kernel { kernel, .. } => p(true, kernel.is_characteristic(), false),
            Loss::Convolution { base, .. } => {
                let b = base.properties();
                p(b.proper, b.strictly_proper, false)
            }
            Loss::SplitMixed { binary, continuous, discrete, .. } => {
                let parts = [binary.properties(), continuous.properties(), discrete.properties()];
                p(parts.iter().all(|x| x.proper), parts.iter().all(|x| x.strictly_proper), false)
            }
            Loss::MeanVariance => p(true, false, false),
        }
    }

    /// Fills in data-dependent defaults: the CRPS weight becomes a normal
    /// centred on the label range with standard deviation half its width.
    pub fn resolve(&self, labels: &[f64]) -> Result<Loss> {
        Ok(match self {
            Loss::Crps { weight: None, grid } => {
                let lo = labels.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = labels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let half = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };
                let mid = if lo.is_finite() { 0.5 * (lo + hi) } else { 0.0 };
                Loss::Crps { weight: Some(Distribution::normal(mid, half)?), grid: *grid }
            }
            Loss::Convolution { base, noise, m, seed } => {
                Loss::Convolution { base: Box::new(base.resolve(labels)?), noise: noise.clone(), m: *m, seed: *seed }
            }
            other => other.clone(),
        })
    }

    pub fn eval(&self, p: &Distribution, y: f64) -> Result<f64> {
        match self {
            Loss::Log => log_loss(p, y),
            Loss::CappedLog { eps } => capped_log_loss(p, y, *eps),
            Loss::EpsMixtureLog { eps, reference } => {
                let mixed = Distribution::mixture(vec![reference.clone(), p.clone()], vec![*eps, 1.0 - eps])?;
                log_loss(&mixed, y)
            }
            Loss::Gneiting => gneiting_loss(p, y),
            Loss::Crps { weight: Some(w), grid } => crps(p, y, w, *grid),
            Loss::Crps { weight: None, .. } => {
                Err(Error::InvalidParameter("CRPS weight must be resolved against the labels first".into()))
            }
            Loss::Kernel { kernel, mc, seed } => kernel_loss(p, y, kernel, *mc, *seed),
            Loss::Convolution { base, noise, m, seed } => convolution_loss(base, p, y, noise, *m, *seed),
            Loss::SplitMixed { alpha_b, alpha_c, alpha_d, locus, binary, continuous, discrete } => {
                split_mixed_loss(p, y, (*alpha_b, *alpha_c, *alpha_d), locus, binary, continuous, discrete)
            }
            Loss::MeanVariance => {
                let (mu, sd) = p.moments()?;
                mean_variance_loss(mu, sd * sd, y)
            }
        }
    }

    /// Per-point losses of a batch of predictions.
    pub fn eval_batch(&self, batch: &[Distribution], ys: &[f64]) -> Result<Vec<f64>> {
        if batch.len() != ys.len() {
            return Err(Error::Shape { expected: ys.len(), got: batch.len() });
        }
        if let Loss::Crps { weight: Some(w), grid } = self {
            // Uninformed predictors repeat one distribution; its grid cdf is computed once.
            let mut table: Option<(&Distribution, CrpsTable)> = None;
            let mut out = Vec::with_capacity(ys.len());
            for (p, y) in batch.iter().zip(ys) {
                if table.as_ref().is_none_or(|(q, _)| *q != p) {
                    table = Some((p, CrpsTable::new(p, w, *grid)?));
                }
                out.push(table.as_ref().map_or(0.0, |(_, t)| t.eval(p, *y)));
            }
            return Ok(out);
        }
        batch.iter().zip(ys).map(|(p, y)| self.eval(p, *y)).collect()
    }

    /// Upper bound the loss can take, when it has one.
    pub fn cap(&self) -> Option<f64> {
        match self {
            Loss::CappedLog { eps } => Some(-eps.ln()),
            _ => None,
        }
    }
}

/// Log-loss of a normal prediction written as a rescaled squared error.
pub fn normal_log_loss_from_squared(point: f64, sigma: f64, y: f64) -> f64 {
    (point - y).powi(2) / (2.0 * sigma * sigma) + LN_SQRT_2PI + sigma.ln()
}

fn split_mixed_loss(
    p: &Distribution,
    y: f64,
    (alpha_b, alpha_c, alpha_d): (f64, f64, f64),
    locus: &[f64],
    binary: &Loss,
    continuous: &Loss,
    discrete: &Loss,
) -> Result<f64> {
    let dec = p.decompose()?;
    let on_locus: Vec<(f64, f64)> = dec
        .atoms
        .iter()
        .zip(&dec.weights)
        .filter(|(a, _)| locus.contains(a))
        .map(|(a, w)| (*a, w * dec.alpha_d()))
        .collect();
    let pi: f64 = on_locus.iter().map(|(_, m)| m).sum::<f64>().clamp(0.0, 1.0);
    let hit = locus.contains(&y);
    let pb = Distribution::categorical(vec![0.0, 1.0], vec![1.0 - pi, pi])?;
    let lb = binary.eval(&pb, if hit { 1.0 } else { 0.0 })?;
    let branch = if hit {
        if pi == 0.0 {
            f64::INFINITY
        } else {
            let (atoms, masses): (Vec<f64>, Vec<f64>) = on_locus.iter().map(|(a, m)| (*a, m / pi)).unzip();
            alpha_d * discrete.eval(&Distribution::empirical(atoms, masses)?, y)?
        }
    } else {
        match &dec.continuous {
            Some(q) if dec.alpha_c > 0.0 => alpha_c * continuous.eval(q, y)?,
            _ => f64::INFINITY,
        }
    };
    Ok(alpha_b * lb + branch)
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Loss::Log => write!(f, "log"),
            Loss::CappedLog { eps } => write!(f, "log_capped:{eps:e}"),
            Loss::EpsMixtureLog { eps, .. } => write!(f, "log_mixture:{eps:e}"),
            Loss::Gneiting => write!(f, "gneiting"),
            Loss::Crps { .. } => write!(f, "crps"),
            Loss::Kernel { kernel: KernelFn::Gaussian { sigma }, .. } => write!(f, "kernel:gauss:{sigma}"),
            Loss::Kernel { kernel: KernelFn::Laplace { lambda }, .. } => write!(f, "kernel:laplace:{lambda}"),
            Loss::Kernel { kernel: KernelFn::Constant { c }, .. } => write!(f, "kernel:const:{c}"),
            Loss::Convolution { base, noise, m, .. } => {
                let sigma = noise.moments().map(|(_, s)| s).unwrap_or(f64::NAN);
                write!(f, "conv:{base}:{sigma}:{m}")
            }
            Loss::SplitMixed { .. } => write!(f, "split_mixed"),
            Loss::MeanVariance => write!(f, "meanvar"),
        }
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown loss identifier `{s}`"));
        let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["log"] => Ok(Loss::Log),
            ["log_capped"] => Ok(Loss::capped()),
            ["log_capped", eps] => {
                let eps = num(eps)?;
                if !(eps > 0.0 && eps < 1.0) {
                    return Err(bad());
                }
                Ok(Loss::CappedLog { eps })
            }
            ["gneiting"] => Ok(Loss::Gneiting),
            ["crps"] => Ok(Loss::crps()),
            ["kernel", "gauss", sigma] => Ok(Loss::kernel(KernelFn::Gaussian { sigma: num(sigma)? })),
            ["kernel", "laplace", lambda] => Ok(Loss::kernel(KernelFn::Laplace { lambda: num(lambda)? })),
            ["kernel", "const", c] => Ok(Loss::kernel(KernelFn::Constant { c: num(c)? })),
            ["conv", base, sigma, m] => {
                let m: usize = m.parse().map_err(|_| bad())?;
                Loss::convolution(base.parse()?, num(sigma)?, m)
            }
            ["meanvar"] => Ok(Loss::MeanVariance),
            _ => Err(bad()),
        }
    }
}
