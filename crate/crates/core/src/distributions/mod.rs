//! Predicted distributions on the real line.
//!
//! [`Distribution`] is a closed enum of laws that can be evaluated, sampled,
//! mixed and transported through a [`Diffeomorphism`]. Discrete atoms use mass
//! semantics: `pdf` at an atom returns its probability, not an infinite density.

mod diffeo;
mod kernel;
mod serialize;

pub use diffeo::Diffeomorphism;
pub use kernel::KernelShape;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::numeric::{bisect_increasing, integrate_pieces, std_normal_cdf, std_normal_pdf, std_normal_quantile};
use crate::{Error, Result};

const QUAD_TOL: f64 = 1e-10;
const SIMPLEX_TOL: f64 = 1e-9;
const MAX_BREAKPOINTS: usize = 512;
const TAIL_LEVELS: [f64; 17] = [
    1e-13, 1e-10, 1e-7, 1e-4, 0.01, 0.05, 0.15, 0.3, 0.5, 0.7, 0.85, 0.95, 0.99, 1.0 - 1e-4, 1.0 - 1e-7,
    1.0 - 1e-10, 1.0 - 1e-13,
];

/// Whether a law has a density, point masses, or both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Continuous,
    Discrete,
    Mixed,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Continuous => "continuous",
            Kind::Discrete => "discrete",
            Kind::Mixed => "mixed",
        }
    }
}

/// A probability law on the reals or on a finite set of numeric labels.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Normal { mu: f64, sigma: f64 },
    Laplace { mu: f64, b: f64 },
    Uniform { lo: f64, hi: f64 },
    Categorical { labels: Vec<f64>, probs: Vec<f64> },
    Empirical { atoms: Vec<f64>, weights: Vec<f64> },
    Mixture { components: Vec<Distribution>, weights: Vec<f64> },
    KernelDensity { atoms: Vec<f64>, weights: Vec<f64>, bandwidths: Vec<f64>, kernel: KernelShape },
    Histogram { edges: Vec<f64>, masses: Vec<f64> },
    Pushforward { base: Box<Distribution>, map: Diffeomorphism },
}

/// Split of a law into `alpha_c · continuous + (1 − alpha_c) · Σ wᵢ δ(atomᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub alpha_c: f64,
    pub continuous: Option<Distribution>,
    pub atoms: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Decomposition {
    pub fn alpha_d(&self) -> f64 {
        1.0 - self.alpha_c
    }
}

/// Checks that `w` lies on the simplex and renormalizes it exactly.
pub fn simplex(w: &[f64]) -> Result<Vec<f64>> {
    let sum: f64 = w.iter().sum();
    if w.is_empty() || w.iter().any(|x| !x.is_finite() || *x < 0.0) || (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidWeights { sum });
    }
    Ok(w.iter().map(|x| x / sum).collect())
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and positive, got {x}")))
    }
}

fn finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {x}")))
    }
}

fn pick<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Sorts atoms and merges equal ones, summing their masses.
fn aggregate(pairs: impl IntoIterator<Item = (f64, f64)>) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = pairs.into_iter().filter(|(_, w)| *w > 0.0).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (a, w) in v {
        match out.last_mut() {
            Some(last) if last.0 == a => last.1 += w,
            _ => out.push((a, w)),
        }
    }
    out
}

fn thin(mut pts: Vec<f64>) -> Vec<f64> {
    pts.retain(|x| x.is_finite());
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup();
    if pts.len() > MAX_BREAKPOINTS {
        let step = (pts.len() - 1) as f64 / (MAX_BREAKPOINTS - 1) as f64;
        pts = (0..MAX_BREAKPOINTS).map(|i| pts[((i as f64 * step).round() as usize).min(pts.len() - 1)]).collect();
        pts.dedup();
    }
    pts
}

impl Distribution {
    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        finite("mu", mu)?;
        positive("sigma", sigma)?;
        Ok(Distribution::Normal { mu, sigma })
    }

    pub fn laplace(mu: f64, b: f64) -> Result<Self> {
        finite("mu", mu)?;
        positive("b", b)?;
        Ok(Distribution::Laplace { mu, b })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        finite("lo", lo)?;
        finite("hi", hi)?;
        if hi <= lo {
            return Err(Error::InvalidParameter(format!("uniform needs lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Distribution::Uniform { lo, hi })
    }

    pub fn categorical(labels: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if labels.len() != probs.len() {
            return Err(Error::Shape { expected: labels.len(), got: probs.len() });
        }
        let mut seen = labels.clone();
        seen.sort_by(|a, b| a.total_cmp(b));
        if seen.windows(2).any(|w| w[0] == w[1]) || labels.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidParameter("categorical labels must be distinct finite values".into()));
        }
        let probs = simplex(&probs)?;
        Ok(Distribution::Categorical { labels, probs })
    }

    pub fn empirical(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::Shape { expected: atoms.len(), got: weights.len() });
        }
        if let Some(a) = atoms.iter().find(|a| !a.is_finite()) {
            return Err(Error::InvalidParameter(format!("atom {a} is not finite")));
        }
        let weights = simplex(&weights)?;
        Ok(Distribution::Empirical { atoms, weights })
    }

    /// Equally weighted atoms.
    pub fn empirical_uniform(atoms: Vec<f64>) -> Result<Self> {
        let n = atoms.len();
        Self::empirical(atoms, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn point_mass(y: f64) -> Result<Self> {
        Self::empirical(vec![y], vec![1.0])
    }

    /// Weighted mixture. Equal components are merged, zero weights dropped, and a
    /// mixture left with one component collapses to that component.
    pub fn mixture(components: Vec<Distribution>, weights: Vec<f64>) -> Result<Self> {
        if components.len() != weights.len() {
            return Err(Error::Shape { expected: components.len(), got: weights.len() });
        }
        let weights = simplex(&weights)?;
        let mut comps: Vec<Distribution> = Vec::new();
        let mut ws: Vec<f64> = Vec::new();
        for (c, w) in components.into_iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            match comps.iter().position(|d| *d == c) {
                Some(i) => ws[i] += w,
                None => {
                    comps.push(c);
                    ws.push(w);
                }
            }
        }
        if comps.len() == 1 {
            return Ok(comps.pop().expect("one component"));
        }
        Ok(Distribution::Mixture { components: comps, weights: ws })
    }

    pub fn kernel_density(
        atoms: Vec<f64>,
        weights: Vec<f64>,
        bandwidths: Vec<f64>,
        kernel: KernelShape,
    ) -> Result<Self> {
        if atoms.len() != weights.len() || atoms.len() != bandwidths.len() {
            return Err(Error::Shape { expected: atoms.len(), got: weights.len().min(bandwidths.len()) });
        }
        for &h in &bandwidths {
            positive("bandwidth", h)?;
        }
        for &a in &atoms {
            finite("atom", a)?;
        }
        let weights = simplex(&weights)?;
        Ok(Distribution::KernelDensity { atoms, weights, bandwidths, kernel })
    }

    pub fn histogram(edges: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if edges.len() != masses.len() + 1 {
            return Err(Error::Shape { expected: edges.len().saturating_sub(1), got: masses.len() });
        }
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("histogram edges must be finite and strictly increasing".into()));
        }
        let masses = simplex(&masses)?;
        Ok(Distribution::Histogram { edges, masses })
    }

    /// Law of `T(X)` for `X ~ self`.
    ///
    /// Affine maps of location-scale variants and of atoms simplify to native
    /// variants; mixtures are transported component-wise.
    pub fn pushforward(&self, map: &Diffeomorphism) -> Result<Self> {
        if let Diffeomorphism::Composed(maps) = map {
            if maps.is_empty() {
                return Ok(self.clone());
            }
        }
        match (self, map) {
            (Distribution::Normal { mu, sigma }, Diffeomorphism::Affine { a, b }) => {
                Self::normal(a * mu + b, a.abs() * sigma)
            }
            (Distribution::Laplace { mu, b: s }, Diffeomorphism::Affine { a, b }) => {
                Self::laplace(a * mu + b, a.abs() * s)
            }
            (Distribution::Uniform { lo, hi }, Diffeomorphism::Affine { a, b }) => {
                let (x, y) = (a * lo + b, a * hi + b);
                Self::uniform(x.min(y), x.max(y))
            }
            (
                Distribution::KernelDensity { atoms, weights, bandwidths, kernel },
                Diffeomorphism::Affine { a, b },
            ) => Self::kernel_density(
                atoms.iter().map(|x| a * x + b).collect(),
                weights.clone(),
                bandwidths.iter().map(|h| a.abs() * h).collect(),
                *kernel,
            ),
            (Distribution::Histogram { edges, masses }, Diffeomorphism::Affine { a, b }) => {
                let mut e: Vec<f64> = edges.iter().map(|x| a * x + b).collect();
                let mut m = masses.clone();
                if *a < 0.0 {
                    e.reverse();
                    m.reverse();
                }
                Self::histogram(e, m)
            }
            (Distribution::Categorical { labels, probs }, _) => {
                Self::categorical(labels.iter().map(|x| map.forward(*x)).collect(), probs.clone())
            }
            (Distribution::Empirical { atoms, weights }, _) => {
                Self::empirical(atoms.iter().map(|x| map.forward(*x)).collect(), weights.clone())
            }
            (Distribution::Mixture { components, weights }, _) => {
                let pushed = components.iter().map(|c| c.pushforward(map)).collect::<Result<Vec<_>>>()?;
                Self::mixture(pushed, weights.clone())
            }
            _ => {
                for &alpha in &[0.01, 0.25, 0.5, 0.75, 0.99] {
                    let x = self.quantile_unchecked(alpha);
                    if map.derivative(x) == 0.0 {
                        return Err(Error::SingularTransform { at: x });
                    }
                }
                Ok(Distribution::Pushforward { base: Box::new(self.clone()), map: map.clone() })
            }
        }
    }

    /// Law of `U⁻¹(X)`, the pull-back of `self` through `U`.
    pub fn pullback(&self, map: &Diffeomorphism) -> Result<Self> {
        self.pushforward(&map.inverse_map())
    }

    pub fn kind(&self) -> Kind {
        match self {
            Distribution::Categorical { .. } | Distribution::Empirical { .. } => Kind::Discrete,
            Distribution::Mixture { components, .. } => {
                let mut kinds = components.iter().map(|c| c.kind());
                let first = kinds.next().unwrap_or(Kind::Continuous);
                if kinds.all(|k| k == first) {
                    first
                } else {
                    Kind::Mixed
                }
            }
            Distribution::Pushforward { base, .. } => base.kind(),
            _ => Kind::Continuous,
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            Distribution::Normal { .. } => "normal",
            Distribution::Laplace { .. } => "laplace",
            Distribution::Uniform { .. } => "uniform",
            Distribution::Categorical { .. } => "categorical",
            Distribution::Empirical { .. } => "empirical",
            Distribution::Mixture { .. } => "mixture",
            Distribution::KernelDensity { .. } => "kernel_density",
            Distribution::Histogram { .. } => "histogram",
            Distribution::Pushforward { .. } => "pushforward",
        }
    }

    pub(crate) fn require_continuous(&self, what: &str) -> Result<()> {
        match self.kind() {
            Kind::Continuous => Ok(()),
            k => Err(Error::UnsupportedKind { kind: k.name(), what: what.to_string() }),
        }
    }

    /// Density off atoms, mass on atoms.
    pub fn pdf(&self, y: f64) -> f64 {
        match self.kind() {
            Kind::Continuous => self.density_at(y),
            Kind::Discrete => self.mass_at(y),
            Kind::Mixed => {
                let m = self.mass_at(y);
                if m > 0.0 {
                    m
                } else {
                    self.density_at(y)
                }
            }
        }
    }

    /// Natural log of [`Distribution::pdf`], computed directly where a closed form exists.
    pub fn log_pdf(&self, y: f64) -> f64 {
        match self {
            Distribution::Normal { mu, sigma } => {
                let z = (y - mu) / sigma;
                -0.5 * z * z - crate::numeric::LN_SQRT_2PI - sigma.ln()
            }
            Distribution::Laplace { mu, b } => -(y - mu).abs() / b - (2.0 * b).ln(),
            _ => self.pdf(y).ln(),
        }
    }

    /// Probability of the single point `y`.
    pub fn mass_at(&self, y: f64) -> f64 {
        match self {
            Distribution::Categorical { labels: atoms, probs: weights }
            | Distribution::Empirical { atoms, weights } => {
                atoms.iter().zip(weights).filter(|(a, _)| **a == y).map(|(_, w)| w).sum()
            }
            Distribution::Mixture { components, weights } => {
                components.iter().zip(weights).map(|(c, w)| w * c.mass_at(y)).sum()
            }
            Distribution::Pushforward { base, map } => {
                let (lo, hi) = self.support();
                if y < lo || y > hi {
                    0.0
                } else {
                    base.mass_at(map.inverse(y))
                }
            }
            _ => 0.0,
        }
    }

    /// Density of the absolutely continuous part, scaled by its total mass.
    pub fn density_at(&self, y: f64) -> f64 {
        match self {
            Distribution::Normal { mu, sigma } => std_normal_pdf((y - mu) / sigma) / sigma,
            Distribution::Laplace { mu, b } => (-(y - mu).abs() / b).exp() / (2.0 * b),
            Distribution::Uniform { lo, hi } => {
                if y >= *lo && y <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Distribution::Categorical { .. } | Distribution::Empirical { .. } => 0.0,
            Distribution::Mixture { components, weights } => {
                components.iter().zip(weights).map(|(c, w)| w * c.density_at(y)).sum()
            }
            Distribution::KernelDensity { atoms, weights, bandwidths, kernel } => atoms
                .iter()
                .zip(weights)
                .zip(bandwidths)
                .map(|((a, w), h)| w * kernel.pdf(y - a, *h))
                .sum(),
            Distribution::Histogram { edges, masses } => match self.bin_of(y) {
                Some(i) => masses[i] / (edges[i + 1] - edges[i]),
                None => 0.0,
            },
            Distribution::Pushforward { base, map } => {
                let (lo, hi) = self.support();
                if !(y > lo && y < hi) {
                    return 0.0;
                }
                let x = map.inverse(y);
                let d = base.density_at(x);
                if d == 0.0 {
                    0.0
                } else {
                    d * map.inverse_derivative(y).abs()
                }
            }
        }
    }

    fn bin_of(&self, y: f64) -> Option<usize> {
        let Distribution::Histogram { edges, .. } = self else { return None };
        let n = edges.len();
        if y < edges[0] || y > edges[n - 1] {
            return None;
        }
        let i = edges.partition_point(|e| *e <= y);
        Some(i.saturating_sub(1).min(n - 2))
    }

    /// `P(X ≤ y)`, right-continuous at atoms.
    pub fn cdf(&self, y: f64) -> f64 {
        let p = match self {
            Distribution::Normal { mu, sigma } => std_normal_cdf((y - mu) / sigma),
            Distribution::Laplace { mu, b } => {
                let z = (y - mu) / b;
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
            Distribution::Uniform { lo, hi } => ((y - lo) / (hi - lo)).clamp(0.0, 1.0),
            Distribution::Categorical { labels: atoms, probs: weights }
            | Distribution::Empirical { atoms, weights } => {
                atoms.iter().zip(weights).filter(|(a, _)| **a <= y).map(|(_, w)| w).sum()
            }
            Distribution::Mixture { components, weights } => {
                components.iter().zip(weights).map(|(c, w)| w * c.cdf(y)).sum()
            }
            Distribution::KernelDensity { atoms, weights, bandwidths, kernel } => atoms
                .iter()
                .zip(weights)
                .zip(bandwidths)
                .map(|((a, w), h)| w * kernel.cdf(y - a, *h))
                .sum(),
            Distribution::Histogram { edges, masses } => match self.bin_of(y) {
                None if y < edges[0] => 0.0,
                None => 1.0,
                Some(i) => {
                    let below: f64 = masses[..i].iter().sum();
                    below + masses[i] * (y - edges[i]) / (edges[i + 1] - edges[i])
                }
            },
            Distribution::Pushforward { base, map } => {
                let (lo, hi) = self.support();
                if y < lo {
                    0.0
                } else if y >= hi {
                    1.0
                } else {
                    let x = map.inverse(y);
                    if map.is_increasing() {
                        base.cdf(x)
                    } else {
                        1.0 - base.cdf(x) + base.mass_at(x)
                    }
                }
            }
        };
        p.clamp(0.0, 1.0)
    }

    /// Closed interval outside of which the law has no mass.
    pub fn support(&self) -> (f64, f64) {
        let inf = f64::INFINITY;
        match self {
            Distribution::Normal { .. } | Distribution::Laplace { .. } => (-inf, inf),
            Distribution::Uniform { lo, hi } => (*lo, *hi),
            Distribution::Categorical { labels: atoms, probs: weights }
            | Distribution::Empirical { atoms, weights } => {
                let live = atoms.iter().zip(weights).filter(|(_, w)| **w > 0.0).map(|(a, _)| *a);
                live.fold((inf, -inf), |(lo, hi), a| (lo.min(a), hi.max(a)))
            }
            Distribution::Mixture { components, .. } => components
                .iter()
                .map(|c| c.support())
                .fold((inf, -inf), |(lo, hi), (a, b)| (lo.min(a), hi.max(b))),
            Distribution::KernelDensity { atoms, bandwidths, kernel, .. } => {
                if !kernel.bounded() {
                    return (-inf, inf);
                }
                atoms.iter().zip(bandwidths).fold((inf, -inf), |(lo, hi), (a, h)| {
                    (lo.min(a - kernel.reach(*h)), hi.max(a + kernel.reach(*h)))
                })
            }
            Distribution::Histogram { edges, .. } => (edges[0], edges[edges.len() - 1]),
            Distribution::Pushforward { base, map } => {
                let (lo, hi) = base.support();
                let (dlo, dhi) = map.domain();
                let (a, b) = (map.forward(lo.max(dlo)), map.forward(hi.min(dhi)));
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            }
        }
    }

    /// Sorted breakpoints bracketing the continuous mass, for piecewise quadrature.
    pub fn integration_points(&self) -> Vec<f64> {
        match self {
            Distribution::Normal { mu, sigma } => vec![mu - 12.0 * sigma, *mu, mu + 12.0 * sigma],
            Distribution::Laplace { mu, b } => vec![mu - 40.0 * b, *mu, mu + 40.0 * b],
            Distribution::Uniform { lo, hi } => vec![*lo, *hi],
            Distribution::Categorical { labels: atoms, .. } | Distribution::Empirical { atoms, .. } => {
                thin(atoms.clone())
            }
            Distribution::Mixture { components, .. } => {
                thin(components.iter().flat_map(|c| c.integration_points()).collect())
            }
            Distribution::KernelDensity { atoms, bandwidths, kernel, .. } => {
                let mut pts: Vec<f64> = atoms.clone();
                for (a, h) in atoms.iter().zip(bandwidths) {
                    pts.push(a - kernel.reach(*h));
                    pts.push(a + kernel.reach(*h));
                }
                let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), x| (l.min(*x), u.max(*x)));
                let mut t = thin(pts);
                t.insert(0, lo);
                t.push(hi);
                thin(t)
            }
            Distribution::Histogram { edges, .. } => thin(edges.clone()),
            Distribution::Pushforward { .. } => {
                let (lo, hi) = self.support();
                let mut pts: Vec<f64> = TAIL_LEVELS.iter().map(|&a| self.quantile_unchecked(a)).collect();
                pts.push(lo);
                pts.push(hi);
                thin(pts)
            }
        }
    }

    /// Sorted distinct atoms with their (unnormalized) masses.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match self {
            Distribution::Categorical { labels: atoms, probs: weights }
            | Distribution::Empirical { atoms, weights } => aggregate(atoms.iter().copied().zip(weights.iter().copied())),
            Distribution::Mixture { components, weights } => aggregate(
                components
                    .iter()
                    .zip(weights)
                    .flat_map(|(c, w)| c.atoms().into_iter().map(move |(a, m)| (a, w * m))),
            ),
            Distribution::Pushforward { base, map } => {
                aggregate(base.atoms().into_iter().map(|(a, m)| (map.forward(a), m)))
            }
            _ => Vec::new(),
        }
    }

    /// Splits the law into its continuous part and its atoms.
    pub fn decompose(&self) -> Result<Decomposition> {
        let atoms = self.atoms();
        let alpha_d: f64 = atoms.iter().map(|(_, m)| m).sum();
        let alpha_c = match self.kind() {
            Kind::Continuous => 1.0,
            Kind::Discrete => 0.0,
            Kind::Mixed => (1.0 - alpha_d).clamp(0.0, 1.0),
        };
        let continuous = if alpha_c > 0.0 { Some(self.continuous_part()?) } else { None };
        let (a, w): (Vec<f64>, Vec<f64>) = if alpha_d > 0.0 && alpha_c < 1.0 {
            atoms.into_iter().map(|(a, m)| (a, m / alpha_d)).unzip()
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(Decomposition { alpha_c, continuous, atoms: a, weights: w })
    }

    fn continuous_part(&self) -> Result<Distribution> {
        match self {
            Distribution::Mixture { components, weights } => {
                let mut parts = Vec::new();
                let mut ws = Vec::new();
                for (c, w) in components.iter().zip(weights) {
                    if c.kind() == Kind::Discrete {
                        continue;
                    }
                    let d = c.decompose()?;
                    if let Some(q) = d.continuous {
                        parts.push(q);
                        ws.push(w * d.alpha_c);
                    }
                }
                let total: f64 = ws.iter().sum();
                Self::mixture(parts, ws.iter().map(|w| w / total).collect())
            }
            Distribution::Pushforward { base, map } => {
                base.decompose()?.continuous.expect("continuous part exists").pushforward(map)
            }
            other => Ok(other.clone()),
        }
    }

    /// Squared L² norm of the density, or sum of squared masses.
    pub fn lp2_norm_sq(&self) -> Result<f64> {
        if self.kind() == Kind::Mixed {
            return Err(Error::UnsupportedKind { kind: "mixed", what: "squared L2 norm".into() });
        }
        let gauss_pair = |m1: f64, s1: f64, m2: f64, s2: f64| {
            let s = (s1 * s1 + s2 * s2).sqrt();
            std_normal_pdf((m1 - m2) / s) / s
        };
        Ok(match self {
            Distribution::Normal { sigma, .. } => 1.0 / (2.0 * sigma * std::f64::consts::PI.sqrt()),
            Distribution::Laplace { b, .. } => 1.0 / (4.0 * b),
            Distribution::Uniform { lo, hi } => 1.0 / (hi - lo),
            Distribution::Categorical { .. } | Distribution::Empirical { .. } => {
                self.atoms().iter().map(|(_, m)| m * m).sum()
            }
            Distribution::Histogram { edges, masses } => {
                masses.iter().zip(edges.windows(2)).map(|(m, e)| m * m / (e[1] - e[0])).sum()
            }
            Distribution::Mixture { .. } if self.kind() == Kind::Discrete => {
                self.atoms().iter().map(|(_, m)| m * m).sum()
            }
            Distribution::Mixture { components, weights }
                if components.iter().all(|c| matches!(c, Distribution::Normal { .. })) =>
            {
                let params: Vec<(f64, f64, f64)> = components
                    .iter()
                    .zip(weights)
                    .map(|(c, w)| match c {
                        Distribution::Normal { mu, sigma } => (*w, *mu, *sigma),
                        _ => unreachable!(),
                    })
                    .collect();
                pairwise(&params, gauss_pair)
            }
            Distribution::KernelDensity { atoms, weights, bandwidths, kernel: KernelShape::Gaussian } => {
                let params: Vec<(f64, f64, f64)> =
                    (0..atoms.len()).map(|i| (weights[i], atoms[i], bandwidths[i])).collect();
                pairwise(&params, gauss_pair)
            }
            Distribution::Pushforward { base, map } => {
                let pts = base.integration_points();
                integrate_pieces(
                    &|x: f64| {
                        let d = base.density_at(x);
                        if d == 0.0 {
                            0.0
                        } else {
                            d * d / map.derivative(x).abs()
                        }
                    },
                    &pts,
                    QUAD_TOL,
                )
            }
            _ => {
                let pts = self.integration_points();
                integrate_pieces(&|x: f64| self.density_at(x).powi(2), &pts, QUAD_TOL)
            }
        })
    }

    /// Expectation of `g(X)`.
    pub fn expect(&self, g: &dyn Fn(f64) -> f64) -> f64 {
        match self {
            Distribution::Categorical { labels: atoms, probs: weights }
            | Distribution::Empirical { atoms, weights } => atoms.iter().zip(weights).map(|(a, w)| w * g(*a)).sum(),
            Distribution::Mixture { components, weights } => {
                components.iter().zip(weights).map(|(c, w)| w * c.expect(g)).sum()
            }
            Distribution::Pushforward { base, map } => base.expect(&|x: f64| g(map.forward(x))),
            _ => {
                let pts = self.integration_points();
                integrate_pieces(&|x: f64| {
                    let d = self.density_at(x);
                    if d == 0.0 { 0.0 } else { d * g(x) }
                }, &pts, QUAD_TOL)
            }
        }
    }

    /// Mean and standard deviation.
    pub fn moments(&self) -> Result<(f64, f64)> {
        let (m, v) = self.mean_var();
        if !m.is_finite() || !v.is_finite() {
            return Err(Error::Domain(format!("{} distribution has no finite moments", self.variant_name())));
        }
        Ok((m, v.max(0.0).sqrt()))
    }

    pub fn mean(&self) -> Result<f64> {
        self.moments().map(|(m, _)| m)
    }

    fn mean_var(&self) -> (f64, f64) {
        match self {
            Distribution::Normal { mu, sigma } => (*mu, sigma * sigma),
            Distribution::Laplace { mu, b } => (*mu, 2.0 * b * b),
            Distribution::Uniform { lo, hi } => (0.5 * (lo + hi), (hi - lo).powi(2) / 12.0),
            Distribution::Categorical { labels: atoms, probs: weights }
            | Distribution::Empirical { atoms, weights } => {
                let m: f64 = atoms.iter().zip(weights).map(|(a, w)| w * a).sum();
                let v: f64 = atoms.iter().zip(weights).map(|(a, w)| w * (a - m).powi(2)).sum();
                (m, v)
            }
            Distribution::Mixture { components, weights } => {
                let mv: Vec<(f64, f64)> = components.iter().map(|c| c.mean_var()).collect();
                let m: f64 = mv.iter().zip(weights).map(|((cm, _), w)| w * cm).sum();
                let v: f64 = mv.iter().zip(weights).map(|((cm, cv), w)| w * (cv + (cm - m).powi(2))).sum();
                (m, v)
            }
            Distribution::KernelDensity { atoms, weights, bandwidths, .. } => {
                let m: f64 = atoms.iter().zip(weights).map(|(a, w)| w * a).sum();
                let v: f64 = (0..atoms.len())
                    .map(|i| weights[i] * (bandwidths[i].powi(2) + (atoms[i] - m).powi(2)))
                    .sum();
                (m, v)
            }
            Distribution::Histogram { edges, masses } => {
                let mids = edges.windows(2).map(|e| (0.5 * (e[0] + e[1]), (e[1] - e[0]).powi(2) / 12.0));
                let parts: Vec<(f64, f64)> = mids.collect();
                let m: f64 = parts.iter().zip(masses).map(|((c, _), w)| w * c).sum();
                let v: f64 = parts.iter().zip(masses).map(|((c, s), w)| w * (s + (c - m).powi(2))).sum();
                (m, v)
            }
            Distribution::Pushforward { .. } => {
                let m = self.expect(&|x| x);
                let v = self.expect(&|x| (x - m).powi(2));
                (m, v)
            }
        }
    }

    /// Lower generalized inverse of the cdf: the smallest `y` with `F(y) ≥ alpha`.
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!("quantile level must lie strictly inside (0, 1), got {alpha}")));
        }
        Ok(self.quantile_unchecked(alpha))
    }

    /// Quantile without the level check; levels at or beyond 0 and 1 return the support ends.
    pub(crate) fn quantile_unchecked(&self, alpha: f64) -> f64 {
        let (lo, hi) = self.support();
        if alpha <= 0.0 {
            return lo;
        }
        if alpha >= 1.0 {
            return hi;
        }
        match self {
            Distribution::Normal { mu, sigma } => mu + sigma * std_normal_quantile(alpha),
            Distribution::Laplace { mu, b } => {
                if alpha < 0.5 {
                    mu + b * (2.0 * alpha).ln()
                } else {
                    mu - b * (2.0 * (1.0 - alpha)).ln()
                }
            }
            Distribution::Uniform { lo, hi } => lo + alpha * (hi - lo),
            Distribution::Categorical { .. } | Distribution::Empirical { .. } => {
                let atoms = self.atoms();
                let mut acc = 0.0;
                for (a, m) in &atoms {
                    acc += m;
                    if acc >= alpha - 1e-12 {
                        return *a;
                    }
                }
                atoms.last().map(|(a, _)| *a).unwrap_or(f64::NAN)
            }
            Distribution::Pushforward { base, map } if base.kind() == Kind::Continuous => {
                if map.is_increasing() {
                    map.forward(base.quantile_unchecked(alpha))
                } else {
                    map.forward(base.quantile_unchecked(1.0 - alpha))
                }
            }
            _ => self.bisect_quantile(alpha),
        }
    }

    fn bisect_quantile(&self, alpha: f64) -> f64 {
        let (slo, shi) = self.support();
        let (mut lo, mut hi) = (slo, shi);
        if !lo.is_finite() || !hi.is_finite() {
            let (m, s) = self.mean_var();
            let s = s.sqrt().max(1e-12);
            let mut width = 8.0 * s;
            if !lo.is_finite() {
                lo = m - width;
                while self.cdf(lo) >= alpha && width < 1e300 {
                    width *= 4.0;
                    lo = m - width;
                }
            }
            width = 8.0 * s;
            if !hi.is_finite() {
                hi = m + width;
                while self.cdf(hi) < alpha && width < 1e300 {
                    width *= 4.0;
                    hi = m + width;
                }
            }
        }
        let q = bisect_increasing(|y| self.cdf(y), alpha, lo, hi);
        // Snap onto an atom that the bisection approached from above.
        self.atoms()
            .into_iter()
            .find(|(a, _)| *a <= q && q - a <= 1e-12 * a.abs().max(1.0) && self.cdf(*a) >= alpha)
            .map(|(a, _)| a)
            .unwrap_or(q)
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Distribution::Normal { mu, sigma } => mu + sigma * rng.sample::<f64, _>(StandardNormal),
            Distribution::Laplace { mu, b } => {
                let u: f64 = rng.random::<f64>() - 0.5;
                mu - b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            Distribution::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Distribution::Categorical { labels: atoms, probs: weights }
            | Distribution::Empirical { atoms, weights } => atoms[pick(rng, weights)],
            Distribution::Mixture { components, weights } => components[pick(rng, weights)].sample_one(rng),
            Distribution::KernelDensity { atoms, weights, bandwidths, kernel } => {
                let i = pick(rng, weights);
                atoms[i] + kernel.sample(rng, bandwidths[i])
            }
            Distribution::Histogram { edges, masses } => {
                let i = pick(rng, masses);
                edges[i] + (edges[i + 1] - edges[i]) * rng.random::<f64>()
            }
            Distribution::Pushforward { base, map } => map.forward(base.sample_one(rng)),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }
}

fn pairwise(params: &[(f64, f64, f64)], k: impl Fn(f64, f64, f64, f64) -> f64) -> f64 {
    let mut total = 0.0;
    for (i, &(wi, mi, si)) in params.iter().enumerate() {
        total += wi * wi * k(mi, si, mi, si);
        for &(wj, mj, sj) in &params[i + 1..] {
            total += 2.0 * wi * wj * k(mi, si, mj, sj);
        }
    }
    total
}

#[cfg(test)]
mod tests;
