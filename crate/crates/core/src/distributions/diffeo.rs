use crate::distributions::Distribution;
use crate::numeric::{logit, sigmoid, sigmoid_slope};
use crate::{Error, Result};

/// A strictly monotone, differentiable bijection between intervals of the real line.
#[derive(Debug, Clone, PartialEq)]
pub enum Diffeomorphism {
    /// `x ↦ a·x + b` with `a ≠ 0`.
    Affine { a: f64, b: f64 },
    /// The logistic function, mapping ℝ onto (0, 1).
    Sigmoid,
    /// The log-odds, mapping (0, 1) onto ℝ.
    Logit,
    /// The cdf of a continuous distribution with positive density on its support.
    CdfOf(Box<Distribution>),
    /// The quantile function of a continuous distribution; inverse of [`Diffeomorphism::CdfOf`].
    QuantileOf(Box<Distribution>),
    /// Maps applied left to right.
    Composed(Vec<Diffeomorphism>),
}

impl Diffeomorphism {
    pub fn affine(a: f64, b: f64) -> Result<Self> {
        if a == 0.0 || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!("affine map needs finite a != 0, got a={a}, b={b}")));
        }
        Ok(Diffeomorphism::Affine { a, b })
    }

    pub fn cdf_of(d: Distribution) -> Result<Self> {
        d.require_continuous("cdf map")?;
        Ok(Diffeomorphism::CdfOf(Box::new(d)))
    }

    pub fn quantile_of(d: Distribution) -> Result<Self> {
        d.require_continuous("quantile map")?;
        Ok(Diffeomorphism::QuantileOf(Box::new(d)))
    }

    /// Composition applying `self` first and then `next`.
    pub fn then(self, next: Diffeomorphism) -> Self {
        let mut maps = match self {
            Diffeomorphism::Composed(v) => v,
            other => vec![other],
        };
        match next {
            Diffeomorphism::Composed(v) => maps.extend(v),
            other => maps.push(other),
        }
        Diffeomorphism::Composed(maps)
    }

    pub fn forward(&self, x: f64) -> f64 {
        match self {
            Diffeomorphism::Affine { a, b } => a * x + b,
            Diffeomorphism::Sigmoid => sigmoid(x),
            Diffeomorphism::Logit => logit(x),
            Diffeomorphism::CdfOf(d) => d.cdf(x),
            Diffeomorphism::QuantileOf(d) => d.quantile_unchecked(x),
            Diffeomorphism::Composed(maps) => maps.iter().fold(x, |acc, m| m.forward(acc)),
        }
    }

    pub fn inverse(&self, z: f64) -> f64 {
        match self {
            Diffeomorphism::Affine { a, b } => (z - b) / a,
            Diffeomorphism::Sigmoid => logit(z),
            Diffeomorphism::Logit => sigmoid(z),
            Diffeomorphism::CdfOf(d) => d.quantile_unchecked(z),
            Diffeomorphism::QuantileOf(d) => d.cdf(z),
            Diffeomorphism::Composed(maps) => maps.iter().rev().fold(z, |acc, m| m.inverse(acc)),
        }
    }

    /// Derivative of the forward map at `x`.
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Diffeomorphism::Affine { a, .. } => *a,
            Diffeomorphism::Sigmoid => sigmoid_slope(x),
            Diffeomorphism::Logit => 1.0 / (x * (1.0 - x)),
            Diffeomorphism::CdfOf(d) => d.pdf(x),
            Diffeomorphism::QuantileOf(d) => 1.0 / d.pdf(d.quantile_unchecked(x)),
            Diffeomorphism::Composed(maps) => {
                let mut at = x;
                let mut slope = 1.0;
                for m in maps {
                    slope *= m.derivative(at);
                    at = m.forward(at);
                }
                slope
            }
        }
    }

    /// Derivative of the inverse map at `z`.
    pub fn inverse_derivative(&self, z: f64) -> f64 {
        match self {
            Diffeomorphism::Affine { a, .. } => 1.0 / a,
            Diffeomorphism::Sigmoid => 1.0 / (z * (1.0 - z)),
            Diffeomorphism::Logit => sigmoid_slope(z),
            Diffeomorphism::CdfOf(d) => 1.0 / d.pdf(d.quantile_unchecked(z)),
            Diffeomorphism::QuantileOf(d) => d.pdf(z),
            Diffeomorphism::Composed(maps) => {
                let mut at = z;
                let mut slope = 1.0;
                for m in maps.iter().rev() {
                    slope *= m.inverse_derivative(at);
                    at = m.inverse(at);
                }
                slope
            }
        }
    }

    pub fn inverse_map(&self) -> Diffeomorphism {
        match self {
            Diffeomorphism::Affine { a, b } => Diffeomorphism::Affine { a: 1.0 / a, b: -b / a },
            Diffeomorphism::Sigmoid => Diffeomorphism::Logit,
            Diffeomorphism::Logit => Diffeomorphism::Sigmoid,
            Diffeomorphism::CdfOf(d) => Diffeomorphism::QuantileOf(d.clone()),
            Diffeomorphism::QuantileOf(d) => Diffeomorphism::CdfOf(d.clone()),
            Diffeomorphism::Composed(maps) => {
                Diffeomorphism::Composed(maps.iter().rev().map(|m| m.inverse_map()).collect())
            }
        }
    }

    pub fn is_increasing(&self) -> bool {
        match self {
            Diffeomorphism::Affine { a, .. } => *a > 0.0,
            Diffeomorphism::Composed(maps) => maps.iter().filter(|m| !m.is_increasing()).count() % 2 == 0,
            _ => true,
        }
    }

    /// Open interval on which the forward map is defined.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Diffeomorphism::Affine { .. } | Diffeomorphism::Sigmoid => (f64::NEG_INFINITY, f64::INFINITY),
            Diffeomorphism::Logit | Diffeomorphism::QuantileOf(_) => (0.0, 1.0),
            Diffeomorphism::CdfOf(d) => d.support(),
            Diffeomorphism::Composed(maps) => match maps.first() {
                Some(m) => m.domain(),
                None => (f64::NEG_INFINITY, f64::INFINITY),
            },
        }
    }

    /// Open interval the forward map lands in.
    pub fn range(&self) -> (f64, f64) {
        match self {
            Diffeomorphism::Affine { .. } | Diffeomorphism::Logit => (f64::NEG_INFINITY, f64::INFINITY),
            Diffeomorphism::Sigmoid | Diffeomorphism::CdfOf(_) => (0.0, 1.0),
            Diffeomorphism::QuantileOf(d) => d.support(),
            Diffeomorphism::Composed(maps) => {
                let (lo, hi) = self.domain();
                let (a, b) = (maps.iter().fold(lo, |x, m| m.forward(x)), maps.iter().fold(hi, |x, m| m.forward(x)));
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Diffeomorphism::Affine { .. } => "affine",
            Diffeomorphism::Sigmoid => "sigmoid",
            Diffeomorphism::Logit => "logit",
            Diffeomorphism::CdfOf(_) => "cdf_of",
            Diffeomorphism::QuantileOf(_) => "quantile_of",
            Diffeomorphism::Composed(_) => "composed",
        }
    }
}
