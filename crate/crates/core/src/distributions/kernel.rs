use rand::Rng;
use rand_distr::StandardNormal;

use crate::numeric::{std_normal_cdf, std_normal_pdf};

/// Shape of the smoothing kernel used by kernel density distributions.
///
/// The bandwidth attached to each atom is always the kernel's standard
/// deviation, so different shapes with the same bandwidth have equal spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelShape {
    Gaussian,
    Laplace,
    Epanechnikov,
}

impl KernelShape {
    pub fn name(self) -> &'static str {
        match self {
            KernelShape::Gaussian => "gaussian",
            KernelShape::Laplace => "laplace",
            KernelShape::Epanechnikov => "epanechnikov",
        }
    }

    pub fn pdf(self, u: f64, h: f64) -> f64 {
        match self {
            KernelShape::Gaussian => std_normal_pdf(u / h) / h,
            KernelShape::Laplace => {
                let b = h / std::f64::consts::SQRT_2;
                (-u.abs() / b).exp() / (2.0 * b)
            }
            KernelShape::Epanechnikov => {
                let a = 5f64.sqrt() * h;
                let t = u / a;
                if t.abs() >= 1.0 {
                    0.0
                } else {
                    0.75 * (1.0 - t * t) / a
                }
            }
        }
    }

    pub fn cdf(self, u: f64, h: f64) -> f64 {
        match self {
            KernelShape::Gaussian => std_normal_cdf(u / h),
            KernelShape::Laplace => {
                let b = h / std::f64::consts::SQRT_2;
                if u < 0.0 {
                    0.5 * (u / b).exp()
                } else {
                    1.0 - 0.5 * (-u / b).exp()
                }
            }
            KernelShape::Epanechnikov => {
                let a = 5f64.sqrt() * h;
                let t = (u / a).clamp(-1.0, 1.0);
                0.25 * (2.0 + 3.0 * t - t * t * t)
            }
        }
    }

    /// Half-width beyond which the kernel carries negligible mass.
    pub fn reach(self, h: f64) -> f64 {
        match self {
            KernelShape::Gaussian => 12.0 * h,
            KernelShape::Laplace => 40.0 * h / std::f64::consts::SQRT_2,
            KernelShape::Epanechnikov => 5f64.sqrt() * h,
        }
    }

    pub fn bounded(self) -> bool {
        matches!(self, KernelShape::Epanechnikov)
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R, h: f64) -> f64 {
        match self {
            KernelShape::Gaussian => h * rng.sample::<f64, _>(StandardNormal),
            KernelShape::Laplace => {
                let b = h / std::f64::consts::SQRT_2;
                let u: f64 = rng.random::<f64>() - 0.5;
                -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            KernelShape::Epanechnikov => {
                // Median of three uniforms on [-1, 1] has the Epanechnikov law.
                let mut v: [f64; 3] = [0.0; 3];
                for x in v.iter_mut() {
                    *x = rng.random_range(-1.0..1.0);
                }
                v.sort_by(|a, b| a.total_cmp(b));
                v[1] * 5f64.sqrt() * h
            }
        }
    }
}

impl std::str::FromStr for KernelShape {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "gaussian" | "gauss" => Ok(KernelShape::Gaussian),
            "laplace" => Ok(KernelShape::Laplace),
            "epanechnikov" | "epa" => Ok(KernelShape::Epanechnikov),
            other => Err(crate::Error::InvalidParameter(format!("unknown kernel shape `{other}`"))),
        }
    }
}
