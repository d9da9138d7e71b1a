/// Symmetric positive definite kernel on the reals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFn {
    /// `exp(−(y − y′)² / (2σ²))`.
    Gaussian { sigma: f64 },
    /// `exp(−λ·|y − y′|)`.
    Laplace { lambda: f64 },
    /// The constant `c`, which cannot tell distributions apart.
    Constant { c: f64 },
}

impl KernelFn {
    pub fn eval(&self, y: f64, z: f64) -> f64 {
        match *self {
            KernelFn::Gaussian { sigma } => {
                let d = (y - z) / sigma;
                (-0.5 * d * d).exp()
            }
            KernelFn::Laplace { lambda } => (-lambda * (y - z).abs()).exp(),
            KernelFn::Constant { c } => c,
        }
    }

    /// Whether the mean embedding is injective, which makes the kernel loss strictly proper.
    pub fn is_characteristic(&self) -> bool {
        !matches!(self, KernelFn::Constant { .. })
    }
}
