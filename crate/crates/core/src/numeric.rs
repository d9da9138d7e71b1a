//! Small numerical kernels shared across modules: normal special functions,
//! adaptive Simpson quadrature, bracketing root search and golden-section
//! minimisation.

use libm::erfc;
use statrs::function::erf::erfc_inv;

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

pub fn std_normal_quantile(p: f64) -> f64 {
    let mut z = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    // One Newton step against the accurate cdf removes the error of the initial inverse.
    if z.is_finite() {
        let d = std_normal_pdf(z);
        if d > 0.0 {
            z -= (std_normal_cdf(z) - p) / d;
        }
    }
    z
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Derivative of the logistic function, `s(x)·s(−x)`, accurate in both tails.
pub fn sigmoid_slope(x: f64) -> f64 {
    sigmoid(x) * sigmoid(-x)
}

pub fn logit(p: f64) -> f64 {
    p.ln() - (-p).ln_1p()
}

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a.is_nan() || b.is_nan() || b <= a {
        return 0.0;
    }
    // Seed with a uniform partition so narrow peaks are not stepped over.
    const PIECES: usize = 64;
    let h = (b - a) / PIECES as f64;
    (0..PIECES)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = if i + 1 == PIECES { b } else { lo + h };
            let fa = f(lo);
            let fb = f(hi);
            let m = 0.5 * (lo + hi);
            let fm = f(m);
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            simpson_step(f, lo, hi, fa, fm, fb, whole, tol / PIECES as f64, 48)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // Below a few ulps of the running estimate further splitting only chases rounding noise.
    let floor = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if depth == 0 || !delta.is_finite() || delta.abs() <= 15.0 * tol.max(floor) {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Integrates over a sorted list of breakpoints, one adaptive pass per piece.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: &F, points: &[f64], tol: f64) -> f64 {
    let pieces = points.len().saturating_sub(1).max(1);
    points
        .windows(2)
        .map(|w| integrate(f, w[0], w[1], tol / pieces as f64))
        .sum()
}

/// Smallest `x` in `[lo, hi]` with `g(x) >= target`, for nondecreasing `g`.
pub fn bisect_increasing<F: Fn(f64) -> f64>(g: F, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Golden-section search for the minimiser of a unimodal `f` on `[a, b]`.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard deviation with denominator `n - ddof`.
pub fn std_dev(xs: &[f64], ddof: usize) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - ddof) as f64).sqrt()
}
