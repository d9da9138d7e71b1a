//! Builders that turn samples or decomposed predictions into distributions.

use rand::Rng;

use crate::distributions::{simplex, Diffeomorphism, Distribution, KernelShape, Kind};
use crate::numeric::std_dev;
use crate::{seeds, Error, Result};

/// Bandwidth used when a subset has no spread to estimate one from.
pub const FALLBACK_BANDWIDTH: f64 = 1.0;

/// Kernel density estimate from bootstrap subsets.
///
/// Draws `n_subsets` subsets of `subset_size` atoms (with replacement, by
/// weight); each subset contributes kernels whose bandwidth is that subset's
/// standard deviation, or `fallback` when the subset has a single point or no
/// spread. Each kernel carries mass `1 / (n_subsets · subset_size)`. With
/// `subset_size = 1` and `n_subsets` equal to the sample size, every atom is
/// used once with bandwidth `fallback`, which is the classical estimator.
pub fn kernel_density_adaptor(
    atoms: &[f64],
    weights: &[f64],
    n_subsets: usize,
    subset_size: usize,
    kernel: KernelShape,
    fallback: f64,
    seed: u64,
) -> Result<Distribution> {
    if atoms.is_empty() {
        return Err(Error::InvalidParameter("kernel density needs at least one atom".into()));
    }
    if n_subsets == 0 || subset_size == 0 {
        return Err(Error::InvalidParameter("subset count and size must be positive".into()));
    }
    let weights = simplex(weights)?;
    if subset_size == 1 && n_subsets == atoms.len() {
        return Distribution::kernel_density(atoms.to_vec(), weights, vec![fallback; atoms.len()], kernel);
    }
    let mut rng = seeds::rng(seed);
    let mut centres = Vec::with_capacity(n_subsets * subset_size);
    let mut bandwidths = Vec::with_capacity(n_subsets * subset_size);
    for _ in 0..n_subsets {
        let subset: Vec<f64> = (0..subset_size).map(|_| atoms[draw(&mut rng, &weights)]).collect();
        let s = if subset_size > 1 { std_dev(&subset, 0) } else { 0.0 };
        let h = if s > 0.0 { s } else { fallback };
        bandwidths.extend(std::iter::repeat_n(h, subset_size));
        centres.extend(subset);
    }
    let n = centres.len();
    Distribution::kernel_density(centres, vec![1.0 / n as f64; n], bandwidths, kernel)
}

fn draw<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Silverman's rule of thumb, falling back to [`FALLBACK_BANDWIDTH`] for degenerate samples.
pub fn silverman_bandwidth(sample: &[f64]) -> f64 {
    let n = sample.len();
    if n < 2 {
        return FALLBACK_BANDWIDTH;
    }
    let sd = std_dev(sample, 1);
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let q = |p: f64| {
        let pos = p * (n - 1) as f64;
        let (i, f) = (pos.floor() as usize, pos.fract());
        sorted[i] + f * (sorted[(i + 1).min(n - 1)] - sorted[i])
    };
    let iqr = (q(0.75) - q(0.25)) / 1.34;
    let spread = if iqr > 0.0 { sd.min(iqr) } else { sd };
    let h = 0.9 * spread * (n as f64).powf(-0.2);
    if h > 0.0 && h.is_finite() {
        h
    } else {
        FALLBACK_BANDWIDTH
    }
}

/// Histogram density: bin `i` gets density `count_i / (n · width_i)`.
pub fn histogram_adaptor(sample: &[f64], edges: &[f64]) -> Result<Distribution> {
    if sample.is_empty() {
        return Err(Error::InvalidParameter("histogram needs a nonempty sample".into()));
    }
    let bins = edges.len().saturating_sub(1);
    let mut counts = vec![0usize; bins];
    for &y in sample {
        if bins == 0 || y < edges[0] || y > edges[bins] {
            return Err(Error::OutOfRange { value: y });
        }
        let i = edges.partition_point(|e| *e <= y).saturating_sub(1).min(bins - 1);
        counts[i] += 1;
    }
    let n = sample.len() as f64;
    Distribution::histogram(edges.to_vec(), counts.iter().map(|c| *c as f64 / n).collect())
}

/// Equal-width edges spanning the sample, padded by a tenth of its range on each side.
/// The bin count follows Sturges' rule.
pub fn sturges_edges(sample: &[f64]) -> Vec<f64> {
    let lo = sample.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sample.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (lo, hi) = (lo - 0.1 * span, hi + 0.1 * span);
    let bins = ((sample.len().max(1) as f64).log2().ceil() as usize + 1).max(1);
    (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect()
}

/// Convolution of a prediction with the law of an independent noise `Z`.
///
/// Atoms `yᵢ` of the prediction become exact copies of `Z` shifted to `yᵢ`;
/// the continuous part `q` is approximated by the average of `q` shifted by
/// `m` seeded draws of `Z`.
pub fn convolution_adaptor(p: &Distribution, noise: &Distribution, m: usize, seed: u64) -> Result<Distribution> {
    if noise.kind() != Kind::Continuous {
        return Err(Error::UnsupportedKind { kind: noise.kind().name(), what: "convolution noise".into() });
    }
    let dec = p.decompose()?;
    let mut parts = Vec::new();
    let mut weights = Vec::new();
    for (a, w) in dec.atoms.iter().zip(&dec.weights) {
        parts.push(noise.pushforward(&Diffeomorphism::affine(1.0, *a)?)?);
        weights.push(dec.alpha_d() * w);
    }
    if let Some(q) = &dec.continuous {
        if m == 0 {
            return Err(Error::Domain("convolution needs at least one noise draw".into()));
        }
        let mut rng = seeds::rng(seed);
        for z in noise.sample(&mut rng, m) {
            parts.push(q.pushforward(&Diffeomorphism::affine(1.0, z)?)?);
            weights.push(dec.alpha_c / m as f64);
        }
    }
    let total: f64 = weights.iter().sum();
    Distribution::mixture(parts, weights.iter().map(|w| w / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{integrate_pieces, std_normal_pdf};

    #[test]
    fn classical_kde_integrates_to_one() {
        let atoms = [0.0, 0.4, 2.0, 3.5];
        let d = kernel_density_adaptor(&atoms, &[0.25; 4], 4, 1, KernelShape::Gaussian, 0.5, 0).unwrap();
        let total = integrate_pieces(&|x| d.pdf(x), &d.integration_points(), 1e-10);
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn single_atom_kde_is_the_kernel() {
        let d = kernel_density_adaptor(&[1.5], &[1.0], 1, 1, KernelShape::Gaussian, 0.7, 0).unwrap();
        for x in [-1.0, 1.5, 2.0] {
            assert!((d.pdf(x) - std_normal_pdf((x - 1.5) / 0.7) / 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn bootstrap_kde_is_normalized() {
        let atoms: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let d = kernel_density_adaptor(&atoms, &[1.0 / 30.0; 30], 10, 5, KernelShape::Epanechnikov, 1.0, 3).unwrap();
        let total = integrate_pieces(&|x| d.pdf(x), &d.integration_points(), 1e-10);
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn histogram_examples() {
        let d = histogram_adaptor(&[0.1, 0.5, 0.9], &[0.0, 1.0]).unwrap();
        assert_eq!(d.pdf(0.3), 1.0);
        let d = histogram_adaptor(&[0.1, 0.2, 0.7, 1.5], &[0.0, 1.0, 2.0]).unwrap();
        assert!((d.pdf(0.5) - 0.75).abs() < 1e-15 && (d.pdf(1.5) - 0.25).abs() < 1e-15);
        let d = histogram_adaptor(&[0.1, 0.2, 0.7, 1.5], &[0.0, 1.0, 1.5, 2.0]).unwrap();
        assert!((d.pdf(0.5) - 0.75).abs() < 1e-15 && (d.pdf(1.7) - 0.5).abs() < 1e-15);
        assert!(matches!(histogram_adaptor(&[3.0], &[0.0, 1.0]), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn histogram_integrates_to_one_on_random_bins() {
        let mut rng = seeds::rng(5);
        for _ in 0..20 {
            let sample: Vec<f64> = (0..25).map(|_| rng.random_range(-3.0..3.0)).collect();
            let d = histogram_adaptor(&sample, &sturges_edges(&sample)).unwrap();
            let total = integrate_pieces(&|x| d.pdf(x), &d.integration_points(), 1e-10);
            assert!((total - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn pure_atoms_convolve_exactly() {
        let p = Distribution::empirical(vec![0.0, 2.0], vec![0.3, 0.7]).unwrap();
        let z = Distribution::normal(0.0, 0.5).unwrap();
        let c = convolution_adaptor(&p, &z, 0, 0).unwrap();
        for y in [-1.0, 0.5, 2.2] {
            let exact = 0.3 * z.pdf(y) + 0.7 * z.pdf(y - 2.0);
            assert!((c.pdf(y) - exact).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_convolution_matches_closed_form() {
        let q = Distribution::normal(0.0, 1.0).unwrap();
        let z = Distribution::normal(0.0, 1.0).unwrap();
        let m = 400;
        let c = convolution_adaptor(&q, &z, m, 11).unwrap();
        let exact = std_normal_pdf(0.0) / 2f64.sqrt();
        // Spread of φ(Z) around its mean bounds the Monte Carlo error.
        let se = 0.1 / (m as f64).sqrt();
        assert!((c.pdf(0.0) - exact).abs() < 3.0 * se);
        assert!(matches!(convolution_adaptor(&q, &z, 0, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn convolution_is_unbiased_over_seeds() {
        let q = Distribution::laplace(0.0, 1.0).unwrap();
        let z = Distribution::normal(0.0, 1.0).unwrap();
        let avg: f64 = (0..200).map(|s| convolution_adaptor(&q, &z, 5, s).unwrap().pdf(0.3)).sum::<f64>() / 200.0;
        // Reference value by quadrature of ∫ q(0.3 − z) φ(z) dz.
        let exact = integrate_pieces(&|t| q.pdf(0.3 - t) * z.pdf(t), &[-12.0, 0.3, 12.0], 1e-12);
        assert!((avg - exact).abs() < 0.01, "{avg} vs {exact}");
    }
}
