use super::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn n01() -> Distribution {
    Distribution::normal(0.0, 1.0).unwrap()
}

fn continuous_zoo() -> Vec<Distribution> {
    let mut v = vec![
        Distribution::normal(1.0, 2.0).unwrap(),
        Distribution::laplace(-1.0, 0.5).unwrap(),
        Distribution::uniform(-2.0, 3.0).unwrap(),
        Distribution::mixture(
            vec![Distribution::normal(0.0, 1.0).unwrap(), Distribution::normal(4.0, 0.5).unwrap()],
            vec![0.3, 0.7],
        )
        .unwrap(),
        Distribution::histogram(vec![0.0, 1.0, 1.5, 4.0], vec![0.2, 0.5, 0.3]).unwrap(),
        Distribution::uniform(0.0, 1.0).unwrap().pullback(&Diffeomorphism::Sigmoid).unwrap(),
        n01().pushforward(&Diffeomorphism::Sigmoid).unwrap(),
        Distribution::laplace(0.0, 1.0)
            .unwrap()
            .pushforward(&Diffeomorphism::Sigmoid.then(Diffeomorphism::affine(-3.0, 2.0).unwrap()))
            .unwrap(),
    ];
    for k in [KernelShape::Gaussian, KernelShape::Laplace, KernelShape::Epanechnikov] {
        v.push(
            Distribution::kernel_density(vec![0.0, 0.5, 3.0], vec![0.2, 0.3, 0.5], vec![0.3, 1.0, 0.7], k).unwrap(),
        );
    }
    v
}

#[test]
fn pdf_examples() {
    assert!((n01().pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
    assert_eq!(Distribution::uniform(0.0, 1.0).unwrap().pdf(0.5), 1.0);
    let m = Distribution::mixture(vec![n01(), Distribution::normal(4.0, 1.0).unwrap()], vec![0.5, 0.5]).unwrap();
    // φ(2) evaluated independently.
    assert!((m.pdf(2.0) - 0.053_990_966_513_188_06).abs() < 1e-15);
}

#[test]
fn cdf_examples() {
    assert_eq!(n01().cdf(0.0), 0.5);
    let e = Distribution::empirical_uniform(vec![1.0, 2.0, 3.0]).unwrap();
    assert!((e.cdf(2.0) - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(e.cdf(0.999), 0.0);
    assert_eq!(Distribution::uniform(0.0, 2.0).unwrap().cdf(0.5), 0.25);
}

#[test]
fn lp2_examples() {
    assert_eq!(Distribution::uniform(0.0, 2.0).unwrap().lp2_norm_sq().unwrap(), 0.5);
    let c = Distribution::categorical(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
    assert_eq!(c.lp2_norm_sq().unwrap(), 0.5);
    // Quadrature oracle of the integral of φ² equals 1/(2√π).
    assert!((n01().lp2_norm_sq().unwrap() - 0.282_094_791_773_878_14).abs() < 1e-12);
    let mixed = Distribution::mixture(vec![n01(), Distribution::point_mass(0.0).unwrap()], vec![0.5, 0.5]).unwrap();
    assert!(matches!(mixed.lp2_norm_sq(), Err(Error::UnsupportedKind { .. })));
}

#[test]
fn lp2_closed_forms_agree_with_quadrature() {
    for d in continuous_zoo() {
        let pts = d.integration_points();
        let quad = integrate_pieces(&|x: f64| d.pdf(x).powi(2), &pts, 1e-11);
        let got = d.lp2_norm_sq().unwrap();
        assert!((quad - got).abs() < 1e-7 * got.max(1.0), "{}: {quad} vs {got}", d.variant_name());
    }
}

#[test]
fn densities_integrate_to_one() {
    for d in continuous_zoo() {
        let pts = d.integration_points();
        let total = integrate_pieces(&|x: f64| d.pdf(x), &pts, 1e-10);
        assert!((total - 1.0).abs() < 1e-6, "{}: {total}", d.variant_name());
    }
}

#[test]
fn cdf_is_monotone_with_correct_limits() {
    let mut zoo = continuous_zoo();
    zoo.push(Distribution::empirical(vec![3.0, -1.0, 3.0], vec![0.2, 0.5, 0.3]).unwrap());
    for d in zoo {
        let grid: Vec<f64> = (0..1000).map(|i| -60.0 + 120.0 * i as f64 / 999.0).collect();
        let vals: Vec<f64> = grid.iter().map(|&y| d.cdf(y)).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-15), "{}", d.variant_name());
        assert!(d.cdf(-1e300) < 1e-9 && d.cdf(1e300) > 1.0 - 1e-9);
    }
}

#[test]
fn moments_quantiles_and_sampling() {
    let (m, s) = Distribution::uniform(0.0, 1.0).unwrap().moments().unwrap();
    assert!((m - 0.5).abs() < 1e-15 && (s - 1.0 / 12f64.sqrt()).abs() < 1e-15);
    assert_eq!(n01().quantile(0.5).unwrap(), 0.0);
    assert!(matches!(n01().quantile(0.0), Err(Error::Domain(_))));
    assert!(matches!(n01().quantile(1.0), Err(Error::Domain(_))));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let xs = Distribution::normal(3.0, 1.0).unwrap().sample(&mut rng, 100_000);
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    assert!((mean - 3.0).abs() < 0.02);
}

#[test]
fn quantile_at_atoms_is_lower_inverse() {
    let e = Distribution::empirical_uniform(vec![1.0, 2.0, 3.0]).unwrap();
    assert_eq!(e.quantile(1.0 / 3.0).unwrap(), 1.0);
    assert_eq!(e.quantile(0.34).unwrap(), 2.0);
    let mixed =
        Distribution::mixture(vec![Distribution::uniform(0.0, 1.0).unwrap(), Distribution::point_mass(0.5).unwrap()], vec![0.5, 0.5])
            .unwrap();
    assert_eq!(mixed.quantile(0.3).unwrap(), 0.5);
    assert_eq!(mixed.quantile(0.5).unwrap(), 0.5);
    assert!((mixed.quantile(0.8).unwrap() - 0.6).abs() < 1e-12);
}

#[test]
fn quantile_inverts_cdf_for_continuous_variants() {
    for d in continuous_zoo() {
        for a in [0.01, 0.3, 0.5, 0.9] {
            let q = d.quantile(a).unwrap();
            assert!((d.cdf(q) - a).abs() < 1e-9, "{} at {a}", d.variant_name());
        }
    }
}

#[test]
fn mixture_behaviour() {
    let d = Distribution::laplace(0.3, 0.7).unwrap();
    let same = Distribution::mixture(vec![d.clone(), d.clone(), d.clone()], vec![1.0 / 3.0; 3]).unwrap();
    assert_eq!(same, d);
    assert_eq!(Distribution::mixture(vec![n01()], vec![1.0]).unwrap(), n01());
    assert!(matches!(
        Distribution::mixture(vec![n01(), d.clone()], vec![0.5, 0.6]),
        Err(Error::InvalidWeights { .. })
    ));
    let m = Distribution::mixture(vec![n01(), d.clone()], vec![0.25, 0.75]).unwrap();
    for y in [-2.0, 0.0, 0.3, 1.7] {
        assert!((m.pdf(y) - (0.25 * n01().pdf(y) + 0.75 * d.pdf(y))).abs() < 1e-12);
        assert!((m.cdf(y) - (0.25 * n01().cdf(y) + 0.75 * d.cdf(y))).abs() < 1e-12);
    }
}

#[test]
fn mixed_kind_uses_mass_on_atoms() {
    let m = Distribution::mixture(
        vec![Distribution::uniform(0.0, 1.0).unwrap(), Distribution::point_mass(0.5).unwrap()],
        vec![0.4, 0.6],
    )
    .unwrap();
    assert_eq!(m.kind(), Kind::Mixed);
    assert!((m.pdf(0.5) - 0.6).abs() < 1e-15);
    assert!((m.pdf(0.25) - 0.4).abs() < 1e-15);
    let dec = m.decompose().unwrap();
    assert!((dec.alpha_c - 0.4).abs() < 1e-15);
    assert_eq!(dec.atoms, vec![0.5]);
    assert_eq!(dec.continuous, Some(Distribution::uniform(0.0, 1.0).unwrap()));
}

#[test]
fn affine_pushforward_simplifies() {
    let t = Diffeomorphism::affine(-2.0, 1.0).unwrap();
    assert_eq!(Distribution::normal(3.0, 0.5).unwrap().pushforward(&t).unwrap(), Distribution::Normal { mu: -5.0, sigma: 1.0 });
    assert_eq!(Distribution::uniform(0.0, 1.0).unwrap().pushforward(&t).unwrap(), Distribution::Uniform { lo: -1.0, hi: 1.0 });
    let e = Distribution::empirical_uniform(vec![0.0, 1.0]).unwrap().pushforward(&Diffeomorphism::Sigmoid).unwrap();
    assert_eq!(e, Distribution::Empirical { atoms: vec![0.5, sigmoid_of(1.0)], weights: vec![0.5, 0.5] });
}

fn sigmoid_of(x: f64) -> f64 {
    crate::numeric::sigmoid(x)
}

#[test]
fn sigmoid_pullback_of_uniform_is_logistic() {
    let p = Distribution::uniform(0.0, 1.0).unwrap().pullback(&Diffeomorphism::Sigmoid).unwrap();
    for x in [-5.0, -1.0, 0.0, 0.3, 4.0] {
        let s = sigmoid_of(x);
        assert!((p.pdf(x) - s * (1.0 - s)).abs() < 1e-15);
        assert!((p.cdf(x) - s).abs() < 1e-15);
    }
}

#[test]
fn pushforward_round_trip_and_composition() {
    let base = Distribution::laplace(0.2, 0.8).unwrap();
    let t = Diffeomorphism::Sigmoid;
    let u = Diffeomorphism::affine(2.0, -1.0).unwrap().then(Diffeomorphism::cdf_of(n01()).unwrap());
    let back = base.pushforward(&t).unwrap().pullback(&t).unwrap();
    let nested = base.pushforward(&t).unwrap().pushforward(&u).unwrap();
    let composed = base.pushforward(&t.clone().then(u.clone())).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let y: f64 = rng.random_range(-4.0..4.0);
        assert!((back.pdf(y) - base.pdf(y)).abs() < 1e-10);
        let z: f64 = rng.random_range(0.001..0.999);
        assert!((nested.pdf(z) - composed.pdf(z)).abs() < 1e-9 * composed.pdf(z).max(1.0));
    }
}

#[test]
fn decreasing_pushforward_cdf() {
    let t = Diffeomorphism::Sigmoid.then(Diffeomorphism::affine(-1.0, 1.0).unwrap());
    let d = n01().pushforward(&t).unwrap();
    for z in [0.1, 0.5, 0.8] {
        // 1 - sigmoid(x) = z  ⇔  x = logit(1 - z); P(Z ≤ z) = P(X ≥ x).
        let x = crate::numeric::logit(1.0 - z);
        assert!((d.cdf(z) - (1.0 - n01().cdf(x))).abs() < 1e-12);
    }
}

fn kolmogorov(d: &Distribution, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = d.sample(&mut rng, 100_000);
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = d.cdf(xs[i]);
        worst = worst.max((f - (j + 1) as f64 / n).abs()).max((f - d.mass_at(xs[i]) - i as f64 / n).abs());
        i = j + 1;
    }
    worst
}

#[test]
fn samples_match_cdf() {
    let mut zoo = continuous_zoo();
    zoo.push(Distribution::empirical(vec![0.0, 1.0, 5.0], vec![0.2, 0.5, 0.3]).unwrap());
    zoo.push(Distribution::categorical(vec![1.0, 2.0], vec![0.9, 0.1]).unwrap());
    for (i, d) in zoo.iter().enumerate() {
        let ks = kolmogorov(d, i as u64);
        assert!(ks < 0.01, "{}: {ks}", d.variant_name());
    }
}

#[test]
fn sampling_is_reproducible() {
    let d = continuous_zoo().remove(3);
    let a = d.sample(&mut ChaCha8Rng::seed_from_u64(11), 50);
    let b = d.sample(&mut ChaCha8Rng::seed_from_u64(11), 50);
    assert_eq!(a, b);
}

#[test]
fn constructors_validate() {
    assert!(Distribution::normal(0.0, 0.0).is_err());
    assert!(Distribution::uniform(1.0, 1.0).is_err());
    assert!(Distribution::histogram(vec![0.0, 0.0], vec![1.0]).is_err());
    assert!(Distribution::categorical(vec![0.0, 0.0], vec![0.5, 0.5]).is_err());
    assert!(Distribution::empirical(vec![0.0], vec![0.5]).is_err());
}
