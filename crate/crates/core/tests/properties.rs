use approx::assert_relative_eq;
use distpred::learners::{kfold_indices, ConstantSpec, Dataset, FitOptions, PointLearner, ProbEstimator, ResidualTransform, Shape};
use distpred::losses::log_loss;
use distpred::validation::{kfold_cv, wilcoxon_signed_rank, Alternative};
use distpred::{Diffeomorphism, Distribution, Loss};
use proptest::prelude::*;

fn continuous() -> impl Strategy<Value = Distribution> {
    prop_oneof![
        (-5.0..5.0f64, 0.1..4.0f64).prop_map(|(m, s)| Distribution::normal(m, s).unwrap()),
        (-5.0..5.0f64, 0.1..4.0f64).prop_map(|(m, b)| Distribution::laplace(m, b).unwrap()),
        (-5.0..5.0f64, 0.1..6.0f64).prop_map(|(lo, w)| Distribution::uniform(lo, lo + w).unwrap()),
    ]
}

proptest! {
    #[test]
    fn cdf_is_monotone_and_bounded(d in continuous(), a in -20.0..20.0f64, b in -20.0..20.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (fl, fh) = (d.cdf(lo), d.cdf(hi));
        prop_assert!((0.0..=1.0).contains(&fl) && (0.0..=1.0).contains(&fh));
        prop_assert!(fl <= fh + 1e-15);
    }

    #[test]
    fn quantile_inverts_cdf(d in continuous(), u in 0.01..0.99f64) {
        let q = d.quantile(u).unwrap();
        assert_relative_eq!(d.cdf(q), u, epsilon = 1e-9);
    }

    #[test]
    fn mixture_log_loss_obeys_jensen(p in continuous(), q in continuous(), w in 0.0..1.0f64, y in -6.0..6.0f64) {
        let mix = Distribution::mixture(vec![p.clone(), q.clone()], vec![w, 1.0 - w]).unwrap();
        let (lp, lq) = (log_loss(&p, y).unwrap(), log_loss(&q, y).unwrap());
        prop_assume!(lp.is_finite() && lq.is_finite());
        prop_assert!(log_loss(&mix, y).unwrap() <= w * lp + (1.0 - w) * lq + 1e-12);
    }

    #[test]
    fn affine_pushforward_shifts_log_loss(m in -3.0..3.0f64, s in 0.2..3.0f64, a in 0.1..5.0f64, sign in any::<bool>(), b in -4.0..4.0f64, y in -4.0..4.0f64) {
        let a = if sign { a } else { -a };
        let p = Distribution::normal(m, s).unwrap();
        let t = Diffeomorphism::affine(a, b).unwrap();
        let lhs = log_loss(&p.pushforward(&t).unwrap(), t.forward(y)).unwrap();
        assert_relative_eq!(lhs, log_loss(&p, y).unwrap() + a.abs().ln(), epsilon = 1e-10);
    }

    #[test]
    fn wilcoxon_two_sided_ignores_sign(diffs in prop::collection::vec(prop_oneof![-10.0..-0.01f64, 0.01..10.0f64], 1..40)) {
        let flipped: Vec<f64> = diffs.iter().map(|d| -d).collect();
        let a = wilcoxon_signed_rank(&diffs, Alternative::TwoSided).unwrap();
        let b = wilcoxon_signed_rank(&flipped, Alternative::TwoSided).unwrap();
        prop_assert!((0.0..=1.0).contains(&a.p_value));
        prop_assert!((a.p_value - b.p_value).abs() < 1e-12);
        let less = wilcoxon_signed_rank(&diffs, Alternative::Less).unwrap().p_value;
        let greater = wilcoxon_signed_rank(&diffs, Alternative::Greater).unwrap().p_value;
        prop_assert!(less + greater >= 1.0 - 1e-12);
    }

    #[test]
    fn folds_partition_the_rows(n in 2usize..300, k in 2usize..10, seed in any::<u64>()) {
        if n < 2 * k {
            prop_assert!(kfold_indices(n, k, seed).is_err());
            return Ok(());
        }
        let folds = kfold_indices(n, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(folds, kfold_indices(n, k, seed).unwrap());
    }

    #[test]
    fn loss_identifiers_round_trip(eps in 1e-12..0.5f64, sigma in 0.01..10.0f64) {
        for id in [format!("log_capped:{eps}"), format!("kernel:gauss:{sigma}"), "gneiting".into(), "crps".into()] {
            let loss: Loss = id.parse().unwrap();
            prop_assert_eq!(loss.to_string().parse::<Loss>().unwrap(), loss);
        }
    }
}

fn linear_data(n: usize, seed: u64) -> Dataset {
    let mut state = seed;
    let mut next = || {
        state = distpred::seeds::derive_index(state, 1);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![4.0 * next() - 2.0]).collect();
    let y = rows.iter().map(|r| 2.0 * r[0] + 0.5 * (next() - 0.5)).collect();
    Dataset::from_rows(&rows, y).unwrap()
}

#[test]
fn cross_validation_prefers_the_informed_model() {
    let d = linear_data(200, 3);
    let folds = kfold_indices(d.n_rows(), 5, 11).unwrap();
    let residual_sd = PointLearner::residual(PointLearner::Constant(ConstantSpec::Mean), ResidualTransform::Squared);
    let informed = ProbEstimator::parametric(Shape::Normal, PointLearner::Ols, residual_sd);
    let opts = FitOptions::new(1);
    let a = kfold_cv(&informed, &d, &folds, &Loss::Log, &opts).unwrap();
    let b = kfold_cv(&ProbEstimator::normal_baseline(), &d, &folds, &Loss::Log, &opts).unwrap();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&a.row_losses) < mean(&b.row_losses) - 2.0, "{} {}", mean(&a.row_losses), mean(&b.row_losses));
    let again = kfold_cv(&informed, &d, &folds, &Loss::Log, &opts).unwrap();
    assert_eq!(a.row_losses, again.row_losses);
}
