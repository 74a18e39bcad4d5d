use fairmix::models::{
    argmax_labels, fit, mlp_loss_and_gradient, Gamma, MlpModel, MlpParams, ModelError, ModelKind,
    PredictorSpec, SvmModel,
};
use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn blobs(seed: u64, n_per: usize, gap: f64) -> (Array2<f64>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((2 * n_per, 2));
    let mut y = Vec::with_capacity(2 * n_per);
    for r in 0..2 * n_per {
        let label = u8::from(r >= n_per);
        let centre = if label == 1 { gap / 2.0 } else { -gap / 2.0 };
        x[[r, 0]] = centre + rng.sample::<f64, _>(StandardNormal);
        x[[r, 1]] = centre + rng.sample::<f64, _>(StandardNormal);
        y.push(label);
    }
    (x, y)
}

fn train_accuracy(pred: &[u8], y: &[u8]) -> f64 {
    pred.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64
}

#[test]
fn rbf_svm_separates_two_blobs() {
    for seed in 0..5 {
        let (x, y) = blobs(seed, 50, 4.0);
        let model = fit(&PredictorSpec::default(), x.view(), &y).unwrap();
        let acc = train_accuracy(&model.predict(x.view()).unwrap(), &y);
        assert!(acc >= 0.95, "seed {seed}: accuracy {acc}");
    }
}

#[test]
fn svm_probabilities_follow_decision_values() {
    let (x, y) = blobs(1, 40, 3.0);
    let m = SvmModel::fit(&PredictorSpec::default(), x.view(), &y).unwrap();
    let d = m.decision_function(x.view());
    let p = m.predict_proba(x.view());
    for r in 0..x.nrows() {
        assert!((p[[r, 0]] + p[[r, 1]] - 1.0).abs() < 1e-12);
    }
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap());
    let a = m.platt().a;
    for w in order.windows(2) {
        let (lo, hi) = (p[[w[0], 1]], p[[w[1], 1]]);
        if a < 0.0 {
            assert!(lo <= hi + 1e-12);
        } else {
            assert!(lo >= hi - 1e-12);
        }
    }
    assert!(m.n_support() > 0 && m.n_support() <= x.nrows());
}

#[test]
fn explicit_gamma_is_used() {
    let (x, y) = blobs(2, 20, 4.0);
    let spec = PredictorSpec {
        gamma: Gamma::Value(0.25),
        ..PredictorSpec::default()
    };
    let m = SvmModel::fit(&spec, x.view(), &y).unwrap();
    assert_eq!(m.gamma(), 0.25);
}

#[test]
fn mlp_solves_xor_within_2000_epochs() {
    let x = array![[0.0_f64, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
    let y = [0u8, 1, 1, 0];
    let spec = PredictorSpec {
        hidden_units: 8,
        epochs: 2000,
        learning_rate: 0.05,
        seed: 3,
        ..PredictorSpec::new(ModelKind::Mlp)
    };
    let m = MlpModel::fit(&spec, x.view(), &y).unwrap();
    assert!(m.epochs_run() <= 2000);
    assert_eq!(argmax_labels(&m.predict_proba(x.view())), y.to_vec());
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn mlp_gradient_matches_central_differences(
        seed in any::<u64>(),
        n in 2usize..12,
        d in 1usize..5,
        hidden in 1usize..6,
        l2 in 0.0f64..0.1,
        weighted in any::<bool>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, d), |_| rng.gen_range(-2.0..2.0));
        let y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
        let w: Vec<f64> = (0..n).map(|_| if weighted { rng.gen_range(0.5..2.0) } else { 1.0 }).collect();
        let params = MlpParams::<f64>::init(d, hidden, &mut rng);
        let (_, grad) = mlp_loss_and_gradient(&params, x.view(), &y, &w, l2);
        let analytic = grad.to_vec();
        let theta = params.to_vec();
        let h = 1e-6;
        for k in 0..theta.len() {
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[k] += h;
            minus[k] -= h;
            let lp = mlp_loss_and_gradient(&MlpParams::from_vec(d, hidden, &plus), x.view(), &y, &w, l2).0;
            let lm = mlp_loss_and_gradient(&MlpParams::from_vec(d, hidden, &minus), x.view(), &y, &w, l2).0;
            let numeric = (lp - lm) / (2.0 * h);
            prop_assert!(
                relative_gap(analytic[k], numeric) <= 1e-4,
                "param {}: analytic {} numeric {}", k, analytic[k], numeric
            );
        }
    }

    #[test]
    fn probabilities_are_distributions(seed in any::<u64>(), kind in prop::sample::select(vec![ModelKind::RbfSvm, ModelKind::Mlp, ModelKind::Logistic])) {
        let (x, y) = blobs(seed, 8, 1.0);
        let spec = PredictorSpec { epochs: 50, ..PredictorSpec::new(kind) }.with_seed(seed);
        let m = fit(&spec, x.view(), &y).unwrap();
        let p = m.predict_proba(x.view()).unwrap();
        for row in p.rows() {
            prop_assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!((row[0] + row[1] - 1.0).abs() <= 1e-9);
        }
        let labels = m.predict(x.view()).unwrap();
        for (r, &l) in labels.iter().enumerate() {
            let want = u8::from(p[[r, 1]] >= p[[r, 0]]);
            prop_assert_eq!(l, want);
        }
    }
}

#[test]
fn single_class_training_is_rejected() {
    let x = array![[0.0_f64], [1.0], [2.0]];
    for kind in [ModelKind::RbfSvm, ModelKind::Mlp, ModelKind::Logistic] {
        let err = fit(&PredictorSpec::new(kind), x.view(), &[1, 1, 1]).unwrap_err();
        assert!(matches!(err, ModelError::SingleClass(1)), "{kind:?}: {err}");
    }
}

#[test]
fn width_mismatch_at_predict() {
    let (x, y) = blobs(0, 5, 2.0);
    let m = fit(&PredictorSpec::logistic(), x.view(), &y).unwrap();
    assert!(m.predict(Array2::<f64>::zeros((2, 3)).view()).is_err());
}

#[test]
fn logistic_matches_svm_on_easy_data() {
    let (x, y) = blobs(7, 30, 6.0);
    let a = fit(&PredictorSpec::logistic(), x.view(), &y)
        .unwrap()
        .predict(x.view())
        .unwrap();
    let b = fit(&PredictorSpec::default(), x.view(), &y)
        .unwrap()
        .predict(x.view())
        .unwrap();
    assert_eq!(a, y);
    assert_eq!(b, y);
}

#[test]
fn f32_models_train() {
    let (x, y) = blobs(3, 30, 4.0);
    let x32 = x.mapv(|v| v as f32);
    for kind in [ModelKind::RbfSvm, ModelKind::Mlp, ModelKind::Logistic] {
        let m = fit(&PredictorSpec::new(kind), x32.view(), &y).unwrap();
        let acc = train_accuracy(&m.predict(x32.view()).unwrap(), &y);
        assert!(acc >= 0.9, "{kind:?}: {acc}");
    }
}
