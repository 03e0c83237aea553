use augpu_core::estimators::{
    fit_em_pu, fit_logistic, fit_pair, fit_s_model, loss_and_gradient, prophet_pair,
    semi_prophet_pair, Component, EmHyper, FittedPair, LogisticHyper, Provenance,
};
use augpu_core::model::Sample;
use augpu_core::rng::substream;
use augpu_core::stats::summarize;
use augpu_core::synth::{build_scenario, sample_dataset, LabelingStrategy, Variant, VariantSpec};
use augpu_core::{PuDataset, Scenario};
use rand::Rng;

fn dataset(variant: Variant, c: f64, n: usize, seed: u64) -> (Scenario, PuDataset) {
    let spec = VariantSpec {
        mc_positives: 20_000,
        ..VariantSpec::new(variant, c)
    };
    let scenario = build_scenario(&spec, seed).unwrap();
    let data = sample_dataset(&scenario, n, seed + 100, &LabelingStrategy::Probabilistic).unwrap();
    (scenario, data)
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = substream(77, 0);
    for _ in 0..20 {
        let p = rng.random_range(1..6);
        let n = rng.random_range(5..40);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let t: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
        let coef: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let bias = rng.random_range(-1.0..1.0);
        let l2 = rng.random_range(0.0..0.1);
        let (_, grad, grad_b) = loss_and_gradient(&coef, bias, &rows, &t, &w, l2);
        let h = 1e-6;
        let loss_at = |c: &[f64], b: f64| loss_and_gradient(c, b, &rows, &t, &w, l2).0;
        for j in 0..=p {
            let (plus, minus) = if j < p {
                let mut cp = coef.clone();
                let mut cm = coef.clone();
                cp[j] += h;
                cm[j] -= h;
                (loss_at(&cp, bias), loss_at(&cm, bias))
            } else {
                (loss_at(&coef, bias + h), loss_at(&coef, bias - h))
            };
            let fd = (plus - minus) / (2.0 * h);
            let an = if j < p { grad[j] } else { grad_b };
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "{fd} vs {an}");
        }
    }
}

#[test]
fn em_objective_never_decreases() {
    for variant in Variant::ALL {
        let (_, data) = dataset(variant, 0.3, 3_000, 1);
        let hyper = EmHyper {
            em_iters: 20,
            ..Default::default()
        };
        let model = fit_em_pu(data.observable(), &hyper).unwrap();
        assert_eq!(model.objective_trace.len(), 21);
        for pair in model.objective_trace.windows(2) {
            assert!(
                pair[1] >= pair[0] - 1e-9,
                "{variant}: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }
}

#[test]
fn em_recovers_scar_label_frequency() {
    let (_, data) = dataset(Variant::Scar, 0.5, 20_000, 2);
    let model = fit_em_pu(data.observable(), &EmHyper::default()).unwrap();
    let view = data.observable();
    let mean_e = view.features().iter().map(|x| model.e_hat(x)).sum::<f64>() / view.len() as f64;
    assert!((mean_e - 0.5).abs() < 0.1, "mean ê = {mean_e}");
}

#[test]
fn fully_labeled_positives_are_separated() {
    // e ≡ 1: S = Y, so ŷ should rank labeled records above unlabeled ones.
    let spec = VariantSpec {
        dims: 4,
        mu_per_coordinate: 1.0,
        ..VariantSpec::new(Variant::Scar, 1.0)
    };
    let scenario = build_scenario(&spec, 0).unwrap();
    let data = sample_dataset(&scenario, 4_000, 3, &LabelingStrategy::Probabilistic).unwrap();
    let model = fit_em_pu(data.observable(), &EmHyper::default()).unwrap();
    let view = data.observable();
    let (mut lab, mut unl) = (Vec::new(), Vec::new());
    for (x, s) in view.features().iter().zip(view.labels()) {
        if s {
            lab.push(model.y_hat(x))
        } else {
            unl.push(model.y_hat(x))
        }
    }
    let concordant = lab
        .iter()
        .flat_map(|a| unl.iter().map(move |b| (a > b) as u64))
        .sum::<u64>();
    let auc = concordant as f64 / (lab.len() * unl.len()) as f64;
    assert!(auc > 0.9, "auc {auc}");
    for x in view.features().iter().take(1_000) {
        let sh = model.s_hat(x);
        assert_eq!(sh, model.e_hat(x) * model.y_hat(x));
        assert!((0.0..=1.0).contains(&sh));
    }
}

#[test]
fn scar_label_model_is_nearly_constant() {
    // With no mean shift the classes share one law, so S is independent of X.
    let spec = VariantSpec {
        mu_per_coordinate: 0.0,
        ..VariantSpec::new(Variant::Scar, 0.5)
    };
    let scenario = build_scenario(&spec, 0).unwrap();
    let data = sample_dataset(&scenario, 10_000, 1, &LabelingStrategy::Probabilistic).unwrap();
    let m = fit_s_model(data.observable(), &LogisticHyper::default()).unwrap();
    let preds: Vec<f64> = data
        .observable()
        .features()
        .iter()
        .map(|x| m.predict(x))
        .collect();
    let (_, sd, _) = summarize(&preds);
    assert!(sd <= 0.05, "sd {sd}");
}

#[test]
fn separable_label_model_is_monotone() {
    let rows: Vec<Vec<f64>> = (0..40)
        .map(|i| vec![i as f64 / 10.0 - 2.0, ((i * 7) % 5) as f64])
        .collect();
    let labels: Vec<bool> = rows.iter().map(|r| r[0] > 0.0).collect();
    let samples = rows
        .iter()
        .zip(&labels)
        .map(|(x, &s)| Sample::new(x.clone(), s, s).unwrap())
        .collect();
    let data = PuDataset::new(samples, "grid", None, 0).unwrap();
    let hyper = LogisticHyper {
        l2: 0.01,
        ..Default::default()
    };
    let m = fit_s_model(data.observable(), &hyper).unwrap();
    let probe: Vec<f64> = (0..50)
        .map(|i| m.predict(&[i as f64 / 10.0 - 2.5, 2.0]))
        .collect();
    assert!(probe.windows(2).all(|w| w[1] > w[0]));
    let tiny = PuDataset::new(
        vec![
            Sample::new(vec![0.0], true, true).unwrap(),
            Sample::new(vec![1.0], false, false).unwrap(),
        ],
        "tiny",
        None,
        0,
    )
    .unwrap();
    fit_s_model(tiny.observable(), &LogisticHyper::default()).unwrap();
}

#[test]
fn fits_are_deterministic() {
    let (_, data) = dataset(Variant::V1, 0.5, 1_500, 9);
    let a = fit_pair(
        data.observable(),
        &EmHyper::default(),
        &LogisticHyper::default(),
    )
    .unwrap();
    let b = fit_pair(
        data.observable(),
        &EmHyper::default(),
        &LogisticHyper::default(),
    )
    .unwrap();
    assert_eq!(a, b);
}

#[test]
fn fitted_outputs_are_probabilities_and_serialize() {
    let (scenario, data) = dataset(Variant::V2, 0.5, 2_000, 4);
    let fitted = fit_pair(
        data.observable(),
        &EmHyper::default(),
        &LogisticHyper::default(),
    )
    .unwrap();
    let json = serde_json::to_string(&fitted).unwrap();
    let back: FittedPair = serde_json::from_str(&json).unwrap();
    assert_eq!(back, fitted);
    let pair = fitted.to_pair();
    let semi_y = semi_prophet_pair(&scenario, &pair, Component::Y);
    let semi_s = semi_prophet_pair(&scenario, &pair, Component::S);
    let prophet = prophet_pair(&scenario);
    assert_eq!(semi_y.provenance(), Provenance::SemiProphetY);
    assert_eq!(semi_s.provenance(), Provenance::SemiProphetS);
    let mut rng = substream(3, 3);
    for _ in 0..10_000 {
        let x = scenario.sample_x(&mut rng);
        for p in [&pair, &semi_y, &semi_s, &prophet] {
            assert!((0.0..=1.0).contains(&p.y(&x)) && (0.0..=1.0).contains(&p.s(&x)));
        }
        assert_eq!(semi_y.y(&x), prophet.y(&x));
        assert_eq!(semi_y.s(&x), pair.s(&x));
        assert_eq!(semi_s.y(&x), pair.y(&x));
        assert_eq!(semi_s.s(&x), prophet.s(&x));
    }
}

#[test]
fn label_model_needs_both_classes() {
    let spec = VariantSpec {
        dims: 2,
        ..VariantSpec::new(Variant::Scar, 0.0)
    };
    let scenario = build_scenario(&spec, 0).unwrap();
    let data = sample_dataset(&scenario, 200, 0, &LabelingStrategy::Probabilistic).unwrap();
    assert!(fit_pair(
        data.observable(),
        &EmHyper::default(),
        &LogisticHyper::default()
    )
    .is_err());
}

#[test]
fn separable_data_still_terminates() {
    let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 - 9.5]).collect();
    let t: Vec<f64> = (0..20).map(|i| if i >= 10 { 1.0 } else { 0.0 }).collect();
    let hyper = LogisticHyper {
        l2: 0.0,
        max_iter: 200,
        tol: 1e-8,
    };
    let m = fit_logistic(&rows, &t, &[1.0; 20], &hyper).unwrap();
    assert!(m.weights[0] > 0.0 && m.weights[0].is_finite());
    assert!(m.predict(&[5.0]) > 0.99);
}
