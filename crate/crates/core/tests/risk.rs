use augpu_core::risk::{mc_bayes_risk, mc_excess_risk, probit_closed_form};
use augpu_core::synth::{build_scenario, Variant, VariantSpec};
use augpu_core::Scenario;

#[test]
fn probit_monte_carlo_agrees_with_closed_form() {
    for a in [-1.5, -0.3, 0.0, 0.7] {
        let exact = probit_closed_form(a);
        let r = mc_bayes_risk(&Scenario::probit(a).unwrap(), 200_000, 17).unwrap();
        assert!(
            r.l_star.within_se(exact.l_star, 4.0),
            "a={a} l_star {:?}",
            r.l_star
        );
        assert!(
            r.l_star_pu.within_se(exact.l_star_pu, 4.0),
            "a={a} {:?}",
            r.l_star_pu
        );
        assert!(
            r.l_star_pu_w.within_se(exact.l_star_pu, 4.0),
            "a={a} {:?}",
            r.l_star_pu_w
        );
        assert!(
            r.excess.within_se(exact.excess, 4.0),
            "a={a} {:?}",
            r.excess
        );
        assert!(r.p_s1.within_se(exact.p_s1, 4.0), "a={a} {:?}", r.p_s1);
    }
}

#[test]
fn bounds_hold_on_every_variant() {
    for variant in Variant::ALL {
        let spec = VariantSpec {
            dims: 6,
            mc_positives: 5_000,
            ..VariantSpec::new(variant, 0.3)
        };
        let scenario = build_scenario(&spec, 1).unwrap();
        let ex = mc_excess_risk(&scenario, 50_000, 2).unwrap();
        assert!(ex.margin >= 0.0, "{variant}: {ex:?}");
        let r = mc_bayes_risk(&scenario, 50_000, 2).unwrap();
        assert!(r.l_star_pu_discrepancy() < 4.0, "{variant}: {r:?}");
        assert!(r.l_star_pu.estimate <= r.l_star.estimate + 3.0 * r.excess.std_error);
    }
}

#[test]
fn constant_scenario_makes_both_bounds_tight() {
    let r = mc_excess_risk(&Scenario::constant(0.3, 0.5).unwrap(), 20_000, 0).unwrap();
    for e in [r.delta, r.lower, r.upper] {
        assert!((e.estimate - 0.15).abs() < 1e-12, "{e:?}");
    }
}

#[test]
fn same_seed_same_report() {
    let s = Scenario::probit(0.4).unwrap();
    assert_eq!(
        mc_bayes_risk(&s, 10_000, 5).unwrap(),
        mc_bayes_risk(&s, 10_000, 5).unwrap()
    );
    assert_ne!(
        mc_bayes_risk(&s, 10_000, 5).unwrap(),
        mc_bayes_risk(&s, 10_000, 6).unwrap()
    );
}
