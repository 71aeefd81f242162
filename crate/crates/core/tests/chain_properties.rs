use proptest::prelude::*;

use qrn_core::chain::{e2e_initial_fidelity, evaluate, link_rate, InfeasibilityReason};
use qrn_core::{ChainDecision, Fidelity, LinkConfig, NoiseParams, QosRequirement};

fn link(f0: f64, r0: f64, d: f64) -> LinkConfig {
    LinkConfig::new(Fidelity::new(f0).unwrap(), r0, 0.542, d).unwrap()
}

fn lenient() -> QosRequirement {
    QosRequirement::new(1e-300, 0.25).unwrap()
}

prop_compose! {
    fn setup()(f0 in 0.8f64..=1.0, r0 in 1e2f64..1e7, p2 in 0.97f64..=1.0, eta in 0.97f64..=1.0)
        -> (LinkConfig, NoiseParams) {
        (link(f0, r0, 0.0), NoiseParams::new(p2, eta).unwrap())
    }
}

proptest! {
    #[test]
    fn rates_are_ordered((l, ns) in setup(), n in 1usize..30, d in 0.0f64..8.0, nl in 0usize..4, ne in 0usize..4) {
        let r = evaluate(&ChainDecision::new(n, d, nl, ne).unwrap(), &l, &ns, &lenient()).unwrap();
        prop_assert!(r.e2e_rate >= 0.0);
        prop_assert!(r.e2e_rate <= r.link_rate_after_distill);
        prop_assert!(r.link_rate_after_distill <= l.r0_source_rate);
        prop_assert_eq!(r.objective_km, n as f64 * d);
    }

    #[test]
    fn no_e2e_rounds_keeps_link_rate((l, ns) in setup(), n in 1usize..30, d in 0.0f64..8.0, nl in 0usize..4) {
        let dec = ChainDecision::new(n, d, nl, 0).unwrap();
        let r = evaluate(&dec, &l, &ns, &lenient()).unwrap();
        prop_assume!(r.infeasibility_reason != InfeasibilityReason::DistillPreconditionViolated);
        prop_assert_eq!(r.e2e_rate, r.link_rate_after_distill);
        let initial = e2e_initial_fidelity(&dec, l.f0_initial_fidelity, &ns).unwrap();
        prop_assert!((r.e2e_fidelity.value() - initial.value()).abs() <= 1e-15);
    }

    #[test]
    fn rate_falls_with_separation((l, ns) in setup(), n in 1usize..30, d in 0.0f64..8.0, dd in 0.01f64..2.0, nl in 0usize..3, ne in 0usize..3) {
        let a = evaluate(&ChainDecision::new(n, d, nl, ne).unwrap(), &l, &ns, &lenient()).unwrap();
        let b = evaluate(&ChainDecision::new(n, d + dd, nl, ne).unwrap(), &l, &ns, &lenient()).unwrap();
        prop_assume!(a.infeasibility_reason != InfeasibilityReason::DistillPreconditionViolated);
        prop_assert!(b.e2e_rate < a.e2e_rate);
    }

    #[test]
    fn rate_falls_with_more_rounds((l, ns) in setup(), n in 1usize..10, d in 0.0f64..4.0, nl in 0usize..3, ne in 0usize..3) {
        let base = evaluate(&ChainDecision::new(n, d, nl, ne).unwrap(), &l, &ns, &lenient()).unwrap();
        let more_link = evaluate(&ChainDecision::new(n, d, nl + 1, ne).unwrap(), &l, &ns, &lenient()).unwrap();
        let more_e2e = evaluate(&ChainDecision::new(n, d, nl, ne + 1).unwrap(), &l, &ns, &lenient()).unwrap();
        for other in [&more_link, &more_e2e] {
            if other.infeasibility_reason != InfeasibilityReason::DistillPreconditionViolated {
                prop_assert!(other.e2e_rate < base.e2e_rate);
            }
        }
    }

    #[test]
    fn feasibility_matches_floors((l, ns) in setup(), n in 1usize..30, d in 0.0f64..8.0, nl in 0usize..3, ne in 0usize..3,
                                  r_min in 1e-2f64..1e4, f_min in 0.25f64..=1.0) {
        let qos = QosRequirement::new(r_min, f_min).unwrap();
        let r = evaluate(&ChainDecision::new(n, d, nl, ne).unwrap(), &l, &ns, &qos).unwrap();
        let precondition = r.infeasibility_reason == InfeasibilityReason::DistillPreconditionViolated;
        let expect = !precondition && r.e2e_rate >= r_min && r.e2e_fidelity.value() >= f_min;
        prop_assert_eq!(r.feasible, expect);
        prop_assert_eq!(r.violation == 0.0, r.feasible);
    }
}

#[test]
fn link_rate_without_distillation_is_attenuated_source_rate() {
    let ns = NoiseParams::default();
    for i in 0..200 {
        let d = i as f64 * 0.05;
        let l = link(0.99, 1e5, d);
        let got = link_rate(&l, 0, &ns).unwrap();
        let expect = 1e5 * (-d / 0.542).exp();
        assert!((got - expect).abs() <= 1e-9 * expect, "d={d}");
    }
}

#[test]
fn single_precision_evaluation_tracks_double() {
    use qrn_core::{ChainDecision32, LinkConfig32, NoiseParams32, QosRequirement32};
    let r64 = evaluate(
        &ChainDecision::new(5, 2.0, 1, 1).unwrap(),
        &LinkConfig::default(),
        &NoiseParams::default(),
        &QosRequirement::default(),
    )
    .unwrap();
    let r32 = evaluate(
        &ChainDecision32::new(5, 2.0, 1, 1).unwrap(),
        &LinkConfig32::default(),
        &NoiseParams32::default(),
        &QosRequirement32::default(),
    )
    .unwrap();
    assert_eq!(r32.feasible, r64.feasible);
    assert!((r32.e2e_fidelity.value() as f64 - r64.e2e_fidelity.value()).abs() < 1e-5);
    assert!(((r32.e2e_rate as f64) / r64.e2e_rate - 1.0).abs() < 1e-5);
}
