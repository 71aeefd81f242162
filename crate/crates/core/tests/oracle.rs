use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qrn_core::chain::evaluate;
use qrn_core::optimizer::{derive_bounds, exhaustive_search, BoundsOverrides, Pins, SearchBounds, SearchOutcome};
use qrn_core::oracle::{mc_rate, naive_grid_optimum, McConfig, MC_SEEDS};
use qrn_core::{ChainDecision, Fidelity, LinkConfig, NoiseParams, QosRequirement};

/// Exhaustive search restricted to the coarse grid.
fn coarse_only(mut b: SearchBounds) -> SearchBounds {
    b.d_refine_step = b.d_coarse_step;
    b
}

fn same_outcome(a: &SearchOutcome, b: &SearchOutcome) -> bool {
    match (a, b) {
        (SearchOutcome::Found(x), SearchOutcome::Found(y)) => {
            x.objective_km.to_bits() == y.objective_km.to_bits() && x.decision == y.decision && x.result == y.result
        }
        (SearchOutcome::NoFeasibleSolution { .. }, SearchOutcome::NoFeasibleSolution { .. }) => true,
        _ => false,
    }
}

#[test]
fn naive_scan_matches_pruned_search_on_default_setup() {
    let (link, noise, qos) = (LinkConfig::default(), NoiseParams::default(), QosRequirement::default());
    let o = BoundsOverrides {
        d_coarse_step: Some(0.25),
        n_max: Some(60),
        n_link_distill_max: Some(6),
        n_e2e_distill_max: Some(6),
        ..Default::default()
    };
    let b = coarse_only(derive_bounds(&link, &noise, &qos, &o).unwrap());
    let naive = naive_grid_optimum(&link, &noise, &qos, &b, &Pins::default()).unwrap();
    let pruned = exhaustive_search(&link, &noise, &qos, &b, &Pins::default()).unwrap();
    assert!(same_outcome(&naive, &pruned), "{naive:?}\n{pruned:?}");
    assert!(pruned.evaluations_used() < naive.evaluations_used());
}

#[test]
fn naive_scan_agrees_on_unreachable_fidelity() {
    let link = LinkConfig::default();
    let noise = NoiseParams::default();
    let qos = QosRequirement::new(1.0, 0.999).unwrap();
    let o = BoundsOverrides {
        d_coarse_step: Some(0.25),
        n_max: Some(60),
        n_link_distill_max: Some(6),
        n_e2e_distill_max: Some(6),
        ..Default::default()
    };
    let b = coarse_only(derive_bounds(&link, &noise, &qos, &o).unwrap());
    let naive = naive_grid_optimum(&link, &noise, &qos, &b, &Pins::default()).unwrap();
    assert!(matches!(naive, SearchOutcome::NoFeasibleSolution { .. }));
    assert!(same_outcome(
        &naive,
        &exhaustive_search(&link, &noise, &qos, &b, &Pins::default()).unwrap()
    ));
}

#[test]
fn naive_scan_single_point() {
    let (link, noise, qos) = (LinkConfig::default(), NoiseParams::default(), QosRequirement::default());
    let b = SearchBounds {
        n_max: 1,
        d_min: 1.0,
        d_max: 1.0,
        d_coarse_step: 0.05,
        d_refine_step: 0.001,
        n_link_distill_max: 0,
        n_e2e_distill_max: 0,
    };
    let pins = Pins {
        n_links: Some(1),
        ..Default::default()
    };
    let naive = naive_grid_optimum(&link, &noise, &qos, &b, &pins).unwrap();
    let exh = exhaustive_search(&link, &noise, &qos, &b, &pins).unwrap();
    assert!(same_outcome(&naive, &exh));
    assert_eq!(naive.solution().unwrap().objective_km, 1.0);
}

/// Random small instances; returns (link, noise, qos, bounds, pins).
pub fn random_instances(count: usize, seed: u64) -> Vec<(LinkConfig, NoiseParams, QosRequirement, SearchBounds, Pins)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let f0 = rng.random_range(0.9..=1.0);
            let r0 = 10f64.powf(rng.random_range(3.0..6.0));
            let l0 = rng.random_range(0.3..1.0);
            let p2 = rng.random_range(0.97..=1.0);
            let eta = rng.random_range(0.97..=1.0);
            let f_min = rng.random_range(0.5..0.95);
            let r_min = 10f64.powf(rng.random_range(0.0..2.0));
            let link = LinkConfig::new(Fidelity::new(f0).unwrap(), r0, l0, 0.0).unwrap();
            let noise = NoiseParams::new(p2, eta).unwrap();
            let qos = QosRequirement::new(r_min, f_min).unwrap();
            let o = BoundsOverrides {
                d_coarse_step: Some([0.1, 0.2, 0.25, 0.3][rng.random_range(0..4)]),
                n_max: Some(rng.random_range(1..=40)),
                n_link_distill_max: Some(rng.random_range(0..=4)),
                n_e2e_distill_max: Some(rng.random_range(0..=4)),
                ..Default::default()
            };
            let bounds = coarse_only(derive_bounds(&link, &noise, &qos, &o).unwrap());
            let pins = match rng.random_range(0..4) {
                0 => Pins {
                    n_link_distill: Some(0),
                    ..Default::default()
                },
                1 => Pins {
                    n_e2e_distill: Some(0),
                    ..Default::default()
                },
                _ => Pins::default(),
            };
            (link, noise, qos, bounds, pins)
        })
        .collect()
}

#[test]
fn naive_scan_matches_pruned_search_on_random_instances() {
    let mut found = 0;
    for (link, noise, qos, bounds, pins) in random_instances(24, 2024) {
        let naive = naive_grid_optimum(&link, &noise, &qos, &bounds, &pins).unwrap();
        let pruned = exhaustive_search(&link, &noise, &qos, &bounds, &pins).unwrap();
        assert!(same_outcome(&naive, &pruned), "{naive:?}\n{pruned:?}");
        found += naive.solution().is_some() as usize;
    }
    assert!(found >= 12, "instances should mostly be feasible, got {found}");
}

fn analytic_rate(d: &ChainDecision, link: &LinkConfig, noise: &NoiseParams) -> f64 {
    evaluate(d, link, noise, &QosRequirement::new(1e-300, 0.25).unwrap())
        .unwrap()
        .e2e_rate
}

#[test]
fn mc_single_lossy_link() {
    let link = LinkConfig::default();
    let noise = NoiseParams::default();
    let d = ChainDecision::new(1, 0.542, 0, 0).unwrap();
    let est = mc_rate(&d, &link, &noise, &McConfig::new(100_000, 5)).unwrap();
    assert!(est.agrees_with(1e5 * (-1f64).exp(), 3.0), "{est:?}");
}

#[test]
fn mc_one_noiseless_round() {
    let link = LinkConfig::new(Fidelity::new(0.7).unwrap(), 1e5, 0.542, 0.0).unwrap();
    let d = ChainDecision::new(1, 0.0, 1, 0).unwrap();
    let est = mc_rate(&d, &link, &NoiseParams::perfect(), &McConfig::new(20_000, 6)).unwrap();
    assert!(est.agrees_with(1e5 * 0.34, 3.0), "{est:?}");
}

/// Documented seed set for the statistical acceptance of the rate oracle.
#[test]
fn mc_agrees_with_analytic_rate_across_seeds() {
    let link = LinkConfig::default();
    let noise = NoiseParams::default();
    let decisions: Vec<ChainDecision> = [
        (1, 0.3, 0, 0),
        (4, 0.5, 1, 0),
        (3, 0.2, 0, 1),
        (5, 0.4, 1, 1),
        (2, 0.1, 2, 0),
        (2, 0.6, 0, 2),
    ]
    .into_iter()
    .map(|(n, d, nl, ne)| ChainDecision::new(n, d, nl, ne).unwrap())
    .collect();
    let mut runs = 0;
    let mut agree = 0;
    for d in &decisions {
        let expected = analytic_rate(d, &link, &noise);
        for &seed in &MC_SEEDS {
            let est = mc_rate(d, &link, &noise, &McConfig::new(4000, seed)).unwrap();
            runs += 1;
            agree += est.agrees_with(expected, 3.0) as usize;
        }
    }
    assert!(agree as f64 >= 0.99 * runs as f64, "{agree}/{runs}");
}
