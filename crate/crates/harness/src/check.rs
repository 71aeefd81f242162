//! Cross-checks of the optimizer and rate formulas against the independent
//! oracles, run at the first grid point of a spec.

use qrn_core::chain::{evaluate, InfeasibilityReason};
use qrn_core::optimizer::{derive_bounds, exhaustive_search, OptimizeError, SearchOutcome};
use qrn_core::oracle::{mc_rate, naive_grid_optimum, McConfig, MC_SEEDS, NAIVE_GRID_LIMIT};
use qrn_core::{ChainDecision, QosRequirement};
use serde::Serialize;

use crate::error::HarnessResult;
use crate::spec::ExperimentSpec;

/// Monte-Carlo trials per seed.
pub const MC_TRIALS: u64 = 4000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub checks: Vec<CheckLine>,
}

impl OracleReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs the brute-force scan against the pruned search on the coarse grid,
/// and the Monte-Carlo rate estimate against the analytic rate for the nine
/// decisions with `n_L, n_E` in {0, 1, 2}, requiring agreement in 99% of
/// the seeded runs.
pub fn oracle_check(spec: &ExperimentSpec) -> HarnessResult<OracleReport> {
    let p = spec.points()?[0];
    let (link, noise, qos) = (p.link()?, p.noise()?, p.qos()?);
    let pins = spec.effective_pins()?;
    let mut checks = Vec::new();

    match derive_bounds(&link, &noise, &qos, &spec.bounds) {
        Ok(mut bounds) => {
            // Both sides scan the same coarse grid.
            bounds.d_refine_step = bounds.d_coarse_step;
            let naive = naive_grid_optimum(&link, &noise, &qos, &bounds, &pins);
            let pruned = exhaustive_search(&link, &noise, &qos, &bounds, &pins)?;
            checks.push(match naive {
                Ok(naive) => compare_searches(&naive, &pruned),
                Err(OptimizeError::GridTooLarge { points, .. }) => CheckLine {
                    name: "naive_vs_exhaustive".into(),
                    passed: false,
                    detail: format!("grid of {points} points exceeds {NAIVE_GRID_LIMIT}; tighten [bounds]"),
                },
                Err(e) => return Err(e.into()),
            });
        }
        Err(OptimizeError::RateUnachievable { .. }) => checks.push(CheckLine {
            name: "naive_vs_exhaustive".into(),
            passed: true,
            detail: "rate floor above R0; both searches are empty".into(),
        }),
        Err(e) => return Err(e.into()),
    }

    let lenient = QosRequirement::new(1e-300, 0.25)?;
    let (mut runs, mut agree) = (0usize, 0usize);
    let mut per_decision = Vec::new();
    for nl in 0..=2 {
        for ne in 0..=2 {
            let decision = ChainDecision::new(3, 0.2, nl, ne)?;
            let result = evaluate(&decision, &link, &noise, &lenient)?;
            if result.infeasibility_reason == InfeasibilityReason::DistillPreconditionViolated {
                per_decision.push(format!("{nl}/{ne}: skipped"));
                continue;
            }
            let mut hits = 0;
            for &seed in &MC_SEEDS {
                let est = mc_rate(&decision, &link, &noise, &McConfig::new(MC_TRIALS, seed))?;
                hits += est.agrees_with(result.e2e_rate, 3.0) as usize;
            }
            runs += MC_SEEDS.len();
            agree += hits;
            per_decision.push(format!("{nl}/{ne}: {hits}/{}", MC_SEEDS.len()));
        }
    }
    checks.push(CheckLine {
        name: "mc_rate_within_3_sigma".into(),
        passed: runs > 0 && agree as f64 >= 0.99 * runs as f64,
        detail: format!(
            "{agree}/{runs} runs agree (N=3, d=0.2, nL/nE: {})",
            per_decision.join(", ")
        ),
    });
    Ok(OracleReport { checks })
}

fn compare_searches(naive: &SearchOutcome, pruned: &SearchOutcome) -> CheckLine {
    let (passed, detail) = match (naive.solution(), pruned.solution()) {
        (Some(a), Some(b)) => (
            a.decision == b.decision && a.objective_km.to_bits() == b.objective_km.to_bits(),
            format!(
                "naive {} km at {:?}, exhaustive {} km at {:?}",
                a.objective_km, a.decision, b.objective_km, b.decision
            ),
        ),
        (None, None) => (true, "both searches find no feasible point".into()),
        (a, b) => (
            false,
            format!(
                "naive {:?} vs exhaustive {:?}",
                a.map(|s| s.objective_km),
                b.map(|s| s.objective_km)
            ),
        ),
    };
    CheckLine {
        name: "naive_vs_exhaustive".into(),
        passed,
        detail,
    }
}
