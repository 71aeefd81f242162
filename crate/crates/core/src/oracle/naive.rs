use rayon::prelude::*;

use crate::chain::{evaluate, ChainDecision, LinkConfig, QosRequirement};
use crate::model::NoiseParams;
use crate::optimizer::{
    select_best, Candidate, OptimizeError, Pins, SearchBounds, SearchMethod, SearchOutcome, Solution,
};

/// Largest coarse grid the brute-force scan accepts.
pub const NAIVE_GRID_LIMIT: u128 = 10_000_000;

/// Evaluates every coarse grid point and keeps the best feasible one under
/// the optimizer's tie-break. No pruning, no refinement.
pub fn naive_grid_optimum(
    link: &LinkConfig<f64>,
    noise: &NoiseParams<f64>,
    qos: &QosRequirement<f64>,
    bounds: &SearchBounds,
    pins: &Pins,
) -> Result<SearchOutcome, OptimizeError> {
    link.validate()?;
    bounds.validate()?;
    pins.check_within(bounds)?;

    let grid = pins.coarse_grid(bounds);
    let triples = pins.triples(bounds);
    let points = triples.len() as u128 * grid.len() as u128;
    if points > NAIVE_GRID_LIMIT {
        return Err(OptimizeError::GridTooLarge {
            points,
            limit: NAIVE_GRID_LIMIT,
        });
    }

    let per_triple: Vec<Option<Candidate>> = triples
        .par_iter()
        .map(|&(n, nl, ne)| {
            let mut best: Option<Candidate> = None;
            for i in 0..grid.len() {
                let decision = ChainDecision::new(n, grid.value(i), nl, ne)?;
                let result = evaluate(&decision, link, noise, qos)?;
                if result.feasible && best.as_ref().is_none_or(|b| result.objective_km > b.objective()) {
                    best = Some(Candidate { decision, result });
                }
            }
            Ok(best)
        })
        .collect::<Result<_, OptimizeError>>()?;

    let evaluations_used = points as u64;
    let candidates: Vec<Candidate> = per_triple.into_iter().flatten().collect();
    Ok(match select_best(&candidates) {
        Some(best) => SearchOutcome::Found(Solution {
            objective_km: best.result.objective_km,
            decision: best.decision,
            result: best.result.clone(),
            method: SearchMethod::Exhaustive,
            evaluations_used,
            seed: None,
        }),
        None => SearchOutcome::NoFeasibleSolution { evaluations_used },
    })
}
