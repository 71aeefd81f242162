//! Maximizes chain length `N * d` subject to the end-to-end rate and
//! fidelity floors.
//!
//! Two solvers share one search space: [`exhaustive_search`] scans a coarse
//! separation grid and refines the promising points, and [`ga_search`]
//! evolves decisions whose separation is snapped to the same refinement
//! grid. Both report a [`Solution`] selected with [`select_best`].

mod bounds;
mod exhaustive;
mod genetic;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{ChainDecision, EvaluationResult};
use crate::error::ModelError;

pub use bounds::{derive_bounds, BoundsOverrides, DGrid, SearchBounds, DEFAULT_N_MAX_LIMIT};
pub use exhaustive::{exhaustive_search, Pins};
pub use genetic::{ga_search, ga_search_pinned, GaConfig, GaOutcome, GenerationRecord};

/// Objectives closer than this (km) are treated as equal.
pub const OBJECTIVE_TIE_KM: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OptimizeError {
    #[error("invalid search bounds: {0}")]
    InvalidBounds(String),

    #[error("QoS rate unachievable at zero distance (R0 = {r0} < R_min = {r_min})")]
    RateUnachievable { r0: f64, r_min: f64 },

    #[error("grid of {points} points exceeds the limit of {limit}")]
    GridTooLarge { points: u128, limit: u128 },

    #[error("invalid GA configuration: {0}")]
    InvalidGaConfig(String),

    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    Exhaustive,
    Genetic,
}

/// A feasible optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub decision: ChainDecision<f64>,
    pub result: EvaluationResult<f64>,
    pub objective_km: f64,
    pub method: SearchMethod,
    pub evaluations_used: u64,
    pub seed: Option<u64>,
}

/// Result of a search: either a feasible optimum, or the statement that
/// nothing in the searched space meets the QoS floors.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum SearchOutcome {
    Found(Solution),
    NoFeasibleSolution { evaluations_used: u64 },
}

impl SearchOutcome {
    pub fn solution(&self) -> Option<&Solution> {
        match self {
            SearchOutcome::Found(s) => Some(s),
            SearchOutcome::NoFeasibleSolution { .. } => None,
        }
    }

    pub fn into_solution(self) -> Option<Solution> {
        match self {
            SearchOutcome::Found(s) => Some(s),
            SearchOutcome::NoFeasibleSolution { .. } => None,
        }
    }

    pub fn evaluations_used(&self) -> u64 {
        match self {
            SearchOutcome::Found(s) => s.evaluations_used,
            SearchOutcome::NoFeasibleSolution { evaluations_used } => *evaluations_used,
        }
    }
}

/// An evaluated feasible point.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub decision: ChainDecision<f64>,
    pub result: EvaluationResult<f64>,
}

impl Candidate {
    pub fn objective(&self) -> f64 {
        self.result.objective_km
    }
}

/// Order among candidates of equal objective: fewer links, fewer
/// distillation rounds, higher end-to-end fidelity, shorter separation.
/// The final key on link rounds only makes the order total.
pub fn tie_break(a: &Candidate, b: &Candidate) -> Ordering {
    let da = &a.decision;
    let db = &b.decision;
    da.n_links
        .cmp(&db.n_links)
        .then((da.n_link_distill + da.n_e2e_distill).cmp(&(db.n_link_distill + db.n_e2e_distill)))
        .then(b.result.e2e_fidelity.value().total_cmp(&a.result.e2e_fidelity.value()))
        .then(da.d_separation.total_cmp(&db.d_separation))
        .then(da.n_link_distill.cmp(&db.n_link_distill))
}

/// True when `a` should replace incumbent `b`.
pub fn is_better(a: &Candidate, b: &Candidate) -> bool {
    let diff = a.objective() - b.objective();
    if diff > OBJECTIVE_TIE_KM {
        true
    } else if diff < -OBJECTIVE_TIE_KM {
        false
    } else {
        tie_break(a, b) == Ordering::Less
    }
}

/// Picks the best candidate independently of input order: among those
/// within [`OBJECTIVE_TIE_KM`] of the maximum objective, the first under
/// [`tie_break`].
pub fn select_best<'a, I>(candidates: I) -> Option<&'a Candidate>
where
    I: IntoIterator<Item = &'a Candidate>,
    I::IntoIter: Clone,
{
    let iter = candidates.into_iter();
    let max = iter.clone().map(Candidate::objective).fold(f64::NEG_INFINITY, f64::max);
    iter.filter(|c| c.objective() >= max - OBJECTIVE_TIE_KM)
        .min_by(|a, b| tie_break(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{evaluate, LinkConfig, QosRequirement};
    use crate::model::NoiseParams;

    fn cand(n: usize, d: f64, nl: usize, ne: usize) -> Candidate {
        let decision = ChainDecision::new(n, d, nl, ne).unwrap();
        let result = evaluate(
            &decision,
            &LinkConfig::default(),
            &NoiseParams::perfect(),
            &QosRequirement::new(1e-300, 0.25).unwrap(),
        )
        .unwrap();
        Candidate { decision, result }
    }

    #[test]
    fn larger_objective_wins() {
        let a = cand(2, 1.0, 0, 0);
        let b = cand(1, 1.5, 0, 0);
        assert!(is_better(&a, &b));
        assert!(!is_better(&b, &a));
    }

    #[test]
    fn ties_prefer_fewer_links_then_fewer_rounds() {
        let few = cand(1, 2.0, 0, 0);
        let many = cand(2, 1.0, 0, 0);
        assert!(is_better(&few, &many));
        let plain = cand(2, 1.0, 0, 0);
        let distilled = cand(2, 1.0, 1, 0);
        assert!(is_better(&plain, &distilled));
    }

    #[test]
    fn selection_ignores_order() {
        let mut v = vec![
            cand(2, 1.0, 0, 1),
            cand(1, 2.0, 0, 0),
            cand(2, 1.0, 0, 0),
            cand(1, 1.0, 0, 0),
        ];
        let best = select_best(&v).unwrap().decision;
        v.reverse();
        assert_eq!(select_best(&v).unwrap().decision, best);
        assert_eq!(best.n_links, 1);
        assert_eq!(best.d_separation, 2.0);
        assert!(select_best(&[]).is_none());
    }
}
