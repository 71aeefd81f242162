use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    is_better, tie_break, Candidate, DGrid, OptimizeError, Pins, SearchBounds, SearchMethod, SearchOutcome, Solution,
};
use crate::chain::{evaluate, ChainDecision, EvaluationResult, LinkConfig, QosRequirement};
use crate::model::NoiseParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations_max: usize,
    pub crossover_rate: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    pub tournament_size: usize,
    pub seed: u64,
    /// Stop after this many generations without improvement of the best
    /// feasible objective.
    pub stall_generations: usize,
    /// Best individuals copied unchanged into the next generation.
    pub elite_count: usize,
    /// Standard deviation of the Gaussian separation mutation, km.
    pub d_sigma_km: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 64,
            generations_max: 1000,
            crossover_rate: 0.9,
            mutation_rate: 0.15,
            tournament_size: 3,
            seed: 0,
            stall_generations: 100,
            elite_count: 2,
            d_sigma_km: 0.25,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        let bad = |msg: &str| Err(OptimizeError::InvalidGaConfig(msg.into()));
        if self.population_size < 2 {
            return bad("population_size must be >= 2");
        }
        if self.generations_max < 1 {
            return bad("generations_max must be >= 1");
        }
        if self.tournament_size < 1 {
            return bad("tournament_size must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) || !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("crossover_rate and mutation_rate must lie in [0, 1]");
        }
        if self.elite_count >= self.population_size {
            return bad("elite_count must be below population_size");
        }
        if !(self.d_sigma_km >= 0.0 && self.d_sigma_km.is_finite()) {
            return bad("d_sigma_km must be finite and >= 0");
        }
        Ok(())
    }
}

/// Best-so-far state after one generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_objective_km: Option<f64>,
    pub best_decision: Option<ChainDecision<f64>>,
    pub feasible_in_population: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaOutcome {
    pub outcome: SearchOutcome,
    pub history: Vec<GenerationRecord>,
    /// Generation at which the best-so-far objective last improved.
    pub converged_at: Option<usize>,
}

/// Genome: integer genes plus the separation as a refinement-grid index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Genome {
    n_links: usize,
    n_link_distill: usize,
    n_e2e_distill: usize,
    d_index: usize,
}

/// Inclusive gene ranges; a pinned gene has `lo == hi`.
struct Space {
    n_links: (usize, usize),
    n_link_distill: (usize, usize),
    n_e2e_distill: (usize, usize),
    grid: DGrid,
}

fn range(pin: Option<usize>, lo: usize, hi: usize) -> (usize, usize) {
    pin.map_or((lo, hi), |v| (v, v))
}

impl Space {
    fn new(bounds: &SearchBounds, pins: &Pins) -> Self {
        Self {
            n_links: range(pins.n_links, 1, bounds.n_max),
            n_link_distill: range(pins.n_link_distill, 0, bounds.n_link_distill_max),
            n_e2e_distill: range(pins.n_e2e_distill, 0, bounds.n_e2e_distill_max),
            grid: match pins.d_separation {
                Some(d) => DGrid::new(d, d, bounds.d_refine_step),
                None => bounds.refine_grid(),
            },
        }
    }

    fn decision(&self, g: &Genome) -> ChainDecision<f64> {
        ChainDecision {
            n_links: g.n_links,
            d_separation: self.grid.value(g.d_index),
            n_link_distill: g.n_link_distill,
            n_e2e_distill: g.n_e2e_distill,
        }
    }

    fn random(&self, rng: &mut ChaCha8Rng) -> Genome {
        Genome {
            n_links: rng.random_range(self.n_links.0..=self.n_links.1),
            n_link_distill: rng.random_range(self.n_link_distill.0..=self.n_link_distill.1),
            n_e2e_distill: rng.random_range(self.n_e2e_distill.0..=self.n_e2e_distill.1),
            d_index: rng.random_range(0..self.grid.len()),
        }
    }
}

struct Scored {
    genome: Genome,
    result: EvaluationResult<f64>,
}

impl Scored {
    fn candidate(&self, space: &Space) -> Candidate {
        Candidate {
            decision: space.decision(&self.genome),
            result: self.result.clone(),
        }
    }
}

/// Feasible individuals first, by objective then tie-break; infeasible ones
/// by constraint violation.
fn rank(a: &Scored, b: &Scored, space: &Space) -> Ordering {
    match (a.result.feasible, b.result.feasible) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (true, true) => b
            .result
            .objective_km
            .total_cmp(&a.result.objective_km)
            .then_with(|| tie_break(&a.candidate(space), &b.candidate(space))),
        (false, false) => a
            .result
            .violation
            .total_cmp(&b.result.violation)
            .then_with(|| tie_break(&a.candidate(space), &b.candidate(space))),
    }
}

fn mutate_count(value: usize, (lo, hi): (usize, usize), rng: &mut ChaCha8Rng, steps: &Geometric) -> usize {
    let step = 1 + steps.sample(rng) as usize;
    if rng.random_bool(0.5) {
        value.saturating_add(step).min(hi)
    } else {
        value.saturating_sub(step).max(lo)
    }
}

/// Genetic search over the same box as the exhaustive search: tournament
/// selection, uniform crossover, per-gene mutation, elitism, and
/// feasible-first ranking. Deterministic for a fixed seed; population
/// evaluation runs in parallel but all random draws happen on one stream.
pub fn ga_search(
    link: &LinkConfig<f64>,
    noise: &NoiseParams<f64>,
    qos: &QosRequirement<f64>,
    bounds: &SearchBounds,
    ga: &GaConfig,
) -> Result<GaOutcome, OptimizeError> {
    ga_search_pinned(link, noise, qos, bounds, &Pins::default(), ga)
}

/// [`ga_search`] with some genes held fixed.
pub fn ga_search_pinned(
    link: &LinkConfig<f64>,
    noise: &NoiseParams<f64>,
    qos: &QosRequirement<f64>,
    bounds: &SearchBounds,
    pins: &Pins,
    ga: &GaConfig,
) -> Result<GaOutcome, OptimizeError> {
    link.validate()?;
    bounds.validate()?;
    pins.check_within(bounds)?;
    ga.validate()?;

    let space = Space::new(bounds, pins);
    let mut rng = ChaCha8Rng::seed_from_u64(ga.seed);
    let steps = Geometric::new(0.5).expect("valid probability");
    let d_noise = Normal::new(0.0, ga.d_sigma_km).expect("finite sigma");

    let mut population: Vec<Genome> = (0..ga.population_size).map(|_| space.random(&mut rng)).collect();
    let mut incumbent: Option<Candidate> = None;
    let mut converged_at = None;
    let mut stall = 0usize;
    let mut evaluations = 0u64;
    let mut history = Vec::new();

    for generation in 0..ga.generations_max {
        let mut scored: Vec<Scored> = population
            .par_iter()
            .map(|g| evaluate(&space.decision(g), link, noise, qos).map(|result| Scored { genome: *g, result }))
            .collect::<Result<_, _>>()?;
        evaluations += scored.len() as u64;
        scored.sort_by(|a, b| rank(a, b, &space));

        let feasible = scored.iter().filter(|s| s.result.feasible).count();
        let improved = match scored.first().filter(|s| s.result.feasible) {
            Some(top) => {
                let cand = top.candidate(&space);
                let better = incumbent.as_ref().is_none_or(|inc| is_better(&cand, inc));
                let gain = incumbent
                    .as_ref()
                    .is_none_or(|inc| cand.objective() > inc.objective() + super::OBJECTIVE_TIE_KM);
                if better {
                    incumbent = Some(cand);
                }
                gain
            }
            None => false,
        };
        if improved {
            stall = 0;
            converged_at = Some(generation);
        } else {
            stall += 1;
        }
        history.push(GenerationRecord {
            generation,
            best_objective_km: incumbent.as_ref().map(Candidate::objective),
            best_decision: incumbent.as_ref().map(|c| c.decision),
            feasible_in_population: feasible,
        });
        if incumbent.is_some() && stall >= ga.stall_generations {
            break;
        }
        if generation + 1 == ga.generations_max {
            break;
        }

        let mut next: Vec<Genome> = scored.iter().take(ga.elite_count).map(|s| s.genome).collect();
        let pick = |rng: &mut ChaCha8Rng| -> Genome {
            // Population is sorted best-first, so the lowest drawn index wins.
            let winner = (0..ga.tournament_size)
                .map(|_| rng.random_range(0..scored.len()))
                .min()
                .expect("tournament_size >= 1");
            scored[winner].genome
        };
        while next.len() < ga.population_size {
            let mut a = pick(&mut rng);
            let mut b = pick(&mut rng);
            if rng.random_bool(ga.crossover_rate) {
                if rng.random_bool(0.5) {
                    std::mem::swap(&mut a.n_links, &mut b.n_links);
                }
                if rng.random_bool(0.5) {
                    std::mem::swap(&mut a.n_link_distill, &mut b.n_link_distill);
                }
                if rng.random_bool(0.5) {
                    std::mem::swap(&mut a.n_e2e_distill, &mut b.n_e2e_distill);
                }
                if rng.random_bool(0.5) {
                    std::mem::swap(&mut a.d_index, &mut b.d_index);
                }
            }
            for child in [a, b] {
                if next.len() == ga.population_size {
                    break;
                }
                next.push(mutate(child, &space, ga, &mut rng, &steps, &d_noise));
            }
        }
        population = next;
    }

    let outcome = match incumbent {
        Some(best) => SearchOutcome::Found(Solution {
            objective_km: best.result.objective_km,
            decision: best.decision,
            result: best.result,
            method: SearchMethod::Genetic,
            evaluations_used: evaluations,
            seed: Some(ga.seed),
        }),
        None => SearchOutcome::NoFeasibleSolution {
            evaluations_used: evaluations,
        },
    };
    Ok(GaOutcome {
        outcome,
        history,
        converged_at,
    })
}

fn mutate(
    mut g: Genome,
    space: &Space,
    ga: &GaConfig,
    rng: &mut ChaCha8Rng,
    steps: &Geometric,
    d_noise: &Normal<f64>,
) -> Genome {
    if rng.random_bool(ga.mutation_rate) {
        g.n_links = mutate_count(g.n_links, space.n_links, rng, steps);
    }
    if rng.random_bool(ga.mutation_rate) {
        g.n_link_distill = mutate_count(g.n_link_distill, space.n_link_distill, rng, steps);
    }
    if rng.random_bool(ga.mutation_rate) {
        g.n_e2e_distill = mutate_count(g.n_e2e_distill, space.n_e2e_distill, rng, steps);
    }
    if rng.random_bool(ga.mutation_rate) {
        let d = space.grid.value(g.d_index) + d_noise.sample(rng);
        g.d_index = space.grid.snap(d);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(GaConfig::default().validate().is_ok());
        let bad = GaConfig {
            population_size: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = GaConfig {
            mutation_rate: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = GaConfig {
            tournament_size: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = GaConfig {
            generations_max: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn infeasible_space_reports_no_solution() {
        let bounds = SearchBounds {
            n_max: 3,
            d_min: 0.0,
            d_max: 1.0,
            d_coarse_step: 0.05,
            d_refine_step: 0.001,
            n_link_distill_max: 1,
            n_e2e_distill_max: 1,
        };
        let qos = QosRequirement::new(1.0, 0.9999).unwrap();
        let ga = GaConfig {
            generations_max: 5,
            ..Default::default()
        };
        let out = ga_search(&LinkConfig::default(), &NoiseParams::default(), &qos, &bounds, &ga).unwrap();
        assert!(matches!(
            out.outcome,
            SearchOutcome::NoFeasibleSolution { evaluations_used: 320 }
        ));
        assert_eq!(out.history.len(), 5);
        assert!(out.converged_at.is_none());
    }
}
