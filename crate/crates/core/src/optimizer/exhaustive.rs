use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    select_best, Candidate, DGrid, OptimizeError, SearchBounds, SearchMethod, SearchOutcome, Solution, OBJECTIVE_TIE_KM,
};
use crate::chain::{evaluate, ChainDecision, LinkConfig, QosRequirement};
use crate::model::NoiseParams;

/// Variables held fixed during a search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pins {
    pub n_links: Option<usize>,
    pub d_separation: Option<f64>,
    pub n_link_distill: Option<usize>,
    pub n_e2e_distill: Option<usize>,
}

impl Pins {
    pub fn is_empty(&self) -> bool {
        *self == Pins::default()
    }

    pub(crate) fn check_within(&self, bounds: &SearchBounds) -> Result<(), OptimizeError> {
        let bad = |msg: String| Err(OptimizeError::InvalidBounds(msg));
        if let Some(n) = self.n_links {
            if n < 1 || n > bounds.n_max {
                return bad(format!("pinned n_links = {n} outside [1, {}]", bounds.n_max));
            }
        }
        if let Some(d) = self.d_separation {
            if !(d >= bounds.d_min && d <= bounds.d_max) {
                return bad(format!("pinned d = {d} outside [{}, {}]", bounds.d_min, bounds.d_max));
            }
        }
        if let Some(n) = self.n_link_distill {
            if n > bounds.n_link_distill_max {
                return bad(format!(
                    "pinned n_link_distill = {n} above {}",
                    bounds.n_link_distill_max
                ));
            }
        }
        if let Some(n) = self.n_e2e_distill {
            if n > bounds.n_e2e_distill_max {
                return bad(format!("pinned n_e2e_distill = {n} above {}", bounds.n_e2e_distill_max));
            }
        }
        Ok(())
    }

    /// Every `(n_links, n_link_distill, n_e2e_distill)` in the box, in a
    /// fixed order.
    pub(crate) fn triples(&self, bounds: &SearchBounds) -> Vec<(usize, usize, usize)> {
        let links = match self.n_links {
            Some(n) => n..=n,
            None => 1..=bounds.n_max,
        };
        let link_rounds = match self.n_link_distill {
            Some(n) => n..=n,
            None => 0..=bounds.n_link_distill_max,
        };
        let e2e_rounds = match self.n_e2e_distill {
            Some(n) => n..=n,
            None => 0..=bounds.n_e2e_distill_max,
        };
        let mut out = Vec::new();
        for nl in link_rounds {
            for ne in e2e_rounds.clone() {
                for n in links.clone() {
                    out.push((n, nl, ne));
                }
            }
        }
        out
    }

    /// Grid of separations to scan: the pinned value alone, or the coarse
    /// grid.
    pub(crate) fn coarse_grid(&self, bounds: &SearchBounds) -> DGrid {
        match self.d_separation {
            Some(d) => DGrid::new(d, d, bounds.d_coarse_step),
            None => bounds.coarse_grid(),
        }
    }
}

/// Evaluates the triple at separation `d`, counting the call.
struct Probe<'a> {
    link: &'a LinkConfig<f64>,
    noise: &'a NoiseParams<f64>,
    qos: &'a QosRequirement<f64>,
    n_links: usize,
    n_link_distill: usize,
    n_e2e_distill: usize,
    evaluations: u64,
}

impl Probe<'_> {
    fn at(&mut self, d: f64) -> Result<Candidate, OptimizeError> {
        let decision = ChainDecision::new(self.n_links, d, self.n_link_distill, self.n_e2e_distill)?;
        let result = evaluate(&decision, self.link, self.noise, self.qos)?;
        self.evaluations += 1;
        Ok(Candidate { decision, result })
    }

    /// Largest feasible index of `grid` within `lo..=hi`, walking from
    /// `guess`. Feasibility is monotone in the separation: only the rate
    /// depends on it, and it decreases.
    fn largest_feasible(
        &mut self,
        grid: &DGrid,
        lo: usize,
        hi: usize,
        guess: usize,
    ) -> Result<Option<Candidate>, OptimizeError> {
        let mut i = guess.clamp(lo, hi);
        let mut current = self.at(grid.value(i))?;
        if current.result.feasible {
            while i < hi {
                let next = self.at(grid.value(i + 1))?;
                if !next.result.feasible {
                    break;
                }
                i += 1;
                current = next;
            }
            Ok(Some(current))
        } else {
            while i > lo {
                i -= 1;
                let prev = self.at(grid.value(i))?;
                if prev.result.feasible {
                    return Ok(Some(prev));
                }
            }
            Ok(None)
        }
    }
}

/// Separation at which the rate of `cand`'s triple meets `r_min` exactly.
fn rate_limited_separation(cand: &Candidate, link: &LinkConfig<f64>, qos: &QosRequirement<f64>) -> f64 {
    let r = &cand.result;
    let factor = r.link_trace.rate_factor() * r.e2e_trace.rate_factor();
    link.l0_attenuation_length * (link.r0_source_rate * factor / qos.r_min).ln()
}

struct TripleBest {
    candidate: Option<Candidate>,
    evaluations: u64,
}

fn coarse_best(
    triple: (usize, usize, usize),
    grid: &DGrid,
    link: &LinkConfig<f64>,
    noise: &NoiseParams<f64>,
    qos: &QosRequirement<f64>,
) -> Result<TripleBest, OptimizeError> {
    let (n_links, n_link_distill, n_e2e_distill) = triple;
    let mut probe = Probe {
        link,
        noise,
        qos,
        n_links,
        n_link_distill,
        n_e2e_distill,
        evaluations: 0,
    };
    // Fidelity and distillation feasibility do not depend on d, and the
    // rate only falls with d, so an infeasible first grid point rules out
    // the whole triple.
    let first = probe.at(grid.value(0))?;
    if !first.result.feasible {
        return Ok(TripleBest {
            candidate: None,
            evaluations: probe.evaluations,
        });
    }
    let hi = grid.len() - 1;
    let guess = grid
        .floor_index(rate_limited_separation(&first, link, qos))
        .unwrap_or(0);
    let candidate = if guess == 0 {
        probe.largest_feasible(grid, 0, hi, 0)?
    } else {
        probe.largest_feasible(grid, 1, hi, guess)?.or(Some(first))
    };
    Ok(TripleBest {
        candidate,
        evaluations: probe.evaluations,
    })
}

fn refine(
    coarse: &Candidate,
    coarse_step: f64,
    grid: &DGrid,
    link: &LinkConfig<f64>,
    noise: &NoiseParams<f64>,
    qos: &QosRequirement<f64>,
) -> Result<TripleBest, OptimizeError> {
    let d = coarse.decision;
    let mut probe = Probe {
        link,
        noise,
        qos,
        n_links: d.n_links,
        n_link_distill: d.n_link_distill,
        n_e2e_distill: d.n_e2e_distill,
        evaluations: 0,
    };
    let lo = grid.floor_index(d.d_separation).unwrap_or(0);
    let hi = grid.floor_index(d.d_separation + coarse_step).unwrap_or(0).max(lo);
    let guess = grid
        .floor_index(rate_limited_separation(coarse, link, qos))
        .unwrap_or(lo);
    let refined = probe.largest_feasible(grid, lo, hi, guess)?;
    let candidate = match refined {
        Some(r) if r.objective() > coarse.objective() => r,
        _ => coarse.clone(),
    };
    Ok(TripleBest {
        candidate: Some(candidate),
        evaluations: probe.evaluations,
    })
}

/// Exhaustive maximization of `N * d` over `bounds`, with any of the four
/// variables optionally pinned.
///
/// For each `(N, n_L, n_E)` the largest feasible coarse separation is found
/// starting from the analytic rate limit; points that cannot beat the best
/// coarse objective even one coarse step further are not refined.
pub fn exhaustive_search(
    link: &LinkConfig<f64>,
    noise: &NoiseParams<f64>,
    qos: &QosRequirement<f64>,
    bounds: &SearchBounds,
    pins: &Pins,
) -> Result<SearchOutcome, OptimizeError> {
    link.validate()?;
    bounds.validate()?;
    pins.check_within(bounds)?;

    let coarse_grid = pins.coarse_grid(bounds);
    let triples = pins.triples(bounds);

    let coarse: Vec<TripleBest> = triples
        .par_iter()
        .map(|&t| coarse_best(t, &coarse_grid, link, noise, qos))
        .collect::<Result<_, _>>()?;
    let mut evaluations: u64 = coarse.iter().map(|t| t.evaluations).sum();
    let mut candidates: Vec<Candidate> = coarse.into_iter().filter_map(|t| t.candidate).collect();

    let Some(best_coarse) = select_best(&candidates).map(Candidate::objective) else {
        return Ok(SearchOutcome::NoFeasibleSolution {
            evaluations_used: evaluations,
        });
    };

    if bounds.refines() && pins.d_separation.is_none() {
        let step = bounds.d_coarse_step;
        let refine_grid = bounds.refine_grid();
        let refined: Vec<TripleBest> = candidates
            .par_iter()
            .map(|c| {
                let reach = c.decision.n_links as f64 * (c.decision.d_separation + step).min(bounds.d_max);
                if reach > best_coarse - OBJECTIVE_TIE_KM {
                    refine(c, step, &refine_grid, link, noise, qos)
                } else {
                    Ok(TripleBest {
                        candidate: Some(c.clone()),
                        evaluations: 0,
                    })
                }
            })
            .collect::<Result<_, _>>()?;
        evaluations += refined.iter().map(|t| t.evaluations).sum::<u64>();
        candidates = refined.into_iter().filter_map(|t| t.candidate).collect();
    }

    let best = select_best(&candidates).expect("non-empty").clone();
    Ok(SearchOutcome::Found(Solution {
        objective_km: best.result.objective_km,
        decision: best.decision,
        result: best.result,
        method: SearchMethod::Exhaustive,
        evaluations_used: evaluations,
        seed: None,
    }))
}
