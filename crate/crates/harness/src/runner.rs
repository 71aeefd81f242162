//! Executes a scenario over its grid.

use qrn_core::chain::{evaluate, InfeasibilityReason};
use qrn_core::optimizer::{
    derive_bounds, exhaustive_search, ga_search_pinned, GaConfig, OptimizeError, Pins, SearchBounds, SearchMethod,
    SearchOutcome,
};
use qrn_core::{ChainDecision, EvaluationResult};
use rayon::prelude::*;

use crate::error::HarnessResult;
use crate::output::{BestRecord, GaRunSummary, Summary, SweepRecord};
use crate::spec::{ExperimentSpec, PointParams, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<SweepRecord>,
    pub summary: Summary,
}

impl ExperimentOutput {
    /// True when no record holds a feasible decision.
    pub fn nothing_feasible(&self) -> bool {
        self.summary.feasible_records == 0
    }
}

struct PointRun {
    records: Vec<SweepRecord>,
    ga_run: Option<GaRunSummary>,
}

/// Runs every grid point (in parallel) and returns the records in grid
/// coordinate order. Infeasible points produce flagged records.
pub fn run_experiment(spec: &ExperimentSpec) -> HarnessResult<ExperimentOutput> {
    let points = spec.points()?;
    let pins = spec.effective_pins()?;
    let runs: Vec<PointRun> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| run_point(spec, &pins, i, p))
        .collect::<HarnessResult<_>>()?;

    let mut records = Vec::new();
    let mut ga_runs = Vec::new();
    for run in runs {
        records.extend(run.records);
        ga_runs.extend(run.ga_run);
    }
    let summary = summarize(spec, points.len(), &records, ga_runs);
    Ok(ExperimentOutput { records, summary })
}

fn run_point(spec: &ExperimentSpec, pins: &Pins, index: usize, p: &PointParams) -> HarnessResult<PointRun> {
    let single = |record| PointRun {
        records: vec![record],
        ga_run: None,
    };
    let (link, noise, qos) = (p.link()?, p.noise()?, p.qos()?);
    let row = Row { spec, index, p };

    if spec.scenario == Scenario::Evaluate {
        let decision = spec.decision.to_decision()?;
        let result = evaluate(&decision, &link, &noise, &qos)?;
        return Ok(single(row.with_decision("evaluate", None, None, &decision, &result, 1)));
    }

    let bounds = match derive_bounds(&link, &noise, &qos, &spec.bounds) {
        Ok(b) => b,
        Err(OptimizeError::RateUnachievable { .. }) => {
            let method = spec.effective_method();
            let seed = (method == SearchMethod::Genetic).then_some(p.seed);
            return Ok(single(row.empty(
                method_name(method),
                seed,
                None,
                "rate_unachievable",
                0,
            )));
        }
        Err(e) => return Err(e.into()),
    };

    match spec.effective_method() {
        SearchMethod::Exhaustive => {
            let outcome = exhaustive_search(&link, &noise, &qos, &bounds, pins)?;
            Ok(single(row.for_outcome("exhaustive", None, &outcome)))
        }
        SearchMethod::Genetic if spec.scenario != Scenario::GaConvergence => {
            let ga = GaConfig {
                seed: p.seed,
                ..spec.ga
            };
            let run = ga_search_pinned(&link, &noise, &qos, &bounds, pins, &ga)?;
            Ok(single(row.for_outcome("genetic", Some(p.seed), &run.outcome)))
        }
        SearchMethod::Genetic => convergence(&row, &bounds, pins),
    }
}

/// One record per GA generation, plus the gap to the exhaustive optimum.
fn convergence(row: &Row, bounds: &SearchBounds, pins: &Pins) -> HarnessResult<PointRun> {
    let p = row.p;
    let (link, noise, qos) = (p.link()?, p.noise()?, p.qos()?);
    let ga = GaConfig {
        seed: p.seed,
        ..row.spec.ga
    };
    let run = ga_search_pinned(&link, &noise, &qos, bounds, pins, &ga)?;
    let reference = exhaustive_search(&link, &noise, &qos, bounds, pins)?;

    let mut records = Vec::with_capacity(run.history.len());
    for g in &run.history {
        let evaluations = (g.generation as u64 + 1) * ga.population_size as u64;
        let record = match g.best_decision {
            Some(decision) => {
                let result = evaluate(&decision, &link, &noise, &qos)?;
                row.with_decision(
                    "genetic",
                    Some(p.seed),
                    Some(g.generation),
                    &decision,
                    &result,
                    evaluations,
                )
            }
            None => row.empty(
                "genetic",
                Some(p.seed),
                Some(g.generation),
                "no_feasible_solution",
                evaluations,
            ),
        };
        records.push(record);
    }

    let objective = run.outcome.solution().map(|s| s.objective_km);
    let exact = reference.solution().map(|s| s.objective_km);
    let gap_percent = match (objective, exact) {
        (Some(g), Some(e)) if e > 0.0 => Some(100.0 * (e - g) / e),
        _ => None,
    };
    Ok(PointRun {
        records,
        ga_run: Some(GaRunSummary {
            point: row.index,
            seed: p.seed,
            objective_km: objective,
            exhaustive_objective_km: exact,
            gap_percent,
            converged_at: run.converged_at,
            generations: run.history.len(),
        }),
    })
}

fn method_name(m: SearchMethod) -> &'static str {
    match m {
        SearchMethod::Exhaustive => "exhaustive",
        SearchMethod::Genetic => "genetic",
    }
}

pub fn status_name(reason: InfeasibilityReason) -> &'static str {
    match reason {
        InfeasibilityReason::None => "feasible",
        InfeasibilityReason::RateBelowMin => "rate_below_min",
        InfeasibilityReason::FidelityBelowMin => "fidelity_below_min",
        InfeasibilityReason::DistillPreconditionViolated => "distill_precondition_violated",
    }
}

struct Row<'a> {
    spec: &'a ExperimentSpec,
    index: usize,
    p: &'a PointParams,
}

impl Row<'_> {
    fn base(&self, method: &str, seed: Option<u64>, generation: Option<usize>, evaluations: u64) -> SweepRecord {
        let p = self.p;
        SweepRecord {
            scenario: self.spec.scenario.name().into(),
            point: self.index,
            f0: p.f0,
            r0: p.r0,
            l0: p.l0,
            p2: p.p2,
            eta: p.eta,
            r_min: p.r_min,
            f_min: p.f_min,
            method: method.into(),
            seed,
            generation,
            feasible: false,
            status: String::new(),
            objective_km: None,
            n_links: None,
            d_km: None,
            n_link_distill: None,
            n_e2e_distill: None,
            e2e_fidelity: None,
            e2e_rate: None,
            link_fidelity: None,
            link_rate: None,
            evaluations,
        }
    }

    fn empty(
        &self,
        method: &str,
        seed: Option<u64>,
        generation: Option<usize>,
        status: &str,
        evaluations: u64,
    ) -> SweepRecord {
        SweepRecord {
            status: status.into(),
            ..self.base(method, seed, generation, evaluations)
        }
    }

    fn with_decision(
        &self,
        method: &str,
        seed: Option<u64>,
        generation: Option<usize>,
        decision: &ChainDecision,
        result: &EvaluationResult,
        evaluations: u64,
    ) -> SweepRecord {
        SweepRecord {
            feasible: result.feasible,
            status: status_name(result.infeasibility_reason).into(),
            objective_km: Some(result.objective_km),
            n_links: Some(decision.n_links),
            d_km: Some(decision.d_separation),
            n_link_distill: Some(decision.n_link_distill),
            n_e2e_distill: Some(decision.n_e2e_distill),
            e2e_fidelity: Some(result.e2e_fidelity.value()),
            e2e_rate: Some(result.e2e_rate),
            link_fidelity: Some(result.link_fidelity_after_distill.value()),
            link_rate: Some(result.link_rate_after_distill),
            ..self.base(method, seed, generation, evaluations)
        }
    }

    fn for_outcome(&self, method: &str, seed: Option<u64>, outcome: &SearchOutcome) -> SweepRecord {
        match outcome {
            SearchOutcome::Found(s) => {
                self.with_decision(method, seed, None, &s.decision, &s.result, s.evaluations_used)
            }
            SearchOutcome::NoFeasibleSolution { evaluations_used } => {
                self.empty(method, seed, None, "no_feasible_solution", *evaluations_used)
            }
        }
    }
}

fn summarize(spec: &ExperimentSpec, points: usize, records: &[SweepRecord], ga_runs: Vec<GaRunSummary>) -> Summary {
    let mut best: Option<BestRecord> = None;
    for r in records.iter().filter(|r| r.feasible) {
        let (Some(objective_km), Some(n_links), Some(d_km), Some(nl), Some(ne)) =
            (r.objective_km, r.n_links, r.d_km, r.n_link_distill, r.n_e2e_distill)
        else {
            continue;
        };
        if best.as_ref().is_none_or(|b| objective_km > b.objective_km) {
            best = Some(BestRecord {
                point: r.point,
                objective_km,
                n_links,
                d_km,
                n_link_distill: nl,
                n_e2e_distill: ne,
            });
        }
    }
    Summary {
        scenario: spec.scenario.name().into(),
        method: spec.effective_method(),
        points,
        records: records.len(),
        feasible_records: records.iter().filter(|r| r.feasible).count(),
        empty: records.is_empty(),
        best,
        ga_runs,
    }
}
