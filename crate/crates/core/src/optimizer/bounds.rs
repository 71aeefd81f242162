use serde::{Deserialize, Serialize};

use super::OptimizeError;
use crate::chain::{LinkConfig, QosRequirement};
use crate::model::{distill_rounds_partial, swap_chain_fidelity, Fidelity, NoiseParams};

/// Hard cap on the number of links when none is given.
pub const DEFAULT_N_MAX_LIMIT: usize = 500;

pub const DEFAULT_D_COARSE_STEP: f64 = 0.05;
pub const DEFAULT_D_REFINE_STEP: f64 = 0.001;

/// Finite box searched by both solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBounds {
    pub n_max: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub d_coarse_step: f64,
    pub d_refine_step: f64,
    pub n_link_distill_max: usize,
    pub n_e2e_distill_max: usize,
}

/// User-set bounds; unset fields fall back to the derived values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsOverrides {
    pub n_max: Option<usize>,
    pub d_min: Option<f64>,
    pub d_max: Option<f64>,
    pub d_coarse_step: Option<f64>,
    pub d_refine_step: Option<f64>,
    pub n_link_distill_max: Option<usize>,
    pub n_e2e_distill_max: Option<usize>,
    /// Cap applied to the derived `n_max`.
    pub n_max_limit: Option<usize>,
}

impl SearchBounds {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        let bad = |msg: String| Err(OptimizeError::InvalidBounds(msg));
        if self.n_max < 1 {
            return bad("n_max must be >= 1".into());
        }
        if !(self.d_min >= 0.0 && self.d_min.is_finite()) {
            return bad(format!("d_min = {} must be finite and >= 0", self.d_min));
        }
        if !(self.d_max >= self.d_min && self.d_max.is_finite()) {
            return bad(format!(
                "d_max = {} must be finite and >= d_min = {}",
                self.d_max, self.d_min
            ));
        }
        if !(self.d_coarse_step > 0.0 && self.d_refine_step > 0.0) {
            return bad("separation steps must be > 0".into());
        }
        if self.d_refine_step > self.d_coarse_step {
            return bad(format!(
                "d_refine_step = {} exceeds d_coarse_step = {}",
                self.d_refine_step, self.d_coarse_step
            ));
        }
        Ok(())
    }

    pub fn coarse_grid(&self) -> DGrid {
        DGrid::new(self.d_min, self.d_max, self.d_coarse_step)
    }

    pub fn refine_grid(&self) -> DGrid {
        DGrid::new(self.d_min, self.d_max, self.d_refine_step)
    }

    /// Whether the exhaustive search has a refinement phase at all.
    pub fn refines(&self) -> bool {
        self.d_refine_step < self.d_coarse_step
    }

    /// Number of coarse grid points in the full box.
    pub fn coarse_points(&self) -> u128 {
        self.n_max as u128
            * (self.n_link_distill_max as u128 + 1)
            * (self.n_e2e_distill_max as u128 + 1)
            * self.coarse_grid().len() as u128
    }
}

/// Evenly spaced separations `start + i * step`, never beyond `end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DGrid {
    start: f64,
    end: f64,
    step: f64,
    /// `1 / step` when that is an integer; dividing by it gives the
    /// correctly rounded value for decimal steps such as 0.001.
    per_unit: Option<f64>,
    len: usize,
}

impl DGrid {
    pub fn new(start: f64, end: f64, step: f64) -> Self {
        let span = ((end - start) / step).max(0.0);
        // Absorb round-off so that e.g. 1.0 / 0.05 keeps its last point.
        let len = (span + 1e-9).floor() as usize + 1;
        let inv = (1.0 / step).round();
        let per_unit = ((inv * step - 1.0).abs() < 1e-12 && inv >= 1.0).then_some(inv);
        Self {
            start,
            end,
            step,
            per_unit,
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn value(&self, i: usize) -> f64 {
        debug_assert!(i < self.len);
        let offset = match self.per_unit {
            Some(inv) => i as f64 / inv,
            None => i as f64 * self.step,
        };
        (self.start + offset).min(self.end)
    }

    /// Index of the grid point nearest to `d`, clamped to the grid.
    pub fn snap(&self, d: f64) -> usize {
        let raw = ((d - self.start) / self.step).round();
        if raw.is_nan() || raw <= 0.0 {
            0
        } else {
            (raw as usize).min(self.len - 1)
        }
    }

    /// Largest index whose value does not exceed `d` (ignoring round-off),
    /// or `None` when `d` lies below the grid.
    pub fn floor_index(&self, d: f64) -> Option<usize> {
        let raw = (d - self.start) / self.step;
        if raw.is_nan() || raw < -1e-9 {
            return None;
        }
        Some(((raw + 1e-9).floor().max(0.0) as usize).min(self.len - 1))
    }
}

/// Completes `overrides` into a full search box.
///
/// Separations beyond `L0 ln(R0 / R_min)` miss the rate floor even without
/// distillation, and each distillation round at least halves the rate, so
/// `floor(log2(R0 / R_min))` rounds bound both counts. `n_max` is the
/// smallest chain length that cannot reach `F_min` even with the best link
/// fidelity any allowed number of link rounds produces and the best number
/// of end-to-end rounds, capped at `n_max_limit`.
pub fn derive_bounds(
    link: &LinkConfig<f64>,
    noise: &NoiseParams<f64>,
    qos: &QosRequirement<f64>,
    overrides: &BoundsOverrides,
) -> Result<SearchBounds, OptimizeError> {
    link.validate()?;
    let r0 = link.r0_source_rate;
    if r0 < qos.r_min {
        return Err(OptimizeError::RateUnachievable { r0, r_min: qos.r_min });
    }
    let headroom = r0 / qos.r_min;
    let rounds_cap = headroom.log2().floor() as usize;
    let n_link_distill_max = overrides.n_link_distill_max.unwrap_or(rounds_cap);
    let n_e2e_distill_max = overrides.n_e2e_distill_max.unwrap_or(rounds_cap);

    let n_max = match overrides.n_max {
        Some(n) => n,
        None => {
            let limit = overrides.n_max_limit.unwrap_or(DEFAULT_N_MAX_LIMIT);
            derive_n_max(link, noise, qos, n_link_distill_max, n_e2e_distill_max, limit)?
        }
    };

    let bounds = SearchBounds {
        n_max,
        d_min: overrides.d_min.unwrap_or(0.0),
        d_max: overrides.d_max.unwrap_or(link.l0_attenuation_length * headroom.ln()),
        d_coarse_step: overrides.d_coarse_step.unwrap_or(DEFAULT_D_COARSE_STEP),
        d_refine_step: overrides.d_refine_step.unwrap_or(DEFAULT_D_REFINE_STEP),
        n_link_distill_max,
        n_e2e_distill_max,
    };
    bounds.validate()?;
    Ok(bounds)
}

fn best_reachable(f0: Fidelity<f64>, rounds: usize, noise: &NoiseParams<f64>) -> Fidelity<f64> {
    let trace = match distill_rounds_partial(rounds, f0, noise) {
        Ok(t) => t,
        Err((t, _)) => t,
    };
    trace
        .per_round_fidelity
        .iter()
        .copied()
        .fold(f0, |best, f| if f.value() > best.value() { f } else { best })
}

fn derive_n_max(
    link: &LinkConfig<f64>,
    noise: &NoiseParams<f64>,
    qos: &QosRequirement<f64>,
    link_rounds: usize,
    e2e_rounds: usize,
    limit: usize,
) -> Result<usize, OptimizeError> {
    let limit = limit.max(1);
    let f_link = best_reachable(link.f0_initial_fidelity, link_rounds, noise);
    for n in 1..=limit {
        let f_e2e = swap_chain_fidelity(f_link, n, noise)?;
        if best_reachable(f_e2e, e2e_rounds, noise).value() < qos.f_min.value() {
            return Ok(n);
        }
    }
    Ok(limit)
}
