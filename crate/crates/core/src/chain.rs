//! Evaluation of a homogeneous linear repeater chain: link-level
//! distillation, swapping across all links, end-to-end distillation, and the
//! QoS check.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, ModelResult};
use crate::model::{
    distill_n_rounds, distill_rounds_partial, swap_chain_fidelity, DistillationTrace, Fidelity, NoiseParams,
    DISTILL_MIN_FIDELITY,
};
use crate::scalar::Scalar;

/// Physics of a single link. `d_separation` is only a default for
/// [`link_rate`]; [`evaluate`] takes the separation from the decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig<T = f64> {
    pub f0_initial_fidelity: Fidelity<T>,
    /// Raw pair generation attempts per unit time.
    pub r0_source_rate: T,
    /// Fiber attenuation length in km.
    pub l0_attenuation_length: T,
    /// Node separation in km.
    pub d_separation: T,
}

impl<T: Scalar> LinkConfig<T> {
    pub fn new(f0: Fidelity<T>, r0: T, l0: T, d: T) -> ModelResult<Self> {
        let link = Self {
            f0_initial_fidelity: f0,
            r0_source_rate: r0,
            l0_attenuation_length: l0,
            d_separation: d,
        };
        link.validate()?;
        Ok(link)
    }

    pub fn validate(&self) -> ModelResult<()> {
        Fidelity::new(self.f0_initial_fidelity.value())?;
        if !(self.r0_source_rate > T::zero() && self.r0_source_rate.is_finite()) {
            return Err(ModelError::domain(
                "r0_source_rate",
                self.r0_source_rate.as_f64(),
                "> 0",
            ));
        }
        if !(self.l0_attenuation_length > T::zero() && self.l0_attenuation_length.is_finite()) {
            return Err(ModelError::domain(
                "l0_attenuation_length",
                self.l0_attenuation_length.as_f64(),
                "> 0",
            ));
        }
        check_separation(self.d_separation)
    }

    /// Probability a raw pair survives the fiber, `exp(-d / L0)`.
    pub fn transmission(&self, d: T) -> T {
        (-d / self.l0_attenuation_length).exp()
    }
}

impl<T: Scalar> Default for LinkConfig<T> {
    /// F0 = 0.99, R0 = 1e5, L0 = 0.542 km, d = 0.
    fn default() -> Self {
        Self {
            f0_initial_fidelity: Fidelity::new(T::lit(0.99)).expect("valid"),
            r0_source_rate: T::lit(1e5),
            l0_attenuation_length: T::lit(0.542),
            d_separation: T::zero(),
        }
    }
}

impl<T: Scalar> Default for NoiseParams<T> {
    /// P2 = eta = 0.99.
    fn default() -> Self {
        NoiseParams::new(T::lit(0.99), T::lit(0.99)).expect("valid")
    }
}

fn check_separation<T: Scalar>(d: T) -> ModelResult<()> {
    if d >= T::zero() && d.is_finite() {
        Ok(())
    } else {
        Err(ModelError::domain("d_separation", d.as_f64(), ">= 0"))
    }
}

/// A candidate chain: `n_links` links of length `d_separation` km, with
/// `n_link_distill` rounds on every link and `n_e2e_distill` rounds on the
/// end-to-end pair. The chain has `n_links - 1` repeaters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainDecision<T = f64> {
    pub n_links: usize,
    pub d_separation: T,
    pub n_link_distill: usize,
    pub n_e2e_distill: usize,
}

impl<T: Scalar> ChainDecision<T> {
    pub fn new(n_links: usize, d_separation: T, n_link_distill: usize, n_e2e_distill: usize) -> ModelResult<Self> {
        let decision = Self {
            n_links,
            d_separation,
            n_link_distill,
            n_e2e_distill,
        };
        decision.validate()?;
        Ok(decision)
    }

    pub fn validate(&self) -> ModelResult<()> {
        if self.n_links < 1 {
            return Err(ModelError::domain("n_links", 0.0, ">= 1"));
        }
        check_separation(self.d_separation)
    }

    pub fn repeaters(&self) -> usize {
        self.n_links - 1
    }

    /// Total chain length `n_links * d` in km.
    pub fn length_km(&self) -> T {
        T::from_count(self.n_links) * self.d_separation
    }
}

/// End-to-end QoS floors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QosRequirement<T = f64> {
    pub r_min: T,
    pub f_min: Fidelity<T>,
}

impl<T: Scalar> QosRequirement<T> {
    pub fn new(r_min: T, f_min: T) -> ModelResult<Self> {
        if !(r_min > T::zero() && r_min.is_finite()) {
            return Err(ModelError::domain("r_min", r_min.as_f64(), "> 0"));
        }
        Ok(Self {
            r_min,
            f_min: Fidelity::new(f_min)?,
        })
    }
}

impl<T: Scalar> Default for QosRequirement<T> {
    /// R_min = 1, F_min = 0.5.
    fn default() -> Self {
        Self::new(T::one(), T::lit(0.5)).expect("valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfeasibilityReason {
    None,
    RateBelowMin,
    FidelityBelowMin,
    DistillPreconditionViolated,
}

/// Outcome of evaluating one decision.
///
/// When a distillation round is infeasible, the fidelity fields hold the
/// last fidelity reached (the one that failed the precondition) and the
/// traces stop at that round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult<T = f64> {
    pub feasible: bool,
    pub e2e_fidelity: Fidelity<T>,
    pub e2e_rate: T,
    pub link_fidelity_after_distill: Fidelity<T>,
    pub link_rate_after_distill: T,
    pub objective_km: T,
    pub link_trace: DistillationTrace<T>,
    pub e2e_trace: DistillationTrace<T>,
    pub infeasibility_reason: InfeasibilityReason,
    /// Aggregate constraint violation; zero exactly when feasible.
    pub violation: T,
}

/// Fidelity of each link after `n_link_distill` rounds.
pub fn link_fidelity<T: Scalar>(
    n_link_distill: usize,
    f0: Fidelity<T>,
    noise: &NoiseParams<T>,
) -> ModelResult<Fidelity<T>> {
    Ok(distill_n_rounds(n_link_distill, f0, noise)?.final_fidelity())
}

/// Pair rate of one link after fiber loss and `n_link_distill` rounds, at
/// the link's own separation.
pub fn link_rate<T: Scalar>(link: &LinkConfig<T>, n_link_distill: usize, noise: &NoiseParams<T>) -> ModelResult<T> {
    let trace = distill_n_rounds(n_link_distill, link.f0_initial_fidelity, noise)?;
    let d = link.d_separation;
    Ok(link.r0_source_rate * link.transmission(d) * trace.rate_factor())
}

/// End-to-end fidelity right after swapping, before any end-to-end
/// distillation.
pub fn e2e_initial_fidelity<T: Scalar>(
    decision: &ChainDecision<T>,
    f0: Fidelity<T>,
    noise: &NoiseParams<T>,
) -> ModelResult<Fidelity<T>> {
    decision.validate()?;
    let f_link = link_fidelity(decision.n_link_distill, f0, noise)?;
    swap_chain_fidelity(f_link, decision.n_links, noise)
}

/// Evaluates `decision` against `qos`.
///
/// An infeasible distillation round marks the decision infeasible instead of
/// failing; errors are reserved for out-of-domain inputs.
pub fn evaluate<T: Scalar>(
    decision: &ChainDecision<T>,
    link: &LinkConfig<T>,
    noise: &NoiseParams<T>,
    qos: &QosRequirement<T>,
) -> ModelResult<EvaluationResult<T>> {
    decision.validate()?;
    link.validate()?;

    let objective_km = decision.length_km();
    let raw_rate = link.r0_source_rate * link.transmission(decision.d_separation);

    let link_trace = match distill_rounds_partial(decision.n_link_distill, link.f0_initial_fidelity, noise) {
        Ok(t) => t,
        Err((t, _)) => {
            let f = t.final_fidelity();
            let rate = raw_rate * t.rate_factor();
            let e2e_trace = distill_n_rounds(0, f, noise)?;
            return Ok(precondition_failure(f, rate, objective_km, t, e2e_trace));
        }
    };
    let f_link = link_trace.final_fidelity();
    let r_link = raw_rate * link_trace.rate_factor();

    let f_e2e_initial = swap_chain_fidelity(f_link, decision.n_links, noise)?;
    let e2e_trace = match distill_rounds_partial(decision.n_e2e_distill, f_e2e_initial, noise) {
        Ok(t) => t,
        Err((t, _)) => {
            let f = t.final_fidelity();
            let rate = r_link * t.rate_factor();
            let mut result = precondition_failure(f, rate, objective_km, link_trace, t);
            result.link_rate_after_distill = r_link;
            result.link_fidelity_after_distill = f_link;
            return Ok(result);
        }
    };
    let f_e2e = e2e_trace.final_fidelity();
    let r_e2e = r_link * e2e_trace.rate_factor();

    let rate_ok = r_e2e >= qos.r_min;
    let fidelity_ok = f_e2e.value() >= qos.f_min.value();
    let infeasibility_reason = match (rate_ok, fidelity_ok) {
        (true, true) => InfeasibilityReason::None,
        (false, _) => InfeasibilityReason::RateBelowMin,
        (true, false) => InfeasibilityReason::FidelityBelowMin,
    };

    let mut violation = T::zero();
    if !rate_ok {
        let floor = T::min_positive_value();
        violation = violation + (qos.r_min / r_e2e.max(floor)).ln();
    }
    if !fidelity_ok {
        violation = violation + (qos.f_min.value() - f_e2e.value());
    }

    Ok(EvaluationResult {
        feasible: rate_ok && fidelity_ok,
        e2e_fidelity: f_e2e,
        e2e_rate: r_e2e,
        link_fidelity_after_distill: f_link,
        link_rate_after_distill: r_link,
        objective_km,
        link_trace,
        e2e_trace,
        infeasibility_reason,
        violation,
    })
}

fn precondition_failure<T: Scalar>(
    f: Fidelity<T>,
    rate: T,
    objective_km: T,
    link_trace: DistillationTrace<T>,
    e2e_trace: DistillationTrace<T>,
) -> EvaluationResult<T> {
    // Ranked behind every QoS-only violation of comparable size.
    let violation = T::one() + (T::lit(DISTILL_MIN_FIDELITY) - f.value());
    EvaluationResult {
        feasible: false,
        e2e_fidelity: f,
        e2e_rate: rate,
        link_fidelity_after_distill: link_trace.final_fidelity(),
        link_rate_after_distill: rate,
        objective_km,
        link_trace,
        e2e_trace,
        infeasibility_reason: InfeasibilityReason::DistillPreconditionViolated,
        violation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fid(v: f64) -> Fidelity<f64> {
        Fidelity::new(v).unwrap()
    }

    fn decision(n: usize, d: f64, nl: usize, ne: usize) -> ChainDecision<f64> {
        ChainDecision::new(n, d, nl, ne).unwrap()
    }

    #[test]
    fn link_fidelity_examples() {
        let p = NoiseParams::perfect();
        assert_eq!(
            link_fidelity(0, fid(0.99), &NoiseParams::default()).unwrap().value(),
            0.99
        );
        assert_relative_eq!(
            link_fidelity(1, fid(0.7), &p).unwrap().value(),
            25.0 / 34.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            link_fidelity(2, fid(0.7), &p).unwrap().value(),
            0.773_170_731_707_317,
            epsilon = 1e-12
        );
    }

    #[test]
    fn link_rate_examples() {
        let p = NoiseParams::perfect();
        let mut link = LinkConfig::default();
        assert_eq!(link_rate(&link, 0, &p).unwrap(), 1e5);
        link.d_separation = 0.542;
        assert_relative_eq!(
            link_rate(&link, 0, &p).unwrap(),
            1e5 * (-1f64).exp(),
            max_relative = 1e-12
        );
        link.f0_initial_fidelity = fid(0.7);
        assert_relative_eq!(
            link_rate(&link, 1, &p).unwrap(),
            1e5 * (-1f64).exp() * 0.34,
            max_relative = 1e-12
        );
        assert_relative_eq!(link_rate(&link, 1, &p).unwrap(), 12_507.9, epsilon = 0.05);
    }

    #[test]
    fn e2e_initial_examples() {
        let p = NoiseParams::perfect();
        let noisy = NoiseParams::default();
        assert_eq!(
            e2e_initial_fidelity(&decision(1, 0.0, 0, 0), fid(0.9), &noisy)
                .unwrap()
                .value(),
            0.9
        );
        assert_relative_eq!(
            e2e_initial_fidelity(&decision(2, 0.0, 0, 0), fid(0.99), &noisy)
                .unwrap()
                .value(),
            0.95365,
            epsilon = 1e-5
        );
        assert_relative_eq!(
            e2e_initial_fidelity(&decision(1, 0.0, 1, 0), fid(0.7), &p)
                .unwrap()
                .value(),
            25.0 / 34.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn degenerate_chain_is_feasible() {
        let r = evaluate(
            &decision(1, 0.0, 0, 0),
            &LinkConfig::default(),
            &NoiseParams::default(),
            &QosRequirement::default(),
        )
        .unwrap();
        assert!(r.feasible);
        assert_eq!(r.e2e_fidelity.value(), 0.99);
        assert_eq!(r.e2e_rate, 1e5);
        assert_eq!(r.objective_km, 0.0);
        assert_eq!(r.violation, 0.0);
        assert_eq!(r.infeasibility_reason, InfeasibilityReason::None);
    }

    #[test]
    fn long_single_link_misses_rate() {
        let r = evaluate(
            &decision(1, 10.0, 0, 0),
            &LinkConfig::default(),
            &NoiseParams::default(),
            &QosRequirement::default(),
        )
        .unwrap();
        assert!(!r.feasible);
        assert_eq!(r.infeasibility_reason, InfeasibilityReason::RateBelowMin);
        assert_relative_eq!(r.e2e_rate, 1e5 * (-10.0f64 / 0.542).exp(), max_relative = 1e-12);
        assert!(r.e2e_rate < 1e-3 && r.e2e_rate > 9e-4);
        assert!(r.violation > 0.0);
    }

    #[test]
    fn low_fidelity_chain_misses_fidelity() {
        let link = LinkConfig::new(fid(0.6), 1e5, 0.542, 0.0).unwrap();
        let r = evaluate(
            &decision(3, 1.0, 0, 0),
            &link,
            &NoiseParams::perfect(),
            &QosRequirement::default(),
        )
        .unwrap();
        assert!(!r.feasible);
        assert_eq!(r.infeasibility_reason, InfeasibilityReason::FidelityBelowMin);
        assert_relative_eq!(
            r.e2e_fidelity.value(),
            0.25 + 0.75 * (1.4f64 / 3.0).powi(3),
            epsilon = 1e-15
        );
        assert_relative_eq!(r.e2e_fidelity.value(), 0.3262, epsilon = 1e-4);
    }

    #[test]
    fn precondition_failure_is_infeasible_not_error() {
        // Three links at 0.6 swap to ~0.326, below the distillation floor.
        let link = LinkConfig::new(fid(0.6), 1e5, 0.542, 0.0).unwrap();
        let r = evaluate(
            &decision(3, 0.0, 0, 2),
            &link,
            &NoiseParams::perfect(),
            &QosRequirement::default(),
        )
        .unwrap();
        assert!(!r.feasible);
        assert_eq!(r.infeasibility_reason, InfeasibilityReason::DistillPreconditionViolated);
        assert_eq!(r.e2e_trace.rounds(), 0);
        assert!(r.violation >= 1.0);

        let bad_link = LinkConfig::new(fid(0.45), 1e5, 0.542, 0.0).unwrap();
        let r = evaluate(
            &decision(1, 0.0, 1, 0),
            &bad_link,
            &NoiseParams::perfect(),
            &QosRequirement::default(),
        )
        .unwrap();
        assert_eq!(r.infeasibility_reason, InfeasibilityReason::DistillPreconditionViolated);
    }

    #[test]
    fn invalid_inputs_error() {
        let link = LinkConfig::default();
        let bad = ChainDecision {
            n_links: 0,
            d_separation: 1.0,
            n_link_distill: 0,
            n_e2e_distill: 0,
        };
        assert!(evaluate(&bad, &link, &NoiseParams::default(), &QosRequirement::default()).is_err());
        let bad = ChainDecision {
            n_links: 2,
            d_separation: -1.0,
            n_link_distill: 0,
            n_e2e_distill: 0,
        };
        assert!(evaluate(&bad, &link, &NoiseParams::default(), &QosRequirement::default()).is_err());
        assert!(LinkConfig::new(fid(0.9), 0.0, 0.5, 0.0).is_err());
        assert!(LinkConfig::new(fid(0.9), 1.0, -0.5, 0.0).is_err());
        assert!(QosRequirement::new(0.0, 0.5).is_err());
        assert!(QosRequirement::new(1.0, 0.1).is_err());
    }

    #[test]
    fn repeaters_are_links_minus_one() {
        assert_eq!(decision(1, 0.0, 0, 0).repeaters(), 0);
        assert_eq!(decision(22, 6.24, 0, 0).repeaters(), 21);
    }
}
