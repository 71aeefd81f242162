use thiserror::Error;

/// Failures of the fidelity and rate formulas.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{what} = {value} is outside its domain ({expected})")]
    Domain {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// Distillation requires an input fidelity of at least 1/2.
    #[error("distillation round {round} has input fidelity {fidelity} < 0.5")]
    DistillationInfeasible { round: usize, fidelity: f64 },

    #[error("fixed-point iteration did not converge after {iterations} rounds (last iterate {last})")]
    NoConvergence { iterations: usize, last: f64 },
}

impl ModelError {
    pub(crate) fn domain(what: &'static str, value: f64, expected: &'static str) -> Self {
        ModelError::Domain { what, value, expected }
    }
}

pub type ModelResult<T> = Result<T, ModelError>;
