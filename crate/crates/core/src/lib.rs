//! Scalability planning for homogeneous linear quantum repeater chains.
//!
//! [`model`] holds the Werner-state fidelity algebra, [`chain`] composes it
//! into the rate and fidelity of a whole chain, [`optimizer`] finds the
//! longest chain meeting end-to-end rate and fidelity floors, and
//! [`oracle`] provides independent brute-force and Monte-Carlo checks.
//!
//! The model and chain types are generic over [`Scalar`] (`f32` or `f64`);
//! the aliases below fix the precision the optimizer works in.

pub mod chain;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod scalar;

pub use error::{ModelError, ModelResult};
pub use scalar::Scalar;

pub type Fidelity = model::Fidelity<f64>;
pub type NoiseParams = model::NoiseParams<f64>;
pub type DistillationTrace = model::DistillationTrace<f64>;
pub type LinkConfig = chain::LinkConfig<f64>;
pub type ChainDecision = chain::ChainDecision<f64>;
pub type QosRequirement = chain::QosRequirement<f64>;
pub type EvaluationResult = chain::EvaluationResult<f64>;

pub type Fidelity32 = model::Fidelity<f32>;
pub type NoiseParams32 = model::NoiseParams<f32>;
pub type LinkConfig32 = chain::LinkConfig<f32>;
pub type ChainDecision32 = chain::ChainDecision<f32>;
pub type QosRequirement32 = chain::QosRequirement<f32>;
