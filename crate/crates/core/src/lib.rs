//! Sampling-based model predictive control that plans against a particle
//! belief over an unknown geometric parameter instead of a point estimate.
//!
//! The pieces, bottom up:
//!
//! * [`risk`]: weighted empirical value-at-risk and two conditional
//!   value-at-risk estimators over finite sample sets.
//! * [`belief`]: a static-parameter particle filter (likelihood reweighting,
//!   systematic resampling, weighted draws).
//! * [`system`]: the dynamics/cost/safety contract a plant must satisfy, and
//!   the planar slot-insertion testbed that implements it.
//! * [`controller`]: the path-integral solver. Each candidate control
//!   sequence is rolled out against particles drawn from the belief and is
//!   scored by expected cost plus a cost-CVaR term plus a penalty on the
//!   CVaR of the negated trajectory safety margin. A chance-constrained
//!   variant penalizing the violating-particle fraction is included for
//!   comparison.
//! * [`rng`]: counter-style stream derivation so every random draw is keyed
//!   by position in the computation, keeping results independent of
//!   scheduling.
//!
//! All numeric code is generic over [`Real`]; the aliases below fix `f64`,
//! which is what the shipped harness uses.

pub mod belief;
pub mod controller;
pub mod risk;
pub mod rng;
pub mod scalar;
pub mod system;

pub use rng::StreamKey;
pub use scalar::Real;

/// `f64` instantiations of the library types.
pub type SampleSet = risk::SampleSet<f64>;
pub type ConfidenceLevel = risk::ConfidenceLevel<f64>;
pub type LatentParam = belief::LatentParam<f64>;
pub type ParticleBelief = belief::ParticleBelief<f64>;
pub type ControlSequence = controller::ControlSequence<f64>;
pub type MppiConfig = controller::MppiConfig<f64>;
pub type RiskParams = controller::RiskParams<f64>;
pub type ChanceParams = controller::ChanceParams<f64>;
pub type SolveOutcome = controller::SolveOutcome<f64>;
pub type CcSolveOutcome = controller::CcSolveOutcome<f64>;
pub type SlotConfig = system::slot2d::SlotConfig<f64>;
pub type SlotSystem = system::slot2d::SlotSystem<f64>;
pub type SlotState = system::slot2d::SlotState<f64>;
