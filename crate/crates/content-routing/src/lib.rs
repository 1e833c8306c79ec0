//! Content routing game: non-atomic users split between a cheap and a costly
//! path, and the information they collect is a public good. The crate covers
//! coverage models, equilibria, incentive mechanisms (side payments, content
//! restriction, both combined), flow dynamics and price-of-anarchy probes.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the `f64`
//! aliases below are what the CLI and tests use.

pub mod content_model;
pub mod dynamics;
pub mod error;
pub mod game_core;
pub mod mechanisms;
pub mod numerics;
pub mod oracle;
pub mod poa;
mod real;

pub use error::{Error, Result};
pub use real::Real;

pub use content_model::{
    dynamic_stationary, dynamic_step, q1_derivative, q1_eval, q_multi, q_total, ContentFunction,
    DynamicContentState, OverlapSegment, Slope,
};
pub use game_core::{
    classify_stability, equilibrium_no_incentive, payoff, social_optimum, social_welfare,
    verify_equilibrium, CostModel, EquilibriumReport, Mechanism, PathNetwork, PaymentSchedule,
    Scenario, Stability, Tolerances, TypeDistribution, TypedFlow,
};
pub use mechanisms::{DesignConfig, DesignOutcome, Regime, RestrictionThresholds};

/// `f64` instantiations.
pub type ContentFunctionF64 = ContentFunction<f64>;
pub type ScenarioF64 = Scenario<f64>;
pub type MechanismF64 = Mechanism<f64>;
pub type DesignOutcomeF64 = DesignOutcome<f64>;
pub type EquilibriumReportF64 = EquilibriumReport<f64>;
pub type TypedFlowF64 = TypedFlow<f64>;

/// `f32` instantiations, for memory-bound sweeps where 1e-6 accuracy is enough.
pub type ScenarioF32 = Scenario<f32>;
pub type ContentFunctionF32 = ContentFunction<f32>;
