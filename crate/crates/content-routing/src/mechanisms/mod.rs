//! Incentive designers for every model variant.

mod combined;
mod continuous;
mod dynamic;
mod linear_cost;
mod multipath;
mod restriction;
mod side_payment;

use std::fmt;

use serde::{Serialize, Serializer};

pub use combined::{combined_debug_cases, combined_objective, design_combined, CombinedDebug};
pub use continuous::{
    continuous_restriction_welfare, continuous_side_welfare, design_continuous_content_restriction,
    design_continuous_side_payment,
};
pub use dynamic::{
    design_dynamic_content_restriction, dynamic_no_incentive_sw, dynamic_stationary_optimum,
    dynamic_stationary_sw, DynamicParams,
};
pub use linear_cost::{delta_a_tilde, linear_cost_design, LinearCostDesign, LinearRegion};
pub use multipath::{
    design_multipath_content_restriction, design_multipath_side_payment, multipath_thresholds,
    three_path_schedule,
};
pub use restriction::{design_content_restriction, restriction_thresholds};
pub use side_payment::{design_side_payment, ir_bound, side_payment_analysis, side_payment_schedule, SidePaymentAnalysis};

use crate::game_core::{Mechanism, TypedFlow};
use crate::Real;

/// Design knobs.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DesignConfig<S> {
    /// Offset in designs of the form `a = threshold - eps`.
    pub eps_mech: S,
    /// Unbounded payment levels are capped at this multiple of `c_H`.
    pub g_max_factor: S,
    /// Coarse grid used by the constrained searches.
    pub grid_step: S,
    /// Final accuracy of golden-section / bisection refinements.
    pub refine_tol: S,
}

impl<S: Real> Default for DesignConfig<S> {
    fn default() -> Self {
        Self {
            eps_mech: S::lit(1e-6),
            g_max_factor: S::lit(crate::game_core::G_MAX_FACTOR),
            grid_step: S::lit(1e-3),
            refine_tol: S::tol(1e-12, S::one()),
        }
    }
}

impl<S: Real> DesignConfig<S> {
    pub(crate) fn grid_cells(&self, width: S) -> usize {
        (width / self.grid_step).ceil().to_usize().unwrap_or(1).clamp(1, 10_000_000)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Regime {
    SocialOptimum,
    FullParticipation,
    HalfParticipation,
    PartialParticipation,
    StrongRestriction,
    MediumRestriction,
    LowerMediumRestriction,
    WeakRestriction,
    CombinedIr21,
    CombinedIr2,
    MultipathLowCost,
    MultipathMediumCost,
    MultipathHighCost,
    PathDiversity,
    /// Linear-cost regions `A1..A7`; two entries when exactly on a boundary.
    Linear(Vec<u8>),
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::SocialOptimum => "SocialOptimum",
            Self::FullParticipation => "FullParticipation",
            Self::HalfParticipation => "HalfParticipation",
            Self::PartialParticipation => "PartialParticipation",
            Self::StrongRestriction => "StrongRestriction",
            Self::MediumRestriction => "MediumRestriction",
            Self::LowerMediumRestriction => "LowerMediumRestriction",
            Self::WeakRestriction => "WeakRestriction",
            Self::CombinedIr21 => "Combined.IR21",
            Self::CombinedIr2 => "Combined.IR2",
            Self::MultipathLowCost => "MultipathLowCost",
            Self::MultipathMediumCost => "MultipathMediumCost",
            Self::MultipathHighCost => "MultipathHighCost",
            Self::PathDiversity => "PathDiversity",
            Self::Linear(r) => {
                let parts: Vec<String> = r.iter().map(|i| format!("A{i}")).collect();
                return f.write_str(&parts.join("|"));
            }
        };
        f.write_str(s)
    }
}

impl Serialize for Regime {
    fn serialize<Z: Serializer>(&self, z: Z) -> Result<Z::Ok, Z::Error> {
        z.serialize_str(&self.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignOutcome<S> {
    pub mechanism: Mechanism<S>,
    #[serde(rename = "regime_label")]
    pub regime: Regime,
    /// Aggregate load per path at the targeted equilibrium.
    pub target_flow: Vec<S>,
    /// Per-atom split, when the type distribution is discrete.
    pub target_typed: Option<TypedFlow<S>>,
    /// Limiting welfare (as `eps_mech -> 0` for perturbed designs).
    pub predicted_sw: S,
    /// Welfare at the target under the mechanism actually emitted.
    pub sw_at_design: S,
    pub participation_b: S,
    pub eps_mech: S,
    pub g_max: Option<S>,
}

impl<S: Real> DesignOutcome<S> {
    pub fn label(&self) -> String {
        self.regime.to_string()
    }
}

/// Restriction thresholds of the two-path model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestrictionThresholds<S> {
    /// `Q(0, 1)`.
    pub q_low: S,
    /// Peak two-path content (`Q(0.5, 1)` when symmetric).
    pub q_high: S,
    /// Per atom: below `a_low` the atom strictly prefers `H` even at `x = 1`.
    pub a_low: Vec<S>,
    /// Per atom: above `a_high` the atom strictly prefers `L` even at the peak.
    pub a_high: Vec<S>,
}
