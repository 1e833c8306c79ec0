use serde::Serialize;

use super::{DesignConfig, DesignOutcome, Regime};
use crate::error::{Error, Result};
use crate::game_core::{social_optimum, social_welfare, tie, Mechanism, PaymentSchedule, Scenario, TypeDistribution, TypedFlow};
use crate::numerics::{bisect, maximize};
use crate::Real;

/// Proportional schedule making `target` an equilibrium among mass `b`.
pub fn side_payment_schedule<S: Real>(target: S, b: S, c_h: S) -> Result<PaymentSchedule<S>> {
    PaymentSchedule::proportional(target, b, c_h)
}

/// Largest `H` load at which a user of valuation `theta` still gets a
/// nonnegative payoff under full participation: the root of
/// `theta Q(x, 1) - x c_H`, or 1 if that never turns negative.
pub fn ir_bound<S: Real>(s: &Scenario<S>, theta: S, tol: S) -> S {
    let c = s.c_h();
    let f = |x: S| theta * s.value2(x, S::one()) - x * c;
    if f(S::one()) >= S::zero() {
        return S::one();
    }
    if f(S::zero()) <= S::zero() {
        return S::zero();
    }
    bisect(f, S::zero(), S::one(), tol).unwrap_or(S::zero())
}

/// The candidate targets the side-payment designer compares.
#[derive(Debug, Clone, Serialize)]
pub struct SidePaymentAnalysis<S> {
    pub x_opt: S,
    pub sw_opt: S,
    pub x_ir: S,
    pub sw_ir: S,
    /// Best target when only the high-valuation atom participates, if that
    /// outcome is consistent (low types would not join).
    pub half: Option<(S, S)>,
    pub half_mass: S,
}

pub(crate) fn require_two_path_discrete<S: Real>(s: &Scenario<S>, what: &str) -> Result<()> {
    if matches!(s.types, TypeDistribution::UniformContinuous) {
        return Err(Error::Unsupported(format!(
            "{what}: continuous valuations are handled by the continuous designers"
        )));
    }
    if s.k() != 2 {
        return Err(Error::Unsupported(format!("{what}: two paths required; use the multi-path designers")));
    }
    if !s.is_constant_cost() {
        return Err(Error::Unsupported(format!("{what}: traffic-dependent costs use linear_cost_design")));
    }
    Ok(())
}

pub fn side_payment_analysis<S: Real>(s: &Scenario<S>, cfg: &DesignConfig<S>) -> Result<SidePaymentAnalysis<S>> {
    require_two_path_discrete(s, "side payment")?;
    let (opt, sw_opt) = social_optimum(s)?;
    let x_opt = opt[1];
    let c = s.c_h();
    let theta0 = s.theta0();
    let full = |x: S| theta0 * s.value2(x, S::one()) - x * c;
    let (theta1, theta2, eta) = match s.types {
        TypeDistribution::TwoType { theta1, theta2, eta } => (theta1, theta2, eta),
        TypeDistribution::Homogeneous { theta } => (theta, theta, S::zero()),
        TypeDistribution::UniformContinuous => unreachable!(),
    };
    let x_ir = ir_bound(s, theta1, cfg.refine_tol);
    let x_ir_eff = x_ir.min(x_opt);
    let half_mass = S::one() - eta;
    let half = if eta > S::zero() && half_mass > S::zero() {
        let hi = if s.is_symmetric() { half_mass / S::lit(2.0) } else { half_mass };
        let f = |x: S| half_mass * theta2 * s.value2(x, half_mass) - x * c;
        let (x, v) = maximize(f, S::zero(), hi, 256, cfg.refine_tol, tie(f(S::zero())));
        // Low types must not want to join at this target.
        let pay = if x > S::zero() { x * c / half_mass } else { S::zero() };
        let low = theta1 * s.value2(x, half_mass) - pay;
        (low <= S::zero() && x < half_mass).then_some((x, v))
    } else {
        None
    };
    Ok(SidePaymentAnalysis { x_opt, sw_opt, x_ir, sw_ir: full(x_ir_eff), half, half_mass })
}

pub(crate) fn payment_outcome<S: Real>(
    s: &Scenario<S>,
    target: S,
    typed: TypedFlow<S>,
    b: S,
    regime: Regime,
    predicted: S,
    cfg: &DesignConfig<S>,
) -> Result<DesignOutcome<S>> {
    let mechanism = if target > S::zero() {
        Mechanism::SidePayment { schedule: side_payment_schedule(target, b, s.c_h())?, participation_b: b }
    } else if b == S::one() {
        Mechanism::NoIncentive
    } else {
        return Err(Error::Degenerate("partial participation with nobody on H".into()));
    };
    let sw = social_welfare(s, &mechanism, &typed)?;
    Ok(DesignOutcome {
        mechanism,
        regime,
        target_flow: typed.loads(),
        target_typed: Some(typed),
        predicted_sw: predicted,
        sw_at_design: sw,
        participation_b: b,
        eps_mech: cfg.eps_mech,
        g_max: None,
    })
}

/// Budget-balanced side payment maximizing equilibrium welfare, choosing
/// between the optimum, the largest target low types accept, and a target
/// that drops low types.
pub fn design_side_payment<S: Real>(s: &Scenario<S>, cfg: &DesignConfig<S>) -> Result<DesignOutcome<S>> {
    let an = side_payment_analysis(s, cfg)?;
    let guard = cfg.refine_tol * S::lit(10.0);
    if matches!(s.types, TypeDistribution::Homogeneous { .. }) || an.x_opt <= an.x_ir + guard {
        let typed = TypedFlow::two_path(s, an.x_opt)?;
        return payment_outcome(s, an.x_opt, typed, S::one(), Regime::SocialOptimum, an.sw_opt, cfg);
    }
    match an.half {
        Some((x, v)) if v > an.sw_ir + tie(v) => {
            let typed = TypedFlow::new(vec![
                vec![S::zero(), S::zero()],
                vec![an.half_mass - x, x],
            ]);
            payment_outcome(s, x, typed, an.half_mass, Regime::HalfParticipation, v, cfg)
        }
        _ => {
            let typed = TypedFlow::two_path(s, an.x_ir)?;
            payment_outcome(s, an.x_ir, typed, S::one(), Regime::FullParticipation, an.sw_ir, cfg)
        }
    }
}
