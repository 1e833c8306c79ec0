//! Three parallel paths with costs `(0, c_H/2, c_H)`.

use super::restriction::stable_root;
use super::{DesignConfig, DesignOutcome, Regime};
use crate::error::{Error, Result};
use crate::game_core::{social_optimum, social_welfare, tie, Mechanism, PaymentSchedule, Scenario, TypeDistribution, TypedFlow};
use crate::Real;

fn require_three_path<S: Real>(s: &Scenario<S>) -> Result<S> {
    if s.k() != 3 {
        return Err(Error::Unsupported(format!("closed forms exist for three paths only, got {}", s.k())));
    }
    if !s.is_constant_cost() {
        return Err(Error::Unsupported("multi-path designers need constant costs".into()));
    }
    match s.types {
        TypeDistribution::Homogeneous { theta } => Ok(theta),
        _ => Err(Error::Unsupported("multi-path designers need a single valuation".into())),
    }
}

/// Payments on the first two paths that make `target` the unique equilibrium;
/// the third path is refunded whatever balances the budget.
pub fn three_path_schedule<S: Real>(target: [S; 3], c2: S, c3: S) -> Result<PaymentSchedule<S>> {
    if target.iter().any(|&t| !(t > S::zero())) {
        return Err(Error::Degenerate(format!("three-path target {target:?} leaves a path empty")));
    }
    Ok(PaymentSchedule::ThreePath { target, c2, c3 })
}

pub fn design_multipath_side_payment<S: Real>(
    s: &Scenario<S>,
    cfg: &DesignConfig<S>,
) -> Result<(PaymentSchedule<S>, DesignOutcome<S>)> {
    require_three_path(s)?;
    let (opt, sw) = social_optimum(s)?;
    let costs = &s.network.costs;
    let schedule = three_path_schedule([opt[0], opt[1], opt[2]], costs[1], costs[2])?;
    let mechanism = Mechanism::SidePayment { schedule: schedule.clone(), participation_b: S::one() };
    let typed = TypedFlow::proportional(s, &opt)?;
    let sw_at = social_welfare(s, &mechanism, &typed)?;
    let outcome = DesignOutcome {
        mechanism,
        regime: Regime::SocialOptimum,
        target_flow: opt,
        target_typed: Some(typed),
        predicted_sw: sw,
        sw_at_design: sw_at,
        participation_b: S::one(),
        eps_mech: cfg.eps_mech,
        g_max: None,
    };
    Ok((schedule, outcome))
}

/// `(low, high)` cost thresholds: below `low` all three paths are worth
/// using, above `high` none beyond the cheapest.
pub fn multipath_thresholds<S: Real>(s: &Scenario<S>) -> Result<(S, S)> {
    let theta = require_three_path(s)?;
    let q = |x: f64| s.content.eval(S::lit(x));
    let two = S::lit(2.0);
    let third = S::one() / S::lit(3.0);
    let q3 = s.content.eval(third);
    Ok((
        two * theta * (S::lit(3.0) * q3 - two * q(0.5)),
        two * theta * (two * q(0.5) - q(1.0)),
    ))
}

/// Welfare limits of the three regimes: all paths, two cheapest, cheapest only.
fn regime_values<S: Real>(s: &Scenario<S>, theta: S) -> [S; 3] {
    let third = S::one() / S::lit(3.0);
    let q0 = s.overlap_value();
    let c = &s.network.costs;
    [
        theta * (S::lit(3.0) * s.content.eval(third) + q0) - c[2],
        theta * (S::lit(2.0) * s.content.eval(S::lit(0.5)) + q0) - c[1],
        theta * (s.content.eval(S::one()) + q0),
    ]
}

pub fn design_multipath_content_restriction<S: Real>(s: &Scenario<S>, cfg: &DesignConfig<S>) -> Result<DesignOutcome<S>> {
    let theta = require_three_path(s)?;
    let c = s.network.costs.clone();
    let third = S::one() / S::lit(3.0);
    let half = S::lit(0.5);
    let emit = |a: Vec<S>, loads: Vec<S>, regime: Regime, predicted: S| -> Result<DesignOutcome<S>> {
        let mechanism = Mechanism::ContentRestriction { a };
        let typed = TypedFlow::proportional(s, &loads)?;
        let sw = social_welfare(s, &mechanism, &typed)?;
        Ok(DesignOutcome {
            mechanism,
            regime,
            target_flow: loads,
            target_typed: Some(typed),
            predicted_sw: predicted,
            sw_at_design: sw,
            participation_b: S::one(),
            eps_mech: cfg.eps_mech,
            g_max: None,
        })
    };
    let vals = regime_values(s, theta);
    if c[2] == S::zero() {
        return emit(vec![S::one(); 3], vec![third; 3], Regime::MultipathLowCost, vals[0]);
    }
    let v = |l: &[S]| theta * s.value(l);
    // Ties go to the lighter restriction: a deeper one buys nothing and
    // gives up its eps margin.
    let beats = |a: S, b: S| a > b + tie(b);
    let best = if beats(vals[0], vals[1]) && beats(vals[0], vals[2]) {
        0
    } else if beats(vals[1], vals[2]) {
        1
    } else {
        2
    };
    match best {
        0 => {
            // Equilibria fill the level set {theta Q = lambda}; aim for the
            // point with x2 = 1/3 on its stable side (x3 > 1/3).
            let top = v(&[third, third, third]);
            let edge = v(&[S::zero(), third, S::one() - third]);
            let eps = (cfg.eps_mech * top).min((top - edge) / S::lit(2.0));
            let lambda = top - eps;
            let a1 = (S::one() - c[2] / lambda).max(S::zero());
            let a2 = (S::one() - (c[2] - c[1]) / lambda).max(S::zero());
            let gap = |x3: S| v(&[S::one() - third - x3, third, x3]) - lambda;
            let x3 = stable_root(gap, third, S::one() - third, cfg.refine_tol);
            let loads = vec![S::one() - third - x3, third, x3];
            emit(vec![a1, a2, S::one()], loads, Regime::MultipathLowCost, vals[0])
        }
        1 => {
            let top = v(&[half, half, S::zero()]);
            let edge = v(&[S::zero(), S::one(), S::zero()]);
            let eps = (cfg.eps_mech * top).min((top - edge) / S::lit(2.0));
            let lambda = top - eps;
            let a1 = (S::one() - c[1] / lambda).max(S::zero());
            let gap = |x2: S| v(&[S::one() - x2, x2, S::zero()]) - lambda;
            let x2 = stable_root(gap, half, S::one(), cfg.refine_tol);
            emit(vec![a1, S::one(), S::one()], vec![S::one() - x2, x2, S::zero()], Regime::MultipathMediumCost, vals[1])
        }
        _ => emit(vec![S::one(); 3], vec![S::one(), S::zero(), S::zero()], Regime::MultipathHighCost, vals[2]),
    }
}
