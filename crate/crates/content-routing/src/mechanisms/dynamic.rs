//! Repeated collection with discounted information pools.

use serde::{Deserialize, Serialize};

use super::{DesignConfig, DesignOutcome, Regime};
use crate::content_model::{dynamic_stationary, DynamicContentState};
use crate::error::{Error, Result};
use crate::game_core::Mechanism;
use crate::numerics::bisect;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicParams<S> {
    pub total_items: S,
    pub users: S,
    pub phi: S,
    pub gamma: S,
    pub c_h: S,
    /// Common valuation of all users.
    pub theta: S,
}

impl<S: Real> DynamicParams<S> {
    pub fn new(total_items: S, users: S, phi: S, gamma: S, c_h: S) -> Result<Self> {
        let p = Self { total_items, users, phi, gamma, c_h, theta: S::lit(0.5) };
        p.state()?;
        if !(c_h >= S::zero()) {
            return Err(Error::InvalidScenario("c_H must be nonnegative".into()));
        }
        Ok(p)
    }

    pub fn with_theta(mut self, theta: S) -> Self {
        self.theta = theta;
        self
    }

    /// Empty pools for these parameters.
    pub fn state(&self) -> Result<DynamicContentState<S>> {
        DynamicContentState::new(self.total_items, self.users, self.phi, self.gamma)
    }

    pub fn r(&self) -> S {
        (self.users * (-S::lit(2.0) * self.phi / self.total_items).ln_1p()).exp()
    }
}

/// Per-period welfare once the pools have settled under split `x`.
pub fn dynamic_stationary_sw<S: Real>(p: &DynamicParams<S>, x: S) -> Result<S> {
    let (qh, ql) = dynamic_stationary(&p.state()?, x);
    Ok(p.theta * (qh + ql) - x * p.c_h)
}

pub fn dynamic_no_incentive_sw<S: Real>(p: &DynamicParams<S>) -> Result<S> {
    dynamic_stationary_sw(p, S::zero())
}

/// Marginal welfare of moving users to `H` in a single period, evaluated
/// at the stationary pools of split `x`, minus the cost.
fn marginal<S: Real>(p: &DynamicParams<S>, x: S) -> S {
    let r = p.r();
    let g = p.gamma;
    let h = p.total_items / S::lit(2.0);
    let ratio = |e: S| {
        let re = r.powf(e);
        re / (S::one() - g * re)
    };
    p.theta * h * (S::one() - g) * r.ln() * (ratio(S::one() - x) - ratio(x)) - p.c_h
}

/// Stationary split a per-period planner settles on, and its welfare.
pub fn dynamic_stationary_optimum<S: Real>(p: &DynamicParams<S>, cfg: &DesignConfig<S>) -> Result<(S, S)> {
    let half = S::lit(0.5);
    let x = if p.c_h == S::zero() {
        half
    } else if marginal(p, S::zero()) <= S::zero() {
        S::zero()
    } else {
        bisect(|x| marginal(p, x), S::zero(), half, cfg.refine_tol)?
    };
    Ok((x, dynamic_stationary_sw(p, x)?))
}

/// Restrict the stationary `L` pool so that half the users take `H`.
pub fn design_dynamic_content_restriction<S: Real>(p: &DynamicParams<S>, cfg: &DesignConfig<S>) -> Result<DesignOutcome<S>> {
    let state = p.state()?;
    let half = S::lit(0.5);
    let r = p.r();
    let sr = r.sqrt();
    let g = p.gamma;
    let n = p.total_items;
    let theta = p.theta;
    let threshold = theta * n * ((S::one() - sr) / (S::one() - g * sr) - (S::one() - r) / (S::lit(2.0) * (S::one() - g * r)));
    let (qh, ql) = dynamic_stationary(&state, half);
    let total = qh + ql;
    let outcome = |a: S, x: S, regime, predicted: S, at: S| DesignOutcome {
        mechanism: Mechanism::ContentRestriction { a: vec![a, S::one()] },
        regime,
        target_flow: vec![S::one() - x, x],
        target_typed: None,
        predicted_sw: predicted,
        sw_at_design: at,
        participation_b: S::one(),
        eps_mech: cfg.eps_mech,
        g_max: None,
    };
    if p.c_h < threshold {
        let a_bar = S::one() - p.c_h / (theta * total);
        let a = (a_bar - cfg.eps_mech.min(a_bar / S::lit(2.0))).max(S::zero());
        let predicted = theta * total - p.c_h;
        let at = half * (theta * total - p.c_h) + half * a * theta * total;
        return Ok(outcome(a, half, Regime::PathDiversity, predicted, at));
    }
    let sw = dynamic_no_incentive_sw(p)?;
    Ok(outcome(S::one(), S::zero(), Regime::WeakRestriction, sw, sw))
}
