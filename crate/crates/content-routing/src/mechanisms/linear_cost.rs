//! Two paths whose per-user cost grows linearly with their own load.

use serde::Serialize;

use super::restriction::{deepen, restricted_gap, stable_root};
use super::{DesignConfig, DesignOutcome, Regime};
use crate::error::{Error, Result};
use crate::game_core::{
    linear_cost_split, plain_welfare, social_optimum, social_welfare, tie, CostModel, Mechanism, PaymentSchedule,
    Scenario, TypeDistribution, TypedFlow,
};
use crate::numerics::{bisect, maximize};
use crate::Real;

/// Region of `Δc = c_H - c_L`; boundaries within this distance report both
/// neighbours.
const REGION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearRegion<S> {
    /// `A1..A7` indices; two when `Δc` sits on a boundary.
    pub regions: Vec<u8>,
    /// The five finite boundaries, in increasing region order.
    pub bounds: [S; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearCostDesign<S> {
    pub delta_c: S,
    pub delta_a_tilde: S,
    pub region: LinearRegion<S>,
    pub x_ne: S,
    pub x_opt: S,
    pub side_payment: DesignOutcome<S>,
    pub restriction: DesignOutcome<S>,
}

fn linear_params<S: Real>(s: &Scenario<S>) -> Result<(S, S, S, S, S)> {
    let CostModel::Linear { c_l, b_l, c_h, b_h } = s.cost_model else {
        return Err(Error::Unsupported("linear_cost_design needs the linear cost model".into()));
    };
    let TypeDistribution::Homogeneous { theta } = s.types else {
        return Err(Error::Unsupported("linear_cost_design needs a single valuation".into()));
    };
    if s.k() != 2 {
        return Err(Error::Unsupported("linear costs are defined for two paths".into()));
    }
    Ok((c_l, b_l, c_h, b_h, theta))
}

fn dq<S: Real>(s: &Scenario<S>, x: S) -> S {
    s.content.slope(x).mid()
}

/// The cost difference at which the unpriced split is already optimal.
/// Zero when both paths congest equally.
pub fn delta_a_tilde<S: Real>(s: &Scenario<S>, tol: S) -> Result<S> {
    let (_, b_l, _, b_h, theta) = linear_params(s)?;
    let slope = b_h + b_l;
    if b_l == b_h || slope == S::zero() {
        return Ok(S::zero());
    }
    let f = |dc: S| {
        let x = ((b_l - dc) / slope).max(S::zero()).min(S::one());
        theta * dq(s, x) - theta * dq(s, S::one() - x) + dc
    };
    bisect(f, -b_h, b_l, tol)
}

fn classify<S: Real>(s: &Scenario<S>, dc: S, dat: S) -> Result<LinearRegion<S>> {
    let (_, b_l, _, b_h, theta) = linear_params(s)?;
    let spread = theta * (dq(s, S::zero()) - dq(s, S::one()));
    let two = S::lit(2.0);
    let bounds = [-spread - two * b_h, -b_h, dat, b_l, spread + two * b_l];
    let tol = S::lit(REGION_TOL);
    if (dc - dat).abs() <= tol {
        return Ok(LinearRegion { regions: vec![4], bounds });
    }
    // (region, lo, hi) with the point region A4 handled above.
    let ranges = [
        (1u8, S::neg_infinity(), bounds[0]),
        (2, bounds[0], bounds[1]),
        (3, bounds[1], bounds[2]),
        (5, bounds[2], bounds[3]),
        (6, bounds[3], bounds[4]),
        (7, bounds[4], S::infinity()),
    ];
    let mut regions: Vec<u8> = ranges
        .iter()
        .filter(|&&(_, lo, hi)| lo < hi && dc >= lo - tol && dc <= hi + tol)
        .map(|&(r, _, _)| r)
        .collect();
    if regions.is_empty() {
        // Empty neighbours (e.g. b_L = b_H = 0) collapse onto one point.
        regions = ranges.iter().filter(|&&(_, lo, _)| dc >= lo - tol).map(|&(r, _, _)| r).last().into_iter().collect();
    }
    Ok(LinearRegion { regions, bounds })
}

fn outcome<S: Real>(
    s: &Scenario<S>,
    mechanism: Mechanism<S>,
    x: S,
    regime: Regime,
    predicted: S,
    cfg: &DesignConfig<S>,
) -> Result<DesignOutcome<S>> {
    let typed = TypedFlow::two_path(s, x)?;
    let sw = social_welfare(s, &mechanism, &typed)?;
    Ok(DesignOutcome {
        mechanism,
        regime,
        target_flow: typed.loads(),
        target_typed: Some(typed),
        predicted_sw: predicted,
        sw_at_design: sw,
        participation_b: S::one(),
        eps_mech: cfg.eps_mech,
        g_max: None,
    })
}

/// `argmax theta Q(x, 1) + tilt x`; the symmetric peak exactly when untilted.
fn argmax_shifted<S: Real>(s: &Scenario<S>, theta: S, tilt: S, grid: usize, cfg: &DesignConfig<S>) -> S {
    if tilt == S::zero() {
        return s.q_peak().0;
    }
    let f = |x: S| theta * s.value2(x, S::one()) + tilt * x;
    maximize(f, S::zero(), S::one(), grid, cfg.refine_tol, tie(f(S::zero()))).0
}

/// Side payment and content restriction for the linear cost model.
pub fn linear_cost_design<S: Real>(s: &Scenario<S>, cfg: &DesignConfig<S>) -> Result<LinearCostDesign<S>> {
    let (c_l, b_l, c_h, b_h, theta) = linear_params(s)?;
    let dc = c_h - c_l;
    let dat = delta_a_tilde(s, cfg.refine_tol)?;
    let region = classify(s, dc, dat)?;
    let label = Regime::Linear(region.regions.clone());
    let x_ne = linear_cost_split(c_l, b_l, c_h, b_h);
    let (opt, _) = social_optimum(s)?;
    let x_opt = opt[1];
    let sw_ne = plain_welfare(s, &[S::one() - x_ne, x_ne]);
    let slope_sum = b_h + b_l;

    // Payments: charge L users g_bar at the optimum, tilted so that the
    // excess side of the optimum is always penalised.
    let g_bar = dc * x_opt - b_l * x_opt + slope_sum * x_opt * x_opt;
    let side_mech = if x_ne == x_opt || g_bar == S::zero() {
        Mechanism::NoIncentive
    } else {
        let slope = if x_ne > x_opt { g_bar / x_opt } else { g_bar / (x_opt - S::one()) };
        Mechanism::SidePayment {
            schedule: PaymentSchedule::Linear { target: x_opt, g_bar, slope },
            participation_b: S::one(),
        }
    };
    let side_x = if matches!(side_mech, Mechanism::NoIncentive) { x_ne } else { x_opt };
    let side_sw = plain_welfare(s, &[S::one() - side_x, side_x]);
    let side_payment = outcome(s, side_mech, side_x, label.clone(), side_sw, cfg)?;

    let q_low = s.q_low();
    let grid = cfg.grid_cells(S::one()).min(4096);
    let none = || outcome(s, Mechanism::NoIncentive, x_ne, label.clone(), sw_ne, cfg);
    let restriction = if x_ne > x_opt {
        // Restrict H: everyone ends up with the L payoff, best at x_{b_L}.
        let xb = argmax_shifted(s, theta, b_l, grid, cfg);
        let limit = theta * s.value2(xb, S::one()) - c_l - b_l * (S::one() - xb);
        let need = b_l - slope_sum * xb - dc;
        if need > S::zero() && limit > sw_ne + tie(sw_ne) {
            let a = S::one() - need / (theta * s.value2(xb, S::one()));
            let a_min = S::one() - (b_l - dc) / (theta * q_low);
            let a = deepen(a, a_min, cfg.eps_mech);
            let x = stable_root(|x| restricted_gap(s, S::one(), a, theta, x), S::zero(), xb, cfg.refine_tol);
            outcome(s, Mechanism::ContentRestriction { a: vec![S::one(), a] }, x, label.clone(), limit, cfg)?
        } else {
            none()?
        }
    } else if x_ne < x_opt {
        // Restrict L: everyone ends up with the H payoff, best at x_{b_H}.
        let xb = argmax_shifted(s, theta, -b_h, grid, cfg);
        let limit = theta * s.value2(xb, S::one()) - b_h * xb - c_h;
        let need = dc + slope_sum * xb - b_l;
        if need > S::zero() && limit > sw_ne + tie(sw_ne) {
            let a = S::one() - need / (theta * s.value2(xb, S::one()));
            let a_min = S::one() - (dc + b_h) / (theta * q_low);
            let a = deepen(a, a_min, cfg.eps_mech);
            let x = stable_root(|x| restricted_gap(s, a, S::one(), theta, x), xb, S::one(), cfg.refine_tol);
            outcome(s, Mechanism::ContentRestriction { a: vec![a, S::one()] }, x, label.clone(), limit, cfg)?
        } else {
            none()?
        }
    } else {
        none()?
    };
    Ok(LinearCostDesign { delta_c: dc, delta_a_tilde: dat, region, x_ne, x_opt, side_payment, restriction })
}
