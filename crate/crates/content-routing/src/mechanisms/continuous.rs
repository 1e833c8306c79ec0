//! Valuations uniform on `[0, 1]`.

use super::{DesignConfig, DesignOutcome, Regime};
use crate::error::{Error, Result};
use crate::game_core::{tie, Mechanism, PaymentSchedule, Scenario, TypeDistribution};
use crate::numerics::{bisect, maximize};
use crate::Real;

fn require_continuous<S: Real>(s: &Scenario<S>) -> Result<()> {
    if !matches!(s.types, TypeDistribution::UniformContinuous) {
        return Err(Error::Unsupported("continuous designers need uniform valuations".into()));
    }
    if s.k() != 2 || !s.is_constant_cost() {
        return Err(Error::Unsupported("continuous designers need two constant-cost paths".into()));
    }
    Ok(())
}

/// With the top `b` of users participating, the `H` load at which the
/// marginal participant breaks even, and the resulting welfare. `None` when
/// no such load exists in `[0, b]`.
pub fn continuous_side_welfare<S: Real>(s: &Scenario<S>, b: S, tol: S) -> Option<(S, S)> {
    let c = s.c_h();
    let mass_value = b * (S::lit(2.0) - b) / S::lit(2.0);
    if b <= S::zero() {
        return Some((S::zero(), S::zero()));
    }
    let h = |x: S| (S::one() - b) * b * s.value2(x, b) - x * c;
    let x = if h(b) > S::zero() {
        return None;
    } else if h(b) == S::zero() {
        b
    } else {
        bisect(h, S::zero(), b, tol).ok()?
    };
    Some((x, mass_value * s.value2(x, b) - x * c))
}

/// Welfare with everyone participating, valuations above `1 - x` on `H`
/// and the rest on `L` seeing fraction `a`.
pub fn continuous_restriction_welfare<S: Real>(s: &Scenario<S>, x: S, a: S) -> S {
    let two = S::lit(2.0);
    let lo = (S::one() - x) * (S::one() - x);
    s.value2(x, S::one()) * ((S::one() - lo) / two + a * lo / two) - x * s.c_h()
}

fn outcome<S: Real>(
    mechanism: Mechanism<S>,
    regime: Regime,
    x: S,
    b: S,
    sw: S,
    cfg: &DesignConfig<S>,
) -> DesignOutcome<S> {
    DesignOutcome {
        mechanism,
        regime,
        target_flow: vec![b - x, x],
        target_typed: None,
        predicted_sw: sw,
        sw_at_design: sw,
        participation_b: b,
        eps_mech: cfg.eps_mech,
        g_max: None,
    }
}

/// Side payment choosing both the participating share `b` and the `H` load.
/// Every participant is indifferent between paths, so the lowest
/// participating valuation pins the payment level.
pub fn design_continuous_side_payment<S: Real>(s: &Scenario<S>, cfg: &DesignConfig<S>) -> Result<DesignOutcome<S>> {
    require_continuous(s)?;
    let c = s.c_h();
    let half = S::lit(0.5);
    if c == S::zero() {
        let (x, q) = s.q_peak();
        return Ok(outcome(Mechanism::NoIncentive, Regime::FullParticipation, x, S::one(), half * q, cfg));
    }
    let f = |b: S| continuous_side_welfare(s, b, cfg.refine_tol).map_or(S::neg_infinity(), |p| p.1);
    let (b, v) = maximize(&f, S::zero(), S::one(), cfg.grid_cells(S::one()), cfg.refine_tol, S::zero());
    // With cheap H the best b sits within O(c_H) of 1, inside the last grid
    // cell; scan 1 - b on a log scale as well.
    let ten = S::lit(10.0);
    let near_one = |t: S| f(S::one() - ten.powf(-t));
    let (t, vt) = maximize(near_one, S::lit(3.0), S::lit(15.0), 1200, cfg.refine_tol, S::zero());
    let (b, v) = if vt > v { (S::one() - ten.powf(-t), vt) } else { (b, v) };
    let full = f(S::one());
    let (b, v) = if full >= v - tie(v) { (S::one(), full) } else { (b, v) };
    let (x, _) = continuous_side_welfare(s, b, cfg.refine_tol)
        .ok_or_else(|| Error::Numerical("no feasible participation level".into()))?;
    if x <= S::zero() || x >= b {
        return Ok(outcome(Mechanism::NoIncentive, Regime::FullParticipation, S::zero(), S::one(), v, cfg));
    }
    let schedule = PaymentSchedule::proportional(x, b, c)?;
    let regime = if b < S::one() { Regime::PartialParticipation } else { Regime::FullParticipation };
    Ok(outcome(Mechanism::SidePayment { schedule, participation_b: b }, regime, x, b, v, cfg))
}

/// Restriction on `L` sized so that exactly the valuations above `1 - x`
/// prefer `H`, at the load maximizing mean welfare under full restriction.
pub fn design_continuous_content_restriction<S: Real>(s: &Scenario<S>, cfg: &DesignConfig<S>) -> Result<DesignOutcome<S>> {
    require_continuous(s)?;
    let c = s.c_h();
    let half = S::lit(0.5);
    let q_low = s.q_low();
    let f = |x: S| half * (s.value2(x, S::one()) - (S::one() + x) * c);
    let (x, _) = maximize(f, S::zero(), S::one(), cfg.grid_cells(S::one()), cfg.refine_tol, tie(f(S::zero())));
    let q = s.value2(x, S::one());
    if x > S::zero() && x < S::one() && c < (q - q_low) / (S::one() + x) {
        let a = S::one() - c / ((S::one() - x) * q);
        let sw = continuous_restriction_welfare(s, x, a);
        let m = Mechanism::ContentRestriction { a: vec![a, S::one()] };
        return Ok(outcome(m, Regime::MediumRestriction, x, S::one(), sw, cfg));
    }
    Ok(outcome(
        Mechanism::ContentRestriction { a: vec![S::one(), S::one()] },
        Regime::WeakRestriction,
        S::zero(),
        S::one(),
        half * q_low,
        cfg,
    ))
}
