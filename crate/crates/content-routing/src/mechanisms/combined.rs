use serde::Serialize;

use super::side_payment::{design_side_payment, payment_outcome, require_two_path_discrete, side_payment_analysis};
use super::{DesignConfig, DesignOutcome, Regime};
use crate::error::Result;
use crate::game_core::{social_welfare, tie, Mechanism, PaymentSchedule, Scenario, TypeDistribution, TypedFlow};
use crate::numerics::{linspace, maximize};
use crate::Real;

fn two_types<S: Real>(s: &Scenario<S>) -> (S, S, S) {
    match s.types {
        TypeDistribution::TwoType { theta1, theta2, eta } => (theta1, theta2, eta),
        TypeDistribution::Homogeneous { theta } => (theta, theta, S::zero()),
        TypeDistribution::UniformContinuous => (S::zero(), S::one(), S::lit(0.5)),
    }
}

/// Welfare when type-2 users are indifferent at `x` on `H`, everyone else
/// is on `L` seeing fraction `a` of the content.
pub fn combined_objective<S: Real>(s: &Scenario<S>, x: S, a: S) -> S {
    let (t1, t2, eta) = two_types(s);
    let q = s.value2(x, S::one());
    (x * t2 + ((S::one() - eta - x) * t2 + eta * t1) * a) * q - x * s.c_h()
}

/// Largest `a` keeping low types willing to participate at target `x`, or
/// `None` if no `a` in `[0, 1]` works. Welfare increases in `a`, so the
/// largest feasible value is the optimal inner choice.
fn best_a<S: Real>(s: &Scenario<S>, x: S) -> Option<S> {
    let (t1, t2, _) = two_types(s);
    let q = s.value2(x, S::one());
    // IR of low types: a * A >= B.
    let a_coef = q * (t1 - t2 * x);
    let b = x * (s.c_h() - t2 * q);
    let slack = tie(b.abs().max(a_coef.abs()));
    if a_coef > S::zero() {
        (b <= a_coef + slack).then_some(S::one())
    } else if a_coef < S::zero() {
        let r = b / a_coef;
        (r >= -slack).then(|| r.max(S::zero()).min(S::one()))
    } else {
        (b <= slack).then_some(S::one())
    }
}

fn profile<S: Real>(s: &Scenario<S>, x: S) -> S {
    best_a(s, x).map_or(S::neg_infinity(), |a| combined_objective(s, x, a))
}

/// Best point of each equilibrium case, for checking that the designer's
/// case choice is right.
#[derive(Debug, Clone, Serialize)]
pub struct CombinedDebug<S> {
    /// `(x, a, sw)`: high types indifferent, everyone participates.
    pub ir21: (S, S, S),
    /// `(x, sw)`: only high types participate.
    pub ir2: Option<(S, S)>,
    /// `(x, a, sw)`: low types indifferent, high types all on `H`.
    pub ir12: Option<(S, S, S)>,
    /// `(a, sw)`: types fully sorted across the paths.
    pub split: Option<(S, S)>,
}

fn solve_ir21<S: Real>(s: &Scenario<S>, cfg: &DesignConfig<S>, seeds: &[S]) -> (S, S, S) {
    let (_, _, eta) = two_types(s);
    let mass2 = S::one() - eta;
    let hi = if s.is_symmetric() { mass2.min(S::lit(0.5)) } else { mass2 };
    let f = |x: S| profile(s, x);
    let (mut x, mut v) = maximize(f, S::zero(), hi, cfg.grid_cells(hi), cfg.refine_tol, S::zero());
    for &c in seeds {
        if c >= S::zero() && c <= hi {
            let vc = f(c);
            if vc > v + tie(v) || (vc >= v - tie(v) && c < x) {
                x = c;
                v = vc;
            }
        }
    }
    (x, best_a(s, x).unwrap_or(S::one()), v)
}

/// Evaluate all equilibrium cases on coarse grids.
pub fn combined_debug_cases<S: Real>(s: &Scenario<S>, cfg: &DesignConfig<S>) -> Result<CombinedDebug<S>> {
    require_two_path_discrete(s, "combined")?;
    let an = side_payment_analysis(s, cfg)?;
    let ir21 = solve_ir21(s, cfg, &[an.x_ir, an.x_opt, S::lit(0.5), S::zero()]);
    let (t1, t2, eta) = two_types(s);
    let c = s.c_h();
    let mass2 = S::one() - eta;
    let slack = S::lit(1e-12);
    let a_grid: Vec<S> = linspace(S::zero(), S::one(), 201).collect();

    let mut ir12: Option<(S, S, S)> = None;
    for x in linspace(mass2, S::one(), 201) {
        let q = s.value2(x, S::one());
        for &a in &a_grid {
            let g = (c - (S::one() - a) * t1 * q) * x;
            let ir1 = t1 * a * q - g;
            let ir2 = if x > S::zero() { t2 * q - c + g * (S::one() - x) / x } else { S::zero() };
            if ir1 < -slack || ir2 < -slack {
                continue;
            }
            let sw = (mass2 * t2 + (x - mass2) * t1 + (S::one() - x) * t1 * a) * q - x * c;
            if ir12.map_or(true, |b| sw > b.2) {
                ir12 = Some((x, a, sw));
            }
        }
    }

    let mut split: Option<(S, S)> = None;
    let x = mass2;
    if x > S::zero() {
        let q = s.value2(x, S::one());
        for &a in &a_grid {
            // Any payment between the two indifference levels sorts the types.
            let g_hi = x * (c - (S::one() - a) * t1 * q);
            let g_lo = x * (c - (S::one() - a) * t2 * q);
            let g = g_lo.max(S::zero().min(g_hi));
            let ok = g_lo <= g_hi + slack
                && t1 * a * q - g >= -slack
                && t2 * q - c + g * (S::one() - x) / x >= -slack;
            if ok {
                let sw = (mass2 * t2 + eta * t1 * a) * q - x * c;
                if split.map_or(true, |b| sw > b.1) {
                    split = Some((a, sw));
                }
            }
        }
    }
    Ok(CombinedDebug { ir21, ir2: an.half, ir12, split })
}

/// Content restriction on `L` plus a bang-bang payment, choosing between
/// full participation (high types indifferent) and dropping low types.
pub fn design_combined<S: Real>(s: &Scenario<S>, cfg: &DesignConfig<S>) -> Result<DesignOutcome<S>> {
    require_two_path_discrete(s, "combined")?;
    if matches!(s.types, TypeDistribution::Homogeneous { .. }) {
        // Payments alone already reach the optimum.
        return design_side_payment(s, cfg);
    }
    let an = side_payment_analysis(s, cfg)?;
    let (x, a, v) = solve_ir21(s, cfg, &[an.x_ir, an.x_opt, S::lit(0.5), S::zero()]);
    if let Some((xh, vh)) = an.half {
        if vh > v + tie(v) {
            let typed = TypedFlow::new(vec![vec![S::zero(), S::zero()], vec![an.half_mass - xh, xh]]);
            return payment_outcome(s, xh, typed, an.half_mass, Regime::CombinedIr2, vh, cfg);
        }
    }
    let (_, t2, eta) = two_types(s);
    let c = s.c_h();
    let typed = TypedFlow::new(vec![vec![eta, S::zero()], vec![S::one() - eta - x, x]]);
    let mechanism = if x > S::zero() {
        let g = cfg.g_max_factor * c.max(S::epsilon());
        let at = (c - (S::one() - a) * t2 * s.value2(x, S::one())) * x;
        Mechanism::Combined { a, schedule: PaymentSchedule::Bang { target: x, at_target: at, high: g, low: -g } }
    } else {
        Mechanism::NoIncentive
    };
    let sw = social_welfare(s, &mechanism, &typed)?;
    let g_max = match &mechanism {
        Mechanism::Combined { schedule: PaymentSchedule::Bang { high, .. }, .. } => Some(*high),
        _ => None,
    };
    Ok(DesignOutcome {
        mechanism,
        regime: Regime::CombinedIr21,
        target_flow: typed.loads(),
        target_typed: Some(typed),
        predicted_sw: v,
        sw_at_design: sw,
        participation_b: S::one(),
        eps_mech: cfg.eps_mech,
        g_max,
    })
}
