use super::side_payment::require_two_path_discrete;
use super::{DesignConfig, DesignOutcome, Regime, RestrictionThresholds};
use crate::error::{Error, Result};
use crate::game_core::{payoff_row, social_welfare, Mechanism, Scenario, TypeDistribution, TypedFlow};
use crate::numerics::bisect;
use crate::Real;

pub fn restriction_thresholds<S: Real>(s: &Scenario<S>) -> Result<RestrictionThresholds<S>> {
    let atoms = s.types.atoms()?;
    let q_low = s.q_low();
    let q_high = s.q_peak().1;
    let c = s.c_h();
    let level = |theta: S, q: S| {
        if theta * q > S::zero() {
            (S::one() - c / (theta * q)).max(S::zero())
        } else {
            S::zero()
        }
    };
    Ok(RestrictionThresholds {
        q_low,
        q_high,
        a_low: atoms.iter().map(|&(t, _)| level(t, q_low)).collect(),
        a_high: atoms.iter().map(|&(t, _)| level(t, q_high)).collect(),
    })
}

/// `u_H - u_L` for valuation `theta` at `H` load `x` under restriction `(a_l, a_h)`.
pub(crate) fn restricted_gap<S: Real>(s: &Scenario<S>, a_l: S, a_h: S, theta: S, x: S) -> S {
    let m = Mechanism::ContentRestriction { a: vec![a_l, a_h] };
    let loads = [S::one() - x, x];
    let row = payoff_row(s, &m, theta, &loads, s.value(&loads));
    row[1] - row[0]
}

/// Restriction just past the indifference level `a_edge`: the depth `1 - a`
/// grows by the relative factor `eps` (at most halfway to `a_floor`), so the
/// equilibrium content level sits a fraction of about `eps` below the peak
/// whatever the cost scale.
pub(crate) fn deepen<S: Real>(a_edge: S, a_floor: S, eps: S) -> S {
    let depth = S::one() - a_edge;
    if depth <= S::zero() {
        return a_edge;
    }
    let room = ((S::one() - a_floor) / depth - S::one()) / S::lit(2.0);
    (S::one() - depth * (S::one() + eps.min(room))).max(S::zero())
}

/// Zero of a gap that decreases on `[lo, hi]`; the endpoint if it keeps one sign.
pub(crate) fn stable_root<S: Real>(gap: impl Fn(S) -> S, lo: S, hi: S, tol: S) -> S {
    if gap(lo) <= S::zero() {
        return lo;
    }
    if gap(hi) >= S::zero() {
        return hi;
    }
    bisect(gap, lo, hi, tol).unwrap_or(lo)
}

fn outcome<S: Real>(
    s: &Scenario<S>,
    a: S,
    typed: TypedFlow<S>,
    regime: Regime,
    predicted: S,
    cfg: &DesignConfig<S>,
) -> Result<DesignOutcome<S>> {
    let mechanism = Mechanism::ContentRestriction { a: vec![a, S::one()] };
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

/// Restrict the content seen on the cheap path so that some users move to
/// the costly one, targeting the best stable equilibrium.
pub fn design_content_restriction<S: Real>(s: &Scenario<S>, cfg: &DesignConfig<S>) -> Result<DesignOutcome<S>> {
    require_two_path_discrete(s, "content restriction")?;
    let c = s.c_h();
    let theta0 = s.theta0();
    let q_low = s.q_low();
    let (x_peak, q_high) = s.q_peak();
    let weak = || outcome(s, S::one(), TypedFlow::two_path(s, S::zero())?, Regime::WeakRestriction, theta0 * q_low, cfg);

    if c == S::zero() {
        // Every split is an equilibrium; no restriction needed for diversity.
        let typed = TypedFlow::sorted_two_path(s, x_peak)?;
        return outcome(s, S::one(), typed, Regime::MediumRestriction, theta0 * q_high, cfg);
    }

    let (theta1, theta2) = match s.types {
        TypeDistribution::Homogeneous { theta } => (theta, theta),
        TypeDistribution::TwoType { theta1, theta2, eta } => {
            if eta != S::lit(0.5) || !s.is_symmetric() {
                return Err(Error::Unsupported(
                    "two-type restriction design needs equal masses and symmetric content".into(),
                ));
            }
            (theta1, theta2)
        }
        TypeDistribution::UniformContinuous => unreachable!(),
    };

    if theta1 == theta2 {
        if !(c < theta0 * (q_high - q_low)) {
            return weak();
        }
        let a = deepen(S::one() - c / (theta0 * q_high), S::one() - c / (theta0 * q_low), cfg.eps_mech);
        let x = stable_root(|x| restricted_gap(s, a, S::one(), theta0, x), x_peak, S::one(), cfg.refine_tol);
        let regime = if x == S::one() { Regime::StrongRestriction } else { Regime::MediumRestriction };
        return outcome(s, a, TypedFlow::sorted_two_path(s, x)?, regime, theta0 * q_high - c, cfg);
    }

    let half = S::lit(0.5);
    let a_bar1 = if theta1 > S::zero() { S::one() - c / (theta1 * q_high) } else { S::neg_infinity() };
    let a_bar2 = S::one() - c / (theta2 * q_high);
    let sorted = TypedFlow::new(vec![vec![half, S::zero()], vec![S::zero(), half]]);
    if theta1 == S::zero() || theta2 * q_low > theta1 * q_high {
        // Diverse: only high types can be pushed to H; low types stay on L.
        let thr = (theta1 + theta2) * (q_high - q_low) * theta2 * q_low / (theta1 * q_high + theta2 * q_low);
        if !(c < thr) {
            return weak();
        }
        let a_low2 = S::one() - c / (theta2 * q_low);
        let eps = cfg.eps_mech.min((a_low2 - a_bar1) / S::lit(2.0));
        let a = (a_low2 - eps).max(S::zero());
        let predicted = theta0 * q_high - (theta1 * q_high + theta2 * q_low) / (S::lit(2.0) * theta2 * q_low) * c;
        outcome(s, a, sorted, Regime::LowerMediumRestriction, predicted, cfg)
    } else {
        // Similar: stop just short of making low types indifferent at the peak.
        if !(c < theta0 * (q_high - q_low)) {
            return weak();
        }
        let eps = cfg.eps_mech.min((a_bar2 - a_bar1) / S::lit(2.0));
        outcome(s, a_bar1 + eps, sorted, Regime::MediumRestriction, theta0 * q_high - c, cfg)
    }
}
