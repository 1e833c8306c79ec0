use serde::Serialize;

use crate::error::{Error, Result};
use crate::Real;

/// Default cap standing in for unbounded payment levels, as a multiple of `c_H`.
pub const G_MAX_FACTOR: f64 = 1e6;

/// Loads below this are treated as empty when dividing a refund among users.
const EMPTY_LOAD: f64 = 1e-12;

/// Charge `g(x_H)` on each cheap-path user; the proceeds are refunded to the
/// costly path(s) so the budget balances exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum PaymentSchedule<S> {
    /// `g(x) = t c_H (b - x) / (b (b - t))`.
    Proportional { target: S, b: S, c_h: S },
    /// `high` below the target, `low` above, `at_target` exactly at it.
    Bang { target: S, at_target: S, high: S, low: S },
    /// `g(x) = g_bar + slope (x - target)`.
    Linear { target: S, g_bar: S, slope: S },
    /// Three-path schedule parameterised by the target split and path costs.
    ThreePath { target: [S; 3], c2: S, c3: S },
}

impl<S: Real> PaymentSchedule<S> {
    /// Schedule making `target` an equilibrium with participation mass `b`.
    pub fn proportional(target: S, b: S, c_h: S) -> Result<Self> {
        if !(target > S::zero() && target < b && b <= S::one()) {
            return Err(Error::Degenerate(format!(
                "no interior schedule for target {target} with b = {b}"
            )));
        }
        Ok(Self::Proportional { target, b, c_h })
    }

    pub fn paths(&self) -> usize {
        match self {
            Self::ThreePath { .. } => 3,
            _ => 2,
        }
    }

    /// Two-path charge on cheap-path users when `x_h` users are on `H`.
    pub fn g(&self, x_h: S) -> S {
        match *self {
            Self::Proportional { target, b, c_h } => target * c_h * (b - x_h) / (b * (b - target)),
            Self::Bang { target, at_target, high, low } => {
                if x_h < target {
                    high
                } else if x_h > target {
                    low
                } else {
                    at_target
                }
            }
            Self::Linear { target, g_bar, slope } => g_bar + slope * (x_h - target),
            Self::ThreePath { .. } => S::nan(),
        }
    }

    /// Payment per user on each path (negative = subsidy).
    pub fn path_payments(&self, loads: &[S]) -> Vec<S> {
        let floor = S::lit(EMPTY_LOAD);
        match *self {
            Self::ThreePath { target, c2, c3 } => {
                let [t1, t2, t3] = target;
                let (x1, x2, x3) = (loads[0], loads[1], loads[2]);
                let g1 = x1 * (t2 * c2 + t3 * c3) / t1;
                let g2 = -x1 * x1 * t2 * c2 / (t1 * x2.max(floor)) + x3 * (c3 - c2);
                let refund = (x1 * g1 + x2 * g2) / x3.max(floor);
                vec![g1, g2, -refund]
            }
            _ => {
                let g = self.g(loads[1]);
                vec![g, -loads[0] * g / loads[1].max(floor)]
            }
        }
    }

    pub fn target_h(&self) -> S {
        match *self {
            Self::Proportional { target, .. }
            | Self::Bang { target, .. }
            | Self::Linear { target, .. } => target,
            Self::ThreePath { target, .. } => target[2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mechanism<S> {
    NoIncentive,
    SidePayment { schedule: PaymentSchedule<S>, participation_b: S },
    /// Fraction of content revealed to users of each path.
    ContentRestriction { a: Vec<S> },
    /// Restriction `a` on the cheap path plus a payment schedule.
    Combined { a: S, schedule: PaymentSchedule<S> },
}

impl<S: Real> Mechanism<S> {
    pub fn check(&self, k: usize) -> Result<()> {
        let unit = |v: S| v >= S::zero() && v <= S::one();
        match self {
            Self::NoIncentive => Ok(()),
            Self::ContentRestriction { a } => {
                if a.len() != k {
                    Err(Error::Mismatch(format!("{} restriction coefficients for {k} paths", a.len())))
                } else if !a.iter().all(|&v| unit(v)) {
                    Err(Error::Mismatch(format!("restriction coefficients {a:?} outside [0, 1]")))
                } else {
                    Ok(())
                }
            }
            Self::SidePayment { schedule, .. } | Self::Combined { schedule, .. } => {
                if schedule.paths() != k {
                    return Err(Error::Mismatch(format!(
                        "{}-path schedule on a {k}-path network",
                        schedule.paths()
                    )));
                }
                if let Self::Combined { a, .. } = self {
                    if !unit(*a) {
                        return Err(Error::Mismatch(format!("restriction {a} outside [0, 1]")));
                    }
                }
                Ok(())
            }
        }
    }

    /// Share of content visible on `path`.
    pub fn coefficient(&self, path: usize) -> S {
        match self {
            Self::ContentRestriction { a } => a[path],
            Self::Combined { a, .. } if path == 0 => *a,
            _ => S::one(),
        }
    }

    pub fn payments(&self, loads: &[S]) -> Vec<S> {
        match self {
            Self::SidePayment { schedule, .. } | Self::Combined { schedule, .. } => {
                schedule.path_payments(loads)
            }
            _ => vec![S::zero(); loads.len()],
        }
    }

    pub fn has_payments(&self) -> bool {
        matches!(self, Self::SidePayment { .. } | Self::Combined { .. })
    }
}
