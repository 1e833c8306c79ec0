//! Scenarios, payoffs, welfare, optima and equilibria.

mod mechanism;
mod scenario;

use serde::Serialize;

pub use mechanism::{Mechanism, PaymentSchedule, G_MAX_FACTOR};
pub use scenario::{CostModel, PathNetwork, Scenario, TypeDistribution};

use crate::dynamics::{simulate_to_convergence, DynamicsConfig};
use crate::error::{Error, Result};
use crate::numerics::maximize;
use crate::Real;

/// Knobs shared by equilibrium checks.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    /// Largest deviation gain still counted as an equilibrium.
    pub equilibrium: f64,
    /// Initial mass moved when probing stability.
    pub stability_eps: f64,
    /// Smallest probe before giving up on a `Stable` verdict.
    pub stability_eps_min: f64,
    /// Path masses below this count as unused.
    pub mass: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { equilibrium: 1e-9, stability_eps: 1e-4, stability_eps_min: 1e-8, mass: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stability {
    Stable,
    Unstable,
    Boundary,
}

/// Path masses per valuation atom, aligned with [`TypeDistribution::atoms`].
/// Row sums may fall short of the atom mass when some users opt out.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypedFlow<S> {
    pub by_type: Vec<Vec<S>>,
}

impl<S: Real> TypedFlow<S> {
    pub fn new(by_type: Vec<Vec<S>>) -> Self {
        Self { by_type }
    }

    /// Every atom split across paths in the same proportions as `loads`.
    pub fn proportional(s: &Scenario<S>, loads: &[S]) -> Result<Self> {
        let atoms = s.types.atoms()?;
        let total: S = loads.iter().copied().sum();
        if total <= S::zero() {
            return Ok(Self { by_type: atoms.iter().map(|_| vec![S::zero(); loads.len()]).collect() });
        }
        Ok(Self {
            by_type: atoms
                .iter()
                .map(|&(_, m)| loads.iter().map(|&x| m * x / total).collect())
                .collect(),
        })
    }

    /// Full participation with `x_h` on `H`, types mixed evenly.
    pub fn two_path(s: &Scenario<S>, x_h: S) -> Result<Self> {
        Self::proportional(s, &[S::one() - x_h, x_h])
    }

    /// Full participation with `x_h` on `H` filled from the highest
    /// valuation down.
    pub fn sorted_two_path(s: &Scenario<S>, x_h: S) -> Result<Self> {
        let atoms = s.types.atoms()?;
        let mut order: Vec<usize> = (0..atoms.len()).collect();
        order.sort_by(|&i, &j| atoms[j].0.partial_cmp(&atoms[i].0).unwrap());
        let mut left = x_h;
        let mut by_type = vec![vec![S::zero(); 2]; atoms.len()];
        for i in order {
            let m = atoms[i].1;
            let on_h = left.min(m).max(S::zero());
            by_type[i] = vec![m - on_h, on_h];
            left = left - on_h;
        }
        Ok(Self { by_type })
    }

    pub fn k(&self) -> usize {
        self.by_type.first().map_or(0, |r| r.len())
    }

    pub fn loads(&self) -> Vec<S> {
        let mut out = vec![S::zero(); self.k()];
        for row in &self.by_type {
            for (o, &x) in out.iter_mut().zip(row) {
                *o = *o + x;
            }
        }
        out
    }

    pub fn participation(&self) -> S {
        self.by_type.iter().flatten().copied().sum()
    }
}

/// Utility of a user with valuation `theta` on `path`.
pub fn payoff<S: Real>(
    s: &Scenario<S>,
    m: &Mechanism<S>,
    theta: S,
    path: usize,
    loads: &[S],
) -> Result<S> {
    let k = s.k();
    m.check(k)?;
    if path >= k || loads.len() != k {
        return Err(Error::Mismatch(format!(
            "path {path} / {} loads on a {k}-path network",
            loads.len()
        )));
    }
    Ok(payoff_unchecked(s, m, theta, path, loads, s.value(loads)))
}

/// All-path payoffs for `theta` with a precomputed content value.
pub(crate) fn payoff_row<S: Real>(
    s: &Scenario<S>,
    m: &Mechanism<S>,
    theta: S,
    loads: &[S],
    value: S,
) -> Vec<S> {
    let pay = m.payments(loads);
    (0..s.k())
        .map(|k| theta * m.coefficient(k) * value - s.path_cost(k, loads) - pay[k])
        .collect()
}

fn payoff_unchecked<S: Real>(
    s: &Scenario<S>,
    m: &Mechanism<S>,
    theta: S,
    path: usize,
    loads: &[S],
    value: S,
) -> S {
    payoff_row(s, m, theta, loads, value)[path]
}

/// Aggregate welfare. Payments cancel; users who opt out contribute nothing.
pub fn social_welfare<S: Real>(s: &Scenario<S>, m: &Mechanism<S>, flow: &TypedFlow<S>) -> Result<S> {
    let atoms = s.types.atoms()?;
    let k = s.k();
    m.check(k)?;
    if flow.by_type.len() != atoms.len() || flow.by_type.iter().any(|r| r.len() != k) {
        return Err(Error::Mismatch("flow shape does not match scenario".into()));
    }
    let loads = flow.loads();
    let v = s.value(&loads);
    let mut sw = S::zero();
    for (row, &(theta, _)) in flow.by_type.iter().zip(&atoms) {
        for (path, &x) in row.iter().enumerate() {
            sw = sw + x * (theta * m.coefficient(path) * v - s.path_cost(path, &loads));
        }
    }
    Ok(sw)
}

/// Welfare with everyone participating and no restriction; depends only on loads.
pub fn plain_welfare<S: Real>(s: &Scenario<S>, loads: &[S]) -> S {
    let mass: S = loads.iter().copied().sum();
    s.theta0() * mass * s.value(loads) - s.total_cost(loads)
}

/// Tie tolerance for welfare comparisons: a few ulps of the value.
pub(crate) fn tie<S: Real>(v: S) -> S {
    S::epsilon() * S::lit(16.0) * v.abs().max(S::one())
}

/// Welfare-maximizing split of the full unit mass. Ties go to less traffic
/// on costlier paths.
pub fn social_optimum<S: Real>(s: &Scenario<S>) -> Result<(Vec<S>, S)> {
    if s.k() == 2 {
        let (x, v) = optimum_two_path(s);
        return Ok((vec![S::one() - x, x], v));
    }
    if !s.is_constant_cost() {
        return Err(Error::Unsupported("traffic-dependent costs need two paths".into()));
    }
    Ok(optimum_exchange(s))
}

fn optimum_two_path<S: Real>(s: &Scenario<S>) -> (S, S) {
    // Symmetric content with H no cheaper than L: ties keep x <= 0.5.
    let even = match s.cost_model {
        CostModel::Constant => true,
        CostModel::Linear { c_l, b_l, c_h, b_h } => b_l == b_h && c_l <= c_h,
    };
    let hi = if s.is_symmetric() && even { S::lit(0.5) } else { S::one() };
    let f = |x: S| plain_welfare(s, &[S::one() - x, x]);
    let scale = f(S::zero()).abs() + f(hi).abs();
    maximize(f, S::zero(), hi, 256, S::tol(1e-14, S::one()), tie(scale))
}

/// Pairwise mass exchange; converges for separable concave welfare.
fn optimum_exchange<S: Real>(s: &Scenario<S>) -> (Vec<S>, S) {
    let k = s.k();
    let mut x = vec![S::one() / S::from_usize(k).unwrap(); k];
    let mut best = plain_welfare(s, &x);
    let tol = S::tol(1e-14, S::one());
    for _ in 0..500 {
        let start = best;
        for i in 0..k {
            for j in (i + 1)..k {
                let pool = x[i] + x[j];
                let mut y = x.clone();
                // t = mass on the costlier path j, so ties keep it low.
                let f = |t: S| {
                    let mut z = y.clone();
                    z[i] = pool - t;
                    z[j] = t;
                    plain_welfare(s, &z)
                };
                let (t, v) = maximize(f, S::zero(), pool, 32, tol, tie(best));
                if v > best {
                    y[i] = pool - t;
                    y[j] = t;
                    x = y;
                    best = v;
                }
            }
        }
        if best - start <= tie(best) {
            break;
        }
    }
    (x, best)
}

/// Per-atom payoffs on every path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypePayoffs<S> {
    pub theta: S,
    pub payoffs: Vec<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport<S> {
    /// Aggregate load per path.
    pub flow: Vec<S>,
    pub typed: Option<TypedFlow<S>>,
    pub stability: Stability,
    pub per_type_payoffs: Vec<TypePayoffs<S>>,
    pub participation_b: S,
    pub social_welfare: S,
}

/// Outcome with no mechanism: everyone takes the cheapest path (or the
/// interior split of the traffic-dependent cost model).
pub fn equilibrium_no_incentive<S: Real>(s: &Scenario<S>) -> Result<EquilibriumReport<S>> {
    let k = s.k();
    let mut loads = vec![S::zero(); k];
    match s.cost_model {
        CostModel::Constant => loads[0] = S::one(),
        CostModel::Linear { c_l, b_l, c_h, b_h } => {
            let x = linear_cost_split(c_l, b_l, c_h, b_h);
            loads = vec![S::one() - x, x];
        }
    }
    let m = Mechanism::NoIncentive;
    let value = s.value(&loads);
    let thetas: Vec<S> = match s.types.atoms() {
        Ok(a) => a.iter().map(|t| t.0).collect(),
        Err(_) => vec![S::zero(), S::lit(0.5), S::one()],
    };
    let per_type_payoffs = thetas
        .iter()
        .map(|&theta| TypePayoffs { theta, payoffs: payoff_row(s, &m, theta, &loads, value) })
        .collect();
    let sw = plain_welfare(s, &loads);
    let (typed, stability) = match s.types.atoms() {
        Ok(_) => {
            let typed = TypedFlow::proportional(s, &loads)?;
            let st = classify_stability(s, &m, &typed, &Tolerances::default())?;
            (Some(typed), st)
        }
        Err(_) => {
            // Continuous valuations: every type sees the same cost gap.
            let gap = s.path_cost(1, &loads) - s.path_cost(0, &loads);
            (None, if gap > S::zero() { Stability::Stable } else { Stability::Boundary })
        }
    };
    Ok(EquilibriumReport {
        flow: loads,
        typed,
        stability,
        per_type_payoffs,
        participation_b: S::one(),
        social_welfare: sw,
    })
}

/// Wardrop split under linear costs `c + b * load`, clamped to `[0, 1]`.
pub fn linear_cost_split<S: Real>(c_l: S, b_l: S, c_h: S, b_h: S) -> S {
    let slope = b_h + b_l;
    if slope > S::zero() {
        ((c_l + b_l - c_h) / slope).max(S::zero()).min(S::one())
    } else if c_h < c_l {
        S::one()
    } else {
        S::zero()
    }
}

/// Largest gain any user can get by switching path or by joining / leaving
/// (outside option worth 0).
pub fn max_deviation_gain<S: Real>(s: &Scenario<S>, m: &Mechanism<S>, flow: &TypedFlow<S>) -> Result<S> {
    let atoms = s.types.atoms()?;
    let k = s.k();
    m.check(k)?;
    if flow.by_type.len() != atoms.len() || flow.by_type.iter().any(|r| r.len() != k) {
        return Err(Error::Mismatch("flow shape does not match scenario".into()));
    }
    let mass_tol = S::lit(Tolerances::default().mass);
    let loads = flow.loads();
    let value = s.value(&loads);
    let mut gain = S::zero();
    for (row, &(theta, mass)) in flow.by_type.iter().zip(&atoms) {
        let u = payoff_row(s, m, theta, &loads, value);
        let best = u.iter().copied().fold(S::neg_infinity(), S::max);
        for (path, &x) in row.iter().enumerate() {
            if x > mass_tol {
                gain = gain.max(best - u[path]).max(-u[path]);
            }
        }
        let used: S = row.iter().copied().sum();
        if mass - used > mass_tol {
            gain = gain.max(best);
        }
    }
    Ok(gain)
}

/// Wardrop check: no participant gains more than the tolerance by switching
/// path or opting out, and no outsider gains by joining.
pub fn verify_equilibrium<S: Real>(
    s: &Scenario<S>,
    m: &Mechanism<S>,
    flow: &TypedFlow<S>,
    tol: &Tolerances,
) -> Result<(bool, S)> {
    let gain = max_deviation_gain(s, m, flow)?;
    Ok((gain <= S::tol(tol.equilibrium, S::one()), gain))
}

/// Perturb the equilibrium by moving `eps` of each atom between every path
/// pair, run the dynamics, and see whether the flow comes back. Probes
/// shrink tenfold down to `stability_eps_min` before settling for a
/// non-`Stable` verdict, since mechanism designs can leave a narrow basin.
pub fn classify_stability<S: Real>(
    s: &Scenario<S>,
    m: &Mechanism<S>,
    flow: &TypedFlow<S>,
    tol: &Tolerances,
) -> Result<Stability> {
    let (ok, gain) = verify_equilibrium(s, m, flow, tol)?;
    if !ok {
        return Err(Error::NotEquilibrium { gain: gain.as_f64() });
    }
    let mut eps = tol.stability_eps;
    let mut last = Stability::Boundary;
    while eps >= tol.stability_eps_min * (1.0 - 1e-9) {
        last = probe(s, m, flow, S::lit(eps))?;
        if last == Stability::Stable {
            return Ok(last);
        }
        eps /= 10.0;
    }
    Ok(last)
}

fn probe<S: Real>(s: &Scenario<S>, m: &Mechanism<S>, flow: &TypedFlow<S>, eps: S) -> Result<Stability> {
    let k = flow.k();
    let base = flow.loads();
    let cfg = DynamicsConfig::<S>::for_stability(eps);
    let mut any = false;
    let mut worst = S::zero();
    for t in 0..flow.by_type.len() {
        for i in 0..k {
            if flow.by_type[t][i] < eps {
                continue;
            }
            for j in 0..k {
                if i == j {
                    continue;
                }
                let mut start = flow.clone();
                start.by_type[t][i] = start.by_type[t][i] - eps;
                start.by_type[t][j] = start.by_type[t][j] + eps;
                let traj = simulate_to_convergence(s, m, &start, &cfg)?;
                let end = traj.final_flow().loads();
                let d = end
                    .iter()
                    .zip(&base)
                    .map(|(a, b)| (*a - *b).abs())
                    .fold(S::zero(), S::max);
                worst = worst.max(d);
                any = true;
            }
        }
    }
    if !any {
        return Ok(Stability::Boundary);
    }
    Ok(if worst <= eps / S::lit(10.0) {
        Stability::Stable
    } else if worst > eps * S::lit(2.0) {
        Stability::Unstable
    } else {
        Stability::Boundary
    })
}
