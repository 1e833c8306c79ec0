//! Population flow dynamics, the three-path Lyapunov function and the
//! Jacobian certificate for three-path payments.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game_core::{payoff_row, Mechanism, Scenario, TypedFlow};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DynamicsMode {
    /// Mass on `i` moves to `j` at rate `mu * x_i * max(0, u_j - u_i)`.
    PairwiseSmith,
    /// Only the least profitable used path loses mass, at rate
    /// `mu * (u_max - u_min)`, to the most profitable one.
    MinToMax,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DynamicsConfig<S> {
    pub mu: S,
    /// Base Euler step; the integrator may shrink it after overshoots and
    /// grow it back up to `dt_max` on smooth stretches.
    pub dt: S,
    pub dt_max: S,
    pub horizon: usize,
    /// Converged once the flow stays within this distance over `window` steps.
    pub convergence_eps: S,
    pub window: usize,
    /// Largest mass any single step may move.
    pub max_move: S,
    pub mode: DynamicsMode,
    /// Record every n-th step (the last state is always recorded).
    pub sample_every: usize,
}

impl<S: Real> Default for DynamicsConfig<S> {
    fn default() -> Self {
        Self {
            mu: S::one(),
            dt: S::lit(1e-3),
            dt_max: S::one(),
            horizon: 1_000_000,
            convergence_eps: S::lit(1e-8),
            window: 100,
            max_move: S::lit(0.05),
            mode: DynamicsMode::PairwiseSmith,
            sample_every: 100,
        }
    }
}

impl<S: Real> DynamicsConfig<S> {
    /// Settings for a stability probe of size `eps`.
    pub fn for_stability(eps: S) -> Self {
        Self {
            horizon: 200_000,
            // Near-threshold designs restore slowly; let the step grow until
            // it overshoots rather than stopping on a slow crawl.
            dt_max: S::lit(1e6),
            convergence_eps: eps * S::lit(1e-3),
            max_move: eps.max(S::lit(1e-3)),
            sample_every: usize::MAX,
            ..Self::default()
        }
    }

    pub fn with_mode(mut self, mode: DynamicsMode) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample<S> {
    pub t: S,
    pub loads: Vec<S>,
    /// Per-atom payoffs on every path.
    pub payoffs: Vec<Vec<S>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Verdict<S> {
    Converged(Vec<S>),
    Cycling,
    HorizonExceeded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory<S> {
    pub samples: Vec<Sample<S>>,
    pub verdict: Verdict<S>,
    pub steps: usize,
    /// Steps where the Euler update left the simplex and had to be clamped.
    pub clamped: usize,
    #[serde(skip)]
    last: TypedFlow<S>,
}

impl<S: Real> Trajectory<S> {
    pub fn final_flow(&self) -> &TypedFlow<S> {
        &self.last
    }

    pub fn converged(&self) -> bool {
        matches!(self.verdict, Verdict::Converged(_))
    }
}

fn atoms<S: Real>(s: &Scenario<S>, flow: &TypedFlow<S>) -> Result<Vec<(S, S)>> {
    let atoms = s.types.atoms()?;
    if flow.by_type.len() != atoms.len() || flow.by_type.iter().any(|r| r.len() != s.k()) {
        return Err(Error::Mismatch("flow shape does not match scenario".into()));
    }
    Ok(atoms)
}

fn payoffs<S: Real>(s: &Scenario<S>, m: &Mechanism<S>, thetas: &[S], loads: &[S]) -> Vec<Vec<S>> {
    let v = s.value(loads);
    thetas.iter().map(|&th| payoff_row(s, m, th, loads, v)).collect()
}

/// Time derivative of every atom's path masses.
fn velocity<S: Real>(
    s: &Scenario<S>,
    m: &Mechanism<S>,
    thetas: &[S],
    flow: &TypedFlow<S>,
    cfg: &DynamicsConfig<S>,
) -> Vec<Vec<S>> {
    let loads = flow.loads();
    let u = payoffs(s, m, thetas, &loads);
    let k = loads.len();
    let mut vel = vec![vec![S::zero(); k]; thetas.len()];
    for (t, row) in flow.by_type.iter().enumerate() {
        let ut = &u[t];
        match cfg.mode {
            DynamicsMode::PairwiseSmith => {
                for i in 0..k {
                    if row[i] <= S::zero() {
                        continue;
                    }
                    for j in 0..k {
                        let gap = ut[j] - ut[i];
                        if gap > S::zero() {
                            let r = cfg.mu * row[i] * gap;
                            vel[t][i] = vel[t][i] - r;
                            vel[t][j] = vel[t][j] + r;
                        }
                    }
                }
            }
            DynamicsMode::MinToMax => {
                let used = (0..k).filter(|&i| row[i] > S::zero());
                let lo = used.clone().map(|i| ut[i]).fold(S::infinity(), S::min);
                let hi = ut.iter().copied().fold(S::neg_infinity(), S::max);
                if !(hi > lo) {
                    continue;
                }
                let rate = cfg.mu * (hi - lo);
                let src: Vec<usize> = used.filter(|&i| ut[i] == lo).collect();
                let dst: Vec<usize> = (0..k).filter(|&j| ut[j] == hi).collect();
                let ns = S::from_usize(src.len()).unwrap();
                let nd = S::from_usize(dst.len()).unwrap();
                for &i in &src {
                    vel[t][i] = vel[t][i] - rate / ns;
                }
                for &j in &dst {
                    vel[t][j] = vel[t][j] + rate / nd;
                }
            }
        }
    }
    vel
}

/// Euler step of size `h`, clamped back onto each atom's simplex.
/// Returns the new flow and whether clamping was needed.
fn euler<S: Real>(flow: &TypedFlow<S>, vel: &[Vec<S>], h: S) -> (TypedFlow<S>, bool) {
    let mut clamped = false;
    let by_type = flow
        .by_type
        .iter()
        .zip(vel)
        .map(|(row, v)| {
            let mass: S = row.iter().copied().sum();
            let mut next: Vec<S> = row.iter().zip(v).map(|(&x, &d)| x + h * d).collect();
            if next.iter().any(|&x| x < S::zero()) {
                clamped = true;
                for x in next.iter_mut() {
                    *x = x.max(S::zero());
                }
            }
            let now: S = next.iter().copied().sum();
            if now > S::zero() && now != mass {
                for x in next.iter_mut() {
                    *x = *x * mass / now;
                }
            }
            next
        })
        .collect();
    (TypedFlow { by_type }, clamped)
}

/// One Euler step of length `cfg.dt`.
pub fn smith_step<S: Real>(
    s: &Scenario<S>,
    m: &Mechanism<S>,
    flow: &TypedFlow<S>,
    cfg: &DynamicsConfig<S>,
) -> Result<TypedFlow<S>> {
    let atoms = atoms(s, flow)?;
    m.check(s.k())?;
    let thetas: Vec<S> = atoms.iter().map(|a| a.0).collect();
    let vel = velocity(s, m, &thetas, flow, cfg);
    Ok(euler(flow, &vel, cfg.dt).0)
}

fn dist<S: Real>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(x, y)| (*x - *y).abs()).fold(S::zero(), S::max)
}

const CYCLE_WINDOW: usize = 10_000;
const CYCLE_TOL: f64 = 1e-6;

/// Integrate the dynamics until the flow settles, cycles, or the horizon
/// runs out.
pub fn simulate_to_convergence<S: Real>(
    s: &Scenario<S>,
    m: &Mechanism<S>,
    x0: &TypedFlow<S>,
    cfg: &DynamicsConfig<S>,
) -> Result<Trajectory<S>> {
    let atoms = atoms(s, x0)?;
    m.check(s.k())?;
    let thetas: Vec<S> = atoms.iter().map(|a| a.0).collect();
    let mut flow = x0.clone();
    let mut t = S::zero();
    let mut dt = cfg.dt;
    let mut samples = Vec::new();
    let mut clamped = 0;
    let mut recent: VecDeque<Vec<S>> = VecDeque::with_capacity(cfg.window + 1);
    // (loads, arc length so far) for cycle detection
    let mut history: VecDeque<(Vec<S>, S)> = VecDeque::new();
    let mut arc = S::zero();
    let mut prev_disp: Option<Vec<S>> = None;
    let record = |t: S, flow: &TypedFlow<S>| {
        let loads = flow.loads();
        let payoffs = payoffs(s, m, &thetas, &loads);
        Sample { t, loads, payoffs }
    };
    samples.push(record(t, &flow));
    let dt_floor = cfg.dt * S::lit(1e-30);
    let mut verdict = Verdict::HorizonExceeded;
    let mut steps = 0;
    while steps < cfg.horizon {
        let vel = velocity(s, m, &thetas, &flow, cfg);
        let rate = vel.iter().flatten().map(|v| v.abs()).fold(S::zero(), S::max);
        let loads = flow.loads();
        if rate == S::zero() || dt < dt_floor {
            verdict = Verdict::Converged(loads);
            break;
        }
        let h = dt.min(cfg.max_move / rate);
        let (next, c) = euler(&flow, &vel, h);
        clamped += c as usize;
        let next_loads = next.loads();
        let disp: Vec<S> = next_loads.iter().zip(&loads).map(|(a, b)| *a - *b).collect();
        let reversed = prev_disp
            .as_ref()
            .map_or(false, |p| p.iter().zip(&disp).map(|(a, b)| *a * *b).sum::<S>() < S::zero());
        // An overshoot that does not at least halve the previous move would
        // feed an oscillation; retry it with a smaller step.
        let norm = |d: &[S]| d.iter().map(|v| v.abs()).sum::<S>();
        if reversed && prev_disp.as_ref().map_or(false, |p| norm(&disp) > norm(p) / S::lit(2.0)) {
            dt = h / S::lit(4.0);
            steps += 1;
            continue;
        }
        dt = if reversed { h / S::lit(2.0) } else { (h * S::lit(1.25)).min(cfg.dt_max) };
        arc = arc + disp.iter().map(|d| d.abs()).sum::<S>();
        prev_disp = Some(disp);
        flow = next;
        t = t + h;
        steps += 1;

        if steps % cfg.sample_every.max(1) == 0 {
            samples.push(record(t, &flow));
        }
        recent.push_back(next_loads.clone());
        if recent.len() > cfg.window {
            recent.pop_front();
        }
        if recent.len() == cfg.window
            && recent.iter().all(|p| dist(p, &next_loads) < cfg.convergence_eps)
        {
            verdict = Verdict::Converged(next_loads);
            break;
        }
        if steps % 100 == 0 {
            let tol = S::lit(CYCLE_TOL);
            let old = history
                .iter()
                .rev()
                .skip(2)
                .any(|(p, a)| arc - *a > S::lit(1e-3) && dist(p, &next_loads) < tol);
            if old {
                verdict = Verdict::Cycling;
                break;
            }
            history.push_back((next_loads, arc));
            if history.len() > CYCLE_WINDOW / 100 {
                history.pop_front();
            }
        }
    }
    if samples.last().map_or(true, |l| l.t != t) {
        samples.push(record(t, &flow));
    }
    Ok(Trajectory { samples, verdict, steps, clamped, last: flow })
}

/// `(theta0 Q(x) - Lambda)^2` for the three-path low-cost restriction, with
/// `Lambda = c_3 / (1 - a_1)` recovered from the design. Defined on the region
/// where the costliest path carries more than the cheapest (`2 x3 + x2 > 1`).
pub fn lyapunov_value<S: Real>(s: &Scenario<S>, a: &[S], loads: &[S]) -> Result<S> {
    if s.k() != 3 || loads.len() != 3 || a.len() < 2 {
        return Err(Error::Unsupported("Lyapunov function is defined for three paths".into()));
    }
    let two = S::lit(2.0);
    if !(two * loads[2] + loads[1] > S::one()) {
        return Err(Error::Domain(format!("flow {loads:?} outside region 2 x3 + x2 > 1")));
    }
    if !(a[0] < S::one()) {
        return Err(Error::Domain("cheapest path is unrestricted".into()));
    }
    let lambda = s.network.costs[2] / (S::one() - a[0]);
    let gap = s.theta0() * s.value(loads) - lambda;
    Ok(gap * gap)
}

/// Smallest eigenvalue of the symmetric Jacobian of the effective-cost map
/// (travel cost plus payment), restricted to directions that keep total mass
/// fixed. Returns `(eigen_min > tol, eigen_min)`.
pub fn jacobian_pd_check<S: Real>(s: &Scenario<S>, m: &Mechanism<S>, loads: &[S]) -> Result<(bool, S)> {
    let k = s.k();
    m.check(k)?;
    if loads.len() != k || !(k == 2 || k == 3) {
        return Err(Error::Unsupported("Jacobian check covers two or three paths".into()));
    }
    let h = S::lit(1e-6);
    let cost = |x: &[S]| -> Vec<S> {
        let pay = m.payments(x);
        (0..k).map(|i| s.path_cost(i, x) + pay[i]).collect()
    };
    let mut jac = vec![vec![S::zero(); k]; k];
    for j in 0..k {
        let mut up = loads.to_vec();
        let mut dn = loads.to_vec();
        up[j] = up[j] + h;
        dn[j] = dn[j] - h;
        let (cu, cd) = (cost(&up), cost(&dn));
        for i in 0..k {
            jac[i][j] = (cu[i] - cd[i]) / (h + h);
        }
    }
    let two = S::lit(2.0);
    let sym = |i: usize, j: usize| (jac[i][j] + jac[j][i]) / two;
    // Orthonormal basis of {sum = 0}.
    let basis: Vec<Vec<S>> = if k == 2 {
        let r = S::one() / two.sqrt();
        vec![vec![r, -r]]
    } else {
        let r2 = S::one() / two.sqrt();
        let r6 = S::one() / S::lit(6.0).sqrt();
        vec![vec![r2, -r2, S::zero()], vec![r6, r6, -two * r6]]
    };
    let quad = |u: &[S], v: &[S]| {
        let mut acc = S::zero();
        for i in 0..k {
            for j in 0..k {
                acc = acc + u[i] * sym(i, j) * v[j];
            }
        }
        acc
    };
    let eig_min = if k == 2 {
        quad(&basis[0], &basis[0])
    } else {
        let (p, q, r) = (quad(&basis[0], &basis[0]), quad(&basis[0], &basis[1]), quad(&basis[1], &basis[1]));
        let mean = (p + r) / two;
        let rad = (((p - r) / two).powi(2) + q * q).sqrt();
        mean - rad
    };
    let scale = jac.iter().flatten().map(|v| v.abs()).fold(S::zero(), S::max);
    Ok((eig_min > S::tol(1e-9, scale), eig_min))
}
