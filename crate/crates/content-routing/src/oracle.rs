//! Brute-force references: exhaustive grids, finite-agent best response and
//! finite differences. Nothing here calls the designers or the closed-form
//! equilibrium code; welfare, payoffs and equilibrium conditions are
//! recomputed from the primitives. `f64` only.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::content_model::{ContentFunction, DynamicContentState};
use crate::error::{Error, Result};
use crate::game_core::{CostModel, Mechanism, Scenario, TypeDistribution};
use crate::mechanisms::{DynamicParams, Regime};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OracleConfig {
    pub grid_step: f64,
    pub agent_count: usize,
    pub br_rounds: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { grid_step: 1e-4, agent_count: 10_000, br_rounds: 1_000, seed: 0 }
    }
}

impl OracleConfig {
    fn cells(&self) -> usize {
        (1.0 / self.grid_step).round().max(1.0) as usize
    }
}

/// `Q0 + beta Q1(x_0) + sum_{k>0} Q1(x_k)`.
fn value(s: &Scenario<f64>, loads: &[f64]) -> f64 {
    let mut v = s.overlap.map_or(0.0, |o| o.value());
    for (k, &x) in loads.iter().enumerate() {
        let w = if k == 0 { s.beta.unwrap_or(1.0) } else { 1.0 };
        v += w * s.content.eval(x);
    }
    v
}

fn cost(s: &Scenario<f64>, path: usize, loads: &[f64]) -> f64 {
    match s.cost_model {
        CostModel::Constant => s.network.costs[path],
        CostModel::Linear { c_l, b_l, c_h, b_h } => {
            if path == 0 {
                c_l + b_l * loads[0]
            } else {
                c_h + b_h * loads[1]
            }
        }
    }
}

fn mean_theta(s: &Scenario<f64>) -> f64 {
    match s.types {
        TypeDistribution::Homogeneous { theta } => theta,
        TypeDistribution::TwoType { theta1, theta2, eta } => eta * theta1 + (1.0 - eta) * theta2,
        TypeDistribution::UniformContinuous => 0.5,
    }
}

/// Unrestricted welfare of a full-participation load vector.
fn welfare(s: &Scenario<f64>, loads: &[f64]) -> f64 {
    let burn: f64 = loads.iter().enumerate().map(|(k, &x)| x * cost(s, k, loads)).sum();
    mean_theta(s) * value(s, loads) - burn
}

/// Best full-participation split on the grid. Ties go to the point found
/// first (lower load on the costlier paths).
pub fn grid_social_optimum(s: &Scenario<f64>, cfg: &OracleConfig) -> Result<(Vec<f64>, f64)> {
    let n = cfg.cells();
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    let mut consider = |loads: Vec<f64>| {
        let w = welfare(s, &loads);
        if w > best.1 {
            best = (loads, w);
        }
    };
    match s.k() {
        2 => {
            for i in 0..=n {
                let x = i as f64 / n as f64;
                consider(vec![1.0 - x, x]);
            }
        }
        3 => {
            // x3 outermost so that cheaper splits are visited first.
            for k in 0..=n {
                for j in 0..=(n - k) {
                    let (x2, x3) = (j as f64 / n as f64, k as f64 / n as f64);
                    consider(vec![(1.0 - x2 - x3).max(0.0), x2, x3]);
                }
            }
        }
        k => return Err(Error::Unsupported(format!("grid optimum is for two or three paths, got {k}"))),
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum AgentVerdict {
    /// A full round passed with nobody moving.
    Converged { rounds: usize },
    /// Shares kept flickering within `band` of each other; the non-atomic
    /// equilibrium sits inside the band.
    Cycling { rounds: usize, band: f64 },
    NotConverged { rounds: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct AgentOutcome {
    /// Share of all agents on each path.
    pub shares: Vec<f64>,
    /// Share of agents that opted out.
    pub opted_out: f64,
    pub verdict: AgentVerdict,
}

/// Asynchronous best response among `agent_count` agents, each
/// ignoring its own effect on the shares. Valuations are assigned by atom
/// mass (continuous valuations on an even grid).
pub fn finite_agent_equilibrium(s: &Scenario<f64>, m: &Mechanism<f64>, cfg: &OracleConfig) -> Result<AgentOutcome> {
    let n = cfg.agent_count;
    if n < 100 {
        return Err(Error::InvalidScenario("need at least 100 agents".into()));
    }
    m.check(s.k())?;
    let k = s.k();
    let thetas: Vec<f64> = match s.types {
        TypeDistribution::Homogeneous { theta } => vec![theta; n],
        TypeDistribution::TwoType { theta1, theta2, eta } => {
            let low = (eta * n as f64).round() as usize;
            (0..n).map(|i| if i < low { theta1 } else { theta2 }).collect()
        }
        TypeDistribution::UniformContinuous => (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // Path index k stands for "opted out".
    let mut choice: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    let mut counts = vec![0usize; k + 1];
    for &c in &choice {
        counts[c] += 1;
    }
    let inv = 1.0 / n as f64;
    let shares = |counts: &[usize]| counts[..k].iter().map(|&c| c as f64 * inv).collect::<Vec<_>>();
    let coef: Vec<f64> = (0..k).map(|p| m.coefficient(p)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut narrow_rounds = 0;
    for round in 1..=cfg.br_rounds {
        order.shuffle(&mut rng);
        let mut moved = false;
        let (mut lo, mut hi) = (shares(&counts), shares(&counts));
        for &i in &order {
            let loads = shares(&counts);
            let q = value(s, &loads);
            let pay = m.payments(&loads);
            let mut best = (k, 0.0);
            for p in 0..k {
                let u = thetas[i] * coef[p] * q - cost(s, p, &loads) - pay[p];
                if u > best.1 || (p == choice[i] && u >= best.1) {
                    best = (p, u);
                }
            }
            let current = if choice[i] == k {
                0.0
            } else {
                let p = choice[i];
                thetas[i] * coef[p] * q - cost(s, p, &loads) - pay[p]
            };
            let tol = 1e-12 * (1.0 + q.abs());
            if best.0 != choice[i] && best.1 > current + tol {
                counts[choice[i]] -= 1;
                counts[best.0] += 1;
                choice[i] = best.0;
                moved = true;
                let now = shares(&counts);
                for p in 0..k {
                    lo[p] = lo[p].min(now[p]);
                    hi[p] = hi[p].max(now[p]);
                }
            }
        }
        let done = |verdict| {
            Ok(AgentOutcome { shares: shares(&counts), opted_out: counts[k] as f64 * inv, verdict })
        };
        if !moved {
            return done(AgentVerdict::Converged { rounds: round });
        }
        let band = (0..k).map(|p| hi[p] - lo[p]).fold(0.0, f64::max);
        if band <= 2.0 * inv + 1e-15 {
            narrow_rounds += 1;
            if narrow_rounds >= 5 {
                return done(AgentVerdict::Cycling { rounds: round, band });
            }
        } else {
            narrow_rounds = 0;
        }
    }
    Ok(AgentOutcome {
        shares: shares(&counts),
        opted_out: counts[k] as f64 * inv,
        verdict: AgentVerdict::NotConverged { rounds: cfg.br_rounds },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    Side,
    Restriction,
    Combined,
    ContinuousSide,
    ContinuousRestriction,
}

/// Best mechanism found on the grid.
#[derive(Debug, Clone, Serialize)]
pub struct BruteForceDesign {
    pub kind: DesignKind,
    pub sw: f64,
    /// Load on `H` at the chosen equilibrium.
    pub x_h: f64,
    /// Content share on `L` (1 when unrestricted).
    pub a: f64,
    /// Participating mass.
    pub b: f64,
    pub regime: Regime,
}

/// Valuation atoms, highest first, as `(theta, mass)`.
fn atoms_desc(s: &Scenario<f64>) -> Result<Vec<(f64, f64)>> {
    let mut v = match s.types {
        TypeDistribution::Homogeneous { theta } => vec![(theta, 1.0)],
        TypeDistribution::TwoType { theta1, theta2, eta } => vec![(theta2, 1.0 - eta), (theta1, eta)],
        TypeDistribution::UniformContinuous => {
            return Err(Error::Unsupported("use the continuous design kinds".into()))
        }
    };
    v.retain(|a| a.1 > 0.0);
    v.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    Ok(v)
}

/// Per-atom masses `(on L, on H, out)` when the top `b` of the population
/// participates and the top `x` of the participants takes `H`.
fn sorted_split(atoms: &[(f64, f64)], x: f64, b: f64) -> Vec<(f64, f64, f64)> {
    let mut h_left = x;
    let mut in_left = b;
    atoms
        .iter()
        .map(|&(_, m)| {
            let inside = m.min(in_left).max(0.0);
            in_left -= inside;
            let on_h = inside.min(h_left).max(0.0);
            h_left -= on_h;
            (inside - on_h, on_h, m - inside)
        })
        .collect()
}

/// Feasible interval of the charge `g` on `L`, given the split. Each
/// constraint is `alpha + beta g >= 0`.
fn g_interval(atoms: &[(f64, f64)], split: &[(f64, f64, f64)], q: f64, a: f64, c: f64, x: f64, b: f64) -> Option<(f64, f64)> {
    let r = if x > 0.0 { (b - x) / x } else { 0.0 };
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    if x <= 0.0 {
        // Nobody to refund: the budget only balances without a charge.
        lo = 0.0;
        hi = 0.0;
    }
    let slack = 1e-12 * (1.0 + q + c);
    let mut need = |alpha: f64, beta: f64| {
        if beta > 0.0 {
            lo = lo.max(-(alpha + slack) / beta);
        } else if beta < 0.0 {
            hi = hi.min(-(alpha + slack) / beta);
        } else if alpha < -slack {
            lo = f64::INFINITY;
        }
    };
    for (&(theta, _), &(on_l, on_h, out)) in atoms.iter().zip(split) {
        // u_L = theta a q - g, u_H = theta q - c + r g.
        let (ul_a, ul_b) = (theta * a * q, -1.0);
        let (uh_a, uh_b) = (theta * q - c, r);
        if on_l > 0.0 {
            need(ul_a - uh_a, ul_b - uh_b);
            need(ul_a, ul_b);
        }
        if on_h > 0.0 {
            need(uh_a - ul_a, uh_b - ul_b);
            need(uh_a, uh_b);
        }
        if out > 0.0 {
            need(-ul_a, -ul_b);
            need(-uh_a, -uh_b);
        }
    }
    (lo <= hi).then_some((lo, hi))
}

fn split_welfare(atoms: &[(f64, f64)], split: &[(f64, f64, f64)], q: f64, a: f64, c: f64) -> f64 {
    atoms.iter().zip(split).map(|(&(t, _), &(l, h, _))| l * t * a * q + h * (t * q - c)).sum()
}

/// Grid over `(a, x)` with participation at every atom boundary.
fn payment_search(s: &Scenario<f64>, kind: DesignKind, cfg: &OracleConfig) -> Result<BruteForceDesign> {
    let atoms = atoms_desc(s)?;
    let c = s.network.costs[1];
    let mut cuts = vec![];
    let mut acc = 0.0;
    for &(_, m) in &atoms {
        acc += m;
        cuts.push(acc.min(1.0));
    }
    let n = cfg.cells();
    let na = n.min(1000);
    let a_values: Vec<f64> = match kind {
        DesignKind::Side => vec![1.0],
        _ => (0..=na).map(|i| i as f64 / na as f64).collect(),
    };
    let mut best: Option<BruteForceDesign> = None;
    let try_point = |x: f64, a: f64, b: f64, best: &mut Option<BruteForceDesign>| {
        let q = value(s, &[b - x, x]);
        let split = sorted_split(&atoms, x, b);
        if g_interval(&atoms, &split, q, a, c, x, b).is_none() {
            return;
        }
        let sw = split_welfare(&atoms, &split, q, a, c);
        if best.as_ref().map_or(true, |bd| sw > bd.sw) {
            *best = Some(BruteForceDesign { kind, sw, x_h: x, a, b, regime: Regime::SocialOptimum });
        }
    };
    for &b in &cuts {
        let nx = ((b * n as f64).round() as usize).max(1);
        for i in 0..=nx {
            let x = b * i as f64 / nx as f64;
            for &a in &a_values {
                try_point(x, a, b, &mut best);
            }
        }
    }
    // Refine around the best cell; optima often sit on a kink between cells.
    if let Some(bd) = best.clone() {
        let hx = 1.0 / n as f64;
        let ha = if kind == DesignKind::Side { 0.0 } else { 1.0 / na as f64 };
        let steps_a = if kind == DesignKind::Side { 0 } else { 40 };
        for i in 0..=200 {
            let x = (bd.x_h - hx + 2.0 * hx * i as f64 / 200.0).clamp(0.0, bd.b);
            for j in 0..=steps_a {
                let a = if steps_a == 0 { bd.a } else { (bd.a - ha + 2.0 * ha * j as f64 / steps_a as f64).clamp(0.0, 1.0) };
                try_point(x, a, bd.b, &mut best);
            }
        }
    }
    let mut best = best.ok_or_else(|| Error::Numerical("no feasible payment on the grid".into()))?;
    let full = (best.b - 1.0).abs() < 1e-12;
    best.regime = match kind {
        DesignKind::Side if !full => Regime::HalfParticipation,
        DesignKind::Side => {
            let (_, opt) = grid_social_optimum(s, cfg)?;
            if best.sw >= opt - 1e-6 * opt.abs().max(1.0) {
                Regime::SocialOptimum
            } else {
                Regime::FullParticipation
            }
        }
        _ if !full => Regime::CombinedIr2,
        _ => Regime::CombinedIr21,
    };
    Ok(best)
}

/// Stable equilibria of a sorted two-path flow under restriction `a` on `L`,
/// from per-atom payoff gaps. Returns `(x, welfare)` pairs.
fn restricted_stable(s: &Scenario<f64>, atoms: &[(f64, f64)], a: f64, scan: usize) -> Vec<(f64, f64)> {
    let c = s.network.costs[1];
    let q = |x: f64| value(s, &[1.0 - x, x]);
    let gap = |theta: f64, x: f64| theta * (1.0 - a) * q(x) - c;
    let sw = |x: f64| split_welfare(atoms, &sorted_split(atoms, x, 1.0), q(x), a, c);
    let mut out = Vec::new();
    let mut lo = 0.0;
    for (i, &(theta, m)) in atoms.iter().enumerate() {
        let hi = (lo + m).min(1.0);
        // Boundary at `lo`: atoms above are on H, this one on L.
        let above_ok = i == 0 || gap(atoms[i - 1].0, lo) > 0.0;
        if above_ok && gap(theta, lo) < 0.0 {
            out.push((lo, sw(lo)));
        }
        // Interior crossings from H-preferred to L-preferred.
        let f = |x: f64| gap(theta, x);
        let mut prev_x = lo;
        let mut prev = f(lo);
        for j in 1..=scan {
            let x = lo + (hi - lo) * j as f64 / scan as f64;
            let cur = f(x);
            if prev > 0.0 && cur <= 0.0 && x < hi {
                let (mut l, mut h) = (prev_x, x);
                for _ in 0..100 {
                    let mid = 0.5 * (l + h);
                    if f(mid) > 0.0 {
                        l = mid;
                    } else {
                        h = mid;
                    }
                }
                let r = 0.5 * (l + h);
                out.push((r, sw(r)));
            }
            prev_x = x;
            prev = cur;
        }
        lo = hi;
    }
    if let Some(&(theta, _)) = atoms.last() {
        if gap(theta, 1.0) > 0.0 {
            out.push((1.0, sw(1.0)));
        }
    }
    out
}

/// Restriction levels at which some valuation is exactly indifferent
/// between the paths at some load; the equilibrium set only changes there.
/// `theta_at(theta, x)` gives the valuation of the user who is marginal at `x`.
fn indifference_levels(
    q: impl Fn(f64) -> f64,
    c: f64,
    theta_at: impl Fn(f64, f64) -> f64,
    thetas: &[f64],
) -> Vec<f64> {
    let mut out = Vec::new();
    let level = |t: f64, x: f64| {
        let denom = theta_at(t, x) * q(x);
        (denom > 0.0).then(|| 1.0 - c / denom)
    };
    let push = |out: &mut Vec<f64>, a: f64, offsets: &[f64]| {
        out.extend(offsets.iter().map(|o| a + o).filter(|v| (0.0..=1.0).contains(v)));
    };
    let mut peak = (0.0, f64::NEG_INFINITY);
    for j in 0..=1000 {
        let x = j as f64 / 1000.0;
        if q(x) > peak.1 {
            peak = (x, q(x));
        }
        for &t in thetas {
            if let Some(a) = level(t, x) {
                push(&mut out, a, &[-1e-7, 1e-7]);
            }
        }
    }
    // Where the level line touches the top of Q the best stable point
    // approaches it like a square root, so probe much closer there.
    for &t in thetas {
        if let Some(a) = level(t, peak.0) {
            push(&mut out, a, &[-1e-10, -1e-13]);
        }
    }
    out
}

/// Maximize the best stable welfare over the restriction level: uniform
/// grid plus `extra` candidates, then successive zooms around the winner.
/// Ties prefer larger `a` (less restriction).
fn best_over_a(eval: impl Fn(f64) -> Option<(f64, f64)>, extra: Vec<f64>, n: usize) -> Option<(f64, f64, f64)> {
    let consider = |a: f64, best: &mut Option<(f64, f64, f64)>| {
        if let Some((x, sw)) = eval(a) {
            if best.map_or(true, |b| sw > b.2 + 1e-13 || (sw >= b.2 - 1e-13 && a > b.0)) {
                *best = Some((a, x, sw));
            }
        }
    };
    let mut best = None;
    for i in 0..=n {
        consider(i as f64 / n as f64, &mut best);
    }
    for a in extra {
        consider(a, &mut best);
    }
    let mut h = 1.0 / n as f64;
    for _ in 0..6 {
        let Some((a0, _, _)) = best else { break };
        for j in 0..=40 {
            consider((a0 - h + 2.0 * h * j as f64 / 40.0).clamp(0.0, 1.0), &mut best);
        }
        h /= 10.0;
    }
    best
}

fn restriction_search(s: &Scenario<f64>, cfg: &OracleConfig) -> Result<BruteForceDesign> {
    let atoms = atoms_desc(s)?;
    let n = cfg.cells().min(2000);
    let scan = 400;
    let eval = |a: f64| {
        restricted_stable(s, &atoms, a, scan)
            .into_iter()
            .fold(None, |acc: Option<(f64, f64)>, e| if acc.map_or(true, |b| e.1 > b.1) { Some(e) } else { acc })
    };
    let c = s.network.costs[1];
    let thetas: Vec<f64> = atoms.iter().map(|a| a.0).collect();
    let critical = indifference_levels(|x| value(s, &[1.0 - x, x]), c, |theta, _| theta, &thetas);
    let best = best_over_a(eval, critical, n);
    let (a, x, sw) = best.ok_or_else(|| Error::Numerical("no stable restricted equilibrium".into()))?;
    let high_mass = atoms[0].1;
    let regime = if a >= 1.0 - 1e-12 {
        Regime::WeakRestriction
    } else if x >= 1.0 - 1e-9 {
        Regime::StrongRestriction
    } else if atoms.len() > 1 && (x - high_mass).abs() < 1e-6 {
        Regime::LowerMediumRestriction
    } else {
        Regime::MediumRestriction
    };
    Ok(BruteForceDesign { kind: DesignKind::Restriction, sw, x_h: x, a, b: 1.0, regime })
}

/// `int_lo^hi theta dtheta` by the midpoint rule (exact for linear
/// integrands, kept numeric so the oracle never uses a closed form).
fn integrate(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let n = 256;
    let h = (hi - lo) / n as f64;
    (0..n).map(|i| f(lo + (i as f64 + 0.5) * h)).sum::<f64>() * h
}

fn continuous_side_search(s: &Scenario<f64>, cfg: &OracleConfig) -> Result<BruteForceDesign> {
    let c = s.network.costs[1];
    let n = cfg.cells().min(2000);
    let step = 1.0 / n as f64;
    let sw = |x: f64, b: f64| integrate(1.0 - b, 1.0, |t| t * value(s, &[b - x, x])) - x * c;
    // Nobody on H: no charge, everyone joins.
    let mut best = BruteForceDesign {
        kind: DesignKind::ContinuousSide,
        sw: sw(0.0, 1.0),
        x_h: 0.0,
        a: 1.0,
        b: 1.0,
        regime: Regime::FullParticipation,
    };
    for ix in 1..n {
        let x = ix as f64 * step;
        // Both paths used: the charge equalizes them, g = c x / b. The lowest
        // participant (valuation 1 - b) must be exactly indifferent to leaving.
        let marginal = |b: f64| (1.0 - b) * value(s, &[b - x, x]) - c * x / b;
        let mut prev_b = x;
        let mut prev = marginal(x);
        let mut roots = Vec::new();
        for ib in (ix + 1)..=n {
            let b = ib as f64 * step;
            let cur = marginal(b);
            if cur == 0.0 {
                roots.push(b);
            } else if (prev > 0.0) != (cur > 0.0) && prev != 0.0 {
                let (mut l, mut h) = (prev_b, b);
                for _ in 0..100 {
                    let m = 0.5 * (l + h);
                    if (marginal(m) > 0.0) == (prev > 0.0) {
                        l = m;
                    } else {
                        h = m;
                    }
                }
                roots.push(0.5 * (l + h));
            }
            prev_b = b;
            prev = cur;
        }
        for b in roots {
            let v = sw(x, b);
            if v > best.sw {
                let regime = if b >= 1.0 - 1e-12 { Regime::FullParticipation } else { Regime::PartialParticipation };
                best = BruteForceDesign { kind: DesignKind::ContinuousSide, sw: v, x_h: x, a: 1.0, b, regime };
            }
        }
    }
    Ok(best)
}

fn continuous_restriction_search(s: &Scenario<f64>, cfg: &OracleConfig) -> Result<BruteForceDesign> {
    let c = s.network.costs[1];
    let q = |x: f64| value(s, &[1.0 - x, x]);
    let n = cfg.cells().min(2000);
    let sw = |x: f64, a: f64| {
        let qx = q(x);
        integrate(0.0, 1.0 - x, |t| t * a * qx) + integrate(1.0 - x, 1.0, |t| t * qx - c)
    };
    let scan = 400;
    // Stable equilibria: the marginal user (valuation 1 - x) turns from
    // preferring H to preferring L, or everyone stays on L.
    let eval = |a: f64| {
        let f = |x: f64| (1.0 - x) * (1.0 - a) * q(x) - c;
        let mut eq = Vec::new();
        if f(0.0) < 0.0 {
            eq.push(0.0);
        }
        let mut prev = f(0.0);
        for j in 1..=scan {
            let hi = j as f64 / scan as f64;
            let cur = f(hi);
            if prev > 0.0 && cur <= 0.0 {
                let (mut l, mut h) = ((j - 1) as f64 / scan as f64, hi);
                for _ in 0..100 {
                    let m = 0.5 * (l + h);
                    if f(m) > 0.0 {
                        l = m;
                    } else {
                        h = m;
                    }
                }
                eq.push(0.5 * (l + h));
            }
            prev = cur;
        }
        eq.into_iter().map(|x| (x, sw(x, a))).fold(None, |acc: Option<(f64, f64)>, e| {
            if acc.map_or(true, |b| e.1 > b.1) {
                Some(e)
            } else {
                acc
            }
        })
    };
    let critical = indifference_levels(q, c, |_, x| 1.0 - x, &[1.0]);
    let best = best_over_a(eval, critical, n);
    let (a, x, sw) = best.ok_or_else(|| Error::Numerical("no stable restricted equilibrium".into()))?;
    let regime = if a >= 1.0 - 1e-12 { Regime::WeakRestriction } else { Regime::MediumRestriction };
    Ok(BruteForceDesign { kind: DesignKind::ContinuousRestriction, sw, x_h: x, a, b: 1.0, regime })
}

/// Best equilibrium welfare reachable with the given mechanism family,
/// by exhaustive search over its parameters. Two paths, constant costs.
pub fn brute_force_design(s: &Scenario<f64>, kind: DesignKind, cfg: &OracleConfig) -> Result<BruteForceDesign> {
    if s.k() != 2 || !matches!(s.cost_model, CostModel::Constant) {
        return Err(Error::Unsupported("brute-force designs need two paths with constant costs".into()));
    }
    let continuous = matches!(s.types, TypeDistribution::UniformContinuous);
    match kind {
        DesignKind::ContinuousSide | DesignKind::ContinuousRestriction if !continuous => {
            Err(Error::Unsupported("continuous kinds need continuous valuations".into()))
        }
        DesignKind::ContinuousSide => continuous_side_search(s, cfg),
        DesignKind::ContinuousRestriction => continuous_restriction_search(s, cfg),
        DesignKind::Side | DesignKind::Combined => payment_search(s, kind, cfg),
        DesignKind::Restriction => restriction_search(s, cfg),
    }
}

/// Largest relative gap between the analytic slope and a central difference
/// at `points`. Points within `2h` of a kink of a piecewise or tabulated
/// curve compare against the matching one-sided slope instead.
pub fn finite_difference_check(f: &ContentFunction<f64>, points: &[f64]) -> f64 {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for &x in points {
        let slope = f.slope(x);
        let (num, reference) = if x - h < 0.0 {
            ((f.eval(x + h) - f.eval(x)) / h, slope.right)
        } else if x + h > 1.0 {
            ((f.eval(x) - f.eval(x - h)) / h, slope.left)
        } else {
            let left = (f.eval(x) - f.eval(x - h)) / h;
            let right = (f.eval(x + h) - f.eval(x)) / h;
            if (slope.left - slope.right).abs() > 1e-12 {
                // Kink: check each side separately.
                let e = ((left - slope.left).abs()).max((right - slope.right).abs());
                worst = worst.max(e / slope.left.abs().max(slope.right.abs()).max(1e-12));
                continue;
            }
            ((f.eval(x + h) - f.eval(x - h)) / (2.0 * h), slope.mid())
        };
        worst = worst.max((num - reference).abs() / reference.abs().max(1e-12));
    }
    worst
}

/// Per-period planner: each period picks the grid split maximizing that
/// period's welfare given the pools carried over, starting from empty pools.
/// Returns the split it settles on (averaged over the final `tail` periods
/// when it alternates between neighbouring grid points).
pub fn myopic_dynamic_split(p: &DynamicParams<f64>, grid_step: f64, periods: usize) -> Result<f64> {
    let st = DynamicContentState::new(p.total_items, p.users, p.phi, p.gamma)?;
    let half = p.total_items / 2.0;
    let r = (1.0 - 2.0 * p.phi / p.total_items).powf(p.users);
    // One period: discounted old pool plus fresh items not already in it.
    let step = |prev: f64, x: f64| half - (half - p.gamma * prev) * r.powf(x);
    let n = (1.0 / grid_step).round() as usize;
    let (mut qh, mut ql) = (st.q_h, st.q_l);
    let tail = 16.min(periods);
    let mut recent = Vec::with_capacity(tail);
    for t in 0..periods {
        let mut best = (0.0, f64::NEG_INFINITY);
        for i in 0..=n {
            let x = i as f64 / n as f64;
            let v = p.theta * (step(qh, x) + step(ql, 1.0 - x)) - x * p.c_h;
            if v > best.1 {
                best = (x, v);
            }
        }
        qh = step(qh, best.0);
        ql = step(ql, 1.0 - best.0);
        if t + tail >= periods {
            recent.push(best.0);
        }
    }
    Ok(recent.iter().sum::<f64>() / recent.len() as f64)
}

/// Fictitious play on the two-path split: each step moves the `H` load a
/// fraction `1/(k+2)` toward the best response of the marginal user
/// (everyone to `H`, everyone to `L`) at the current loads.
pub fn best_response_fixed_point(s: &Scenario<f64>, m: &Mechanism<f64>, x0: f64, steps: usize) -> f64 {
    let mut x = x0;
    for k in 0..steps {
        let loads = [1.0 - x, x];
        let q = value(s, &loads);
        let pay = m.payments(&loads);
        let theta = mean_theta(s);
        let ul = theta * m.coefficient(0) * q - cost(s, 0, &loads) - pay[0];
        let uh = theta * m.coefficient(1) * q - cost(s, 1, &loads) - pay[1];
        let target = if uh > ul { 1.0 } else if uh < ul { 0.0 } else { x };
        x += (target - x) / (k as f64 + 2.0);
    }
    x
}
