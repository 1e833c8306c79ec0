//! Efficiency ratios, the adversarial instances behind the tightness
//! arguments, and seeded random probes of the combined bound.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::content_model::ContentFunction;
use crate::error::{Error, Result};
use crate::game_core::{
    classify_stability, equilibrium_no_incentive, social_optimum, social_welfare, verify_equilibrium, Mechanism,
    Scenario, Stability, Tolerances, TypeDistribution, TypedFlow,
};
use crate::mechanisms::{
    design_combined, design_content_restriction, design_continuous_content_restriction,
    design_continuous_side_payment, design_multipath_content_restriction, design_multipath_side_payment,
    design_side_payment, linear_cost_design, DesignConfig, DesignOutcome,
};
use crate::numerics::bisect;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Designer {
    None,
    Side,
    Restriction,
    Combined,
}

impl Designer {
    pub const ALL: [Designer; 4] = [Designer::None, Designer::Side, Designer::Restriction, Designer::Combined];

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Side => "side",
            Self::Restriction => "restriction",
            Self::Combined => "combined",
        }
    }
}

impl fmt::Display for Designer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Designer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::InvalidScenario(format!("unknown designer `{s}` (none|side|restriction|combined)")))
    }
}

/// Run the designer that fits the scenario's shape. `Ok(None)` for the
/// no-incentive baseline.
pub fn run_designer<S: Real>(
    s: &Scenario<S>,
    designer: Designer,
    cfg: &DesignConfig<S>,
) -> Result<Option<DesignOutcome<S>>> {
    let continuous = matches!(s.types, TypeDistribution::UniformContinuous);
    let out = match designer {
        Designer::None => return Ok(None),
        _ if !s.is_constant_cost() => {
            let d = linear_cost_design(s, cfg)?;
            match designer {
                Designer::Side => d.side_payment,
                Designer::Restriction => d.restriction,
                _ => return Err(Error::Unsupported("no combined design for traffic-dependent costs".into())),
            }
        }
        _ if s.k() > 2 => match designer {
            Designer::Side => design_multipath_side_payment(s, cfg)?.1,
            Designer::Restriction => design_multipath_content_restriction(s, cfg)?,
            _ => return Err(Error::Unsupported("no combined design for more than two paths".into())),
        },
        Designer::Side if continuous => design_continuous_side_payment(s, cfg)?,
        Designer::Restriction if continuous => design_continuous_content_restriction(s, cfg)?,
        Designer::Combined if continuous => {
            return Err(Error::Unsupported("no combined design for continuous valuations".into()))
        }
        Designer::Side => design_side_payment(s, cfg)?,
        Designer::Restriction => design_content_restriction(s, cfg)?,
        Designer::Combined => design_combined(s, cfg)?,
    };
    Ok(Some(out))
}

/// Welfare the designer guarantees: the no-incentive equilibrium, or the
/// designed equilibrium under the mechanism actually emitted.
pub fn designed_welfare<S: Real>(s: &Scenario<S>, designer: Designer, cfg: &DesignConfig<S>) -> Result<S> {
    Ok(match run_designer(s, designer, cfg)? {
        None => equilibrium_no_incentive(s)?.social_welfare,
        Some(d) => d.sw_at_design,
    })
}

/// Designed welfare over the unconstrained optimum.
pub fn poa_ratio<S: Real>(s: &Scenario<S>, designer: Designer, cfg: &DesignConfig<S>) -> Result<S> {
    let (_, opt) = social_optimum(s)?;
    let sw = designed_welfare(s, designer, cfg)?;
    if opt <= S::zero() {
        return Ok(S::one());
    }
    Ok(sw / opt)
}

/// All two-path equilibria of a discrete-type scenario under `m`, with
/// stability verdicts. Candidates are the corners, the points where atoms
/// are fully sorted, and the indifference points of the marginal atom when
/// the flow fills `H` from the highest valuation down.
pub fn two_path_equilibria<S: Real>(
    s: &Scenario<S>,
    m: &Mechanism<S>,
    tol: &Tolerances,
) -> Result<Vec<(TypedFlow<S>, Stability)>> {
    if s.k() != 2 {
        return Err(Error::Unsupported("equilibrium enumeration is for two paths".into()));
    }
    let atoms = s.types.atoms()?;
    let mut order: Vec<usize> = (0..atoms.len()).collect();
    order.sort_by(|&i, &j| atoms[j].0.partial_cmp(&atoms[i].0).unwrap());
    let mut cuts = vec![S::zero()];
    let mut acc = S::zero();
    for &i in &order {
        acc = acc + atoms[i].1;
        cuts.push(acc.min(S::one()));
    }
    let mut candidates = cuts.clone();
    for (seg, &i) in order.iter().enumerate() {
        let (lo, hi) = (cuts[seg], cuts[seg + 1]);
        if hi <= lo {
            continue;
        }
        let theta = atoms[i].0;
        let gap = |x: S| {
            let loads = [S::one() - x, x];
            let v = s.value(&loads);
            let p = crate::game_core::payoff_row(s, m, theta, &loads, v);
            p[1] - p[0]
        };
        let n = 400;
        let step = (hi - lo) / S::from_usize(n).unwrap();
        let mut prev = gap(lo);
        for k in 1..=n {
            let x = if k == n { hi } else { lo + step * S::from_usize(k).unwrap() };
            let cur = gap(x);
            if (prev > S::zero()) != (cur > S::zero()) {
                let a = x - step;
                if let Ok(r) = bisect(gap, a, x, S::tol(1e-14, S::one())) {
                    candidates.push(r);
                }
            }
            prev = cur;
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup_by(|a, b| (*a - *b).abs() < S::lit(1e-12));
    let mut out = Vec::new();
    for x in candidates {
        let flow = TypedFlow::sorted_two_path(s, x)?;
        if verify_equilibrium(s, m, &flow, tol)?.0 {
            let st = classify_stability(s, m, &flow, tol)?;
            out.push((flow, st));
        }
    }
    Ok(out)
}

/// Lowest welfare among the stable equilibria of `m`, if any is stable.
pub fn worst_stable_welfare<S: Real>(s: &Scenario<S>, m: &Mechanism<S>, tol: &Tolerances) -> Result<Option<S>> {
    let mut worst: Option<S> = None;
    for (flow, st) in two_path_equilibria(s, m, tol)? {
        if st == Stability::Stable {
            let sw = social_welfare(s, m, &flow)?;
            worst = Some(worst.map_or(sw, |w| w.min(sw)));
        }
    }
    Ok(worst)
}

/// Adversarial families from the tightness arguments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorstCase {
    /// No incentive, content saturating at half the users; ratio -> 1/2 as `c_h -> 0`.
    Prop2 { q: f64, c_h: f64 },
    /// Side payment with a near-worthless low type; ratio -> 1/2 as
    /// `c_h -> 0` with `theta1 / c_h -> 0`.
    Thm1 { q: f64, c_h: f64, theta1: f64 },
    /// Restriction with one valuation, content saturating after `delta`.
    Thm2 { q: f64, delta: f64 },
    /// Restriction with a near-worthless low type, `c_h = 2 theta0 q`.
    Thm3 { q: f64, delta: f64, theta1: f64 },
    /// `k` paths, content saturating after `delta`, `c_h = 2 theta0 q`.
    Multipath { k: usize, q: f64, delta: f64 },
}

/// Builds the instance, with `theta0 = 0.5`.
pub fn worst_case_instance<S: Real>(kind: WorstCase) -> Result<Scenario<S>> {
    let l = S::lit;
    let half = l(0.5);
    match kind {
        WorstCase::Prop2 { q, c_h } => {
            Scenario::two_path(ContentFunction::piecewise(l(q), half)?, TypeDistribution::Homogeneous { theta: half }, l(c_h))
        }
        WorstCase::Thm1 { q, c_h, theta1 } => Scenario::two_path(
            ContentFunction::piecewise(l(q), half)?,
            TypeDistribution::two_type(l(theta1), l(1.0 - theta1)),
            l(c_h),
        ),
        WorstCase::Thm2 { q, delta } => Scenario::two_path(
            ContentFunction::piecewise(l(q), l(delta))?,
            TypeDistribution::Homogeneous { theta: half },
            half * l(q),
        ),
        WorstCase::Thm3 { q, delta, theta1 } => Scenario::two_path(
            ContentFunction::piecewise(l(q), l(delta))?,
            TypeDistribution::two_type(l(theta1), l(1.0 - theta1)),
            l(q),
        ),
        WorstCase::Multipath { k, q, delta } => Scenario::multipath(
            ContentFunction::piecewise(l(q), l(delta))?,
            TypeDistribution::Homogeneous { theta: half },
            k,
            l(q),
        ),
    }
}

/// Instance families for random probes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilySampler {
    pub theta0: f64,
    /// `c_H` is log-uniform on `[lo, hi] * theta0 * Q(0.5, 1)`.
    pub c_rel_lo: f64,
    pub c_rel_hi: f64,
    pub piecewise: bool,
    pub exponential: bool,
    /// Piecewise knee uniform on `[knee_lo, 0.5]`, cap uniform on `[0.5, 2]`.
    pub knee_lo: f64,
    /// Exponential `N`, `n` uniform integers in `[lo, hi]`, `phi` in `{1, 2}`.
    pub exp_lo: u32,
    pub exp_hi: u32,
}

impl Default for FamilySampler {
    fn default() -> Self {
        Self {
            theta0: 0.5,
            c_rel_lo: 1e-4,
            c_rel_hi: 2.0,
            piecewise: true,
            exponential: true,
            knee_lo: 0.01,
            exp_lo: 50,
            exp_hi: 500,
        }
    }
}

impl FamilySampler {
    pub fn label(&self) -> String {
        match (self.piecewise, self.exponential) {
            (true, true) => "piecewise+exponential".into(),
            (true, false) => "piecewise".into(),
            _ => "exponential".into(),
        }
    }

    /// Two-type instance number `index` of the stream for `seed`.
    pub fn sample(&self, seed: u64, index: u64) -> Result<Scenario<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let use_pw = match (self.piecewise, self.exponential) {
            (true, true) => rng.gen_bool(0.5),
            (p, _) => p,
        };
        let content = if use_pw {
            let cap = rng.gen_range(0.5..=2.0);
            let knee = rng.gen_range(self.knee_lo..=0.5);
            ContentFunction::piecewise(cap, knee)?
        } else {
            let big_n = rng.gen_range(self.exp_lo..=self.exp_hi) as f64;
            let users = rng.gen_range(self.exp_lo..=self.exp_hi) as f64;
            let phi = if rng.gen_bool(0.5) { 1.0 } else { 2.0 };
            ContentFunction::exponential(big_n, users, phi, 2)?
        };
        let theta1 = rng.gen_range(0.0..=self.theta0);
        let types = TypeDistribution::two_type(theta1, 2.0 * self.theta0 - theta1);
        let peak = content.eval(0.5) * 2.0;
        let (lo, hi) = (self.c_rel_lo.ln(), self.c_rel_hi.ln());
        let c_h = self.theta0 * peak * rng.gen_range(lo..=hi).exp();
        Scenario::two_path(content, types, c_h)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PoAProbeReport {
    pub family: String,
    pub designer: Designer,
    pub samples: usize,
    pub seed: u64,
    pub bound: f64,
    pub min_ratio: f64,
    pub argmin_index: u64,
    pub argmin_instance: Option<Scenario<f64>>,
    pub argmin_regime: Option<String>,
    /// Samples whose ratio fell below `bound` (beyond 1e-9).
    pub violations: usize,
    /// Combined designer only: samples where it fell short of the better
    /// single mechanism by more than 1e-8.
    pub dominance_violations: usize,
    /// Samples the designer could not handle.
    pub failures: usize,
}

struct Probe {
    index: u64,
    ratio: f64,
    regime: Option<String>,
    dominance_ok: bool,
}

fn probe_one(
    sampler: &FamilySampler,
    designer: Designer,
    seed: u64,
    index: u64,
    cfg: &DesignConfig<f64>,
) -> Result<Probe> {
    let s = sampler.sample(seed, index)?;
    let (_, opt) = social_optimum(&s)?;
    let out = run_designer(&s, designer, cfg)?;
    let (sw, regime, predicted) = match &out {
        None => (equilibrium_no_incentive(&s)?.social_welfare, None, None),
        Some(d) => (d.sw_at_design, Some(d.label()), Some(d.predicted_sw)),
    };
    let mut dominance_ok = true;
    if designer == Designer::Combined {
        let side = design_side_payment(&s, cfg)?.predicted_sw;
        let restr = design_content_restriction(&s, cfg)?.predicted_sw;
        dominance_ok = predicted.unwrap() >= side.max(restr) - 1e-8;
    }
    let ratio = if opt > 0.0 { sw / opt } else { 1.0 };
    Ok(Probe { index, ratio, regime, dominance_ok })
}

/// Sample `n_samples` two-type instances and record the worst ratio.
/// Deterministic for a given seed regardless of thread count.
pub fn poa_search(
    sampler: &FamilySampler,
    designer: Designer,
    n_samples: usize,
    seed: u64,
    bound: f64,
    cfg: &DesignConfig<f64>,
) -> PoAProbeReport {
    let results: Vec<Result<Probe>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| probe_one(sampler, designer, seed, i, cfg))
        .collect();
    let mut report = PoAProbeReport {
        family: sampler.label(),
        designer,
        samples: n_samples,
        seed,
        bound,
        min_ratio: f64::INFINITY,
        argmin_index: 0,
        argmin_instance: None,
        argmin_regime: None,
        violations: 0,
        dominance_violations: 0,
        failures: 0,
    };
    for r in results {
        match r {
            Ok(p) => {
                if p.ratio < bound - 1e-9 {
                    report.violations += 1;
                }
                if !p.dominance_ok {
                    report.dominance_violations += 1;
                }
                if p.ratio < report.min_ratio {
                    report.min_ratio = p.ratio;
                    report.argmin_index = p.index;
                    report.argmin_regime = p.regime;
                }
            }
            Err(_) => report.failures += 1,
        }
    }
    if report.min_ratio.is_finite() {
        report.argmin_instance = sampler.sample(seed, report.argmin_index).ok();
    }
    report
}

/// Designed welfare of several designers next to the optimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WelfareCell<S> {
    pub sw_opt: S,
    pub designs: Vec<(Designer, S)>,
}

impl<S: Real> WelfareCell<S> {
    pub fn sw(&self, d: Designer) -> Option<S> {
        self.designs.iter().find(|p| p.0 == d).map(|p| p.1)
    }

    /// Designed welfare over the optimum (1 when the optimum is not positive).
    pub fn ratio(&self, d: Designer) -> Option<S> {
        let sw = self.sw(d)?;
        Some(if self.sw_opt > S::zero() { sw / self.sw_opt } else { S::one() })
    }
}

pub fn welfare_cell<S: Real>(s: &Scenario<S>, designers: &[Designer], cfg: &DesignConfig<S>) -> Result<WelfareCell<S>> {
    let (_, sw_opt) = social_optimum(s)?;
    let designs = designers
        .iter()
        .map(|&d| designed_welfare(s, d, cfg).map(|w| (d, w)))
        .collect::<Result<_>>()?;
    Ok(WelfareCell { sw_opt, designs })
}

/// Coverage `(N, n, phi)` used by the default figure sweeps. With `n = N`
/// the curve saturates hard enough that side payments fall below 0.7 of the
/// optimum near `theta1 = 0`; `n = N / 2` keeps the sweep in the moderate
/// regime.
pub const FIGURE_CONTENT: (f64, f64, f64) = (400.0, 200.0, 1.0);

/// Two-type instance on the figure grid, mean valuation `theta0`.
pub fn figure_instance(theta0: f64, theta1: f64, c_h: f64) -> Result<Scenario<f64>> {
    let (n_items, users, phi) = FIGURE_CONTENT;
    let content = ContentFunction::exponential(n_items, users, phi, 2)?;
    Scenario::two_path(content, TypeDistribution::two_type(theta1, 2.0 * theta0 - theta1), c_h)
}
