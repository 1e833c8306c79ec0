//! Coverage curves: how much distinct content a mass `x` of users collects
//! on one path, plus multi-path totals and the discounted dynamic pools.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::Real;

/// Per-path coverage curve `Q1(x)` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContentFunction<S> {
    /// `(N/K)(1 - (1 - K phi/N)^(n x))`.
    Exponential {
        total_items: S,
        users: S,
        items_per_user: S,
        paths: usize,
    },
    /// `q x / knee` up to the knee, then flat at `q`.
    PiecewiseCap { cap: S, knee: S },
    /// Linear interpolation through `(x, value)` breakpoints from `(0, 0)` to `x = 1`.
    Tabulated { points: Vec<(S, S)> },
}

/// One-sided derivatives; equal away from kinks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Slope<S> {
    pub left: S,
    pub right: S,
}

impl<S: Real> Slope<S> {
    pub fn mid(&self) -> S {
        (self.left + self.right) / S::lit(2.0)
    }
}

const SHAPE_GRID: usize = 1000;
const SHAPE_TOL: f64 = 1e-9;

impl<S: Real> ContentFunction<S> {
    pub fn exponential(total_items: S, users: S, items_per_user: S, paths: usize) -> Result<Self> {
        if paths < 2 {
            return Err(Error::InvalidContent("need at least two paths".into()));
        }
        let k = S::from_usize(paths).unwrap();
        if !(total_items > S::zero() && users >= S::zero() && items_per_user >= S::zero()) {
            return Err(Error::InvalidContent("N > 0, n >= 0, phi >= 0 required".into()));
        }
        if k * items_per_user >= total_items {
            return Err(Error::InvalidContent(format!(
                "K*phi = {} must be below N = {total_items}",
                k * items_per_user
            )));
        }
        Self::Exponential { total_items, users, items_per_user, paths }.checked()
    }

    pub fn piecewise(cap: S, knee: S) -> Result<Self> {
        if !(cap >= S::zero()) || !(knee > S::zero() && knee <= S::one()) {
            return Err(Error::InvalidContent("cap >= 0 and knee in (0, 1] required".into()));
        }
        Self::PiecewiseCap { cap, knee }.checked()
    }

    pub fn tabulated(points: Vec<(S, S)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidContent("need at least two breakpoints".into()));
        }
        if points[0] != (S::zero(), S::zero()) {
            return Err(Error::InvalidContent("first breakpoint must be (0, 0)".into()));
        }
        if points.last().unwrap().0 != S::one() {
            return Err(Error::InvalidContent("last breakpoint must have x = 1".into()));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidContent("breakpoints must be strictly increasing in x".into()));
        }
        let tol = S::lit(SHAPE_TOL);
        let slopes: Vec<S> =
            points.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
        if slopes.iter().any(|&s| s < -tol) {
            return Err(Error::InvalidContent("tabulated values decrease".into()));
        }
        if slopes.windows(2).any(|w| w[1] > w[0] + tol) {
            return Err(Error::InvalidContent("tabulated values are not concave".into()));
        }
        Self::Tabulated { points }.checked()
    }

    /// Grid check of monotonicity and concavity.
    fn checked(self) -> Result<Self> {
        let n = SHAPE_GRID;
        let vals: Vec<S> = (0..=n)
            .map(|i| self.eval(S::from_usize(i).unwrap() / S::from_usize(n).unwrap()))
            .collect();
        let tol = S::tol(SHAPE_TOL, self.eval(S::one()));
        for i in 0..n {
            if vals[i + 1] < vals[i] - tol {
                return Err(Error::InvalidContent(format!("decreasing near grid point {i}")));
            }
        }
        for i in 1..n {
            if vals[i + 1] - vals[i] > vals[i] - vals[i - 1] + tol {
                return Err(Error::InvalidContent(format!("not concave near grid point {i}")));
            }
        }
        Ok(self)
    }

    /// Number of paths the curve was built for, if it encodes one.
    pub fn paths(&self) -> Option<usize> {
        match self {
            Self::Exponential { paths, .. } => Some(*paths),
            _ => None,
        }
    }

    /// `Q1(x)` without a domain check; `x` is clamped into `[0, 1]`.
    pub fn eval(&self, x: S) -> S {
        let x = x.max(S::zero()).min(S::one());
        match self {
            Self::Exponential { total_items, users, items_per_user, paths } => {
                let k = S::from_usize(*paths).unwrap();
                let ln_rho = (-(k * *items_per_user) / *total_items).ln_1p();
                -(*total_items / k) * (*users * x * ln_rho).exp_m1()
            }
            Self::PiecewiseCap { cap, knee } => {
                if x >= *knee {
                    *cap
                } else {
                    *cap * x / *knee
                }
            }
            Self::Tabulated { points } => {
                let i = points.partition_point(|p| p.0 <= x).clamp(1, points.len() - 1);
                let (x0, y0) = points[i - 1];
                let (x1, y1) = points[i];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }

    /// One-sided slopes of `Q1` at `x` (clamped into `[0, 1]`). At the domain
    /// ends the missing side copies the existing one.
    pub fn slope(&self, x: S) -> Slope<S> {
        let x = x.max(S::zero()).min(S::one());
        match self {
            Self::Exponential { total_items, users, items_per_user, paths } => {
                let k = S::from_usize(*paths).unwrap();
                let ln_rho = (-(k * *items_per_user) / *total_items).ln_1p();
                let d = -(*total_items / k) * *users * ln_rho * (*users * x * ln_rho).exp();
                Slope { left: d, right: d }
            }
            Self::PiecewiseCap { cap, knee } => {
                let s = *cap / *knee;
                let left = if x <= *knee { s } else { S::zero() };
                let right = if x < *knee { s } else { S::zero() };
                if x == S::zero() {
                    Slope { left: right, right }
                } else if x == S::one() {
                    Slope { left, right: left }
                } else {
                    Slope { left, right }
                }
            }
            Self::Tabulated { points } => {
                let seg = |i: usize| {
                    let (x0, y0) = points[i];
                    let (x1, y1) = points[i + 1];
                    (y1 - y0) / (x1 - x0)
                };
                let last = points.len() - 2;
                // Segment whose half-open interior contains x from the right.
                let r = points.partition_point(|p| p.0 <= x).saturating_sub(1).min(last);
                let on_break = points[r].0 == x;
                let l = if on_break && r > 0 { r - 1 } else { r };
                let (left, right) = (seg(l), seg(r));
                if x == S::one() {
                    Slope { left: seg(last), right: seg(last) }
                } else {
                    Slope { left, right }
                }
            }
        }
    }

    /// `Q1(1)`, the natural content scale.
    pub fn scale(&self) -> S {
        self.eval(S::one())
    }
}

/// `Q1(x)` with a domain check.
pub fn q1_eval<S: Real>(f: &ContentFunction<S>, x: S) -> Result<S> {
    in_unit(x, "x")?;
    Ok(f.eval(x))
}

/// One-sided derivatives of `Q1` at `x`.
pub fn q1_derivative<S: Real>(f: &ContentFunction<S>, x: S) -> Result<Slope<S>> {
    in_unit(x, "x")?;
    Ok(f.slope(x))
}

/// Two-path total `Q(x_H, b) = Q1(x_H) + Q1(b - x_H)`.
pub fn q_total<S: Real>(f: &ContentFunction<S>, x_h: S, b: S) -> Result<S> {
    in_unit(b, "b")?;
    if !(x_h >= S::zero() && x_h <= b) {
        return domain(format!("x_H = {x_h} must lie in [0, b = {b}]"));
    }
    Ok(f.eval(x_h) + f.eval(b - x_h))
}

/// `Q0 + sum_k Q1(x_k)` over a full-mass flow.
pub fn q_multi<S: Real>(
    f: &ContentFunction<S>,
    flows: &[S],
    overlap: Option<&OverlapSegment<S>>,
) -> Result<S> {
    let total: S = flows.iter().copied().sum();
    if flows.iter().any(|&x| !(x >= S::zero())) || (total - S::one()).abs() > S::tol(1e-9, S::one())
    {
        return domain(format!("flows {flows:?} are not on the unit simplex"));
    }
    let base = overlap.map_or(S::zero(), |o| o.value());
    Ok(base + flows.iter().map(|&x| f.eval(x)).sum::<S>())
}

fn in_unit<S: Real>(x: S, name: &str) -> Result<()> {
    if x >= S::zero() && x <= S::one() {
        Ok(())
    } else {
        domain(format!("{name} = {x} outside [0, 1]"))
    }
}

/// Shared segment every path traverses; contributes a constant `Q0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapSegment<S> {
    pub items: S,
    pub users: S,
    pub items_per_user: S,
}

impl<S: Real> OverlapSegment<S> {
    pub fn new(items: S, users: S, items_per_user: S) -> Result<Self> {
        if !(items > S::zero() && items_per_user >= S::zero() && items_per_user < items) {
            return Err(Error::InvalidContent("overlap needs N0 > phi >= 0".into()));
        }
        Ok(Self { items, users, items_per_user })
    }

    pub fn value(&self) -> S {
        -self.items * (self.users * (-self.items_per_user / self.items).ln_1p()).exp_m1()
    }
}

/// Discounted information pools of the repeated two-path model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynamicContentState<S> {
    pub q_h: S,
    pub q_l: S,
    pub gamma: S,
    pub total_items: S,
    pub users: S,
    pub phi: S,
}

impl<S: Real> DynamicContentState<S> {
    /// Empty pools.
    pub fn new(total_items: S, users: S, phi: S, gamma: S) -> Result<Self> {
        if !(gamma > S::zero() && gamma < S::one()) {
            return Err(Error::InvalidContent("discount must be in (0, 1)".into()));
        }
        if !(total_items > S::lit(2.0) * phi && phi > S::zero() && users > S::zero()) {
            return Err(Error::InvalidContent("need N > 2 phi > 0 and n > 0".into()));
        }
        Ok(Self { q_h: S::zero(), q_l: S::zero(), gamma, total_items, users, phi })
    }

    /// Retention ratio `r = (1 - 2 phi / N)^n`.
    pub fn r(&self) -> S {
        (self.users * (-S::lit(2.0) * self.phi / self.total_items).ln_1p()).exp()
    }

    fn half(&self) -> S {
        self.total_items / S::lit(2.0)
    }

    fn pool_step(&self, prev: S, x: S) -> S {
        let h = self.half();
        let fresh = h * (S::one() - self.r().powf(x));
        h * (S::one() - (S::one() - self.gamma * prev / h) * (S::one() - fresh / h))
    }

    fn pool_fixed(&self, x: S) -> S {
        let rx = self.r().powf(x);
        self.half() * (S::one() - rx) / (S::one() - self.gamma * rx)
    }
}

/// One period of the pool recursion with `x_h` of the users on `H`.
pub fn dynamic_step<S: Real>(state: &DynamicContentState<S>, x_h: S) -> DynamicContentState<S> {
    let x = x_h.max(S::zero()).min(S::one());
    DynamicContentState {
        q_h: state.pool_step(state.q_h, x),
        q_l: state.pool_step(state.q_l, S::one() - x),
        ..*state
    }
}

/// Closed-form stationary pools `(Q_H, Q_L)` under a constant split.
pub fn dynamic_stationary<S: Real>(state: &DynamicContentState<S>, x_h: S) -> (S, S) {
    let x = x_h.max(S::zero()).min(S::one());
    (state.pool_fixed(x), state.pool_fixed(S::one() - x))
}

/// Iterate [`dynamic_step`] until both pools move less than `1e-12`.
pub fn dynamic_fixed_point<S: Real>(
    state: &DynamicContentState<S>,
    x_h: S,
) -> Result<(DynamicContentState<S>, usize)> {
    let tol = S::tol(1e-12, state.half());
    let mut cur = *state;
    for step in 1..=1_000_000 {
        let next = dynamic_step(&cur, x_h);
        let moved = (next.q_h - cur.q_h).abs().max((next.q_l - cur.q_l).abs());
        cur = next;
        if moved < tol {
            return Ok((cur, step));
        }
    }
    Err(Error::Numerical("dynamic pools did not settle within 1e6 steps".into()))
}
