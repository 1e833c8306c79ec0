//! Scalar root finding and 1-D maximization.

use crate::error::{Error, Result};
use crate::Real;

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// Returns an endpoint if it is already a root. Stops when the bracket is
/// narrower than `tol` or after 200 halvings.
pub fn bisect<S: Real>(mut f: impl FnMut(S) -> S, mut lo: S, mut hi: S, tol: S) -> Result<S> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == S::zero() {
        return Ok(lo);
    }
    if fhi == S::zero() {
        return Ok(hi);
    }
    if flo.is_nan() || fhi.is_nan() || (flo > S::zero()) == (fhi > S::zero()) {
        return Err(Error::Numerical(format!(
            "no sign change on [{lo}, {hi}] (f = {flo}, {fhi})"
        )));
    }
    let two = S::lit(2.0);
    for _ in 0..200 {
        let mid = (lo + hi) / two;
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == S::zero() {
            return Ok(mid);
        }
        if (fm > S::zero()) == (flo > S::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / two)
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
pub fn golden_max<S: Real>(mut f: impl FnMut(S) -> S, mut lo: S, mut hi: S, tol: S) -> (S, S) {
    let inv_phi = (S::lit(5.0).sqrt() - S::one()) / S::lit(2.0);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while hi - lo > tol && iters < 300 {
        // `>=` keeps the left bracket on plateaus so ties drift toward smaller x.
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
        iters += 1;
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Robust maximizer on `[lo, hi]`: coarse scan with `grid` cells, golden
/// refinement inside the best cell pair, then a tie-break that moves to the
/// smallest `x` whose value is within `tie` of the maximum (found by
/// bisecting the superlevel set, valid for concave `f`).
pub fn maximize<S: Real>(
    f: impl Fn(S) -> S,
    lo: S,
    hi: S,
    grid: usize,
    tol: S,
    tie: S,
) -> (S, S) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let grid = grid.max(2);
    let step = (hi - lo) / S::from_usize(grid).unwrap();
    let at = |i: usize| {
        if i == grid {
            hi
        } else {
            lo + step * S::from_usize(i).unwrap()
        }
    };
    let mut best_i = 0;
    let mut best_v = f(lo);
    for i in 1..=grid {
        let v = f(at(i));
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let a = at(best_i.saturating_sub(1));
    let b = at((best_i + 1).min(grid));
    let (gx, gv) = golden_max(&f, a, b, tol);
    let (mut x, mut v) = if gv > best_v { (gx, gv) } else { (at(best_i), best_v) };
    // Endpoints of the bracket can beat interior golden probes on kinks.
    for e in [a, b] {
        let fe = f(e);
        if fe > v || (fe == v && e < x) {
            x = e;
            v = fe;
        }
    }
    tie_break_left(&f, lo, x, v, tol, tie)
}

/// Smallest point in `[lo, x]` with `f >= v - tie`, assuming `f` is
/// nondecreasing on that interval (true left of a concave maximizer).
pub fn tie_break_left<S: Real>(f: impl Fn(S) -> S, lo: S, x: S, v: S, tol: S, tie: S) -> (S, S) {
    let level = v - tie;
    let flo = f(lo);
    if flo >= level {
        return (lo, flo);
    }
    let (mut a, mut b) = (lo, x);
    let two = S::lit(2.0);
    while b - a > tol {
        let m = (a + b) / two;
        if f(m) >= level {
            b = m;
        } else {
            a = m;
        }
    }
    (b, f(b))
}

/// Evenly spaced points `lo, lo+h, ..., hi` (inclusive, `n+1` of them).
pub fn linspace<S: Real>(lo: S, hi: S, n: usize) -> impl Iterator<Item = S> {
    let n = n.max(1);
    let h = (hi - lo) / S::from_usize(n).unwrap();
    (0..=n).map(move |i| if i == n { hi } else { lo + h * S::from_usize(i).unwrap() })
}
