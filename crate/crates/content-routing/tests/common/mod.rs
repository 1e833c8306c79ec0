//! Instance generators and hand-written reference formulas shared by the
//! integration tests. Nothing here calls a designer.
#![allow(dead_code)]

use content_routing::{ContentFunction, Scenario, TypeDistribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `Q1(x)` written out from the curve parameters.
pub fn q1(f: &ContentFunction<f64>, x: f64) -> f64 {
    match f {
        ContentFunction::Exponential { total_items, users, items_per_user, paths } => {
            let k = *paths as f64;
            total_items / k * (1.0 - (1.0 - k * items_per_user / total_items).powf(users * x))
        }
        ContentFunction::PiecewiseCap { cap, knee } => cap * (x / knee).min(1.0),
        ContentFunction::Tabulated { points } => {
            let mut prev = (0.0, 0.0);
            for &(px, py) in points {
                if x <= px {
                    if px == prev.0 {
                        return py;
                    }
                    return prev.1 + (py - prev.1) * (x - prev.0) / (px - prev.0);
                }
                prev = (px, py);
            }
            prev.1
        }
    }
}

/// `(Q_low, Q_high) = (Q(0, 1), Q(0.5, 1))` for a symmetric two-path curve.
pub fn q_levels(f: &ContentFunction<f64>) -> (f64, f64) {
    (q1(f, 1.0), 2.0 * q1(f, 0.5))
}

pub fn log_uniform(r: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    r.gen_range(lo.ln()..=hi.ln()).exp()
}

pub fn random_exponential(r: &mut impl Rng, paths: usize) -> ContentFunction<f64> {
    let n_items = r.gen_range(50..=500) as f64;
    let users = r.gen_range(50..=500) as f64;
    let phi = if r.gen_bool(0.5) { 1.0 } else { 2.0 };
    ContentFunction::exponential(n_items, users, phi, paths).unwrap()
}

pub fn random_content(r: &mut impl Rng) -> ContentFunction<f64> {
    if r.gen_bool(0.5) {
        ContentFunction::piecewise(r.gen_range(0.5..=2.0), r.gen_range(0.02..=0.5)).unwrap()
    } else {
        random_exponential(r, 2)
    }
}

/// `c_H` log-uniform over `[1e-4, 2]` times the peak content value.
pub fn random_cost(r: &mut impl Rng, f: &ContentFunction<f64>, theta0: f64) -> f64 {
    let (_, qh) = q_levels(f);
    theta0 * qh * log_uniform(r, 1e-4, 2.0)
}

pub fn homogeneous_exponential(r: &mut impl Rng) -> Scenario<f64> {
    let f = random_exponential(r, 2);
    let c = random_cost(r, &f, 0.5);
    Scenario::two_path(f, TypeDistribution::Homogeneous { theta: 0.5 }, c).unwrap()
}

pub fn two_type(r: &mut impl Rng) -> Scenario<f64> {
    let f = random_content(r);
    let theta1 = r.gen_range(0.0..=0.5);
    let c = random_cost(r, &f, 0.5);
    Scenario::two_path(f, TypeDistribution::two_type(theta1, 1.0 - theta1), c).unwrap()
}

pub fn homogeneous(r: &mut impl Rng) -> Scenario<f64> {
    let f = random_content(r);
    let c = random_cost(r, &f, 0.5);
    Scenario::two_path(f, TypeDistribution::Homogeneous { theta: 0.5 }, c).unwrap()
}

pub fn continuous(r: &mut impl Rng) -> Scenario<f64> {
    let f = random_content(r);
    let c = random_cost(r, &f, 0.5);
    Scenario::two_path(f, TypeDistribution::UniformContinuous, c).unwrap()
}

/// Random point of the open simplex with every coordinate at least `floor`.
pub fn simplex_point(r: &mut impl Rng, k: usize, floor: f64) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -r.gen_range(1e-12f64..1.0).ln()).collect();
    let sum: f64 = e.iter().sum();
    let scale = 1.0 - floor * k as f64;
    e.iter().map(|v| floor + scale * v / sum).collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Closed-form welfare limits of the two-path restriction designs.
pub fn restriction_limit(s: &Scenario<f64>) -> f64 {
    let (ql, qh) = q_levels(&s.content);
    let c = s.network.costs[1];
    match s.types {
        TypeDistribution::Homogeneous { theta } => {
            if c < theta * (qh - ql) {
                theta * qh - c
            } else {
                theta * ql
            }
        }
        TypeDistribution::TwoType { theta1: t1, theta2: t2, .. } => {
            let t0 = 0.5 * (t1 + t2);
            if t1 == 0.0 || t2 * ql > t1 * qh {
                let thr = (t1 + t2) * (qh - ql) * t2 * ql / (t1 * qh + t2 * ql);
                if c < thr {
                    t0 * qh - (t1 * qh + t2 * ql) / (2.0 * t2 * ql) * c
                } else {
                    t0 * ql
                }
            } else if c < t0 * (qh - ql) {
                t0 * qh - c
            } else {
                t0 * ql
            }
        }
        TypeDistribution::UniformContinuous => unreachable!(),
    }
}

/// Root of `Q(x, 1) = level` on `[lo, hi]`, where `Q` is monotone.
pub fn level_root(f: &ContentFunction<f64>, level: f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = |x: f64| q1(f, x) + q1(f, 1.0 - x) - level;
    let up = g(hi) > g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (g(mid) > 0.0) == up {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
