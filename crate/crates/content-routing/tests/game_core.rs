mod common;

use common::{level_root, q1, rel_err, rng};
use content_routing::game_core::{linear_cost_split, plain_welfare};
use content_routing::mechanisms::side_payment_schedule;
use content_routing::oracle::{grid_social_optimum, OracleConfig};
use content_routing::*;
use rand::Rng;

const TH: f64 = 0.5;

fn pw() -> ContentFunction<f64> {
    ContentFunction::piecewise(1.0, 0.5).unwrap()
}

fn exp100() -> ContentFunction<f64> {
    ContentFunction::exponential(100.0, 100.0, 1.0, 2).unwrap()
}

fn homog(f: ContentFunction<f64>, c: f64) -> Scenario<f64> {
    Scenario::two_path(f, TypeDistribution::Homogeneous { theta: TH }, c).unwrap()
}

fn restriction(a: f64) -> Mechanism<f64> {
    Mechanism::ContentRestriction { a: vec![a, 1.0] }
}

#[test]
fn payoff_examples() {
    let s = homog(pw(), 0.3);
    let none = Mechanism::NoIncentive;
    assert_eq!(payoff(&s, &none, TH, 0, &[1.0, 0.0]).unwrap(), 0.5);

    let s1 = homog(pw(), 1.0);
    let side = Mechanism::SidePayment {
        schedule: side_payment_schedule(0.3, 1.0, 1.0).unwrap(),
        participation_b: 1.0,
    };
    let loads = [0.7, 0.3];
    let q = 1.6;
    for theta in [0.1, 0.5, 0.9] {
        let ul = payoff(&s1, &side, theta, 0, &loads).unwrap();
        let uh = payoff(&s1, &side, theta, 1, &loads).unwrap();
        assert!((ul - uh).abs() < 1e-12);
        assert!((theta * q - ul - 0.3).abs() < 1e-12, "perceived cost");
    }

    let m = restriction(0.5);
    let loads = [0.5, 0.5];
    assert!((payoff(&s, &m, TH, 0, &loads).unwrap() - 0.5).abs() < 1e-15);
    assert!((payoff(&s, &m, TH, 1, &loads).unwrap() - (1.0 - 0.3)).abs() < 1e-15);

    assert!(matches!(payoff(&s, &Mechanism::ContentRestriction { a: vec![0.5, 1.0, 1.0] }, TH, 0, &loads), Err(Error::Mismatch(_))));
    assert!(matches!(payoff(&s, &none, TH, 2, &loads), Err(Error::Mismatch(_))));
}

#[test]
fn payoffs_differ_across_paths_only_by_cost_and_coefficient() {
    let mut r = rng(3);
    for _ in 0..100 {
        let s = common::two_type(&mut r);
        let x: f64 = r.gen_range(0.0..=1.0);
        let a: f64 = r.gen_range(0.0..=1.0);
        let theta: f64 = r.gen_range(0.0..=1.0);
        let loads = [1.0 - x, x];
        let q = q1(&s.content, x) + q1(&s.content, 1.0 - x);
        let c = s.network.costs[1];
        let none = Mechanism::NoIncentive;
        let gap = payoff(&s, &none, theta, 1, &loads).unwrap() - payoff(&s, &none, theta, 0, &loads).unwrap();
        assert!((gap + c).abs() <= 1e-12 * c.max(1.0));
        let m = restriction(a);
        let gap = payoff(&s, &m, theta, 1, &loads).unwrap() - payoff(&s, &m, theta, 0, &loads).unwrap();
        let want = theta * (1.0 - a) * q - c;
        assert!((gap - want).abs() <= 1e-12 * want.abs().max(q).max(1.0));
    }
}

#[test]
fn welfare_examples() {
    let s = Scenario::two_path(pw(), TypeDistribution::two_type(0.1, 0.9), 0.5).unwrap();
    let none = Mechanism::NoIncentive;
    let at0 = TypedFlow::two_path(&s, 0.0).unwrap();
    assert!((social_welfare(&s, &none, &at0).unwrap() - 0.5).abs() < 1e-15);

    let h = homog(pw(), 0.3);
    let half = TypedFlow::two_path(&h, 0.5).unwrap();
    assert!((social_welfare(&h, &none, &half).unwrap() - 0.85).abs() < 1e-15);

    // A combined mechanism with a = 1 only moves money around.
    let m = Mechanism::Combined {
        a: 1.0,
        schedule: PaymentSchedule::Bang { target: 0.3, at_target: 0.15, high: 5e5, low: -5e5 },
    };
    let mut r = rng(5);
    for _ in 0..20 {
        let x: f64 = r.gen_range(0.0..=1.0);
        let flow = TypedFlow::two_path(&s, x).unwrap();
        let plain = social_welfare(&s, &none, &flow).unwrap();
        assert!((social_welfare(&s, &m, &flow).unwrap() - plain).abs() < 1e-12);
        assert!((plain_welfare(&s, &[1.0 - x, x]) - plain).abs() < 1e-12);
    }

    // Opting out contributes nothing.
    let partial = TypedFlow::new(vec![vec![0.0, 0.0], vec![0.25, 0.25]]);
    let want = 0.9 * 0.5 * (q1(&s.content, 0.25) * 2.0) - 0.25 * 0.5;
    assert!((social_welfare(&s, &none, &partial).unwrap() - want).abs() < 1e-12);
}

#[test]
fn optimum_examples() {
    let (x, sw) = social_optimum(&homog(pw(), 0.3)).unwrap();
    assert!((x[1] - 0.5).abs() < 1e-9 && (sw - 0.85).abs() < 1e-12);
    let (x, _) = social_optimum(&homog(exp100(), 1e3)).unwrap();
    assert_eq!(x[1], 0.0);
    let (x, sw) = social_optimum(&homog(pw(), 0.0)).unwrap();
    assert!((x[1] - 0.5).abs() < 1e-9 && (sw - 1.0).abs() < 1e-12);
}

#[test]
fn optimum_agrees_with_grid_oracle() {
    let mut r = rng(17);
    let cfg = OracleConfig { grid_step: 1e-4, ..Default::default() };
    for i in 0..200 {
        let s = if i % 2 == 0 { common::homogeneous(&mut r) } else { common::two_type(&mut r) };
        let (x, sw) = social_optimum(&s).unwrap();
        let (gx, gsw) = grid_social_optimum(&s, &cfg).unwrap();
        assert!(x[1] <= 0.5 + 1e-12, "optimum on the costly side of the peak");
        assert!(sw >= gsw - 1e-12 * gsw.abs().max(1.0), "instance {i}: {sw} < grid {gsw}");
        // The grid point next to the optimum is within one cell of slope.
        assert!(rel_err(sw, gsw) < 1e-3, "instance {i}: {sw} vs {gsw} (x {} vs {})", x[1], gx[1]);
    }
}

#[test]
fn no_incentive_equilibria() {
    let s = homog(exp100(), 5.0);
    let rep = equilibrium_no_incentive(&s).unwrap();
    assert_eq!(rep.flow, vec![1.0, 0.0]);
    assert_eq!(rep.participation_b, 1.0);
    assert_eq!(rep.stability, Stability::Stable);
    let ql = q1(&s.content, 1.0);
    assert!((rep.social_welfare - TH * ql).abs() < 1e-12);

    let lin = homog(exp100(), 0.3).with_linear_cost(0.0, 1.0, 0.3, 1.0).unwrap();
    let rep = equilibrium_no_incentive(&lin).unwrap();
    assert_eq!(rep.flow[1], 0.35);
    assert_eq!(linear_cost_split(0.0, 1.0, 0.3, 1.0), 0.35);
    assert_eq!(linear_cost_split(0.0, 1.0, 5.0, 1.0), 0.0);
    assert_eq!(linear_cost_split(2.0, 1.0, 0.0, 0.0), 1.0);
}

#[test]
fn verify_examples() {
    let s = homog(exp100(), 1.0);
    let tol = Tolerances::default();
    let m = Mechanism::SidePayment {
        schedule: side_payment_schedule(0.3, 1.0, 1.0).unwrap(),
        participation_b: 1.0,
    };
    let (ok, gain) = verify_equilibrium(&s, &m, &TypedFlow::two_path(&s, 0.3).unwrap(), &tol).unwrap();
    assert!(ok && gain <= 1e-12);
    let (ok, gain) = verify_equilibrium(&s, &m, &TypedFlow::two_path(&s, 0.4).unwrap(), &tol).unwrap();
    assert!(!ok && gain > 0.0);
    // At 0.4 the H users are the ones who want to move.
    let loads = [0.6, 0.4];
    assert!(payoff(&s, &m, TH, 0, &loads).unwrap() > payoff(&s, &m, TH, 1, &loads).unwrap());

    // A mild restriction leaves all-L in place.
    let hom = homog(exp100(), 5.0);
    let (ok, _) = verify_equilibrium(&hom, &restriction(0.95), &TypedFlow::two_path(&hom, 0.0).unwrap(), &tol).unwrap();
    assert!(ok);

    // Someone left out who would gain from joining is a violation.
    let two = Scenario::two_path(exp100(), TypeDistribution::two_type(0.2, 0.8), 5.0).unwrap();
    let out = TypedFlow::new(vec![vec![0.0, 0.0], vec![0.5, 0.0]]);
    let (ok, _) = verify_equilibrium(&two, &Mechanism::NoIncentive, &out, &tol).unwrap();
    assert!(!ok);
}

#[test]
fn stability_of_restriction_intersections() {
    let f = exp100();
    let c = 5.0;
    let s = homog(f.clone(), c);
    let level = 55.0;
    let a = 1.0 - c / (TH * level);
    let m = restriction(a);
    let tol = Tolerances::default();
    let x0 = level_root(&f, level, 0.5, 1.0);
    let mirror = level_root(&f, level, 0.0, 0.5);
    assert!((x0 + mirror - 1.0).abs() < 1e-9);
    let hi = TypedFlow::two_path(&s, x0).unwrap();
    let lo = TypedFlow::two_path(&s, mirror).unwrap();
    assert_eq!(classify_stability(&s, &m, &hi, &tol).unwrap(), Stability::Stable);
    assert_eq!(classify_stability(&s, &m, &lo, &tol).unwrap(), Stability::Unstable);
    let l = TypedFlow::two_path(&s, 0.0).unwrap();
    assert_eq!(classify_stability(&s, &m, &l, &tol).unwrap(), Stability::Stable);

    // Off-equilibrium input is an error, not a verdict.
    let off = TypedFlow::two_path(&s, 0.3).unwrap();
    assert!(matches!(classify_stability(&s, &m, &off, &tol), Err(Error::NotEquilibrium { .. })));
}

#[test]
fn heterogeneous_interior_point_is_unstable() {
    let f = exp100();
    let c = 5.0;
    let (t1, t2) = (0.25, 0.75);
    let s = Scenario::two_path(f.clone(), TypeDistribution::two_type(t1, t2), c).unwrap();
    let level = 55.0;
    let a = 1.0 - c / (t2 * level);
    assert!(t1 * (1.0 - a) * level < c, "low type must prefer L");
    let x2 = level_root(&f, level, 0.0, 0.5);
    let m = restriction(a);
    let flow = TypedFlow::sorted_two_path(&s, x2).unwrap();
    let tol = Tolerances::default();
    assert!(verify_equilibrium(&s, &m, &flow, &tol).unwrap().0);
    assert_eq!(classify_stability(&s, &m, &flow, &tol).unwrap(), Stability::Unstable);
}

#[test]
fn budget_balance_identity() {
    let mut r = rng(23);
    let schedules = [
        Mechanism::SidePayment { schedule: PaymentSchedule::proportional(0.3, 1.0, 2.0).unwrap(), participation_b: 1.0 },
        Mechanism::SidePayment { schedule: PaymentSchedule::proportional(0.2, 0.5, 2.0).unwrap(), participation_b: 0.5 },
        Mechanism::Combined { a: 0.7, schedule: PaymentSchedule::Bang { target: 0.4, at_target: 0.3, high: 1e6, low: -1e6 } },
        Mechanism::SidePayment {
            schedule: PaymentSchedule::Linear { target: 0.4, g_bar: 0.2, slope: -0.5 },
            participation_b: 1.0,
        },
    ];
    for m in &schedules {
        for _ in 0..1000 {
            let x: f64 = r.gen_range(1e-6..1.0 - 1e-6);
            let loads = [1.0 - x, x];
            let p = m.payments(&loads);
            let total = loads[0] * p[0] + loads[1] * p[1];
            let scale = (loads[0] * p[0]).abs().max(1.0);
            assert!(total.abs() <= 1e-12 * scale, "{m:?} at {x}: {total}");
        }
    }
    let three = Mechanism::SidePayment {
        schedule: PaymentSchedule::ThreePath { target: [0.4, 0.35, 0.25], c2: 0.5, c3: 1.0 },
        participation_b: 1.0,
    };
    for _ in 0..1000 {
        let p = common::simplex_point(&mut r, 3, 1e-4);
        let pay = three.payments(&p);
        let total: f64 = p.iter().zip(&pay).map(|(x, g)| x * g).sum();
        let scale = p.iter().zip(&pay).map(|(x, g)| (x * g).abs()).fold(1.0, f64::max);
        assert!(total.abs() <= 1e-12 * scale);
    }
}

#[test]
fn proportional_schedule_evaluation() {
    let g = PaymentSchedule::<f64>::proportional(0.3, 1.0, 1.0).unwrap();
    assert!((g.g(0.3) - 0.3).abs() < 1e-15);
    assert_eq!(g.g(1.0), 0.0);
    assert!((g.g(0.0) - 0.3 / 0.7).abs() < 1e-15);
    assert!(matches!(PaymentSchedule::proportional(0.0, 1.0, 1.0), Err(Error::Degenerate(_))));
    assert!(matches!(PaymentSchedule::proportional(0.5, 0.5, 1.0), Err(Error::Degenerate(_))));
}

#[test]
fn zero_slope_linear_cost_matches_constant_cost() {
    let mut r = rng(29);
    for _ in 0..50 {
        let s = common::homogeneous(&mut r);
        let c = s.network.costs[1];
        let lin = s.clone().with_linear_cost(0.0, 0.0, c, 0.0).unwrap();
        let (a, sa) = social_optimum(&s).unwrap();
        let (b, sb) = social_optimum(&lin).unwrap();
        assert!((a[1] - b[1]).abs() <= 1e-12 && rel_err(sa, sb) <= 1e-12);
        let ea = equilibrium_no_incentive(&s).unwrap();
        let eb = equilibrium_no_incentive(&lin).unwrap();
        assert_eq!(ea.flow, eb.flow);
        assert!(rel_err(ea.social_welfare, eb.social_welfare) <= 1e-12);
        let x: f64 = r.gen_range(0.0..=1.0);
        for path in 0..2 {
            let pa = payoff(&s, &Mechanism::NoIncentive, TH, path, &[1.0 - x, x]).unwrap();
            let pb = payoff(&lin, &Mechanism::NoIncentive, TH, path, &[1.0 - x, x]).unwrap();
            assert!(rel_err(pa, pb) <= 1e-12);
        }
    }
}

#[test]
fn unit_beta_is_the_symmetric_model() {
    let mut r = rng(31);
    for _ in 0..30 {
        let s = common::two_type(&mut r);
        let b = s.clone().with_beta(1.0).unwrap();
        assert_eq!(social_optimum(&s).unwrap(), social_optimum(&b).unwrap());
        let x: f64 = r.gen_range(0.0..=1.0);
        assert_eq!(s.value(&[1.0 - x, x]), b.value(&[1.0 - x, x]));
    }
    let s = homog(exp100(), 1.0);
    assert!(s.clone().with_beta(0.0).is_err());
    assert!(s.clone().with_beta(1.5).is_err());
    // beta < 1 discounts the cheap path's content.
    let b = s.clone().with_beta(0.5).unwrap();
    let want = 0.5 * q1(&s.content, 0.7) + q1(&s.content, 0.3);
    assert!((b.value(&[0.7, 0.3]) - want).abs() < 1e-12);
}

#[test]
fn scenario_validation() {
    assert!(Scenario::two_path(exp100(), TypeDistribution::two_type(0.9, 0.1), 1.0).is_err());
    assert!(Scenario::two_path(exp100(), TypeDistribution::Homogeneous { theta: TH }, -1.0).is_err());
    let three = ContentFunction::exponential(100.0, 100.0, 1.0, 3).unwrap();
    assert!(Scenario::two_path(three, TypeDistribution::Homogeneous { theta: TH }, 1.0).is_err());
    let t = TypeDistribution::<f64>::TwoType { theta1: 0.2, theta2: 0.6, eta: 0.25 };
    assert!((t.mean() - 0.5).abs() < 1e-15);
    let s = Scenario::multipath(ContentFunction::exponential(90.0, 100.0, 1.0, 3).unwrap(), TypeDistribution::Homogeneous { theta: TH }, 3, 1.0).unwrap();
    assert_eq!(s.network.costs, vec![0.0, 0.5, 1.0]);
}

#[test]
fn f32_scenarios_work() {
    let f: ContentFunctionF32 = ContentFunction::piecewise(1.0, 0.5).unwrap();
    let s: ScenarioF32 = Scenario::two_path(f, TypeDistribution::Homogeneous { theta: 0.5 }, 0.3).unwrap();
    let (x, sw) = social_optimum(&s).unwrap();
    assert!((x[1] - 0.5).abs() < 1e-4 && (sw - 0.85).abs() < 1e-5);
}
