use std::path::PathBuf;

use content_routing::dynamics::{lyapunov_value, simulate_to_convergence, DynamicsConfig, Trajectory};
use content_routing::mechanisms::{
    combined_debug_cases, design_dynamic_content_restriction, dynamic_no_incentive_sw, dynamic_stationary_optimum,
    dynamic_stationary_sw, linear_cost_design,
};
use content_routing::poa::{poa_search, run_designer, two_path_equilibria, worst_stable_welfare, Designer, FamilySampler};
use content_routing::{
    classify_stability, dynamic_stationary, equilibrium_no_incentive, social_optimum, social_welfare,
    verify_equilibrium, DesignOutcome, EquilibriumReport, Mechanism, Scenario, Stability, Tolerances, TypedFlow,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Config, DynamicModelSpec};
use crate::error::CliError;
use crate::Common;

/// Worker pool sized by `CRL_THREADS` (all cores when unset).
pub fn pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("CRL_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("CRL_THREADS = `{v}` is not a positive integer")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))
}

/// CSV number format: shortest round-trip, with an exponent for very large
/// or small magnitudes.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn out_path(c: &Common, name: &str) -> PathBuf {
    c.out_dir.clone().unwrap_or_else(|| PathBuf::from(".")).join(name)
}

/// Print pretty JSON to stdout and, with `--out-dir`, keep a copy there.
fn emit<T: Serialize>(value: &T, c: &Common, name: &str) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)?;
    println!("{text}");
    if c.out_dir.is_some() {
        let p = out_path(c, name);
        std::fs::write(&p, format!("{text}\n")).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(())
}

fn scenario(cfg: &Config) -> Result<Scenario<f64>, CliError> {
    Ok(cfg.scenario_spec()?.build()?)
}

fn discrete(s: &Scenario<f64>) -> bool {
    s.types.atoms().is_ok()
}

#[derive(Serialize)]
struct EquilibriumEntry {
    flow: Vec<f64>,
    typed: TypedFlow<f64>,
    stability: Stability,
    social_welfare: f64,
}

pub fn solve(cfg: &Config, c: &Common) -> Result<(), CliError> {
    let s = scenario(cfg)?;
    let (x_opt, sw_opt) = social_optimum(&s)?;
    let ne = equilibrium_no_incentive(&s)?;
    let mut out = json!({
        "scenario": &s,
        "optimum": { "flow": x_opt, "social_welfare": sw_opt },
        "no_incentive": &ne,
    });
    if let Some(spec) = &cfg.mechanism {
        let m = spec.build(&s)?;
        let mut entry = json!({ "mechanism": &m });
        if s.k() == 2 && discrete(&s) {
            let tol = Tolerances::default();
            let eqs = two_path_equilibria(&s, &m, &tol)?
                .into_iter()
                .map(|(typed, stability)| {
                    let sw = social_welfare(&s, &m, &typed)?;
                    Ok(EquilibriumEntry { flow: typed.loads(), typed, stability, social_welfare: sw })
                })
                .collect::<Result<Vec<_>, content_routing::Error>>()?;
            entry["equilibria"] = serde_json::to_value(eqs)?;
            entry["worst_stable_welfare"] = json!(worst_stable_welfare(&s, &m, &tol)?);
        } else {
            entry["equilibria"] = Value::Null;
            entry["note"] = json!("equilibrium enumeration covers two paths with discrete valuations");
        }
        out["under_mechanism"] = entry;
    }
    if c.out_dir.is_some() {
        write_equilibria(&out_path(c, "equilibria.csv"), &s, &ne, &out)?;
    }
    emit(&out, c, "solve.json")
}

/// One flat row per equilibrium: the no-incentive outcome, then any found
/// under the configured mechanism.
fn write_equilibria(
    path: &std::path::Path,
    s: &Scenario<f64>,
    ne: &EquilibriumReport<f64>,
    out: &Value,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    let mut header = vec!["source".to_string()];
    header.extend((0..s.k()).map(|i| format!("x{i}")));
    header.extend(["social_welfare", "stability", "participation"].map(String::from));
    w.write_record(&header)?;
    let mut row = vec!["no_incentive".to_string()];
    row.extend(ne.flow.iter().copied().map(num));
    row.extend([num(ne.social_welfare), format!("{:?}", ne.stability), num(ne.participation_b)]);
    w.write_record(&row)?;
    if let Some(eqs) = out["under_mechanism"]["equilibria"].as_array() {
        for e in eqs {
            let flow: Vec<f64> = serde_json::from_value(e["flow"].clone())?;
            let sw = e["social_welfare"].as_f64().unwrap_or(f64::NAN);
            let participation: f64 = flow.iter().sum();
            let mut row = vec!["mechanism".to_string()];
            row.extend(flow.into_iter().map(num));
            row.extend([num(sw), e["stability"].as_str().unwrap_or_default().to_string(), num(participation)]);
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Check {
    is_equilibrium: bool,
    max_gain: f64,
    stability: Option<Stability>,
    social_welfare: f64,
}

fn check(s: &Scenario<f64>, d: &DesignOutcome<f64>) -> Result<Option<Check>, CliError> {
    let Some(typed) = &d.target_typed else { return Ok(None) };
    let tol = Tolerances::default();
    let (ok, gain) = verify_equilibrium(s, &d.mechanism, typed, &tol)?;
    let stability = if ok { Some(classify_stability(s, &d.mechanism, typed, &tol)?) } else { None };
    let sw = social_welfare(s, &d.mechanism, typed)?;
    Ok(Some(Check { is_equilibrium: ok, max_gain: gain, stability, social_welfare: sw }))
}

pub fn design(cfg: &Config, c: &Common, debug_cases: bool) -> Result<(), CliError> {
    let s = scenario(cfg)?;
    let dcfg = cfg.design_config(c.eps_mech, c.grid_step)?;
    let explicit = !c.designer.is_empty();
    let designers: Vec<Designer> = if explicit { c.designer.clone() } else { Designer::ALL.to_vec() };
    let (_, sw_opt) = social_optimum(&s)?;
    let ne = equilibrium_no_incentive(&s)?;
    let mut entries = Vec::new();
    for d in designers {
        let entry = match run_designer(&s, d, &dcfg) {
            Ok(None) => json!({ "designer": d, "social_welfare": ne.social_welfare, "ratio": ratio(ne.social_welfare, sw_opt) }),
            Ok(Some(out)) => {
                let verification = check(&s, &out)?;
                json!({
                    "designer": d,
                    "outcome": &out,
                    "ratio": ratio(out.sw_at_design, sw_opt),
                    "verification": verification,
                })
            }
            // A designer the user asked for by name must apply; in the
            // default sweep over all of them, record why one does not.
            Err(e) if explicit => return Err(e.into()),
            Err(e @ content_routing::Error::Unsupported(_)) => json!({ "designer": d, "error": e.to_string() }),
            Err(e) => return Err(e.into()),
        };
        entries.push(entry);
    }
    let mut out = json!({
        "scenario": &s,
        "social_optimum": sw_opt,
        "no_incentive": &ne,
        "designs": entries,
    });
    if !s.is_constant_cost() {
        out["linear_cost"] = serde_json::to_value(linear_cost_design(&s, &dcfg)?)?;
    }
    if debug_cases {
        out["combined_debug_cases"] = serde_json::to_value(combined_debug_cases(&s, &dcfg)?)?;
    }
    emit(&out, c, "design.json")
}

fn ratio(sw: f64, opt: f64) -> f64 {
    if opt > 0.0 {
        sw / opt
    } else {
        1.0
    }
}

/// Random starting loads: normalised exponential draws.
fn random_loads(k: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

fn dynamics_mechanism(cfg: &Config, c: &Common, s: &Scenario<f64>) -> Result<Mechanism<f64>, CliError> {
    match (&cfg.mechanism, c.designer.as_slice()) {
        (Some(_), [_, ..]) => Err(CliError::Config("give either a `mechanism` section or --designer, not both".into())),
        (Some(spec), []) => Ok(spec.build(s)?),
        (None, []) => Ok(Mechanism::NoIncentive),
        (None, [d]) => {
            let dcfg = cfg.design_config(c.eps_mech, c.grid_step)?;
            Ok(run_designer(s, *d, &dcfg)?.map_or(Mechanism::NoIncentive, |o| o.mechanism))
        }
        (None, _) => Err(CliError::Config("dynamics takes a single --designer".into())),
    }
}

pub fn dynamics(cfg: &Config, c: &Common) -> Result<(), CliError> {
    let s = scenario(cfg)?;
    let k = s.k();
    let m = dynamics_mechanism(cfg, c, &s)?;
    let spec = cfg.dynamics.clone().unwrap_or(crate::config::DynamicsSpec {
        x0: None,
        mode: Default::default(),
        dt: None,
        dt_max: None,
        horizon: None,
        sample_every: None,
    });
    let x0 = match &spec.x0 {
        Some(x) => {
            let total: f64 = x.iter().sum();
            if x.len() != k || x.iter().any(|v| !(*v >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                return Err(CliError::Config(format!("dynamics.x0 must be {k} nonnegative loads summing to 1, got {x:?}")));
            }
            x.clone()
        }
        None => random_loads(k, c.seed),
    };
    let mut dc = DynamicsConfig::<f64>::default().with_mode(spec.mode.into());
    if let Some(dt) = spec.dt {
        dc.dt = dt;
        dc.dt_max = dc.dt_max.max(dt);
    }
    if let Some(v) = spec.dt_max {
        dc.dt_max = v;
    }
    if let Some(h) = spec.horizon {
        dc.horizon = h;
    }
    if let Some(e) = spec.sample_every {
        dc.sample_every = e.max(1);
    }
    if !(dc.dt > 0.0 && dc.dt_max >= dc.dt) {
        return Err(CliError::Config(format!("need 0 < dt <= dt_max, got dt = {}, dt_max = {}", dc.dt, dc.dt_max)));
    }
    let start = TypedFlow::proportional(&s, &x0)?;
    let traj = simulate_to_convergence(&s, &m, &start, &dc)?;

    let path = out_path(c, "trajectory.csv");
    write_trajectory(&path, &s, &m, &traj)?;
    let summary = json!({
        "mechanism": &m,
        "x0": x0,
        "verdict": &traj.verdict,
        "steps": traj.steps,
        "clamped": traj.clamped,
        "final_loads": traj.final_flow().loads(),
        "rows": traj.samples.len(),
        "trajectory": path.display().to_string(),
    });
    emit(&summary, c, "dynamics.json")
}

fn write_trajectory(
    path: &std::path::Path,
    s: &Scenario<f64>,
    m: &Mechanism<f64>,
    traj: &Trajectory<f64>,
) -> Result<(), CliError> {
    let k = s.k();
    let atoms = s.types.atoms()?.len();
    // The Lyapunov column applies to three-path restrictions.
    let lyap_a = match m {
        Mechanism::ContentRestriction { a } if k == 3 => Some(a.clone()),
        _ => None,
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    let mut header = vec!["t".to_string()];
    header.extend((0..k).map(|i| format!("x{i}")));
    for t in 0..atoms {
        header.extend((0..k).map(|i| format!("u{t}_{i}")));
    }
    if lyap_a.is_some() {
        header.push("V".into());
    }
    w.write_record(&header)?;
    for smp in &traj.samples {
        let mut row = vec![num(smp.t)];
        row.extend(smp.loads.iter().copied().map(num));
        for u in &smp.payoffs {
            row.extend(u.iter().copied().map(num));
        }
        if let Some(a) = &lyap_a {
            // Blank outside the region where the function is defined.
            row.push(lyapunov_value(s, a, &smp.loads).map(num).unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn poa_probe(cfg: &Config, c: &Common) -> Result<(), CliError> {
    let spec = cfg.probe.clone();
    let family = spec.as_ref().map_or_else(FamilySampler::default, |p| p.family);
    if !(family.piecewise || family.exponential) {
        return Err(CliError::Config("probe.family enables neither piecewise nor exponential content".into()));
    }
    let designer = match c.designer.as_slice() {
        [] => spec.as_ref().and_then(|p| p.designer).unwrap_or(Designer::Combined),
        [d] => *d,
        _ => return Err(CliError::Config("poa-probe takes a single --designer".into())),
    };
    let samples = spec.as_ref().and_then(|p| p.samples).unwrap_or(1000);
    let bound = spec.as_ref().and_then(|p| p.bound).unwrap_or(0.5);
    let dcfg = cfg.design_config(c.eps_mech, c.grid_step)?;
    // Catch a bad family before spending the whole run on failures.
    family.sample(c.seed, 0)?;
    let report = pool()?.install(|| poa_search(&family, designer, samples, c.seed, bound, &dcfg));
    emit(&report, c, "poa_probe.json")
}

pub fn dynamic_model(cfg: &Config, c: &Common) -> Result<(), CliError> {
    let spec = cfg.dynamic_model.unwrap_or_default();
    let p = spec.params()?;
    let dcfg = cfg.design_config(c.eps_mech, c.grid_step)?;
    let state = p.state()?;
    let steps = spec.table_steps.unwrap_or(101);
    if steps < 2 {
        return Err(CliError::Config("dynamic_model.table_steps must be at least 2".into()));
    }

    let path = out_path(c, "stationary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    w.write_record(["x", "q_h_inf", "q_l_inf", "sw_inf"])?;
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..steps {
        let x = i as f64 / (steps - 1) as f64;
        let (qh, ql) = dynamic_stationary(&state, x);
        let sw = dynamic_stationary_sw(&p, x)?;
        if sw > best.1 {
            best = (x, sw);
        }
        w.write_record([num(x), num(qh), num(ql), num(sw)])?;
    }
    w.flush()?;

    let (x_opt, sw_opt) = dynamic_stationary_optimum(&p, &dcfg)?;
    let restriction = match design_dynamic_content_restriction(&p, &dcfg) {
        Ok(d) => serde_json::to_value(d)?,
        Err(e @ content_routing::Error::Unsupported(_)) => json!({ "error": e.to_string() }),
        Err(e) => return Err(e.into()),
    };
    let cross_check = [0.5, x_opt]
        .into_iter()
        .map(|x| cross_check(&spec, x))
        .collect::<Result<Vec<_>, CliError>>()?;
    let summary = json!({
        "params": p,
        "r": p.r(),
        "no_incentive_sw": dynamic_no_incentive_sw(&p)?,
        // The per-period planner ignores how today's split feeds tomorrow's
        // pools, so it can trail the best stationary row.
        "myopic_planner": { "x": x_opt, "sw": sw_opt },
        "best_stationary_row": { "x": best.0, "sw": best.1 },
        "restriction": restriction,
        "fixed_point_check": cross_check,
        "table": path.display().to_string(),
    });
    emit(&summary, c, "dynamic_model.json")
}

/// Iterate the pools from empty and compare with the closed-form limit.
fn cross_check(spec: &DynamicModelSpec, x: f64) -> Result<Value, CliError> {
    let state = spec.params()?.state()?;
    let (fp, iterations) = content_routing::content_model::dynamic_fixed_point(&state, x)?;
    let (qh, ql) = dynamic_stationary(&state, x);
    Ok(json!({
        "x": x,
        "iterations": iterations,
        "max_abs_diff": (fp.q_h - qh).abs().max((fp.q_l - ql).abs()),
    }))
}
