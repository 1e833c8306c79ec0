//! Parameter sweeps. Cells are computed in parallel chunks and written in
//! row-major order by a single writer, so the file does not depend on the
//! thread count.

use content_routing::poa::{run_designer, Designer};
use content_routing::{equilibrium_no_incentive, social_optimum, DesignConfig};
use rayon::prelude::*;
use serde_json::json;

use crate::commands::{num, out_path, pool};
use crate::config::{Axis, Config, Param, ScenarioSpec};
use crate::error::CliError;
use crate::Common;

const MAX_AXES: usize = 3;
const MAX_CELLS: usize = 10_000_000;
const CHUNK: usize = 4096;

/// Default grid: lower valuation against the cost of the costly path.
fn default_axes() -> Vec<Axis> {
    vec![
        Axis { param: Param::Theta1, min: 0.0, max: 0.5, steps: 51 },
        Axis { param: Param::CH, min: 0.0, max: 60.0, steps: 61 },
    ]
}

fn validate(axes: &[Axis]) -> Result<usize, CliError> {
    if axes.is_empty() || axes.len() > MAX_AXES {
        return Err(CliError::Config(format!("sweep needs 1 to {MAX_AXES} axes, got {}", axes.len())));
    }
    let mut cells: usize = 1;
    for (i, a) in axes.iter().enumerate() {
        if a.steps == 0 || !a.min.is_finite() || !a.max.is_finite() || a.min > a.max {
            return Err(CliError::Config(format!(
                "sweep.axes[{i}] ({}): need finite min <= max and steps >= 1",
                a.param.name()
            )));
        }
        if axes[..i].iter().any(|b| b.param == a.param) {
            return Err(CliError::Config(format!("sweep.axes[{i}]: `{}` appears twice", a.param.name())));
        }
        cells = cells.checked_mul(a.steps).filter(|&n| n <= MAX_CELLS).ok_or_else(|| {
            CliError::Config(format!("sweep has more than {MAX_CELLS} cells"))
        })?;
    }
    Ok(cells)
}

struct Cell {
    sw_opt: Option<f64>,
    /// Per designer: welfare, ratio and regime label.
    designs: Vec<Option<(f64, f64, String)>>,
    errors: Vec<String>,
}

fn eval_cell(base: &ScenarioSpec, point: &[(Param, f64)], designers: &[Designer], cfg: &DesignConfig<f64>) -> Cell {
    let mut cell = Cell { sw_opt: None, designs: vec![None; designers.len()], errors: Vec::new() };
    let mut spec = base.clone();
    for &(p, v) in point {
        if let Err(e) = spec.set(p, v) {
            cell.errors.push(e);
            return cell;
        }
    }
    let s = match spec.build() {
        Ok(s) => s,
        Err(e) => {
            cell.errors.push(e.to_string());
            return cell;
        }
    };
    let opt = match social_optimum(&s) {
        Ok((_, v)) => v,
        Err(e) => {
            cell.errors.push(format!("optimum: {e}"));
            return cell;
        }
    };
    cell.sw_opt = Some(opt);
    for (slot, &d) in cell.designs.iter_mut().zip(designers) {
        let got = run_designer(&s, d, cfg).and_then(|out| match out {
            None => Ok((equilibrium_no_incentive(&s)?.social_welfare, "NoIncentive".to_string())),
            Some(o) => Ok((o.sw_at_design, o.label())),
        });
        match got {
            Ok((sw, regime)) => {
                let ratio = if opt > 0.0 { sw / opt } else { 1.0 };
                *slot = Some((sw, ratio, regime));
            }
            Err(e) => cell.errors.push(format!("{d}: {e}")),
        }
    }
    cell
}

pub fn run(cfg: &Config, c: &Common) -> Result<(), CliError> {
    let base = cfg.scenario.clone().unwrap_or_else(ScenarioSpec::figure_default);
    let spec = cfg.sweep.clone();
    let axes = spec.as_ref().map_or_else(default_axes, |s| s.axes.clone());
    let cells = validate(&axes)?;
    let designers: Vec<Designer> = if !c.designer.is_empty() {
        c.designer.clone()
    } else {
        spec.as_ref().and_then(|s| s.designers.clone()).unwrap_or_else(|| Designer::ALL.to_vec())
    };
    if designers.is_empty() {
        return Err(CliError::Config("sweep.designers is empty".into()));
    }
    let dcfg = cfg.design_config(c.eps_mech, c.grid_step)?;
    // Fail on parameters that can never apply before starting the grid.
    for a in &axes {
        base.clone().set(a.param, a.min).map_err(CliError::Config)?;
    }
    let values: Vec<Vec<f64>> = axes.iter().map(Axis::values).collect();
    let name = spec.as_ref().and_then(|s| s.output.clone()).unwrap_or_else(|| "sweep.csv".into());
    if name.contains(['/', '\\']) {
        return Err(CliError::Config(format!("sweep.output `{name}` must be a plain file name")));
    }
    let path = out_path(c, &name);

    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    let mut header: Vec<String> = axes.iter().map(|a| a.param.name().to_string()).collect();
    header.push("sw_opt".into());
    for d in &designers {
        header.extend([format!("sw_{d}"), format!("ratio_{d}"), format!("regime_{d}")]);
    }
    header.push("error".into());
    w.write_record(&header)?;

    let point = |idx: usize| -> Vec<(Param, f64)> {
        // Row-major: the last axis varies fastest.
        let mut rem = idx;
        let mut out = vec![(Param::CH, 0.0); axes.len()];
        for (i, a) in axes.iter().enumerate().rev() {
            out[i] = (a.param, values[i][rem % a.steps]);
            rem /= a.steps;
        }
        out
    };
    let workers = pool()?;
    let mut failed = 0usize;
    let mut min_ratio = vec![f64::INFINITY; designers.len()];
    for start in (0..cells).step_by(CHUNK) {
        let end = (start + CHUNK).min(cells);
        let chunk: Vec<(Vec<(Param, f64)>, Cell)> = workers.install(|| {
            (start..end)
                .into_par_iter()
                .map(|i| {
                    let p = point(i);
                    let cell = eval_cell(&base, &p, &designers, &dcfg);
                    (p, cell)
                })
                .collect()
        });
        for (p, cell) in chunk {
            let mut row: Vec<String> = p.iter().map(|&(_, v)| num(v)).collect();
            row.push(cell.sw_opt.map(num).unwrap_or_default());
            for (j, d) in cell.designs.iter().enumerate() {
                match d {
                    Some((sw, ratio, regime)) => {
                        min_ratio[j] = min_ratio[j].min(*ratio);
                        row.extend([num(*sw), num(*ratio), regime.clone()]);
                    }
                    None => row.extend([String::new(), String::new(), String::new()]),
                }
            }
            failed += !cell.errors.is_empty() as usize;
            row.push(cell.errors.join("; "));
            w.write_record(&row)?;
        }
    }
    w.flush()?;

    let mins: serde_json::Map<String, serde_json::Value> = designers
        .iter()
        .zip(&min_ratio)
        .map(|(d, r)| (d.name().to_string(), if r.is_finite() { json!(r) } else { serde_json::Value::Null }))
        .collect();
    let summary = json!({
        "cells": cells,
        "cells_with_errors": failed,
        "axes": axes.iter().map(|a| json!({ "param": a.param.name(), "min": a.min, "max": a.max, "steps": a.steps })).collect::<Vec<_>>(),
        "min_ratio": mins,
        "output": path.display().to_string(),
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
