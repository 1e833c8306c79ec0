//! Run configuration: JSON (canonical) or TOML, schema version 1.
//!
//! Every section is optional at parse time; each subcommand checks for the
//! sections it needs.

use std::path::Path;

use content_routing::dynamics::DynamicsMode;
use content_routing::mechanisms::DynamicParams;
use content_routing::poa::{Designer, FamilySampler};
use content_routing::{
    ContentFunction, DesignConfig, Mechanism, OverlapSegment, PaymentSchedule, Scenario, TypeDistribution,
};
use serde::Deserialize;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema: u32,
    pub scenario: Option<ScenarioSpec>,
    /// Explicit mechanism for `solve` and `dynamics`, instead of a designer.
    pub mechanism: Option<MechanismSpec>,
    #[serde(default)]
    pub design: DesignSpec,
    pub dynamics: Option<DynamicsSpec>,
    pub sweep: Option<SweepSpec>,
    pub probe: Option<ProbeSpec>,
    pub dynamic_model: Option<DynamicModelSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub content: ContentSpec,
    pub types: TypesSpec,
    /// Defaults to the content's `K`, then 2.
    pub paths: Option<usize>,
    /// Cost of the costliest path; the others are evenly spaced below it.
    pub c_h: f64,
    pub overlap: Option<OverlapSpec>,
    pub linear_cost: Option<LinearCostSpec>,
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContentSpec {
    Exponential {
        #[serde(alias = "N")]
        total_items: f64,
        #[serde(alias = "n")]
        users: f64,
        #[serde(alias = "phi")]
        items_per_user: f64,
        #[serde(rename = "K")]
        k: Option<usize>,
    },
    #[serde(alias = "piecewise_cap")]
    Piecewise { cap: f64, knee: f64 },
    Tabulated { points: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TypesSpec {
    Homogeneous { theta: f64 },
    /// Give either `theta2` or the mean `theta0` (then `theta2` keeps the
    /// mean fixed as `theta1` moves).
    TwoType { theta1: f64, theta2: Option<f64>, theta0: Option<f64>, eta: Option<f64> },
    UniformContinuous,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapSpec {
    pub items: f64,
    pub users: f64,
    pub items_per_user: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearCostSpec {
    pub c_l: f64,
    pub b_l: f64,
    pub c_h: f64,
    pub b_h: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MechanismSpec {
    NoIncentive,
    ContentRestriction { a: Vec<f64> },
    /// Proportional two-path schedule making `target` an equilibrium.
    SidePayment { target: f64, participation_b: Option<f64> },
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    pub eps_mech: Option<f64>,
    pub grid_step: Option<f64>,
    pub g_max_factor: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSpec {
    /// Starting aggregate loads, one per path; drawn from `--seed` if absent.
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub mode: ModeSpec,
    pub dt: Option<f64>,
    pub dt_max: Option<f64>,
    pub horizon: Option<usize>,
    pub sample_every: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSpec {
    #[default]
    PairwiseSmith,
    MinToMax,
}

impl From<ModeSpec> for DynamicsMode {
    fn from(m: ModeSpec) -> Self {
        match m {
            ModeSpec::PairwiseSmith => DynamicsMode::PairwiseSmith,
            ModeSpec::MinToMax => DynamicsMode::MinToMax,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
    pub designers: Option<Vec<Designer>>,
    /// File name inside `--out-dir`.
    pub output: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: Param,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let n = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.max } else { self.min + (self.max - self.min) * i as f64 / n })
            .collect()
    }
}

/// Scenario parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    CH,
    Theta,
    Theta0,
    Theta1,
    Theta2,
    Eta,
    Beta,
    TotalItems,
    Users,
    ItemsPerUser,
    Knee,
    Cap,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::CH => "c_h",
            Param::Theta => "theta",
            Param::Theta0 => "theta0",
            Param::Theta1 => "theta1",
            Param::Theta2 => "theta2",
            Param::Eta => "eta",
            Param::Beta => "beta",
            Param::TotalItems => "total_items",
            Param::Users => "users",
            Param::ItemsPerUser => "items_per_user",
            Param::Knee => "knee",
            Param::Cap => "cap",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    #[serde(default)]
    pub family: FamilySampler,
    pub samples: Option<usize>,
    pub bound: Option<f64>,
    pub designer: Option<Designer>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicModelSpec {
    pub total_items: f64,
    pub users: f64,
    pub phi: f64,
    pub gamma: f64,
    pub c_h: f64,
    pub theta: Option<f64>,
    /// Rows in the stationary table, `x` evenly spaced over `[0, 1]`.
    pub table_steps: Option<usize>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let cfg: Config = if toml {
            let de = toml::Deserializer::new(&text);
            serde_path_to_error::deserialize(de).map_err(|e| {
                let inner = e.inner().to_string();
                CliError::Config(format!("{}: at `{}`: {}", path.display(), e.path(), inner.trim()))
            })?
        } else {
            let mut de = serde_json::Deserializer::from_str(&text);
            serde_path_to_error::deserialize(&mut de).map_err(|e| {
                CliError::Config(format!("{}: at `{}`: {}", path.display(), e.path(), e.inner()))
            })?
        };
        if cfg.schema != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "{}: schema {} is not supported (expected {SCHEMA_VERSION})",
                path.display(),
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    /// An empty config, for subcommands that have built-in defaults.
    pub fn empty() -> Self {
        Self {
            schema: SCHEMA_VERSION,
            scenario: None,
            mechanism: None,
            design: DesignSpec::default(),
            dynamics: None,
            sweep: None,
            probe: None,
            dynamic_model: None,
        }
    }

    pub fn scenario_spec(&self) -> Result<&ScenarioSpec, CliError> {
        self.scenario.as_ref().ok_or_else(|| CliError::Config("config has no `scenario` section".into()))
    }

    pub fn design_config(&self, eps_mech: Option<f64>, grid_step: Option<f64>) -> Result<DesignConfig<f64>, CliError> {
        let mut cfg = DesignConfig::default();
        if let Some(e) = eps_mech.or(self.design.eps_mech) {
            if !(e > 0.0 && e < 1.0) {
                return Err(CliError::Config(format!("eps_mech = {e} outside (0, 1)")));
            }
            cfg.eps_mech = e;
        }
        if let Some(g) = grid_step.or(self.design.grid_step) {
            if !(g > 0.0 && g <= 0.1) {
                return Err(CliError::Config(format!("grid_step = {g} outside (0, 0.1]")));
            }
            cfg.grid_step = g;
        }
        if let Some(f) = self.design.g_max_factor {
            if !(f > 0.0) {
                return Err(CliError::Config(format!("g_max_factor = {f} must be positive")));
            }
            cfg.g_max_factor = f;
        }
        Ok(cfg)
    }
}

impl ScenarioSpec {
    /// Built-in two-type exponential instance with mean valuation 1/2, used
    /// by sweeps that give no scenario.
    pub fn figure_default() -> Self {
        let (total_items, users, items_per_user) = content_routing::poa::FIGURE_CONTENT;
        Self {
            content: ContentSpec::Exponential { total_items, users, items_per_user, k: None },
            types: TypesSpec::TwoType { theta1: 0.25, theta2: None, theta0: Some(0.5), eta: None },
            paths: None,
            c_h: 1.0,
            overlap: None,
            linear_cost: None,
            beta: None,
        }
    }

    pub fn set(&mut self, p: Param, v: f64) -> Result<(), String> {
        let bad = || Err(format!("`{}` does not apply to this scenario", p.name()));
        match (p, &mut self.types, &mut self.content) {
            (Param::CH, ..) => {
                self.c_h = v;
                if let Some(lc) = &mut self.linear_cost {
                    lc.c_h = v;
                }
            }
            (Param::Beta, ..) => self.beta = Some(v),
            (Param::Theta, TypesSpec::Homogeneous { theta }, _) => *theta = v,
            (Param::Theta1, TypesSpec::TwoType { theta1, .. }, _) => *theta1 = v,
            (Param::Theta2, TypesSpec::TwoType { theta2, theta0, .. }, _) => {
                *theta2 = Some(v);
                *theta0 = None;
            }
            (Param::Theta0, TypesSpec::TwoType { theta2, theta0, .. }, _) => {
                *theta0 = Some(v);
                *theta2 = None;
            }
            (Param::Theta0, TypesSpec::Homogeneous { theta }, _) => *theta = v,
            (Param::Eta, TypesSpec::TwoType { eta, .. }, _) => *eta = Some(v),
            (Param::TotalItems, _, ContentSpec::Exponential { total_items, .. }) => *total_items = v,
            (Param::Users, _, ContentSpec::Exponential { users, .. }) => *users = v,
            (Param::ItemsPerUser, _, ContentSpec::Exponential { items_per_user, .. }) => *items_per_user = v,
            (Param::Knee, _, ContentSpec::Piecewise { knee, .. }) => *knee = v,
            (Param::Cap, _, ContentSpec::Piecewise { cap, .. }) => *cap = v,
            _ => return bad(),
        }
        Ok(())
    }

    pub fn paths(&self) -> Result<usize, content_routing::Error> {
        let k = match &self.content {
            ContentSpec::Exponential { k, .. } => *k,
            _ => None,
        };
        match (self.paths, k) {
            (Some(p), Some(k)) if p != k => Err(content_routing::Error::InvalidScenario(format!(
                "scenario.paths = {p} but content.K = {k}"
            ))),
            (p, k) => Ok(p.or(k).unwrap_or(2)),
        }
    }

    pub fn build(&self) -> Result<Scenario<f64>, content_routing::Error> {
        let paths = self.paths()?;
        let content = match &self.content {
            ContentSpec::Exponential { total_items, users, items_per_user, .. } => {
                ContentFunction::exponential(*total_items, *users, *items_per_user, paths)?
            }
            ContentSpec::Piecewise { cap, knee } => ContentFunction::piecewise(*cap, *knee)?,
            ContentSpec::Tabulated { points } => ContentFunction::tabulated(points.clone())?,
        };
        let types = match self.types {
            TypesSpec::Homogeneous { theta } => TypeDistribution::Homogeneous { theta },
            TypesSpec::UniformContinuous => TypeDistribution::UniformContinuous,
            TypesSpec::TwoType { theta1, theta2, theta0, eta } => {
                let eta = eta.unwrap_or(0.5);
                let theta2 = match (theta2, theta0) {
                    (Some(t2), None) => t2,
                    // eta theta1 + (1 - eta) theta2 = theta0.
                    (None, Some(t0)) if eta < 1.0 => (t0 - eta * theta1) / (1.0 - eta),
                    _ => {
                        return Err(content_routing::Error::InvalidScenario(
                            "two_type needs exactly one of `theta2` and `theta0` (and eta < 1 with theta0)".into(),
                        ))
                    }
                };
                TypeDistribution::TwoType { theta1, theta2, eta }
            }
        };
        let mut s = Scenario::multipath(content, types, paths, self.c_h)?;
        if let Some(o) = self.overlap {
            s = s.with_overlap(OverlapSegment::new(o.items, o.users, o.items_per_user)?);
        }
        if let Some(lc) = self.linear_cost {
            s = s.with_linear_cost(lc.c_l, lc.b_l, lc.c_h, lc.b_h)?;
        }
        if let Some(b) = self.beta {
            s = s.with_beta(b)?;
        }
        Ok(s)
    }
}

impl MechanismSpec {
    pub fn build(&self, s: &Scenario<f64>) -> Result<Mechanism<f64>, content_routing::Error> {
        let m = match self {
            MechanismSpec::NoIncentive => Mechanism::NoIncentive,
            MechanismSpec::ContentRestriction { a } => Mechanism::ContentRestriction { a: a.clone() },
            MechanismSpec::SidePayment { target, participation_b } => {
                let b = participation_b.unwrap_or(1.0);
                Mechanism::SidePayment { schedule: PaymentSchedule::proportional(*target, b, s.c_h())?, participation_b: b }
            }
        };
        m.check(s.k())?;
        Ok(m)
    }
}

impl DynamicModelSpec {
    pub fn params(&self) -> Result<DynamicParams<f64>, content_routing::Error> {
        let p = DynamicParams::new(self.total_items, self.users, self.phi, self.gamma, self.c_h)?;
        Ok(match self.theta {
            Some(t) => p.with_theta(t),
            None => p,
        })
    }
}

impl Default for DynamicModelSpec {
    fn default() -> Self {
        Self { total_items: 100.0, users: 100.0, phi: 1.0, gamma: 0.9, c_h: 2.0, theta: None, table_steps: None }
    }
}
