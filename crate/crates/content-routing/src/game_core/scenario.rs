use serde::Serialize;

use crate::content_model::{ContentFunction, OverlapSegment};
use crate::error::{Error, Result};
use crate::numerics::maximize;
use crate::Real;

/// Parallel paths ordered by travel cost; path 0 is the cheap one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathNetwork<S> {
    pub costs: Vec<S>,
}

impl<S: Real> PathNetwork<S> {
    pub fn two_path(c_h: S) -> Self {
        Self { costs: vec![S::zero(), c_h] }
    }

    /// `K` paths with costs spread evenly from 0 to `c_h`.
    pub fn evenly_spaced(k: usize, c_h: S) -> Self {
        let last = S::from_usize(k.max(2) - 1).unwrap();
        Self { costs: (0..k).map(|i| c_h * S::from_usize(i).unwrap() / last).collect() }
    }

    pub fn k(&self) -> usize {
        self.costs.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostModel<S> {
    Constant,
    /// Per-user cost `c + b * load` on each of the two paths.
    Linear { c_l: S, b_l: S, c_h: S, b_h: S },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TypeDistribution<S> {
    Homogeneous { theta: S },
    /// Mass `eta` of valuation `theta1`, the rest `theta2 >= theta1`.
    TwoType { theta1: S, theta2: S, eta: S },
    /// Valuations uniform on `[0, 1]`.
    UniformContinuous,
}

impl<S: Real> TypeDistribution<S> {
    pub fn two_type(theta1: S, theta2: S) -> Self {
        Self::TwoType { theta1, theta2, eta: S::lit(0.5) }
    }

    pub fn mean(&self) -> S {
        match *self {
            Self::Homogeneous { theta } => theta,
            Self::TwoType { theta1, theta2, eta } => eta * theta1 + (S::one() - eta) * theta2,
            Self::UniformContinuous => S::lit(0.5),
        }
    }

    /// `(theta, mass)` atoms; continuous distributions have none.
    pub fn atoms(&self) -> Result<Vec<(S, S)>> {
        match *self {
            Self::Homogeneous { theta } => Ok(vec![(theta, S::one())]),
            Self::TwoType { theta1, theta2, eta } => {
                Ok(vec![(theta1, eta), (theta2, S::one() - eta)])
            }
            Self::UniformContinuous => Err(Error::Unsupported(
                "continuous valuations have no discrete atoms; use the continuous designers".into(),
            )),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Homogeneous { theta } => theta >= S::zero(),
            Self::TwoType { theta1, theta2, eta } => {
                theta1 >= S::zero() && theta1 <= theta2 && eta >= S::zero() && eta <= S::one()
            }
            Self::UniformContinuous => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidScenario(format!("bad type distribution {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario<S> {
    pub network: PathNetwork<S>,
    pub types: TypeDistribution<S>,
    pub content: ContentFunction<S>,
    pub overlap: Option<OverlapSegment<S>>,
    pub cost_model: CostModel<S>,
    /// Weight on the cheap path's content when users value `H` content more.
    pub beta: Option<S>,
}

impl<S: Real> Scenario<S> {
    pub fn new(
        network: PathNetwork<S>,
        types: TypeDistribution<S>,
        content: ContentFunction<S>,
    ) -> Result<Self> {
        let s = Self {
            network,
            types,
            content,
            overlap: None,
            cost_model: CostModel::Constant,
            beta: None,
        };
        s.validate()?;
        Ok(s)
    }

    /// Two paths with costs `(0, c_h)`.
    pub fn two_path(content: ContentFunction<S>, types: TypeDistribution<S>, c_h: S) -> Result<Self> {
        Self::new(PathNetwork::two_path(c_h), types, content)
    }

    /// `K` paths with evenly spaced costs up to `c_h`.
    pub fn multipath(
        content: ContentFunction<S>,
        types: TypeDistribution<S>,
        k: usize,
        c_h: S,
    ) -> Result<Self> {
        Self::new(PathNetwork::evenly_spaced(k, c_h), types, content)
    }

    pub fn with_overlap(mut self, overlap: OverlapSegment<S>) -> Self {
        self.overlap = Some(overlap);
        self
    }

    pub fn with_linear_cost(mut self, c_l: S, b_l: S, c_h: S, b_h: S) -> Result<Self> {
        self.cost_model = CostModel::Linear { c_l, b_l, c_h, b_h };
        self.network.costs = vec![c_l, c_h];
        self.validate()?;
        Ok(self)
    }

    pub fn with_beta(mut self, beta: S) -> Result<Self> {
        self.beta = Some(beta);
        self.validate()?;
        Ok(self)
    }

    pub fn with_c_h(mut self, c_h: S) -> Result<Self> {
        let k = self.k();
        self.network = PathNetwork::evenly_spaced(k, c_h);
        if let CostModel::Linear { c_l, b_l, b_h, .. } = self.cost_model {
            return self.with_linear_cost(c_l, b_l, c_h, b_h);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn with_types(mut self, types: TypeDistribution<S>) -> Result<Self> {
        self.types = types;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        let k = self.k();
        if k < 2 {
            return bad("need at least two paths".into());
        }
        if let Some(pk) = self.content.paths() {
            if pk != k {
                return bad(format!("content built for {pk} paths, network has {k}"));
            }
        }
        let costs = &self.network.costs;
        if costs.iter().any(|c| !(*c >= S::zero())) {
            return bad("costs must be nonnegative".into());
        }
        match self.cost_model {
            CostModel::Constant => {
                if costs[0] != S::zero() {
                    return bad("cheapest path must have zero cost".into());
                }
                if costs.windows(2).any(|w| w[1] < w[0]) {
                    return bad("costs must be nondecreasing".into());
                }
            }
            CostModel::Linear { c_l, b_l, c_h, b_h } => {
                if k != 2 {
                    return bad("linear costs are defined for two paths".into());
                }
                if [c_l, b_l, c_h, b_h].iter().any(|v| !(*v >= S::zero())) {
                    return bad("linear cost coefficients must be nonnegative".into());
                }
            }
        }
        if let Some(beta) = self.beta {
            if !(beta > S::zero() && beta <= S::one()) {
                return bad(format!("beta = {beta} outside (0, 1]"));
            }
            if k != 2 {
                return bad("valuation weights are defined for two paths".into());
            }
        }
        self.types.validate()
    }

    pub fn k(&self) -> usize {
        self.network.k()
    }

    /// Cost of the most expensive path (`c_H` in the two-path model).
    pub fn c_h(&self) -> S {
        match self.cost_model {
            CostModel::Linear { c_h, .. } => c_h,
            CostModel::Constant => *self.network.costs.last().unwrap(),
        }
    }

    pub fn theta0(&self) -> S {
        self.types.mean()
    }

    pub fn is_constant_cost(&self) -> bool {
        matches!(self.cost_model, CostModel::Constant)
    }

    /// True when swapping the two paths' loads leaves content value unchanged.
    pub fn is_symmetric(&self) -> bool {
        self.beta.map_or(true, |b| b == S::one())
    }

    pub fn overlap_value(&self) -> S {
        self.overlap.map_or(S::zero(), |o| o.value())
    }

    /// Content value of a load vector, including overlap and valuation weights.
    pub fn value(&self, loads: &[S]) -> S {
        let mut v = self.overlap_value();
        for (k, &x) in loads.iter().enumerate() {
            let w = if k == 0 { self.beta.unwrap_or(S::one()) } else { S::one() };
            v = v + w * self.content.eval(x);
        }
        v
    }

    /// Two-path value with `x_h` on `H` and `b - x_h` on `L`.
    pub fn value2(&self, x_h: S, b: S) -> S {
        self.value(&[b - x_h, x_h])
    }

    /// Per-user travel cost on `path` at the given loads.
    pub fn path_cost(&self, path: usize, loads: &[S]) -> S {
        match self.cost_model {
            CostModel::Constant => self.network.costs[path],
            CostModel::Linear { c_l, b_l, c_h, b_h } => {
                if path == 0 {
                    c_l + b_l * loads[0]
                } else {
                    c_h + b_h * loads[1]
                }
            }
        }
    }

    /// Total travel cost burned at the given loads.
    pub fn total_cost(&self, loads: &[S]) -> S {
        loads.iter().enumerate().map(|(k, &x)| x * self.path_cost(k, loads)).sum()
    }

    /// `Q(0, 1)`: everyone on the cheap path.
    pub fn q_low(&self) -> S {
        self.value2(S::zero(), S::one())
    }

    /// Split maximizing two-path content and the content there (`Q(0.5, 1)`
    /// when symmetric).
    pub fn q_peak(&self) -> (S, S) {
        if self.is_symmetric() {
            let h = S::lit(0.5);
            return (h, self.value2(h, S::one()));
        }
        let f = |x: S| self.value2(x, S::one());
        maximize(f, S::zero(), S::one(), 512, S::tol(1e-13, S::one()), S::zero())
    }
}
