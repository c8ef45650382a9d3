use serde::{Deserialize, Serialize};

use super::{
    BoundaryMeasure, CostSpec, DamageScenario, GeometricGraph, ModelError, Path, PayoffSpec,
};

/// Tolerance on the scenario probability sum.
pub const PROBABILITY_TOL: f64 = 1e-9;

/// A fully validated problem: graph, boundary datum, cost, damages and pay-off.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub graph: GeometricGraph,
    pub boundary: BoundaryMeasure,
    pub cost: CostSpec,
    pub scenarios: Vec<DamageScenario>,
    pub payoff: PayoffSpec,
}

impl Instance {
    pub fn new(
        graph: GeometricGraph,
        boundary: BoundaryMeasure,
        cost: CostSpec,
        scenarios: Vec<DamageScenario>,
        payoff: PayoffSpec,
    ) -> Result<Self, ModelError> {
        let inst = Self {
            graph,
            boundary,
            cost,
            scenarios,
            payoff,
        };
        inst.check()?;
        Ok(inst)
    }

    fn check(&self) -> Result<(), ModelError> {
        let n = self.graph.num_vertices();
        if self.boundary.atoms().len() != n {
            return Err(ModelError::shape(
                "boundary",
                n,
                self.boundary.atoms().len(),
            ));
        }
        if self.boundary.atoms().iter().any(|m| !m.is_finite()) {
            return Err(ModelError::schema("boundary", "masses must be finite"));
        }
        self.cost.validate()?;
        if self.scenarios.is_empty() {
            return Err(ModelError::schema(
                "scenarios",
                "at least one scenario is required",
            ));
        }
        let mut ids: Vec<usize> = self.scenarios.iter().map(|s| s.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(ModelError::schema(
                "scenarios",
                "scenario ids must be unique",
            ));
        }
        for (k, s) in self.scenarios.iter().enumerate() {
            s.check_shapes(&self.graph, k)?;
        }
        let sum: f64 = self.scenarios.iter().map(|s| s.prob).sum();
        if (sum - 1.0).abs() > PROBABILITY_TOL {
            return Err(ModelError::ProbabilitySum { sum });
        }
        self.payoff.check_shapes(self.scenarios.len(), n)?;
        Ok(())
    }

    pub fn num_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    /// Upper bound `|nu|(X) / 2` on the edge load of any cycle-free admissible flow.
    pub fn beta(&self) -> f64 {
        self.boundary.total_variation() / 2.0
    }

    /// h(i, v).
    pub fn payoff_at(&self, scenario: usize, vertex: usize) -> f64 {
        self.payoff.at(scenario, vertex)
    }
}

/// Eulerian competitor: unoriented capacities and one signed flow per scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerianCompetitor {
    pub theta: Vec<f64>,
    pub flows: Vec<Vec<f64>>,
}

impl EulerianCompetitor {
    pub fn null(inst: &Instance) -> Self {
        Self {
            theta: vec![0.0; inst.graph.num_edges()],
            flows: vec![vec![0.0; inst.graph.num_edges()]; inst.num_scenarios()],
        }
    }

    pub fn check_shape(&self, inst: &Instance) -> Result<(), ModelError> {
        let m = inst.graph.num_edges();
        if self.theta.len() != m {
            return Err(ModelError::shape("theta", m, self.theta.len()));
        }
        if self.flows.len() != inst.num_scenarios() {
            return Err(ModelError::shape(
                "flows",
                inst.num_scenarios(),
                self.flows.len(),
            ));
        }
        for (i, f) in self.flows.iter().enumerate() {
            if f.len() != m {
                return Err(ModelError::shape(format!("flows[{i}]"), m, f.len()));
            }
        }
        Ok(())
    }
}

/// One path of a traffic plan with its weight and per-scenario sub-weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanPath {
    #[serde(flatten)]
    pub path: Path,
    pub weight: f64,
    pub sub_weights: Vec<f64>,
}

/// Lagrangian competitor: a traffic plan and its recovery sub-plans.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LagrangianCompetitor {
    pub plan: Vec<PlanPath>,
}

impl LagrangianCompetitor {
    /// Builds a competitor, rejecting sub-weights above the parent weight and
    /// dropping zero-weight paths.
    pub fn try_new(
        graph: &GeometricGraph,
        scenarios: usize,
        entries: Vec<(Path, f64, Vec<f64>)>,
    ) -> Result<Self, ModelError> {
        let mut plan = Vec::with_capacity(entries.len());
        for (k, (path, weight, sub_weights)) in entries.into_iter().enumerate() {
            path.check(graph)?;
            if sub_weights.len() != scenarios {
                return Err(ModelError::shape(
                    format!("plan[{k}].sub_weights"),
                    scenarios,
                    sub_weights.len(),
                ));
            }
            if !(weight >= 0.0)
                || sub_weights
                    .iter()
                    .any(|&w| !(w >= 0.0) || w > weight + 1e-12)
            {
                return Err(ModelError::schema(
                    format!("plan[{k}]"),
                    "sub-weights must lie in [0, weight]",
                ));
            }
            if weight > 0.0 {
                plan.push(PlanPath {
                    path,
                    weight,
                    sub_weights,
                });
            }
        }
        Ok(Self { plan })
    }

    pub fn total_mass(&self) -> f64 {
        self.plan.iter().map(|p| p.weight).sum()
    }

    pub fn paths(&self) -> impl Iterator<Item = (&Path, f64)> + Clone {
        self.plan.iter().map(|p| (&p.path, p.weight))
    }

    pub fn check_shape(&self, inst: &Instance) -> Result<(), ModelError> {
        for (k, p) in self.plan.iter().enumerate() {
            p.path.check(&inst.graph)?;
            if p.sub_weights.len() != inst.num_scenarios() {
                return Err(ModelError::shape(
                    format!("plan[{k}].sub_weights"),
                    inst.num_scenarios(),
                    p.sub_weights.len(),
                ));
            }
        }
        Ok(())
    }
}

/// Either kind of competitor, as stored in competitor and report files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Competitor {
    Eulerian(EulerianCompetitor),
    Lagrangian(LagrangianCompetitor),
}
