//! Energy functionals of both formulations and their ingredients.
//!
//! Eulerian: `M^phi(mu) - sum_i a_i * sum_v h(i,v) |dT_i|(v)`.
//! Lagrangian: `M^phi(P) - sum_i a_i * sum_p f_i(p) w_{i,p} (h(i,start) + h(i,end))`.

use serde::{Deserialize, Serialize};

use crate::model::{
    CostSpec, Efficiencies, EulerianCompetitor, GeometricGraph, Instance, LagrangianCompetitor,
    ModelError, Path,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub phi_mass: f64,
    /// Already multiplied by the scenario probabilities.
    pub payoff_per_scenario: Vec<f64>,
    pub payoff_total: f64,
    pub energy: f64,
}

impl EnergyBreakdown {
    fn new(phi_mass: f64, payoff_per_scenario: Vec<f64>) -> Self {
        let payoff_total: f64 = payoff_per_scenario.iter().sum();
        Self {
            phi_mass,
            payoff_per_scenario,
            payoff_total,
            energy: phi_mass - payoff_total,
        }
    }
}

pub fn phi_eval(cost: &CostSpec, t: f64) -> Result<f64, ModelError> {
    cost.eval(t)
}

/// `sum_e length(e) * phi(theta_e)`.
pub fn phi_mass_eulerian(graph: &GeometricGraph, cost: &CostSpec, theta: &[f64]) -> f64 {
    graph
        .edges()
        .iter()
        .zip(theta)
        .map(|(e, &t)| e.length * cost.eval_unchecked(t.max(0.0)))
        .sum()
}

/// Discrete boundary: flow `+m` along `u -> v` puts `+m` at `v` and `-m` at `u`.
pub fn boundary_of_flow(graph: &GeometricGraph, flow: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0; graph.num_vertices()];
    for (e, &f) in graph.edges().iter().zip(flow) {
        b[e.v] += f;
        b[e.u] -= f;
    }
    b
}

/// `a_i * sum_v h(i, v) |boundary(v)|`.
pub(crate) fn eulerian_scenario_payoff(inst: &Instance, scenario: usize, flow: &[f64]) -> f64 {
    let b = boundary_of_flow(&inst.graph, flow);
    let sum: f64 = b
        .iter()
        .enumerate()
        .map(|(v, x)| inst.payoff_at(scenario, v) * x.abs())
        .sum();
    inst.scenarios[scenario].prob * sum
}

pub fn eulerian_energy(
    inst: &Instance,
    c: &EulerianCompetitor,
) -> Result<EnergyBreakdown, ModelError> {
    c.check_shape(inst)?;
    let phi_mass = phi_mass_eulerian(&inst.graph, &inst.cost, &c.theta);
    let payoffs = c
        .flows
        .iter()
        .enumerate()
        .map(|(i, f)| eulerian_scenario_payoff(inst, i, f))
        .collect();
    Ok(EnergyBreakdown::new(phi_mass, payoffs))
}

/// Edge multiplicity `|e|_P`: total weight of the paths whose image contains `e`,
/// each path counted once.
pub fn multiplicity(
    graph: &GeometricGraph,
    plan: &LagrangianCompetitor,
    edge: usize,
) -> Result<f64, ModelError> {
    if edge >= graph.num_edges() {
        return Err(ModelError::UnknownEdge(edge));
    }
    Ok(plan
        .paths()
        .filter(|(p, _)| p.edges().contains(&edge))
        .map(|(_, w)| w)
        .sum())
}

/// Multiplicity of every edge at once.
pub fn multiplicities<'a>(
    graph: &GeometricGraph,
    paths: impl IntoIterator<Item = (&'a Path, f64)>,
) -> Vec<f64> {
    let mut theta = vec![0.0; graph.num_edges()];
    let mut seen = vec![usize::MAX; graph.num_edges()];
    for (k, (p, w)) in paths.into_iter().enumerate() {
        for &e in p.edges() {
            if seen[e] != k {
                seen[e] = k;
                theta[e] += w;
            }
        }
    }
    theta
}

/// Phi-mass of a traffic plan: every traversal of `e` by a path of weight `w`
/// contributes `w * length(e) * phi(theta_e) / theta_e`, with `0/0 = 0`.
pub fn phi_mass_traffic<'a>(
    graph: &GeometricGraph,
    cost: &CostSpec,
    paths: impl IntoIterator<Item = (&'a Path, f64)> + Clone,
) -> f64 {
    let theta = multiplicities(graph, paths.clone());
    let density: Vec<f64> = graph
        .edges()
        .iter()
        .map(|e| {
            let t = theta[e.id];
            if t > 0.0 {
                e.length * cost.eval_unchecked(t) / t
            } else {
                0.0
            }
        })
        .collect();
    paths
        .into_iter()
        .map(|(p, w)| w * p.edges().iter().map(|&e| density[e]).sum::<f64>())
        .sum()
}

/// Worst efficiency met along the path, over its vertices and edges.
pub fn path_efficiency(path: &Path, eff: &Efficiencies) -> f64 {
    let v = path.vertices().iter().map(|&v| eff.vertex[v]);
    let e = path.edges().iter().map(|&e| eff.edge[e]);
    v.chain(e).fold(1.0, f64::min)
}

/// Sub-plan of scenario `i` with every weight scaled by its path's efficiency.
pub fn penalized_plan(
    inst: &Instance,
    c: &LagrangianCompetitor,
    scenario: usize,
) -> Result<Vec<(Path, f64)>, ModelError> {
    let eff = inst.scenarios[scenario].efficiencies(&inst.graph)?;
    Ok(c.plan
        .iter()
        .map(|p| {
            (
                p.path.clone(),
                p.sub_weights[scenario] * path_efficiency(&p.path, &eff),
            )
        })
        .collect())
}

pub fn lagrangian_energy(
    inst: &Instance,
    c: &LagrangianCompetitor,
) -> Result<EnergyBreakdown, ModelError> {
    c.check_shape(inst)?;
    let phi_mass = phi_mass_traffic(&inst.graph, &inst.cost, c.paths());
    let mut payoffs = Vec::with_capacity(inst.num_scenarios());
    for (i, s) in inst.scenarios.iter().enumerate() {
        let eff = s.efficiencies(&inst.graph)?;
        let sum: f64 = c
            .plan
            .iter()
            .map(|p| {
                let w = p.sub_weights[i] * path_efficiency(&p.path, &eff);
                w * (inst.payoff_at(i, p.path.start()) + inst.payoff_at(i, p.path.end()))
            })
            .sum();
        payoffs.push(s.prob * sum);
    }
    Ok(EnergyBreakdown::new(phi_mass, payoffs))
}
