use serde::{Deserialize, Serialize};

use super::{Instance, PROBABILITY_TOL};

/// Findings about an instance, including the two hypotheses the Lagrangian
/// existence theory needs (separated supports, unbounded cost).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub findings: Vec<String>,
    pub total_variation: f64,
    pub beta: f64,
    pub probability_sum: f64,
    /// Smallest Euclidean distance between a source and a target position;
    /// `None` when one side is empty.
    pub source_target_distance: Option<f64>,
    pub supports_separated: bool,
    pub phi_bounded: bool,
    pub phi_subadditive: bool,
    pub eulerian_ready: bool,
    pub lagrangian_ready: bool,
}

pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut findings = Vec::new();
    let g = &inst.graph;
    let sources: Vec<usize> = inst.boundary.sources().collect();
    let targets: Vec<usize> = inst.boundary.targets().collect();
    let distance = sources
        .iter()
        .flat_map(|&s| targets.iter().map(move |&t| (s, t)))
        .map(|(s, t)| g.distance(s, t))
        .fold(None, |acc: Option<f64>, d| {
            Some(acc.map_or(d, |a| a.min(d)))
        });
    let separated = distance.is_some_and(|d| d > 0.0);
    if !separated {
        findings.push(
            "source and target supports are not separated; Lagrangian minimizers may not exist"
                .into(),
        );
    }
    let phi_bounded = inst.cost.is_bounded();
    if phi_bounded {
        findings.push("phi is bounded; Lagrangian minimizers may carry unbounded mass".into());
    }
    let phi_subadditive = inst.cost.subadditive_on_samples();
    if !phi_subadditive {
        findings.push("phi fails the subadditivity spot check".into());
    }
    let tv = inst.boundary.total_variation();
    if tv <= 0.0 {
        findings.push("boundary measure is trivial".into());
    }
    let probability_sum: f64 = inst.scenarios.iter().map(|s| s.prob).sum();
    let eulerian_ready = inst.scenarios.iter().all(|s| s.edge_mask.is_some());
    let lagrangian_ready = inst.scenarios.iter().all(|s| s.has_efficiencies());
    if !eulerian_ready {
        findings.push("some scenarios lack an edge mask; Eulerian solves are unavailable".into());
    }
    let ok = phi_subadditive && tv > 0.0 && (probability_sum - 1.0).abs() <= PROBABILITY_TOL;
    ValidationReport {
        ok,
        findings,
        total_variation: tv,
        beta: inst.beta(),
        probability_sum,
        source_target_distance: distance,
        supports_separated: separated,
        phi_bounded,
        phi_subadditive,
        eulerian_ready,
        lagrangian_ready,
    }
}
