use serde::{Deserialize, Serialize};

use super::{
    preceq_violation, EulerianCompetitor, Instance, LagrangianCompetitor, ModelError,
    ADMISSIBILITY_TOL,
};
use crate::energy::boundary_of_flow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// `|T_i| <= theta` edge-wise.
    Capacity,
    /// No flow on damaged edges.
    Support,
    /// Boundary of the recovery plan dominated by nu.
    Boundary,
    /// `P_i <= P`.
    SubPlan,
    /// Capacities must be nonnegative.
    Theta,
    /// All scenarios share each edge's orientation.
    Orientation,
}

/// First failed constraint. `item` is an edge, vertex or plan index depending
/// on the constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub scenario: usize,
    pub constraint: Constraint,
    pub item: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioChecks {
    pub capacity: bool,
    pub support: bool,
    pub subplan: bool,
    pub boundary: bool,
}

impl Default for ScenarioChecks {
    fn default() -> Self {
        Self {
            capacity: true,
            support: true,
            subplan: true,
            boundary: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub scenarios: Vec<ScenarioChecks>,
    pub first_violation: Option<Violation>,
}

impl AdmissibilityReport {
    pub fn is_admissible(&self) -> bool {
        self.first_violation.is_none()
    }

    fn record(&mut self, v: Violation) {
        if self.first_violation.is_none() {
            self.first_violation = Some(v);
        }
    }
}

pub fn check_eulerian_admissible(
    inst: &Instance,
    c: &EulerianCompetitor,
) -> Result<AdmissibilityReport, ModelError> {
    c.check_shape(inst)?;
    let mut report = AdmissibilityReport {
        scenarios: vec![ScenarioChecks::default(); inst.num_scenarios()],
        first_violation: None,
    };
    if let Some(e) = c.theta.iter().position(|&t| !(t >= 0.0)) {
        report.record(Violation {
            scenario: 0,
            constraint: Constraint::Theta,
            item: e,
        });
    }
    for (i, (scenario, flow)) in inst.scenarios.iter().zip(&c.flows).enumerate() {
        let mask = scenario.mask()?;
        let checks = &mut report.scenarios[i];
        let mut found = Vec::new();
        if let Some(e) = (0..flow.len()).find(|&e| flow[e].abs() > c.theta[e] + ADMISSIBILITY_TOL) {
            checks.capacity = false;
            found.push(Violation {
                scenario: i,
                constraint: Constraint::Capacity,
                item: e,
            });
        }
        if let Some(e) = (0..flow.len()).find(|&e| !mask[e] && flow[e] != 0.0) {
            checks.support = false;
            found.push(Violation {
                scenario: i,
                constraint: Constraint::Support,
                item: e,
            });
        }
        let boundary = boundary_of_flow(&inst.graph, flow);
        if let Some(v) = preceq_violation(&boundary, &inst.boundary) {
            checks.boundary = false;
            found.push(Violation {
                scenario: i,
                constraint: Constraint::Boundary,
                item: v,
            });
        }
        for v in found {
            report.record(v);
        }
    }
    Ok(report)
}

/// Edge where two scenarios push flow in opposite directions, if any.
pub fn orientation_conflict(c: &EulerianCompetitor) -> Option<usize> {
    let m = c.theta.len();
    (0..m).find(|&e| {
        let pos = c.flows.iter().any(|f| f[e] > ADMISSIBILITY_TOL);
        let neg = c.flows.iter().any(|f| f[e] < -ADMISSIBILITY_TOL);
        pos && neg
    })
}

/// Signed endpoint measure `sum_p w_{i,p} (delta_end - delta_start)` of scenario `i`.
pub fn subplan_boundary(inst: &Instance, c: &LagrangianCompetitor, scenario: usize) -> Vec<f64> {
    let mut m = vec![0.0; inst.graph.num_vertices()];
    for p in &c.plan {
        let w = p.sub_weights[scenario];
        m[p.path.end()] += w;
        m[p.path.start()] -= w;
    }
    m
}

pub fn check_lagrangian_admissible(
    inst: &Instance,
    c: &LagrangianCompetitor,
) -> Result<AdmissibilityReport, ModelError> {
    c.check_shape(inst)?;
    let mut report = AdmissibilityReport {
        scenarios: vec![ScenarioChecks::default(); inst.num_scenarios()],
        first_violation: None,
    };
    for i in 0..inst.num_scenarios() {
        let mut found = Vec::new();
        if let Some(k) = c
            .plan
            .iter()
            .position(|p| p.sub_weights[i] < 0.0 || p.sub_weights[i] > p.weight + 1e-12)
        {
            report.scenarios[i].subplan = false;
            found.push(Violation {
                scenario: i,
                constraint: Constraint::SubPlan,
                item: k,
            });
        }
        let boundary = subplan_boundary(inst, c, i);
        if let Some(v) = preceq_violation(&boundary, &inst.boundary) {
            report.scenarios[i].boundary = false;
            found.push(Violation {
                scenario: i,
                constraint: Constraint::Boundary,
                item: v,
            });
        }
        for v in found {
            report.record(v);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        BoundaryMeasure, CostSpec, DamageScenario, GeometricGraph, Path, PayoffSpec,
    };

    /// u = 0, v = 1, nu = delta_v - delta_u
    fn segment(mask: bool) -> Instance {
        let g = GeometricGraph::new(1, vec![vec![0.0], vec![1.0]], vec![(0, 1, None)]).unwrap();
        Instance::new(
            g,
            BoundaryMeasure::new(vec![-1.0, 1.0]),
            CostSpec::sqrt(),
            vec![DamageScenario::with_mask(0, 1.0, vec![mask])],
            PayoffSpec::Constant { value: 1.0 },
        )
        .unwrap()
    }

    #[test]
    fn null_competitor_is_admissible() {
        let inst = segment(true);
        let r = check_eulerian_admissible(&inst, &EulerianCompetitor::null(&inst)).unwrap();
        assert!(r.is_admissible());
    }

    #[test]
    fn capacity_violation_is_reported() {
        let inst = segment(true);
        let c = EulerianCompetitor {
            theta: vec![0.4],
            flows: vec![vec![0.5]],
        };
        let r = check_eulerian_admissible(&inst, &c).unwrap();
        assert!(!r.scenarios[0].capacity);
        assert_eq!(r.first_violation.unwrap().constraint, Constraint::Capacity);
    }

    #[test]
    fn support_violation_is_reported() {
        let inst = segment(false);
        let c = EulerianCompetitor {
            theta: vec![1.0],
            flows: vec![vec![0.5]],
        };
        let r = check_eulerian_admissible(&inst, &c).unwrap();
        assert!(!r.scenarios[0].support);
        assert!(r.scenarios[0].capacity);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let inst = segment(true);
        let c = EulerianCompetitor {
            theta: vec![1.0, 2.0],
            flows: vec![vec![0.5]],
        };
        assert!(check_eulerian_admissible(&inst, &c).is_err());
    }

    #[test]
    fn lagrangian_checks() {
        let inst = segment(true);
        let forward = Path::from_vertices(&inst.graph, vec![0, 1]).unwrap();
        let backward = Path::from_vertices(&inst.graph, vec![1, 0]).unwrap();
        let ok =
            LagrangianCompetitor::try_new(&inst.graph, 1, vec![(forward.clone(), 0.5, vec![0.5])])
                .unwrap();
        assert!(check_lagrangian_admissible(&inst, &ok)
            .unwrap()
            .is_admissible());

        assert!(LagrangianCompetitor::try_new(
            &inst.graph,
            1,
            vec![(forward.clone(), 0.5, vec![0.7])]
        )
        .is_err());
        let over = LagrangianCompetitor {
            plan: vec![crate::model::PlanPath {
                path: forward,
                weight: 0.5,
                sub_weights: vec![0.7],
            }],
        };
        let r = check_lagrangian_admissible(&inst, &over).unwrap();
        assert!(!r.scenarios[0].subplan);

        let rev = LagrangianCompetitor::try_new(&inst.graph, 1, vec![(backward, 0.5, vec![0.5])])
            .unwrap();
        let r = check_lagrangian_admissible(&inst, &rev).unwrap();
        assert!(!r.scenarios[0].boundary);
        assert_eq!(r.first_violation.unwrap().constraint, Constraint::Boundary);
    }
}
