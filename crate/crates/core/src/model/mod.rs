//! Domain types, the instance file format, the Jordan-domination order and
//! admissibility checks for both formulations.

mod admissible;
mod cost;
mod error;
mod graph;
mod instance;
mod json;
mod measure;
mod scenario;
mod validate;

pub use admissible::{
    check_eulerian_admissible, check_lagrangian_admissible, orientation_conflict, subplan_boundary,
    AdmissibilityReport, Constraint, ScenarioChecks, Violation,
};
pub use cost::CostSpec;
pub use error::ModelError;
pub use graph::{Edge, GeometricGraph, Path, Vertex};
pub use instance::{
    Competitor, EulerianCompetitor, Instance, LagrangianCompetitor, PlanPath, PROBABILITY_TOL,
};
pub use json::{instance_to_json, load_instance, FORMAT_VERSION};
pub use measure::{preceq, preceq_violation, BoundaryMeasure};
pub use scenario::{DamageScenario, Efficiencies, PayoffSpec};
pub use validate::{validate_instance, ValidationReport};

/// Absolute tolerance of the capacity and domination checks.
pub const ADMISSIBILITY_TOL: f64 = 1e-9;
