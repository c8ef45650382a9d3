use serde::{Deserialize, Serialize};

use super::{GeometricGraph, ModelError};

/// One damage event with its probability.
///
/// Eulerian solves read `edge_mask` (`true` = usable). Lagrangian solves read
/// efficiencies in `[0, 1]`; a mask is folded in as 0/1 edge efficiencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DamageScenario {
    pub id: usize,
    pub prob: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_mask: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex_efficiency: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_efficiency: Option<Vec<f64>>,
}

/// Resolved per-vertex and per-edge efficiencies of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Efficiencies {
    pub vertex: Vec<f64>,
    pub edge: Vec<f64>,
}

impl DamageScenario {
    pub fn with_mask(id: usize, prob: f64, mask: Vec<bool>) -> Self {
        Self {
            id,
            prob,
            edge_mask: Some(mask),
            vertex_efficiency: None,
            edge_efficiency: None,
        }
    }

    pub fn with_efficiencies(
        id: usize,
        prob: f64,
        vertex: Vec<f64>,
        edge: Option<Vec<f64>>,
    ) -> Self {
        Self {
            id,
            prob,
            edge_mask: None,
            vertex_efficiency: Some(vertex),
            edge_efficiency: edge,
        }
    }

    pub fn has_efficiencies(&self) -> bool {
        self.edge_mask.is_some()
            || self.vertex_efficiency.is_some()
            || self.edge_efficiency.is_some()
    }

    /// Eulerian usability of edge `e`; errors when the mask is absent.
    pub fn mask(&self) -> Result<&[bool], ModelError> {
        self.edge_mask
            .as_deref()
            .ok_or(ModelError::MissingMask { scenario: self.id })
    }

    /// Vertex efficiencies default to 1; an absent edge efficiency defaults to
    /// the smaller endpoint efficiency; masked-out edges get 0.
    pub fn efficiencies(&self, graph: &GeometricGraph) -> Result<Efficiencies, ModelError> {
        if !self.has_efficiencies() {
            return Err(ModelError::MissingEfficiencies { scenario: self.id });
        }
        let vertex = self
            .vertex_efficiency
            .clone()
            .unwrap_or_else(|| vec![1.0; graph.num_vertices()]);
        let edge = graph
            .edges()
            .iter()
            .map(|e| {
                let base = match &self.edge_efficiency {
                    Some(eff) => eff[e.id],
                    None => vertex[e.u].min(vertex[e.v]),
                };
                match &self.edge_mask {
                    Some(mask) if !mask[e.id] => 0.0,
                    _ => base,
                }
            })
            .collect();
        Ok(Efficiencies { vertex, edge })
    }

    pub(crate) fn check_shapes(
        &self,
        graph: &GeometricGraph,
        index: usize,
    ) -> Result<(), ModelError> {
        let field = |name: &str| format!("scenarios[{index}].{name}");
        if let Some(mask) = &self.edge_mask {
            if mask.len() != graph.num_edges() {
                return Err(ModelError::shape(
                    field("edge_mask"),
                    graph.num_edges(),
                    mask.len(),
                ));
            }
        }
        if let Some(eff) = &self.vertex_efficiency {
            if eff.len() != graph.num_vertices() {
                return Err(ModelError::shape(
                    field("vertex_efficiency"),
                    graph.num_vertices(),
                    eff.len(),
                ));
            }
            if eff.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(ModelError::schema(
                    field("vertex_efficiency"),
                    "values must lie in [0, 1]",
                ));
            }
        }
        if let Some(eff) = &self.edge_efficiency {
            if eff.len() != graph.num_edges() {
                return Err(ModelError::shape(
                    field("edge_efficiency"),
                    graph.num_edges(),
                    eff.len(),
                ));
            }
            if eff.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(ModelError::schema(
                    field("edge_efficiency"),
                    "values must lie in [0, 1]",
                ));
            }
        }
        if !(self.prob > 0.0 && self.prob <= 1.0) {
            return Err(ModelError::schema(field("prob"), "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Reward per unit of mass leaving or reaching a vertex, per scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PayoffSpec {
    Constant {
        value: f64,
    },
    /// `values[scenario][vertex]`.
    Table {
        values: Vec<Vec<f64>>,
    },
}

impl PayoffSpec {
    pub fn at(&self, scenario: usize, vertex: usize) -> f64 {
        match self {
            PayoffSpec::Constant { value } => *value,
            PayoffSpec::Table { values } => values[scenario][vertex],
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            PayoffSpec::Constant { value } => *value,
            PayoffSpec::Table { values } => values.iter().flatten().copied().fold(0.0, f64::max),
        }
    }

    pub(crate) fn check_shapes(&self, scenarios: usize, vertices: usize) -> Result<(), ModelError> {
        match self {
            PayoffSpec::Constant { value } => {
                if !(*value >= 0.0) || !value.is_finite() {
                    return Err(ModelError::schema(
                        "payoff.value",
                        "must be finite and >= 0",
                    ));
                }
            }
            PayoffSpec::Table { values } => {
                if values.len() != scenarios {
                    return Err(ModelError::shape("payoff.values", scenarios, values.len()));
                }
                for (i, row) in values.iter().enumerate() {
                    if row.len() != vertices {
                        return Err(ModelError::shape(
                            format!("payoff.values[{i}]"),
                            vertices,
                            row.len(),
                        ));
                    }
                    if row.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                        return Err(ModelError::schema(
                            format!("payoff.values[{i}]"),
                            "must be finite and >= 0",
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}
