use serde::{Deserialize, Serialize};

use super::{
    BoundaryMeasure, CostSpec, DamageScenario, GeometricGraph, Instance, ModelError, PayoffSpec,
};

/// Version tag written at the top of every JSON document.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    #[serde(default = "default_format")]
    format: u32,
    dimension: usize,
    vertices: Vec<RawVertex>,
    edges: Vec<RawEdge>,
    boundary: Vec<RawAtom>,
    phi: CostSpec,
    scenarios: Vec<DamageScenario>,
    payoff: PayoffSpec,
}

fn default_format() -> u32 {
    FORMAT_VERSION
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVertex {
    id: usize,
    pos: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    id: usize,
    u: usize,
    v: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    length: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAtom {
    vertex: usize,
    mass: f64,
}

/// Parses and validates an instance document.
pub fn load_instance(text: &str) -> Result<Instance, ModelError> {
    let raw: RawInstance = serde_json::from_str(text)?;
    if raw.format != FORMAT_VERSION {
        return Err(ModelError::schema(
            "format",
            format!("unsupported version {}", raw.format),
        ));
    }
    let n = raw.vertices.len();
    let mut positions: Vec<Option<Vec<f64>>> = vec![None; n];
    for v in raw.vertices {
        if v.id >= n {
            return Err(ModelError::schema(
                "vertices",
                format!("ids must be contiguous from 0, got {}", v.id),
            ));
        }
        if positions[v.id].replace(v.pos).is_some() {
            return Err(ModelError::schema(
                "vertices",
                format!("duplicate id {}", v.id),
            ));
        }
    }
    let positions: Vec<Vec<f64>> = positions
        .into_iter()
        .map(|p| p.expect("all ids filled"))
        .collect();

    let m = raw.edges.len();
    let mut edges: Vec<Option<(usize, usize, Option<f64>)>> = vec![None; m];
    for e in raw.edges {
        if e.id >= m {
            return Err(ModelError::schema(
                "edges",
                format!("ids must be contiguous from 0, got {}", e.id),
            ));
        }
        if let Some(len) = e.length {
            if !(len > 0.0) {
                return Err(ModelError::NonPositiveLength {
                    edge: e.id,
                    length: len,
                });
            }
        }
        if edges[e.id].replace((e.u, e.v, e.length)).is_some() {
            return Err(ModelError::schema(
                "edges",
                format!("duplicate id {}", e.id),
            ));
        }
    }
    let edges = edges
        .into_iter()
        .map(|e| e.expect("all ids filled"))
        .collect();
    let graph = GeometricGraph::new(raw.dimension, positions, edges)?;

    let mut atoms = vec![0.0; n];
    for (k, a) in raw.boundary.iter().enumerate() {
        if a.vertex >= n {
            return Err(ModelError::DanglingId {
                field: format!("boundary[{k}].vertex"),
                id: a.vertex,
            });
        }
        let cur: f64 = atoms[a.vertex];
        if cur * a.mass < 0.0 {
            return Err(ModelError::MixedSign { vertex: a.vertex });
        }
        atoms[a.vertex] = cur + a.mass;
    }

    Instance::new(
        graph,
        BoundaryMeasure::new(atoms),
        raw.phi,
        raw.scenarios,
        raw.payoff,
    )
}

/// Serializes an instance; edge lengths are always written explicitly so the
/// output reloads to an identical instance.
pub fn instance_to_json(inst: &Instance) -> String {
    let raw = RawInstance {
        format: FORMAT_VERSION,
        dimension: inst.graph.dimension(),
        vertices: inst
            .graph
            .vertices()
            .iter()
            .map(|v| RawVertex {
                id: v.id,
                pos: v.pos.clone(),
            })
            .collect(),
        edges: inst
            .graph
            .edges()
            .iter()
            .map(|e| RawEdge {
                id: e.id,
                u: e.u,
                v: e.v,
                length: Some(e.length),
            })
            .collect(),
        boundary: inst
            .boundary
            .atoms()
            .iter()
            .enumerate()
            .filter(|(_, &m)| m != 0.0)
            .map(|(vertex, &mass)| RawAtom { vertex, mass })
            .collect(),
        phi: inst.cost.clone(),
        scenarios: inst.scenarios.clone(),
        payoff: inst.payoff.clone(),
    };
    serde_json::to_string_pretty(&raw).expect("instance serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"{
        "dimension": 2,
        "vertices": [{"id": 0, "pos": [0, 0]}, {"id": 1, "pos": [3, 4]}],
        "edges": [{"id": 0, "u": 0, "v": 1}],
        "boundary": [{"vertex": 0, "mass": -1}, {"vertex": 1, "mass": 1}],
        "phi": {"kind": "power", "alpha": 0.5},
        "scenarios": [{"id": 0, "prob": 1.0, "edge_mask": [true]}],
        "payoff": {"kind": "constant", "value": 1}
    }"#;

    #[test]
    fn loads_minimal_instance() {
        let inst = load_instance(MINIMAL).unwrap();
        assert_eq!(inst.boundary.total_variation(), 2.0);
        assert_eq!(inst.graph.edge(0).length, 5.0);
        assert_eq!(inst.beta(), 1.0);
    }

    #[test]
    fn round_trip_is_byte_stable() {
        let inst = load_instance(MINIMAL).unwrap();
        let text = instance_to_json(&inst);
        let again = load_instance(&text).unwrap();
        assert_eq!(again, inst);
        assert_eq!(instance_to_json(&again), text);
    }

    #[test]
    fn probability_sum_is_checked() {
        let text = MINIMAL.replace(
            r#"[{"id": 0, "prob": 1.0, "edge_mask": [true]}]"#,
            r#"[{"id": 0, "prob": 0.6, "edge_mask": [true]}, {"id": 1, "prob": 0.3, "edge_mask": [true]}]"#,
        );
        assert!(matches!(
            load_instance(&text),
            Err(ModelError::ProbabilitySum { .. })
        ));
    }

    #[test]
    fn mixed_signs_are_rejected() {
        let text = MINIMAL.replace(
            r#"{"vertex": 1, "mass": 1}"#,
            r#"{"vertex": 1, "mass": 1}, {"vertex": 1, "mass": -0.5}"#,
        );
        assert!(matches!(
            load_instance(&text),
            Err(ModelError::MixedSign { vertex: 1 })
        ));
    }

    #[test]
    fn dangling_and_negative_length_are_rejected() {
        let dangling = MINIMAL.replace(r#""u": 0, "v": 1"#, r#""u": 0, "v": 7"#);
        assert!(matches!(
            load_instance(&dangling),
            Err(ModelError::DanglingId { id: 7, .. })
        ));
        let negative = MINIMAL.replace(r#""u": 0, "v": 1"#, r#""u": 0, "v": 1, "length": -2"#);
        assert!(matches!(
            load_instance(&negative),
            Err(ModelError::NonPositiveLength { edge: 0, .. })
        ));
        let unknown = MINIMAL.replace(r#""dimension": 2"#, r#""dimension": 2, "extra": 1"#);
        assert!(load_instance(&unknown).is_err());
        let bad_mask = MINIMAL.replace("[true]", "[true, false]");
        assert!(matches!(
            load_instance(&bad_mask),
            Err(ModelError::Shape { .. })
        ));
    }
}
