use thiserror::Error;

/// Failures raised while parsing, validating or evaluating model data.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed instance JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("schema violation at `{field}`: {reason}")]
    Schema { field: String, reason: String },

    #[error("`{field}` references unknown id {id}")]
    DanglingId { field: String, id: usize },

    #[error("edge {edge} has non-positive length {length}")]
    NonPositiveLength { edge: usize, length: f64 },

    #[error("scenario probabilities sum to {sum}, expected 1")]
    ProbabilitySum { sum: f64 },

    #[error("vertex {vertex} carries both a source and a target atom")]
    MixedSign { vertex: usize },

    #[error("shape mismatch in `{field}`: expected {expected}, found {found}")]
    Shape {
        field: String,
        expected: usize,
        found: usize,
    },

    #[error("scenario {scenario} has no edge mask")]
    MissingMask { scenario: usize },

    #[error("scenario {scenario} has neither efficiencies nor an edge mask")]
    MissingEfficiencies { scenario: usize },

    #[error("path is invalid: {0}")]
    InvalidPath(String),

    #[error("cost evaluated at negative argument {0}")]
    NegativeArgument(f64),

    #[error("unknown edge id {0}")]
    UnknownEdge(usize),
}

impl ModelError {
    pub(crate) fn schema(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ModelError::Schema {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn shape(field: impl Into<String>, expected: usize, found: usize) -> Self {
        ModelError::Shape {
            field: field.into(),
            expected,
            found,
        }
    }
}
