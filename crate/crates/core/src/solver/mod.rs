//! Outer optimization for both formulations plus an exhaustive oracle.
//!
//! The Eulerian objective couples scenarios through `theta_e = max_i |T_{i,e}|`
//! and is neither convex nor concave, so both solvers are local searches with
//! restarts. Exactness on small instances is checked against
//! [`brute_force_oracle`].

mod dictionary;
mod eulerian;
mod lagrangian;
mod oracle;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::EnergyBreakdown;
use crate::model::{AdmissibilityReport, Competitor, ModelError};
use crate::recovery::RecoveryError;

pub use dictionary::{k_shortest_paths, path_dictionary, simple_paths};
pub use eulerian::solve_eulerian;
pub use lagrangian::{solve_lagrangian, solve_lagrangian_with_dictionary};
pub use oracle::{brute_force_oracle, ORACLE_CANDIDATE_LIMIT};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Recovery(#[from] RecoveryError),
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),
    #[error("invalid options: {0}")]
    Options(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Eulerian,
    EulerianOriented,
    Lagrangian,
}

impl Model {
    pub fn is_eulerian(self) -> bool {
        !matches!(self, Model::Lagrangian)
    }
}

impl std::str::FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eulerian" => Ok(Model::Eulerian),
            "eulerian-oriented" => Ok(Model::EulerianOriented),
            "lagrangian" => Ok(Model::Lagrangian),
            other => Err(format!("unknown model `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub model: Model,
    pub max_iters: usize,
    /// Extra runs besides the one started from the empty network.
    pub restarts: usize,
    pub seed: u64,
    pub dictionary_size: usize,
    /// Mass quantum of the moves and of the oracle grid.
    pub delta: f64,
    pub tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            model: Model::Eulerian,
            max_iters: 200,
            restarts: 8,
            seed: 0,
            dictionary_size: 16,
            delta: 0.125,
            tol: 1e-9,
        }
    }
}

impl SolveOptions {
    pub fn with_model(model: Model) -> Self {
        Self {
            model,
            ..Self::default()
        }
    }

    pub(crate) fn check(&self) -> Result<(), SolveError> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(SolveError::Options("delta must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(SolveError::Options("max_iters must be positive".into()));
        }
        if self.dictionary_size == 0 {
            return Err(SolveError::Options(
                "dictionary_size must be positive".into(),
            ));
        }
        if !(self.tol >= 0.0) {
            return Err(SolveError::Options("tol must be nonnegative".into()));
        }
        Ok(())
    }
}

/// The two existence hypotheses of the Lagrangian model, echoed for information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypotheses {
    pub source_target_distance: Option<f64>,
    pub supports_separated: bool,
    pub phi_unbounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub candidates: u64,
    /// Number of candidates whose energy ties the optimum within 1e-12.
    pub argmin_size: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub format: u32,
    pub options: SolveOptions,
    pub competitor: Competitor,
    pub energy: EnergyBreakdown,
    /// Energy after every accepted move of the winning run.
    pub trace: Vec<f64>,
    pub admissibility: AdmissibilityReport,
    /// Final energy of every run, by restart index.
    pub restart_energies: Vec<f64>,
    pub iterations: usize,
    pub budget_exhausted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<Hypotheses>,
    /// Kept out of the JSON so that reports stay byte-identical across runs.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Records `energy - oracle_energy`.
    pub fn attach_oracle(&mut self, oracle: &SolveReport) {
        self.oracle_gap = Some(self.energy.energy - oracle.energy.energy);
    }
}

/// `theta_e = max_i |T_{i,e}|`, the smallest capacity supporting every flow.
pub fn theta_from_flows(flows: &[Vec<f64>]) -> Vec<f64> {
    let m = flows.first().map_or(0, Vec::len);
    (0..m)
        .map(|e| flows.iter().map(|f| f[e].abs()).fold(0.0, f64::max))
        .collect()
}

/// Worker pool capped by `ROT_THREADS` when set.
pub(crate) fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let threads = std::env::var("ROT_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    match threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

/// One finished local-search run.
#[derive(Debug, Clone)]
pub(crate) struct Run<S> {
    pub state: S,
    pub energy: f64,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub exhausted: bool,
}

/// Lowest energy wins; ties go to the smaller restart index.
pub(crate) fn best_run<S>(runs: Vec<Run<S>>) -> (Run<S>, Vec<f64>) {
    let energies: Vec<f64> = runs.iter().map(|r| r.energy).collect();
    let mut best = 0;
    for (k, e) in energies.iter().enumerate() {
        if *e < energies[best] {
            best = k;
        }
    }
    let run = runs.into_iter().nth(best).expect("at least one run");
    (run, energies)
}

/// Total order on floats for heaps and ordered sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Key(pub f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Number of whole quanta in `x`, robust to roundoff just below a multiple.
pub(crate) fn quanta(x: f64, delta: f64) -> i64 {
    ((x / delta) + 1e-9).floor().max(0.0) as i64
}
