//! Robust branched transport on finite geometric graphs.
//!
//! A network is built once and must keep serving transport under a list of
//! probabilistic damage scenarios. Two formulations are supported: an
//! Eulerian one (unoriented capacities plus one signed recovery flow per
//! scenario) and a Lagrangian one (a weighted path collection plus per-scenario
//! sub-plans penalized by the damage).

pub mod decomposition;
pub mod energy;
pub mod examples;
pub mod model;
pub mod recovery;
pub mod render;
pub mod solver;
