//! Builders for the four counterexample instances and the automated checks of
//! the phenomenon each one exhibits.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{lagrangian_energy, path_efficiency};
use crate::model::{
    BoundaryMeasure, Competitor, CostSpec, DamageScenario, GeometricGraph, Instance,
    LagrangianCompetitor, ModelError, Path, PayoffSpec, FORMAT_VERSION,
};
use crate::solver::{
    brute_force_oracle, k_shortest_paths, solve_eulerian, solve_lagrangian,
    solve_lagrangian_with_dictionary, Model, SolveError, SolveOptions, SolveReport,
};

/// Agreement required between solver and oracle energies.
pub const ORACLE_MATCH_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ExampleError {
    #[error("unknown example `{0}`")]
    UnknownName(String),
    #[error("invalid parameter `{name}`: {reason}")]
    Param { name: &'static str, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

fn param(name: &'static str, reason: impl Into<String>) -> ExampleError {
    ExampleError::Param {
        name,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleName {
    NonExistence,
    NonContinuous,
    Distance,
    Limit,
}

impl std::str::FromStr for ExampleName {
    type Err = ExampleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "non_existence" => Ok(ExampleName::NonExistence),
            "non_continuous" => Ok(ExampleName::NonContinuous),
            "distance" => Ok(ExampleName::Distance),
            "limit" => Ok(ExampleName::Limit),
            other => Err(ExampleError::UnknownName(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleParams {
    pub name: ExampleName,
    /// Number of levels J of `distance`.
    pub levels: usize,
    /// Grid step of `non_continuous`; `1 / epsilon` must be an integer.
    pub epsilon: f64,
    /// Exponent of the middle-column damage of `non_continuous`.
    pub beta: f64,
    /// Number of curves of `limit`.
    pub loops: usize,
    /// Constant pay-off of `non_existence`, `non_continuous` and `limit`;
    /// `None` picks the example's own default.
    #[serde(default)]
    pub payoff: Option<f64>,
    /// Extra length of the parallel detour of `non_existence`.
    pub detour: f64,
}

impl ExampleParams {
    pub fn new(name: ExampleName) -> Self {
        Self {
            name,
            levels: 3,
            epsilon: 0.125,
            beta: 1.0,
            loops: 4,
            payoff: None,
            detour: 0.25,
        }
    }

    /// Pay-off in use. `non_existence` needs `h > 4 + 4 sqrt 2 + sqrt 2 detour`
    /// for the detour to beat abandoning a scenario, hence its larger default.
    pub fn payoff(&self) -> f64 {
        self.payoff.unwrap_or(match self.name {
            ExampleName::NonExistence => NON_EXISTENCE_PAYOFF,
            _ => DEFAULT_PAYOFF,
        })
    }

    /// Cells per side of the `non_continuous` grid.
    fn grid_cells(&self) -> Result<usize, ExampleError> {
        let n = (1.0 / self.epsilon).round();
        if !(self.epsilon > 0.0) || (n * self.epsilon - 1.0).abs() > 1e-12 || n < 4.0 {
            return Err(param("epsilon", "must be 1/N for an integer N >= 4"));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<(), ExampleError> {
        if !(self.payoff() >= 0.0) || !self.payoff().is_finite() {
            return Err(param("payoff", "must be finite and nonnegative"));
        }
        match self.name {
            ExampleName::NonExistence if !(self.detour > 0.0) => {
                Err(param("detour", "must be positive"))
            }
            ExampleName::Distance if !(1..=10).contains(&self.levels) => {
                Err(param("levels", "must lie in 1..=10"))
            }
            ExampleName::Limit if !(1..=16).contains(&self.loops) => {
                Err(param("loops", "must lie in 1..=16"))
            }
            ExampleName::NonContinuous => {
                if !(self.beta > 0.0) {
                    return Err(param("beta", "must be positive"));
                }
                self.grid_cells().map(|_| ())
            }
            _ => Ok(()),
        }
    }
}

pub const DEFAULT_PAYOFF: f64 = 10.0;
pub const NON_EXISTENCE_PAYOFF: f64 = 12.0;

pub fn build_example(params: &ExampleParams) -> Result<Instance, ExampleError> {
    params.validate()?;
    match params.name {
        ExampleName::NonExistence => non_existence(params),
        ExampleName::NonContinuous => non_continuous(params),
        ExampleName::Distance => distance(params),
        ExampleName::Limit => Ok(limit(params)?.0),
    }
}

/// Edge ids of the shared middle segment and of its parallel detour.
pub const NON_EXISTENCE_MIDDLE: usize = 2;
pub const NON_EXISTENCE_DETOUR: usize = 7;

fn non_existence(params: &ExampleParams) -> Result<Instance, ExampleError> {
    let pos = vec![
        vec![-3.0, 0.0],
        vec![-2.0, -1.0],
        vec![-1.0, -1.0],
        vec![1.0, -1.0],
        vec![2.0, -1.0],
        vec![3.0, 0.0],
        vec![2.0, 0.0],
        vec![-2.0, 0.0],
    ];
    let edges = vec![
        (0, 1, None),
        (1, 2, None),
        (2, 3, None),
        (3, 4, None),
        (4, 5, None),
        (6, 3, None),
        (2, 7, None),
        (2, 3, Some(2.0 + params.detour)),
    ];
    let g = GeometricGraph::new(2, pos, edges)?;
    let boundary = BoundaryMeasure::new(vec![-0.5, 0.0, 0.0, 0.0, 0.0, 0.5, -0.5, 0.5]);
    // S1 covers the two spurs at (2,0) and (-2,0); S2 covers the outer legs.
    let s1 = vec![true, true, true, true, true, false, false, true];
    let s2 = vec![false, true, true, true, false, true, true, true];
    Ok(Instance::new(
        g,
        boundary,
        CostSpec::sqrt(),
        vec![
            DamageScenario::with_mask(0, 0.5, s1),
            DamageScenario::with_mask(1, 0.5, s2),
        ],
        PayoffSpec::Constant {
            value: params.payoff(),
        },
    )?)
}

/// Damage of the `non_continuous` example on the unit square.
pub fn non_continuous_damage(x: f64, y: f64, epsilon: f64, beta: f64) -> f64 {
    const TOL: f64 = 1e-12;
    let mut f: f64 = 0.0;
    if (y - 3.0 * x).abs() < TOL || (y - (3.0 - 3.0 * x)).abs() < TOL {
        f = 1.0;
    }
    let middle = x > 3.0 / 8.0 + TOL && x < 5.0 / 8.0 - TOL;
    if (y - 1.0).abs() < TOL && !middle {
        f = f.max(0.5);
    }
    if middle {
        f = f.max(y.max(0.0).powf(beta));
    }
    let ledge = 1.0 - 3.0 * epsilon;
    if (y - ledge).abs() < TOL && x >= 1.0 / 3.0 - epsilon - TOL && x <= 2.0 / 3.0 + epsilon + TOL {
        f = f.max(ledge.powf(beta));
    }
    f
}

fn non_continuous(params: &ExampleParams) -> Result<Instance, ExampleError> {
    let n = params.grid_cells()?;
    // integer coordinates in units of 1 / (3n)
    let unit = 1.0 / (3 * n) as f64;
    let mut keys: Vec<(usize, usize)> = Vec::new();
    for b in 0..=n {
        for a in 0..=n {
            keys.push((3 * a, 3 * b));
        }
        let y = 3 * b;
        keys.push((b, y));
        keys.push((3 * n - b, y));
    }
    keys.sort_by_key(|&(x, y)| (y, x));
    keys.dedup();
    let id = |k: (usize, usize)| {
        keys.binary_search_by_key(&(k.1, k.0), |&(x, y)| (y, x))
            .expect("known vertex")
    };
    let mut edges = Vec::new();
    // rows: consecutive vertices
    for w in keys.windows(2) {
        if w[0].1 == w[1].1 {
            edges.push((id(w[0]), id(w[1])));
        }
    }
    // columns of the grid
    for b in 0..n {
        for a in 0..=n {
            edges.push((id((3 * a, 3 * b)), id((3 * a, 3 * b + 3))));
        }
    }
    // the two diagonals
    for b in 0..n {
        edges.push((id((b, 3 * b)), id((b + 1, 3 * b + 3))));
        edges.push((id((3 * n - b, 3 * b)), id((3 * n - b - 1, 3 * b + 3))));
    }
    let pos: Vec<Vec<f64>> = keys
        .iter()
        .map(|&(x, y)| vec![x as f64 * unit, y as f64 * unit])
        .collect();
    let f = |p: &[f64]| non_continuous_damage(p[0], p[1], params.epsilon, params.beta);
    let vertex_eff: Vec<f64> = pos.iter().map(|p| f(p)).collect();
    let edge_eff: Vec<f64> = edges
        .iter()
        .map(|&(u, v)| {
            let mid = [(pos[u][0] + pos[v][0]) / 2.0, (pos[u][1] + pos[v][1]) / 2.0];
            vertex_eff[u].min(vertex_eff[v]).min(f(&mid))
        })
        .collect();
    let mut atoms = vec![0.0; pos.len()];
    atoms[id((3 * n, 0))] = -1.0;
    atoms[id((0, 3 * n))] = -1.0;
    atoms[id((0, 0))] = 1.0;
    atoms[id((3 * n, 3 * n))] = 1.0;
    let g = GeometricGraph::new(
        2,
        pos,
        edges.into_iter().map(|(u, v)| (u, v, None)).collect(),
    )?;
    Ok(Instance::new(
        g,
        BoundaryMeasure::new(atoms),
        CostSpec::sqrt(),
        vec![DamageScenario::with_efficiencies(
            0,
            1.0,
            vertex_eff,
            Some(edge_eff),
        )],
        PayoffSpec::Constant {
            value: params.payoff(),
        },
    )?)
}

/// Levels `j = 1..=J`: sources `x_j`, targets `y_j` and `2^(j-1)` private
/// two-edge curves between them. The probability `2^-J` of the truncated tail
/// goes to a last scenario that blocks everything.
fn distance(params: &ExampleParams) -> Result<Instance, ExampleError> {
    let levels = params.levels;
    let mut pos = Vec::new();
    let mut atoms = Vec::new();
    let mut edges = Vec::new();
    // (level, edge ids, vertex ids) per curve
    let mut curves = Vec::new();
    for j in 1..=levels {
        let side = 2f64.powi(-3 * j as i32);
        let mass = 2f64.powi(-(j as i32));
        let x = pos.len();
        pos.push(vec![side, 0.0]);
        atoms.push(-mass);
        let y = pos.len();
        pos.push(vec![side, side]);
        atoms.push(mass);
        let count = 1usize << (j - 1);
        for c in 0..count {
            let offset = side * 0.25 * (c as f64 + 0.5 - count as f64 / 2.0) / count as f64;
            let m = pos.len();
            pos.push(vec![side + offset, side / 2.0]);
            atoms.push(0.0);
            let e = edges.len();
            edges.push((x, m, Some(side / 2.0)));
            edges.push((m, y, Some(side / 2.0)));
            curves.push((j, [e, e + 1], [x, m, y]));
        }
    }
    let g = GeometricGraph::new(2, pos, edges)?;
    let mut scenarios = Vec::new();
    for (i, (j, es, vs)) in curves.iter().enumerate() {
        let mut mask = vec![false; g.num_edges()];
        let mut vertex = vec![0.0; g.num_vertices()];
        for &e in es {
            mask[e] = true;
        }
        for &v in vs {
            vertex[v] = 1.0;
        }
        let edge = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
        scenarios.push(DamageScenario {
            id: i,
            prob: 2f64.powi(1 - 2 * *j as i32),
            edge_mask: Some(mask),
            vertex_efficiency: Some(vertex),
            edge_efficiency: Some(edge),
        });
    }
    scenarios.push(DamageScenario {
        id: curves.len(),
        prob: 2f64.powi(-(levels as i32)),
        edge_mask: Some(vec![false; g.num_edges()]),
        vertex_efficiency: Some(vec![0.0; g.num_vertices()]),
        edge_efficiency: Some(vec![0.0; g.num_edges()]),
    });
    Ok(Instance::new(
        g,
        BoundaryMeasure::new(atoms),
        CostSpec::sqrt(),
        scenarios,
        PayoffSpec::Constant { value: 1.0 },
    )?)
}

/// Level of every curve scenario of a `distance` instance built with `levels`.
pub fn distance_levels(levels: usize) -> Vec<usize> {
    (1..=levels)
        .flat_map(|j| std::iter::repeat_n(j, 1 << (j - 1)))
        .collect()
}

/// Radius and center abscissa of the detour of curve `i >= 2` of `limit`.
pub fn limit_detour(i: usize) -> (f64, f64) {
    (2f64.powi(-(i as i32 + 2)), 2f64.powi(1 - i as i32))
}

const LIMIT_ARC_SEGMENTS: usize = 8;

/// `limit` instance and its curves `gamma_1..gamma_k` as paths.
pub fn limit(params: &ExampleParams) -> Result<(Instance, Vec<Path>), ExampleError> {
    params.validate()?;
    let k = params.loops;
    // segment breakpoints: ends plus the two feet of every detour
    let mut xs = vec![0.0, 1.0];
    for i in 2..=k {
        let (r, c) = limit_detour(i);
        xs.push(c - r);
        xs.push(c + r);
    }
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut pos: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x, 0.0]).collect();
    let mut edges = Vec::new();
    // segment piece ending at breakpoint order[t + 1]
    for w in order.windows(2) {
        edges.push((w[0], w[1], None));
    }
    let segment_edges: Vec<usize> = (0..edges.len()).collect();
    let foot = |i: usize| (2 * i - 2, 2 * i - 1);
    let mut arcs = Vec::new();
    for i in 2..=k {
        let (r, c) = limit_detour(i);
        let (left, right) = foot(i);
        let mut prev = left;
        let mut arc = Vec::new();
        for s in 1..=LIMIT_ARC_SEGMENTS {
            let next = if s == LIMIT_ARC_SEGMENTS {
                right
            } else {
                let t = PI * (1.0 - s as f64 / LIMIT_ARC_SEGMENTS as f64);
                pos.push(vec![c + r * t.cos(), r * t.sin()]);
                pos.len() - 1
            };
            arc.push(edges.len());
            edges.push((prev, next, None));
            prev = next;
        }
        arcs.push(arc);
    }
    let g = GeometricGraph::new(2, pos, edges)?;
    let mut atoms = vec![0.0; g.num_vertices()];
    atoms[0] = -1.0;
    atoms[1] = 1.0;
    let straight = Path::from_edges(&g, 0, segment_edges.clone())?;
    let mut curves = vec![straight.clone()];
    for i in 2..=k {
        let (left, right) = foot(i);
        let arc = &arcs[i - 2];
        let mut walk = Vec::new();
        for &e in &segment_edges {
            let edge = g.edge(e);
            if edge.u == left && edge.v == right {
                walk.extend_from_slice(arc);
            } else {
                walk.push(e);
            }
        }
        curves.push(Path::from_edges(&g, 0, walk)?);
    }
    let scenarios = curves
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut mask = vec![false; g.num_edges()];
            let mut vertex = vec![0.0; g.num_vertices()];
            for &e in p.edges() {
                mask[e] = true;
            }
            for &v in p.vertices() {
                vertex[v] = 1.0;
            }
            let edge = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
            DamageScenario {
                id: i,
                prob: 1.0 / k as f64,
                edge_mask: Some(mask),
                vertex_efficiency: Some(vertex),
                edge_efficiency: Some(edge),
            }
        })
        .collect();
    let inst = Instance::new(
        g,
        BoundaryMeasure::new(atoms),
        CostSpec::BoundedStep { value: 1.0 },
        scenarios,
        PayoffSpec::Constant {
            value: params.payoff(),
        },
    )?;
    Ok((inst, curves))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhenomenonCheck {
    pub name: String,
    pub holds: bool,
    pub values: Vec<Measurement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhenomenonReport {
    pub format: u32,
    pub name: ExampleName,
    pub params: ExampleParams,
    pub holds: bool,
    pub checks: Vec<PhenomenonCheck>,
}

impl PhenomenonReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn check(&self, name: &str) -> Option<&PhenomenonCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Checks(Vec<PhenomenonCheck>);

impl Checks {
    fn push(&mut self, name: impl Into<String>, holds: bool, values: &[(&str, f64)]) {
        self.0.push(PhenomenonCheck {
            name: name.into(),
            holds,
            values: values
                .iter()
                .map(|&(label, value)| Measurement {
                    label: label.to_string(),
                    value,
                })
                .collect(),
        });
    }
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn with(opts: &SolveOptions, model: Model, delta: f64) -> SolveOptions {
    SolveOptions {
        model,
        delta,
        ..opts.clone()
    }
}

fn lagrangian(report: &SolveReport) -> &LagrangianCompetitor {
    match &report.competitor {
        Competitor::Lagrangian(c) => c,
        Competitor::Eulerian(_) => unreachable!("Lagrangian solve returned an Eulerian competitor"),
    }
}

/// Runs the solves an example calls for and checks its qualitative claim.
pub fn verify_phenomenon(
    params: &ExampleParams,
    opts: &SolveOptions,
) -> Result<PhenomenonReport, ExampleError> {
    params.validate()?;
    let mut checks = Checks(Vec::new());
    match params.name {
        ExampleName::NonExistence => verify_non_existence(params, opts, &mut checks)?,
        ExampleName::Distance => verify_distance(params, opts, &mut checks)?,
        ExampleName::Limit => verify_limit(params, opts, &mut checks)?,
        ExampleName::NonContinuous => verify_non_continuous(params, opts, &mut checks)?,
    }
    Ok(PhenomenonReport {
        format: FORMAT_VERSION,
        name: params.name,
        params: params.clone(),
        holds: checks.0.iter().all(|c| c.holds),
        checks: checks.0,
    })
}

const NON_EXISTENCE_DETOURS: [f64; 3] = [0.5, 0.25, 0.125];
const NON_EXISTENCE_ORACLE_DELTA: f64 = 0.5;

fn verify_non_existence(
    params: &ExampleParams,
    opts: &SolveOptions,
    checks: &mut Checks,
) -> Result<(), ExampleError> {
    let inst = build_example(params)?;
    let oracle_u = brute_force_oracle(
        &inst,
        &with(opts, Model::Eulerian, NON_EXISTENCE_ORACLE_DELTA),
    )?;
    let oracle_o = brute_force_oracle(
        &inst,
        &with(opts, Model::EulerianOriented, NON_EXISTENCE_ORACLE_DELTA),
    )?;
    let (eu, eo) = (oracle_u.energy.energy, oracle_o.energy.energy);
    checks.push(
        "oriented_gap",
        eu < eo && eo - eu >= 0.5,
        &[("E_u", eu), ("E_o", eo), ("gap", eo - eu)],
    );
    let solved_u = solve_eulerian(&inst, &with(opts, Model::Eulerian, opts.delta))?;
    let solved_o = solve_eulerian(&inst, &with(opts, Model::EulerianOriented, opts.delta))?;
    let (su, so) = (solved_u.energy.energy, solved_o.energy.energy);
    checks.push(
        "solver_matches_oracle",
        (su - eu).abs() <= ORACLE_MATCH_TOL && (so - eo).abs() <= ORACLE_MATCH_TOL,
        &[("solver_E_u", su), ("solver_E_o", so)],
    );
    let shared = match &solved_u.competitor {
        Competitor::Eulerian(c) => {
            let a = c.flows[0][NON_EXISTENCE_MIDDLE];
            let b = c.flows[1][NON_EXISTENCE_MIDDLE];
            (a * b < 0.0, a, b)
        }
        Competitor::Lagrangian(_) => (false, 0.0, 0.0),
    };
    checks.push(
        "middle_edge_used_both_ways",
        shared.0,
        &[("flow_scenario_0", shared.1), ("flow_scenario_1", shared.2)],
    );
    let mut oriented = Vec::new();
    for d in NON_EXISTENCE_DETOURS {
        let p = ExampleParams {
            detour: d,
            ..params.clone()
        };
        let inst = build_example(&p)?;
        oriented.push(
            brute_force_oracle(
                &inst,
                &with(opts, Model::EulerianOriented, NON_EXISTENCE_ORACLE_DELTA),
            )?
            .energy
            .energy,
        );
    }
    checks.push(
        "oriented_energy_decreases_with_detour",
        strictly_decreasing(&oriented),
        &[
            ("E_o(1/2)", oriented[0]),
            ("E_o(1/4)", oriented[1]),
            ("E_o(1/8)", oriented[2]),
        ],
    );
    Ok(())
}

/// Per-curve sub-plan masses of a `distance` solution, in scenario order.
pub fn distance_masses(report: &SolveReport, levels: usize) -> Vec<f64> {
    let c = lagrangian(report);
    (0..distance_levels(levels).len())
        .map(|i| c.plan.iter().map(|p| p.sub_weights[i]).sum())
        .collect()
}

fn verify_distance(
    params: &ExampleParams,
    opts: &SolveOptions,
    checks: &mut Checks,
) -> Result<(), ExampleError> {
    let mut energies = Vec::new();
    for levels in 1..=params.levels {
        let p = ExampleParams {
            levels,
            ..params.clone()
        };
        let inst = build_example(&p)?;
        let delta = 2f64.powi(-(levels as i32));
        let solved = solve_lagrangian(&inst, &with(opts, Model::Lagrangian, delta))?;
        let oracle = brute_force_oracle(&inst, &with(opts, Model::Lagrangian, delta))?;
        let expected: Vec<f64> = distance_levels(levels)
            .iter()
            .map(|&j| 2f64.powi(-(j as i32)))
            .collect();
        let masses = distance_masses(&solved, levels);
        let oracle_masses = distance_masses(&oracle, levels);
        let mass = lagrangian(&solved).total_mass();
        let e = solved.energy.energy;
        checks.push(
            format!("J={levels}: curve masses are 2^-j"),
            masses == expected && oracle_masses == expected,
            &[("max_deviation", max_deviation(&masses, &expected))],
        );
        checks.push(
            format!("J={levels}: total mass is J/2"),
            mass == levels as f64 / 2.0,
            &[("total_mass", mass)],
        );
        checks.push(
            format!("J={levels}: solver matches oracle"),
            (e - oracle.energy.energy).abs() <= ORACLE_MATCH_TOL,
            &[("solver", e), ("oracle", oracle.energy.energy)],
        );
        checks.push(
            format!("J={levels}: energy is negative"),
            e < 0.0,
            &[("energy", e)],
        );
        energies.push(e);
    }
    let values: Vec<(String, f64)> = energies
        .iter()
        .enumerate()
        .map(|(k, &e)| (format!("E(J={})", k + 1), e))
        .collect();
    let refs: Vec<(&str, f64)> = values.iter().map(|(l, v)| (l.as_str(), *v)).collect();
    checks.push(
        "energy decreases in J",
        strictly_decreasing(&energies),
        &refs,
    );
    Ok(())
}

fn max_deviation(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn verify_limit(
    params: &ExampleParams,
    opts: &SolveOptions,
    checks: &mut Checks,
) -> Result<(), ExampleError> {
    let (inst, curves) = limit(params)?;
    let lag = with(opts, Model::Lagrangian, opts.delta);
    let mut energies = Vec::new();
    let mut masses = Vec::new();
    for used in 1..=curves.len() {
        let r = solve_lagrangian_with_dictionary(&inst, &lag, &curves[..used])?;
        energies.push(r.energy.energy);
        masses.push(lagrangian(&r).total_mass());
    }
    let labels: Vec<(String, f64)> = energies
        .iter()
        .enumerate()
        .map(|(k, &e)| (format!("E(k={})", k + 1), e))
        .collect();
    let refs: Vec<(&str, f64)> = labels.iter().map(|(l, v)| (l.as_str(), *v)).collect();
    checks.push(
        "energy decreases in k",
        strictly_decreasing(&energies),
        &refs,
    );
    let exact = masses.iter().enumerate().all(|(k, &m)| m == (k + 1) as f64);
    let labels: Vec<(String, f64)> = masses
        .iter()
        .enumerate()
        .map(|(k, &m)| (format!("mass(k={})", k + 1), m))
        .collect();
    let refs: Vec<(&str, f64)> = labels.iter().map(|(l, v)| (l.as_str(), *v)).collect();
    checks.push("total mass equals k", exact, &refs);
    let full = solve_lagrangian(&inst, &lag)?;
    let last = *energies.last().expect("at least one curve");
    checks.push(
        "free dictionary charges every curve",
        lagrangian(&full).total_mass() == curves.len() as f64
            && (full.energy.energy - last).abs() <= ORACLE_MATCH_TOL,
        &[
            ("energy", full.energy.energy),
            ("mass", lagrangian(&full).total_mass()),
        ],
    );
    if curves.len() <= 3 {
        let oracle = brute_force_oracle(&inst, &lag)?;
        checks.push(
            "oracle agrees",
            (oracle.energy.energy - last).abs() <= ORACLE_MATCH_TOL,
            &[("oracle", oracle.energy.energy)],
        );
    }
    Ok(())
}

/// Penalized mass the competitor moves from `s` to `t` in scenario 0.
pub fn penalized_route_mass(
    inst: &Instance,
    c: &LagrangianCompetitor,
    s: usize,
    t: usize,
) -> Result<f64, ModelError> {
    let eff = inst.scenarios[0].efficiencies(&inst.graph)?;
    Ok(c.plan
        .iter()
        .filter(|p| p.path.start() == s && p.path.end() == t)
        .map(|p| p.sub_weights[0] * path_efficiency(&p.path, &eff))
        .sum())
}

/// Corner vertex ids of a `non_continuous` instance: (1,0), (0,1), (0,0), (1,1).
pub fn non_continuous_corners(inst: &Instance) -> [usize; 4] {
    let find = |x: f64, y: f64| {
        inst.graph
            .vertices()
            .iter()
            .position(|v| v.pos[0] == x && v.pos[1] == y)
            .expect("corner vertex")
    };
    [
        find(1.0, 0.0),
        find(0.0, 1.0),
        find(0.0, 0.0),
        find(1.0, 1.0),
    ]
}

/// The two-route competitor: the ledge corridor from (1,0) to (0,0) and the
/// top line from (0,1) to (1,1), each carrying mass 1.
pub fn non_continuous_hand_competitor(
    inst: &Instance,
    params: &ExampleParams,
) -> Result<LagrangianCompetitor, ExampleError> {
    let g = &inst.graph;
    let eff = inst.scenarios[0].efficiencies(g)?;
    let [s1, s2, t1, t2] = non_continuous_corners(inst);
    let floor = (1.0 - 3.0 * params.epsilon).powf(params.beta) - 1e-12;
    let corridor = k_shortest_paths(g, s1, t1, 1, &|e| eff.edge[e] >= floor, &|v| {
        eff.vertex[v] >= floor
    });
    let top_row = |v: usize| g.position(v)[1] == 1.0;
    let top = k_shortest_paths(
        g,
        s2,
        t2,
        1,
        &|e| top_row(g.edge(e).u) && top_row(g.edge(e).v),
        &top_row,
    );
    let (Some(corridor), Some(top)) = (corridor.into_iter().next(), top.into_iter().next()) else {
        return Err(param("epsilon", "grid misses the corridor or the top line"));
    };
    Ok(LagrangianCompetitor::try_new(
        g,
        1,
        vec![(corridor, 1.0, vec![1.0]), (top, 1.0, vec![1.0])],
    )?)
}

fn verify_non_continuous(
    params: &ExampleParams,
    opts: &SolveOptions,
    checks: &mut Checks,
) -> Result<(), ExampleError> {
    let inst = build_example(params)?;
    let solved = solve_lagrangian(&inst, &with(opts, Model::Lagrangian, opts.delta))?;
    let c = lagrangian(&solved);
    let [s1, s2, t1, t2] = non_continuous_corners(&inst);
    let corridor = penalized_route_mass(&inst, c, s1, t1)?;
    let top = penalized_route_mass(&inst, c, s2, t2)?;
    let crossed = penalized_route_mass(&inst, c, s1, t2)? + penalized_route_mass(&inst, c, s2, t1)?;
    let expected = (1.0 - 3.0 * params.epsilon).powf(params.beta);
    checks.push(
        "corridor carries (1-3eps)^beta",
        (corridor - expected).abs() <= ORACLE_MATCH_TOL,
        &[("corridor", corridor), ("expected", expected)],
    );
    checks.push(
        "top line carries 1/2",
        (top - 0.5).abs() <= ORACLE_MATCH_TOL,
        &[("top", top)],
    );
    checks.push(
        "no crossed routes",
        crossed <= ORACLE_MATCH_TOL,
        &[("crossed", crossed)],
    );
    let hand = non_continuous_hand_competitor(&inst, params)?;
    let hand_energy = lagrangian_energy(&inst, &hand)?.energy;
    checks.push(
        "not worse than the hand competitor",
        solved.energy.energy <= hand_energy + ORACLE_MATCH_TOL,
        &[("solver", solved.energy.energy), ("hand", hand_energy)],
    );
    Ok(())
}
