#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use robust_transport::decomposition::remove_cycles;
use robust_transport::model::{
    BoundaryMeasure, CostSpec, DamageScenario, EulerianCompetitor, GeometricGraph, Instance,
    LagrangianCompetitor, Path, PayoffSpec,
};
use robust_transport::solver::theta_from_flows;

pub const EIGHTH: f64 = 0.125;

fn dyadic(rng: &mut ChaCha8Rng, lo: u32, hi: u32) -> f64 {
    rng.gen_range(lo..=hi) as f64 * EIGHTH
}

/// Random connected planar-ish graph with at most `max_edges` edges, random
/// dyadic boundary, 1 to 3 scenarios with masks and efficiencies.
pub fn random_instance(rng: &mut ChaCha8Rng, max_edges: usize) -> Instance {
    let n = rng.gen_range(3..=9);
    let mut pos: Vec<Vec<f64>> = Vec::new();
    while pos.len() < n {
        let p = vec![dyadic(rng, 0, 16), dyadic(rng, 0, 16)];
        if !pos.contains(&p) {
            pos.push(p);
        }
    }
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.gen_range(0..v), v, None));
    }
    let extra = rng.gen_range(0..=max_edges.saturating_sub(edges.len()));
    for _ in 0..extra {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v {
            // occasionally a longer parallel copy
            let length = if rng.gen_bool(0.2) { Some(4.0) } else { None };
            edges.push((u, v, length));
        }
    }
    let m = edges.len();
    let g = GeometricGraph::new(2, pos, edges).expect("generated graph");

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let sources = rng.gen_range(1..=(n / 2).clamp(1, 3));
    let targets = rng.gen_range(1..=(n - sources).clamp(1, 3));
    let mut atoms = vec![0.0; n];
    for &v in &order[..sources] {
        atoms[v] = -dyadic(rng, 1, 8);
    }
    for &v in &order[sources..sources + targets] {
        atoms[v] = dyadic(rng, 1, 8);
    }

    let probs: &[f64] = match rng.gen_range(1..=3) {
        1 => &[1.0],
        2 => &[0.5, 0.5],
        _ => &[0.5, 0.25, 0.25],
    };
    let scenarios: Vec<DamageScenario> = probs
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let mask: Vec<bool> = (0..m).map(|_| rng.gen_bool(0.8)).collect();
            let vertex: Vec<f64> = (0..n)
                .map(|_| *[1.0, 1.0, 1.0, 0.5, 0.25].choose(rng).unwrap())
                .collect();
            DamageScenario {
                id: i,
                prob: p,
                edge_mask: Some(mask),
                vertex_efficiency: Some(vertex),
                edge_efficiency: None,
            }
        })
        .collect();
    let cost = match rng.gen_range(0..4) {
        0 => CostSpec::Power { alpha: 0.3 },
        1 => CostSpec::Power { alpha: 0.5 },
        2 => CostSpec::Power { alpha: 0.75 },
        _ => CostSpec::BoundedStep { value: 1.0 },
    };
    let payoff = if rng.gen_bool(0.5) {
        PayoffSpec::Constant {
            value: dyadic(rng, 0, 40),
        }
    } else {
        PayoffSpec::Table {
            values: (0..probs.len())
                .map(|_| (0..n).map(|_| dyadic(rng, 0, 40)).collect())
                .collect(),
        }
    };
    Instance::new(g, BoundaryMeasure::new(atoms), cost, scenarios, payoff)
        .expect("generated instance")
}

/// Random simple path from `s` to `t` over edges accepted by `ok`.
pub fn random_path(
    rng: &mut ChaCha8Rng,
    g: &GeometricGraph,
    s: usize,
    t: usize,
    ok: &dyn Fn(usize) -> bool,
) -> Option<Path> {
    let mut seen = vec![false; g.num_vertices()];
    let mut edges: Vec<usize> = Vec::new();
    let mut vertices = vec![s];
    let mut choices: Vec<Vec<usize>> = Vec::new();
    seen[s] = true;
    let shuffled = |rng: &mut ChaCha8Rng, v: usize| {
        let mut inc: Vec<usize> = g.incident(v).to_vec();
        inc.shuffle(rng);
        inc
    };
    choices.push(shuffled(rng, s));
    while let Some(top) = choices.last_mut() {
        let v = *vertices.last().unwrap();
        if v == t {
            return Some(Path::from_edges(g, s, edges).expect("walk is a path"));
        }
        match top.pop() {
            Some(e) => {
                let w = g.edge(e).other(v).unwrap();
                if ok(e) && !seen[w] {
                    seen[w] = true;
                    edges.push(e);
                    vertices.push(w);
                    let next = shuffled(rng, w);
                    choices.push(next);
                }
            }
            None => {
                choices.pop();
                vertices.pop();
                edges.pop();
            }
        }
    }
    None
}

fn pick(rng: &mut ChaCha8Rng, caps: &[f64]) -> Option<usize> {
    let live: Vec<usize> = (0..caps.len()).filter(|&v| caps[v] > 0.0).collect();
    live.choose(rng).copied()
}

/// Admissible acyclic recovery flow for `scenario`: random source-target paths
/// inside the mask with dyadic weights within the atom caps.
pub fn random_flow(rng: &mut ChaCha8Rng, inst: &Instance, scenario: usize) -> Vec<f64> {
    let g = &inst.graph;
    let mask = inst.scenarios[scenario].mask().unwrap().to_vec();
    let atoms = inst.boundary.atoms();
    let mut src: Vec<f64> = atoms.iter().map(|&a| (-a).max(0.0)).collect();
    let mut tgt: Vec<f64> = atoms.iter().map(|&a| a.max(0.0)).collect();
    let mut flow = vec![0.0; g.num_edges()];
    for _ in 0..rng.gen_range(0..=4) {
        let (Some(s), Some(t)) = (pick(rng, &src), pick(rng, &tgt)) else {
            break;
        };
        let Some(path) = random_path(rng, g, s, t, &|e| mask[e]) else {
            continue;
        };
        let w = src[s].min(tgt[t]).min(dyadic(rng, 1, 8));
        src[s] -= w;
        tgt[t] -= w;
        for (e, sign) in path.signed_edges(g) {
            flow[e] += sign * w;
        }
    }
    remove_cycles(g, &flow)
}

pub fn random_eulerian(rng: &mut ChaCha8Rng, inst: &Instance) -> EulerianCompetitor {
    let flows: Vec<Vec<f64>> = (0..inst.num_scenarios())
        .map(|i| random_flow(rng, inst, i))
        .collect();
    let mut theta = theta_from_flows(&flows);
    for t in theta.iter_mut() {
        if rng.gen_bool(0.2) {
            *t += dyadic(rng, 1, 4);
        }
    }
    EulerianCompetitor { theta, flows }
}

/// Admissible traffic plan: random source-target paths, each scenario taking a
/// dyadic share within its own atom caps.
pub fn random_lagrangian(rng: &mut ChaCha8Rng, inst: &Instance) -> LagrangianCompetitor {
    let g = &inst.graph;
    let atoms = inst.boundary.atoms();
    let k = inst.num_scenarios();
    let mut src: Vec<Vec<f64>> = vec![atoms.iter().map(|&a| (-a).max(0.0)).collect(); k];
    let mut tgt: Vec<Vec<f64>> = vec![atoms.iter().map(|&a| a.max(0.0)).collect(); k];
    let mut entries = Vec::new();
    let all_src: Vec<f64> = src[0].clone();
    let all_tgt: Vec<f64> = tgt[0].clone();
    for _ in 0..rng.gen_range(0..=4) {
        let (Some(s), Some(t)) = (pick(rng, &all_src), pick(rng, &all_tgt)) else {
            break;
        };
        let Some(path) = random_path(rng, g, s, t, &|_| true) else {
            continue;
        };
        let subs: Vec<f64> = (0..k)
            .map(|i| {
                let w = src[i][s].min(tgt[i][t]).min(dyadic(rng, 0, 8));
                src[i][s] -= w;
                tgt[i][t] -= w;
                w
            })
            .collect();
        let weight =
            subs.iter().copied().fold(0.0, f64::max) + if rng.gen_bool(0.3) { EIGHTH } else { 0.0 };
        entries.push((path, weight, subs));
    }
    LagrangianCompetitor::try_new(g, k, entries).expect("generated plan")
}

/// Scenario spec for the hand suite: probability, masked edges and optional
/// half-efficiency edges.
pub struct Scen<'a> {
    pub prob: f64,
    pub masked: &'a [usize],
    pub half: &'a [usize],
}

pub const fn scen(prob: f64, masked: &'static [usize]) -> Scen<'static> {
    Scen {
        prob,
        masked,
        half: &[],
    }
}

pub fn hand(
    pos: &[[f64; 2]],
    edges: &[(usize, usize)],
    atoms: &[(usize, f64)],
    scenarios: &[Scen],
    cost: CostSpec,
    payoff: PayoffSpec,
) -> Instance {
    let g = GeometricGraph::new(
        2,
        pos.iter().map(|p| p.to_vec()).collect(),
        edges.iter().map(|&(u, v)| (u, v, None)).collect(),
    )
    .unwrap();
    let mut nu = vec![0.0; pos.len()];
    for &(v, a) in atoms {
        nu[v] = a;
    }
    let m = edges.len();
    let scenarios = scenarios
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mask: Vec<bool> = (0..m).map(|e| !s.masked.contains(&e)).collect();
            let eff: Vec<f64> = (0..m)
                .map(|e| {
                    if s.masked.contains(&e) {
                        0.0
                    } else if s.half.contains(&e) {
                        0.5
                    } else {
                        1.0
                    }
                })
                .collect();
            DamageScenario {
                id: i,
                prob: s.prob,
                edge_mask: Some(mask),
                vertex_efficiency: None,
                edge_efficiency: Some(eff),
            }
        })
        .collect();
    Instance::new(g, BoundaryMeasure::new(nu), cost, scenarios, payoff).unwrap()
}

fn h(value: f64) -> PayoffSpec {
    PayoffSpec::Constant { value }
}

/// Twenty small instances: at most 8 edges, at most 2 scenarios, dyadic masses.
pub fn hand_suite() -> Vec<(&'static str, Instance)> {
    let sqrt = CostSpec::sqrt;
    let tri = [[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]];
    let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let y = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.5], [2.0, 0.5]];
    let star = [[1.0, 1.0], [0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]];
    let ladder = [
        [0.0, 0.0],
        [1.0, 0.0],
        [2.0, 0.0],
        [0.0, 1.0],
        [1.0, 1.0],
        [2.0, 1.0],
    ];
    vec![
        (
            "single edge",
            hand(
                &[[0.0, 0.0], [1.0, 0.0]],
                &[(0, 1)],
                &[(0, -0.5), (1, 0.5)],
                &[scen(1.0, &[])],
                sqrt(),
                h(2.0),
            ),
        ),
        (
            "triangle with one damaged side",
            hand(
                &tri,
                &[(0, 1), (1, 2), (0, 2)],
                &[(0, -0.5), (2, 0.5)],
                &[scen(0.5, &[]), scen(0.5, &[2])],
                sqrt(),
                h(3.0),
            ),
        ),
        (
            "triangle, cheap payoff",
            hand(
                &tri,
                &[(0, 1), (1, 2), (0, 2)],
                &[(0, -0.5), (2, 0.5)],
                &[scen(0.5, &[]), scen(0.5, &[2])],
                sqrt(),
                h(1.0),
            ),
        ),
        (
            "square with diagonal",
            hand(
                &square,
                &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)],
                &[(0, -0.5), (2, 0.5)],
                &[scen(0.5, &[0, 4]), scen(0.5, &[3, 4])],
                sqrt(),
                h(4.0),
            ),
        ),
        (
            "y junction",
            hand(
                &y,
                &[(0, 2), (1, 2), (2, 3)],
                &[(0, -0.25), (1, -0.25), (3, 0.5)],
                &[scen(1.0, &[])],
                sqrt(),
                h(3.0),
            ),
        ),
        (
            "y junction with a damaged leg",
            hand(
                &y,
                &[(0, 2), (1, 2), (2, 3), (0, 3)],
                &[(0, -0.25), (1, -0.25), (3, 0.5)],
                &[scen(0.5, &[]), scen(0.5, &[2])],
                sqrt(),
                h(3.0),
            ),
        ),
        (
            "payoff too small to build",
            hand(
                &[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]],
                &[(0, 1), (1, 2), (2, 3)],
                &[(0, -0.5), (3, 0.5)],
                &[scen(1.0, &[])],
                sqrt(),
                h(0.5),
            ),
        ),
        (
            "unbalanced boundary",
            hand(
                &tri,
                &[(0, 1), (1, 2), (0, 2)],
                &[(0, -0.75), (2, 0.5)],
                &[scen(0.5, &[0]), scen(0.5, &[])],
                sqrt(),
                h(2.5),
            ),
        ),
        (
            "four-cycle, opposite damage",
            hand(
                &square,
                &[(0, 1), (1, 2), (2, 3), (3, 0)],
                &[(0, -0.5), (2, 0.5)],
                &[scen(0.5, &[0]), scen(0.5, &[3])],
                sqrt(),
                h(5.0),
            ),
        ),
        (
            "star with two sources",
            hand(
                &star,
                &[(1, 0), (2, 0), (0, 3), (0, 4)],
                &[(1, -0.25), (2, -0.25), (3, 0.25), (4, 0.25)],
                &[scen(1.0, &[])],
                sqrt(),
                h(3.0),
            ),
        ),
        (
            "star with a broken spoke",
            hand(
                &star,
                &[(1, 0), (2, 0), (0, 3), (0, 4)],
                &[(1, -0.25), (2, -0.25), (3, 0.25), (4, 0.25)],
                &[scen(0.5, &[0]), scen(0.5, &[3])],
                sqrt(),
                h(4.0),
            ),
        ),
        (
            "vertex payoff table",
            hand(
                &tri,
                &[(0, 1), (1, 2), (0, 2)],
                &[(0, -0.5), (1, 0.25), (2, 0.25)],
                &[scen(0.5, &[]), scen(0.5, &[1])],
                sqrt(),
                PayoffSpec::Table {
                    values: vec![vec![1.0, 6.0, 2.0], vec![1.0, 2.0, 6.0]],
                },
            ),
        ),
        (
            "bounded step cost",
            hand(
                &tri,
                &[(0, 1), (1, 2), (0, 2)],
                &[(0, -0.5), (2, 0.5)],
                &[scen(0.5, &[]), scen(0.5, &[2])],
                CostSpec::BoundedStep { value: 1.0 },
                h(3.0),
            ),
        ),
        (
            "piecewise linear cost",
            hand(
                &square,
                &[(0, 1), (1, 2), (2, 3), (3, 0)],
                &[(0, -0.5), (2, 0.5)],
                &[scen(0.5, &[0]), scen(0.5, &[])],
                CostSpec::Table {
                    points: vec![[0.25, 0.5], [1.0, 0.875]],
                },
                h(3.0),
            ),
        ),
        (
            "ladder",
            hand(
                &ladder,
                &[(0, 1), (1, 2), (3, 4), (4, 5), (0, 3), (1, 4), (2, 5)],
                &[(0, -0.5), (5, 0.5)],
                &[scen(0.5, &[1]), scen(0.5, &[2])],
                sqrt(),
                h(4.0),
            ),
        ),
        (
            "hexagon, two commodities",
            hand(
                &ladder,
                &[(0, 1), (1, 2), (3, 4), (4, 5), (0, 3), (2, 5)],
                &[(0, -0.25), (3, -0.25), (2, 0.25), (5, 0.25)],
                &[scen(0.5, &[1]), scen(0.5, &[3])],
                sqrt(),
                h(4.0),
            ),
        ),
        (
            "half-efficiency shortcut",
            half_triangle(&tri, &[(0, 1), (1, 2), (0, 2)], &[(0, -0.5), (2, 0.5)], 3.0),
        ),
        (
            "crossing routes",
            hand(
                &[[0.0, 0.0], [2.0, 2.0], [0.0, 2.0], [2.0, 0.0], [1.0, 1.0]],
                &[(0, 4), (4, 1), (2, 4), (4, 3), (0, 2)],
                &[(0, -0.25), (2, -0.25), (1, 0.25), (3, 0.25)],
                &[scen(0.5, &[4]), scen(0.5, &[0])],
                sqrt(),
                h(4.0),
            ),
        ),
        (
            "long detour",
            hand(
                &[[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [1.0, 2.0]],
                &[(0, 1), (0, 2), (2, 3), (3, 1)],
                &[(0, -0.5), (1, 0.5)],
                &[scen(0.75, &[]), scen(0.25, &[0])],
                CostSpec::Power { alpha: 0.75 },
                h(3.0),
            ),
        ),
        (
            "three sinks one source",
            hand(
                &star,
                &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2)],
                &[(0, -0.375), (1, 0.125), (2, 0.125), (3, 0.125)],
                &[scen(0.5, &[0]), scen(0.5, &[1])],
                sqrt(),
                h(5.0),
            ),
        ),
    ]
}

/// Triangle whose direct side keeps half its efficiency in scenario 2.
fn half_triangle(
    pos: &[[f64; 2]],
    edges: &[(usize, usize)],
    atoms: &[(usize, f64)],
    payoff: f64,
) -> Instance {
    hand(
        pos,
        edges,
        atoms,
        &[
            Scen {
                prob: 0.5,
                masked: &[],
                half: &[],
            },
            Scen {
                prob: 0.5,
                masked: &[],
                half: &[2],
            },
        ],
        CostSpec::sqrt(),
        h(payoff),
    )
}
