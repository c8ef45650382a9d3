//! Exhaustive search over quantized competitors on tiny instances.

use std::collections::HashMap;
use std::time::Instant;

use super::dictionary::{simple_paths, usable_edge};
use super::eulerian::eulerian_certificate;
use super::{
    quanta, theta_from_flows, Model, OracleSummary, SolveError, SolveOptions, SolveReport,
};
use crate::energy::{eulerian_energy, lagrangian_energy, path_efficiency};
use crate::model::{
    check_lagrangian_admissible, Competitor, EulerianCompetitor, Instance, LagrangianCompetitor,
    Path, FORMAT_VERSION,
};

/// Most candidates the oracle will score before giving up.
pub const ORACLE_CANDIDATE_LIMIT: u64 = 5_000_000;
const MAX_EULERIAN_EDGES: usize = 8;
const MAX_EULERIAN_PATHS: usize = 64;
const MAX_LAGRANGIAN_PATHS: usize = 6;
const TIE: f64 = 1e-12;

fn guard(what: impl Into<String>) -> SolveError {
    SolveError::SizeGuard(what.into())
}

/// All source-target simple paths of one scenario's usable subgraph.
fn scenario_paths(
    inst: &Instance,
    edge_ok: &dyn Fn(usize) -> bool,
    vertex_ok: &dyn Fn(usize) -> bool,
    limit: usize,
) -> Option<Vec<Path>> {
    let mut out = Vec::new();
    for s in inst.boundary.sources() {
        for t in inst.boundary.targets() {
            out.extend(simple_paths(&inst.graph, s, t, edge_ok, vertex_ok, limit)?);
            if out.len() > limit {
                return None;
            }
        }
    }
    Some(out)
}

/// Every way of giving each path a whole number of quanta within the per-atom
/// caps, reported through `visit`.
fn assignments(
    inst: &Instance,
    paths: &[Path],
    delta: f64,
    budget: &mut u64,
    visit: &mut dyn FnMut(&[i64]),
) -> Result<(), SolveError> {
    fn rec(
        paths: &[Path],
        k: usize,
        src: &mut [i64],
        tgt: &mut [i64],
        current: &mut Vec<i64>,
        budget: &mut u64,
        visit: &mut dyn FnMut(&[i64]),
    ) -> Result<(), SolveError> {
        if k == paths.len() {
            if *budget == 0 {
                return Err(guard(format!(
                    "more than {ORACLE_CANDIDATE_LIMIT} assignments"
                )));
            }
            *budget -= 1;
            visit(current);
            return Ok(());
        }
        let (s, t) = (paths[k].start(), paths[k].end());
        let top = src[s].min(tgt[t]);
        for q in 0..=top {
            src[s] -= q;
            tgt[t] -= q;
            current.push(q);
            let r = rec(paths, k + 1, src, tgt, current, budget, visit);
            current.pop();
            src[s] += q;
            tgt[t] += q;
            r?;
        }
        Ok(())
    }
    let n = inst.graph.num_vertices();
    let mut src: Vec<i64> = (0..n)
        .map(|v| quanta(inst.boundary.source_mass(v), delta))
        .collect();
    let mut tgt: Vec<i64> = (0..n)
        .map(|v| quanta(inst.boundary.target_mass(v), delta))
        .collect();
    rec(paths, 0, &mut src, &mut tgt, &mut Vec::new(), budget, visit)
}

/// Iterates over the Cartesian product of per-scenario option lists.
fn product(sizes: &[usize], mut visit: impl FnMut(&[usize])) {
    if sizes.contains(&0) {
        return;
    }
    let mut idx = vec![0; sizes.len()];
    loop {
        visit(&idx);
        let mut k = 0;
        loop {
            if k == sizes.len() {
                return;
            }
            idx[k] += 1;
            if idx[k] < sizes[k] {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn product_size(sizes: &[usize]) -> Result<u64, SolveError> {
    let mut total: u64 = 1;
    for &s in sizes {
        total = total
            .checked_mul(s as u64)
            .filter(|&t| t <= ORACLE_CANDIDATE_LIMIT)
            .ok_or_else(|| {
                guard(format!(
                    "more than {ORACLE_CANDIDATE_LIMIT} candidate combinations"
                ))
            })?;
    }
    Ok(total)
}

struct Best {
    energy: f64,
    choice: Vec<usize>,
    ties: u64,
}

impl Best {
    fn offer(&mut self, energy: f64, choice: &[usize]) {
        if energy < self.energy - TIE {
            self.energy = energy;
            self.choice = choice.to_vec();
            self.ties = 1;
        } else if energy <= self.energy + TIE {
            self.ties += 1;
        }
    }
}

fn eulerian_oracle(inst: &Instance, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    let g = &inst.graph;
    if g.num_edges() > MAX_EULERIAN_EDGES {
        return Err(guard(format!(
            "the Eulerian oracle handles at most {MAX_EULERIAN_EDGES} edges, instance has {}",
            g.num_edges()
        )));
    }
    let start = Instant::now();
    let delta = opts.delta;
    let m = g.num_edges();
    let mut budget = ORACLE_CANDIDATE_LIMIT;
    // per scenario: distinct quantized flows and their pay-off
    let mut options: Vec<Vec<(Vec<i64>, f64)>> = Vec::new();
    for (i, s) in inst.scenarios.iter().enumerate() {
        let mask = s.mask()?;
        let paths =
            scenario_paths(inst, &|e| mask[e], &|_| true, MAX_EULERIAN_PATHS).ok_or_else(|| {
                guard(format!(
                    "scenario {i} has more than {MAX_EULERIAN_PATHS} simple paths"
                ))
            })?;
        let signed: Vec<Vec<(usize, i64)>> = paths
            .iter()
            .map(|p| p.signed_edges(g).map(|(e, d)| (e, d as i64)).collect())
            .collect();
        let mut seen: HashMap<Vec<i64>, ()> = HashMap::new();
        let mut flows = Vec::new();
        assignments(inst, &paths, delta, &mut budget, &mut |q| {
            let mut f = vec![0i64; m];
            for (k, &qk) in q.iter().enumerate() {
                for &(e, d) in &signed[k] {
                    f[e] += d * qk;
                }
            }
            if seen.insert(f.clone(), ()).is_none() {
                flows.push(f);
            }
        })?;
        let scored = flows
            .into_iter()
            .map(|f| {
                let real: Vec<f64> = f.iter().map(|&x| x as f64 * delta).collect();
                let pay = crate::energy::eulerian_scenario_payoff(inst, i, &real);
                (f, pay)
            })
            .collect();
        options.push(scored);
    }
    let sizes: Vec<usize> = options.iter().map(Vec::len).collect();
    let candidates = product_size(&sizes)?;
    let oriented = opts.model == Model::EulerianOriented;
    let lengths: Vec<f64> = g.edges().iter().map(|e| e.length).collect();
    let mut best = Best {
        energy: f64::INFINITY,
        choice: Vec::new(),
        ties: 0,
    };
    product(&sizes, |idx| {
        let mut phi = 0.0;
        for e in 0..m {
            let mut top = 0i64;
            let (mut pos, mut neg) = (false, false);
            for (i, &k) in idx.iter().enumerate() {
                let x = options[i][k].0[e];
                top = top.max(x.abs());
                pos |= x > 0;
                neg |= x < 0;
            }
            if oriented && pos && neg {
                return;
            }
            phi += lengths[e] * inst.cost.eval_unchecked(top as f64 * delta);
        }
        let pay: f64 = idx.iter().enumerate().map(|(i, &k)| options[i][k].1).sum();
        best.offer(phi - pay, idx);
    });
    let flows: Vec<Vec<f64>> = best
        .choice
        .iter()
        .enumerate()
        .map(|(i, &k)| options[i][k].0.iter().map(|&x| x as f64 * delta).collect())
        .collect();
    let c = EulerianCompetitor {
        theta: theta_from_flows(&flows),
        flows,
    };
    let energy = eulerian_energy(inst, &c)?;
    let admissibility = eulerian_certificate(inst, &c, opts.model)?;
    Ok(report(
        opts,
        Competitor::Eulerian(c),
        energy,
        admissibility,
        candidates,
        best.ties,
        start,
    ))
}

fn lagrangian_oracle(inst: &Instance, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    let g = &inst.graph;
    let start = Instant::now();
    let delta = opts.delta;
    let mut budget = ORACLE_CANDIDATE_LIMIT;
    let mut universe: Vec<Path> = Vec::new();
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    // per scenario: (path ids, quanta) options with their pay-off
    let mut options: Vec<Vec<(Vec<(usize, i64)>, f64)>> = Vec::new();
    for (i, s) in inst.scenarios.iter().enumerate() {
        let eff = s.efficiencies(g)?;
        let paths = scenario_paths(
            inst,
            &|e| usable_edge(g, &eff, e),
            &|v| eff.vertex[v] > 0.0,
            MAX_LAGRANGIAN_PATHS,
        )
        .ok_or_else(|| {
            guard(format!(
                "scenario {i} has more than {MAX_LAGRANGIAN_PATHS} usable paths"
            ))
        })?;
        let ids: Vec<usize> = paths
            .iter()
            .map(|p| {
                *index.entry(p.edges().to_vec()).or_insert_with(|| {
                    universe.push(p.clone());
                    universe.len() - 1
                })
            })
            .collect();
        let gains: Vec<f64> = paths
            .iter()
            .map(|p| {
                s.prob
                    * path_efficiency(p, &eff)
                    * (inst.payoff_at(i, p.start()) + inst.payoff_at(i, p.end()))
            })
            .collect();
        let mut list = Vec::new();
        assignments(inst, &paths, delta, &mut budget, &mut |q| {
            let pay: f64 = q
                .iter()
                .zip(&gains)
                .map(|(&k, gain)| k as f64 * delta * gain)
                .sum();
            let sparse = ids
                .iter()
                .copied()
                .zip(q.iter().copied())
                .filter(|&(_, k)| k > 0)
                .collect();
            list.push((sparse, pay));
        })?;
        options.push(list);
    }
    let sizes: Vec<usize> = options.iter().map(Vec::len).collect();
    let candidates = product_size(&sizes)?;
    let edge_sets: Vec<Vec<usize>> = universe
        .iter()
        .map(|p| {
            let mut e = p.edges().to_vec();
            e.sort_unstable();
            e.dedup();
            e
        })
        .collect();
    let mut best = Best {
        energy: f64::INFINITY,
        choice: Vec::new(),
        ties: 0,
    };
    let mut wp = vec![0i64; universe.len()];
    let mut theta = vec![0i64; g.num_edges()];
    product(&sizes, |idx| {
        wp.iter_mut().for_each(|x| *x = 0);
        for (i, &k) in idx.iter().enumerate() {
            for &(p, q) in &options[i][k].0 {
                wp[p] = wp[p].max(q);
            }
        }
        theta.iter_mut().for_each(|x| *x = 0);
        for (p, &w) in wp.iter().enumerate() {
            if w > 0 {
                for &e in &edge_sets[p] {
                    theta[e] += w;
                }
            }
        }
        let phi: f64 = g
            .edges()
            .iter()
            .map(|e| e.length * inst.cost.eval_unchecked(theta[e.id] as f64 * delta))
            .sum();
        let pay: f64 = idx.iter().enumerate().map(|(i, &k)| options[i][k].1).sum();
        best.offer(phi - pay, idx);
    });
    let s = inst.num_scenarios();
    let mut sub = vec![vec![0.0; s]; universe.len()];
    for (i, &k) in best.choice.iter().enumerate() {
        for &(p, q) in &options[i][k].0 {
            sub[p][i] = q as f64 * delta;
        }
    }
    let entries = universe
        .iter()
        .zip(sub)
        .map(|(p, row)| {
            let w = row.iter().copied().fold(0.0, f64::max);
            (p.clone(), w, row)
        })
        .collect();
    let c = LagrangianCompetitor::try_new(g, s, entries)?;
    let energy = lagrangian_energy(inst, &c)?;
    let admissibility = check_lagrangian_admissible(inst, &c)?;
    Ok(report(
        opts,
        Competitor::Lagrangian(c),
        energy,
        admissibility,
        candidates,
        best.ties,
        start,
    ))
}

fn report(
    opts: &SolveOptions,
    competitor: Competitor,
    energy: crate::energy::EnergyBreakdown,
    admissibility: crate::model::AdmissibilityReport,
    candidates: u64,
    ties: u64,
    start: Instant,
) -> SolveReport {
    SolveReport {
        format: FORMAT_VERSION,
        options: opts.clone(),
        competitor,
        trace: vec![energy.energy],
        restart_energies: vec![energy.energy],
        energy,
        admissibility,
        iterations: 0,
        budget_exhausted: false,
        oracle_gap: None,
        oracle: Some(OracleSummary {
            candidates,
            argmin_size: ties,
        }),
        hypotheses: None,
        wall_time: start.elapsed(),
    }
}

/// Exhaustive optimum over competitors whose masses are multiples of
/// `opts.delta`. Eulerian: every combination of per-scenario path flows on at
/// most 8 edges. Lagrangian: every combination of sub-plan weights over at
/// most 6 usable paths per scenario, with the plan weight of each path the
/// largest of its sub-weights.
pub fn brute_force_oracle(inst: &Instance, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    opts.check()?;
    match opts.model {
        Model::Eulerian | Model::EulerianOriented => eulerian_oracle(inst, opts),
        Model::Lagrangian => lagrangian_oracle(inst, opts),
    }
}
