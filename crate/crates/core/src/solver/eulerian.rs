use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    best_run, theta_from_flows, with_pool, Key, Model, Run, SolveError, SolveOptions, SolveReport,
};
use crate::decomposition::{good_decomposition, remove_cycles, SNAP};
use crate::energy::{boundary_of_flow, eulerian_energy};
use crate::model::{
    check_eulerian_admissible, orientation_conflict, AdmissibilityReport, Competitor, Constraint,
    EulerianCompetitor, Instance, Violation, FORMAT_VERSION,
};
use crate::recovery::max_payoff_flow;

type Flows = Vec<Vec<f64>>;

/// Most oriented sign patterns tried exhaustively.
const MAX_CONTESTED: usize = 16;

struct Ctx<'a> {
    inst: &'a Instance,
    opts: &'a SolveOptions,
    masks: Vec<&'a [bool]>,
    oriented: bool,
    /// Prescribed orientation per edge, 0 where free.
    forced: Option<Vec<i8>>,
    /// Restricts all moves to one scenario.
    active: Option<usize>,
}

fn sign(x: f64) -> i8 {
    if x > SNAP {
        1
    } else if x < -SNAP {
        -1
    } else {
        0
    }
}

impl Ctx<'_> {
    fn scenarios(&self) -> Vec<usize> {
        match self.active {
            Some(i) => vec![i],
            None => (0..self.inst.num_scenarios()).collect(),
        }
    }

    fn energy(&self, flows: &Flows) -> f64 {
        let c = EulerianCompetitor {
            theta: theta_from_flows(flows),
            flows: flows.clone(),
        };
        eulerian_energy(self.inst, &c)
            .expect("flows have the instance shape")
            .energy
    }

    /// Whether scenario `i` may carry `value` on edge `e` without breaking the
    /// shared orientation.
    fn sign_ok(&self, flows: &Flows, i: usize, e: usize, value: f64) -> bool {
        if !self.oriented {
            return true;
        }
        let s = sign(value);
        if s == 0 {
            return true;
        }
        if let Some(forced) = &self.forced {
            if forced[e] != 0 && forced[e] != s {
                return false;
            }
        }
        flows
            .iter()
            .enumerate()
            .all(|(j, f)| j == i || sign(f[e]) == 0 || sign(f[e]) == s)
    }

    fn orientation(&self, flows: &Flows) -> Option<Vec<i8>> {
        if !self.oriented {
            return None;
        }
        let m = self.inst.graph.num_edges();
        Some(
            (0..m)
                .map(|e| {
                    let forced = self.forced.as_ref().map_or(0, |f| f[e]);
                    if forced != 0 {
                        return forced;
                    }
                    flows
                        .iter()
                        .map(|f| sign(f[e]))
                        .find(|&s| s != 0)
                        .unwrap_or(0)
                })
                .collect(),
        )
    }

    fn source_slack(&self, flows: &Flows, i: usize, u: usize) -> f64 {
        let b = boundary_of_flow(&self.inst.graph, &flows[i]);
        self.inst.boundary.source_mass(u) - (-b[u]).max(0.0)
    }
}

fn normalize(inst: &Instance, flows: &mut Flows) {
    for f in flows.iter_mut() {
        *f = remove_cycles(&inst.graph, f);
        for x in f.iter_mut() {
            if x.abs() < SNAP {
                *x = 0.0;
            }
        }
    }
}

/// Shortest-path tree from `s` over directed edge uses; `arc(e, dir)` gives the
/// weight of traversing `e` in direction `dir` or `None` when forbidden.
fn dijkstra_by(
    inst: &Instance,
    s: usize,
    mut arc: impl FnMut(usize, f64) -> Option<f64>,
) -> (Vec<f64>, Vec<Option<(usize, f64)>>) {
    let g = &inst.graph;
    let n = g.num_vertices();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(Reverse((Key(0.0), s)));
    while let Some(Reverse((Key(d), u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &e in g.incident(u) {
            let edge = g.edge(e);
            let dir = edge.direction_from(u);
            let w = edge.other(u).expect("incident edge");
            let Some(cost) = arc(e, dir) else { continue };
            let nd = d + cost;
            if nd < dist[w] {
                dist[w] = nd;
                parent[w] = Some((e, dir));
                heap.push(Reverse((Key(nd), w)));
            }
        }
    }
    (dist, parent)
}

fn trace_back(
    inst: &Instance,
    parent: &[Option<(usize, f64)>],
    s: usize,
    t: usize,
) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    let mut at = t;
    while at != s {
        let (e, dir) = parent[at].expect("reachable vertex");
        out.push((e, dir));
        at = inst.graph.edge(e).other(at).expect("parent edge");
    }
    out.reverse();
    out
}

/// Mass amounts tried for a move bounded by `slack`: the multiples of delta, then `slack` itself.
fn amounts(slack: f64, delta: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 1;
    while (k as f64) * delta <= slack + SNAP && out.len() < 64 {
        out.push(k as f64 * delta);
        k += 1;
    }
    if slack > SNAP && out.last().is_none_or(|&m| (slack - m).abs() > SNAP) && out.len() < 64 {
        out.push(slack);
    }
    out
}

/// Cheapest routes for pushing `m` from `u` in all scenarios of `group` at once,
/// with the incremental construction cost as edge weight. Returns candidate
/// flows whose estimated energy change is below `threshold`.
fn insertions(
    ctx: &Ctx,
    flows: &Flows,
    group: &[usize],
    u: usize,
    m: f64,
    threshold: f64,
    out: &mut Vec<Flows>,
) {
    let inst = ctx.inst;
    let g = &inst.graph;
    let theta = theta_from_flows(flows);
    let (dist, parent) = dijkstra_by(inst, u, |e, dir| {
        let mut top = theta[e];
        for &i in group {
            if !ctx.masks[i][e] {
                return None;
            }
            let new = flows[i][e] + dir * m;
            if !ctx.sign_ok(flows, i, e, new) {
                return None;
            }
            top = top.max(new.abs());
        }
        let len = g.edge(e).length;
        Some((len * (inst.cost.eval_unchecked(top) - inst.cost.eval_unchecked(theta[e]))).max(0.0))
    });
    let bounds: Vec<Vec<f64>> = group
        .iter()
        .map(|&i| boundary_of_flow(g, &flows[i]))
        .collect();
    for v in inst.boundary.targets() {
        if v == u || !dist[v].is_finite() {
            continue;
        }
        let fits = bounds
            .iter()
            .all(|b| inst.boundary.target_mass(v) - b[v].max(0.0) >= m - SNAP);
        if !fits {
            continue;
        }
        let reward: f64 = group
            .iter()
            .map(|&i| inst.scenarios[i].prob * m * (inst.payoff_at(i, u) + inst.payoff_at(i, v)))
            .sum();
        if dist[v] - reward >= threshold {
            continue;
        }
        let route = trace_back(inst, &parent, u, v);
        let mut next = flows.clone();
        for &i in group {
            for &(e, dir) in &route {
                next[i][e] += dir * m;
            }
        }
        out.push(next);
    }
}

fn candidates(ctx: &Ctx, flows: &Flows) -> Result<Vec<Flows>, SolveError> {
    let inst = ctx.inst;
    let g = &inst.graph;
    let delta = ctx.opts.delta;
    let scenarios = ctx.scenarios();
    let mut out = Vec::new();

    // alternating step: best recovery inside the current capacities, then shrink
    let theta = theta_from_flows(flows);
    let orientation = ctx.orientation(flows);
    let mut alt = flows.clone();
    for &i in &scenarios {
        alt[i] = max_payoff_flow(inst, &theta, i, orientation.as_deref())?.flow;
    }
    out.push(alt);

    // insertions, one scenario at a time and jointly
    let mut groups: Vec<Vec<usize>> = scenarios.iter().map(|&i| vec![i]).collect();
    if scenarios.len() > 1 {
        groups.push(scenarios.clone());
    }
    for group in &groups {
        for u in inst.boundary.sources() {
            let slack = group
                .iter()
                .map(|&i| ctx.source_slack(flows, i, u))
                .fold(f64::INFINITY, f64::min);
            for m in amounts(slack, delta) {
                insertions(ctx, flows, group, u, m, -ctx.opts.tol, &mut out);
            }
        }
    }

    // removals and reroutes of decomposed paths
    for &i in &scenarios {
        let Ok(dec) = good_decomposition(g, &flows[i], None) else {
            continue;
        };
        for item in &dec.items {
            let w = item.weight;
            let mut cuts = vec![w];
            if w > delta + SNAP {
                cuts.push(delta);
            }
            for cut in cuts {
                let mut next = flows.clone();
                for (e, s) in item.path.signed_edges(g) {
                    next[i][e] -= s * cut;
                }
                if cut == w {
                    insertions(
                        ctx,
                        &next,
                        &[i],
                        item.path.start(),
                        w,
                        -ctx.opts.tol,
                        &mut out,
                    );
                }
                out.push(next);
            }
        }
    }
    Ok(out)
}

/// Insertions of `m` from every source into scenario `i` with estimated gain
/// below `threshold`.
fn scenario_insertions(ctx: &Ctx, flows: &Flows, i: usize, threshold: f64) -> Vec<Flows> {
    let mut out = Vec::new();
    for u in ctx.inst.boundary.sources() {
        for m in amounts(ctx.source_slack(flows, i, u), ctx.opts.delta) {
            insertions(ctx, flows, &[i], u, m, threshold, &mut out);
        }
    }
    out
}

fn best_of(ctx: &Ctx, cands: Vec<Flows>) -> Option<(f64, Flows)> {
    let mut best: Option<(f64, Flows)> = None;
    for mut cand in cands {
        normalize(ctx.inst, &mut cand);
        let e = ctx.energy(&cand);
        if best.as_ref().is_none_or(|(b, _)| e < *b) {
            best = Some((e, cand));
        }
    }
    best
}

/// Escape moves for when no single move helps: an insertion into one scenario,
/// even a costly one, followed by the best insertion into each other scenario
/// given the capacities it opened up.
fn compound_candidates(ctx: &Ctx, flows: &Flows) -> Vec<Flows> {
    let scenarios = ctx.scenarios();
    if scenarios.len() < 2 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for &i in &scenarios {
        for mut state in scenario_insertions(ctx, flows, i, f64::INFINITY) {
            normalize(ctx.inst, &mut state);
            let mut energy = ctx.energy(&state);
            for &j in scenarios.iter().filter(|&&j| j != i) {
                if let Some((e, next)) =
                    best_of(ctx, scenario_insertions(ctx, &state, j, f64::INFINITY))
                {
                    if e < energy {
                        energy = e;
                        state = next;
                    }
                }
            }
            out.push(state);
        }
    }
    out
}

fn descend(ctx: &Ctx, mut flows: Flows) -> Result<Run<Flows>, SolveError> {
    normalize(ctx.inst, &mut flows);
    let mut energy = ctx.energy(&flows);
    let mut trace = vec![energy];
    for it in 0..ctx.opts.max_iters {
        let mut best = best_of(ctx, candidates(ctx, &flows)?);
        if best
            .as_ref()
            .is_none_or(|(e, _)| *e >= energy - ctx.opts.tol)
        {
            if let Some(escape) = best_of(ctx, compound_candidates(ctx, &flows)) {
                if best.as_ref().is_none_or(|(e, _)| escape.0 < *e) {
                    best = Some(escape);
                }
            }
        }
        match best {
            Some((e, cand)) if e < energy - ctx.opts.tol => {
                energy = e;
                flows = cand;
                trace.push(e);
            }
            _ => {
                return Ok(Run {
                    state: flows,
                    energy,
                    trace,
                    iterations: it,
                    exhausted: false,
                })
            }
        }
    }
    Ok(Run {
        state: flows,
        energy,
        trace,
        iterations: ctx.opts.max_iters,
        exhausted: true,
    })
}

/// Random start: a few perturbed shortest routes per scenario with random masses.
fn random_start(ctx: &Ctx, seed: u64) -> Flows {
    let inst = ctx.inst;
    let g = &inst.graph;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flows = vec![vec![0.0; g.num_edges()]; inst.num_scenarios()];
    let targets: Vec<usize> = inst.boundary.targets().collect();
    if targets.is_empty() {
        return flows;
    }
    for i in ctx.scenarios() {
        for u in inst.boundary.sources() {
            if !rng.gen_bool(0.5) {
                continue;
            }
            let v = targets[rng.gen_range(0..targets.len())];
            let noise: Vec<f64> = (0..g.num_edges())
                .map(|_| rng.gen_range(0.5..1.5))
                .collect();
            let snapshot = flows.clone();
            let (dist, parent) = dijkstra_by(inst, u, |e, dir| {
                let new = snapshot[i][e] + dir * ctx.opts.delta;
                (ctx.masks[i][e] && ctx.sign_ok(&snapshot, i, e, new))
                    .then(|| g.edge(e).length * noise[e])
            });
            if v == u || !dist[v].is_finite() {
                continue;
            }
            let b = boundary_of_flow(g, &flows[i]);
            let slack = ctx
                .source_slack(&flows, i, u)
                .min(inst.boundary.target_mass(v) - b[v].max(0.0));
            let steps = super::quanta(slack, ctx.opts.delta);
            if steps < 1 {
                continue;
            }
            let m = rng.gen_range(1..=steps) as f64 * ctx.opts.delta;
            let route = trace_back(inst, &parent, u, v);
            let ok = route
                .iter()
                .all(|&(e, dir)| ctx.sign_ok(&flows, i, e, flows[i][e] + dir * m));
            if ok {
                for (e, dir) in route {
                    flows[i][e] += dir * m;
                }
            }
        }
    }
    flows
}

fn run(ctx: &Ctx, index: usize) -> Result<Run<Flows>, SolveError> {
    let inst = ctx.inst;
    let empty = vec![vec![0.0; inst.graph.num_edges()]; inst.num_scenarios()];
    match index {
        0 => descend(ctx, empty),
        1 => {
            let mut combined = empty;
            for i in 0..inst.num_scenarios() {
                let solo = Ctx {
                    active: Some(i),
                    forced: ctx.forced.clone(),
                    masks: ctx.masks.clone(),
                    ..*ctx
                };
                combined[i] = descend(&solo, combined.clone())?.state[i].clone();
            }
            if ctx.oriented && orientation_conflict(&competitor(&combined)).is_some() {
                // keep the first scenario's routes where they collide
                for i in 1..combined.len() {
                    for e in 0..inst.graph.num_edges() {
                        if !ctx.sign_ok(&combined, i, e, combined[i][e]) {
                            combined[i] = vec![0.0; inst.graph.num_edges()];
                            break;
                        }
                    }
                }
            }
            descend(ctx, combined)
        }
        k => descend(ctx, random_start(ctx, ctx.opts.seed.wrapping_add(k as u64))),
    }
}

fn competitor(flows: &Flows) -> EulerianCompetitor {
    EulerianCompetitor {
        theta: theta_from_flows(flows),
        flows: flows.clone(),
    }
}

fn run_all(ctx: &Ctx) -> Result<(Run<Flows>, Vec<f64>), SolveError> {
    let runs: Vec<Run<Flows>> = (0..=ctx.opts.restarts)
        .into_par_iter()
        .map(|k| run(ctx, k))
        .collect::<Result<_, _>>()?;
    Ok(best_run(runs))
}

/// Drops from `flows` every decomposed path that disagrees with `forced`.
fn restrict_to(inst: &Instance, flows: &Flows, forced: &[i8]) -> Flows {
    let g = &inst.graph;
    flows
        .iter()
        .map(|f| {
            let Ok(dec) = good_decomposition(g, f, None) else {
                return vec![0.0; g.num_edges()];
            };
            let mut out = vec![0.0; g.num_edges()];
            for item in &dec.items {
                let agrees = item
                    .path
                    .signed_edges(g)
                    .all(|(e, s)| forced[e] == 0 || forced[e] as f64 == s);
                if agrees {
                    for (e, s) in item.path.signed_edges(g) {
                        out[e] += s * item.weight;
                    }
                }
            }
            out
        })
        .collect()
}

fn oriented_search(base: &Ctx, unoriented: &Flows) -> Result<(Run<Flows>, Vec<f64>), SolveError> {
    let inst = base.inst;
    let m = inst.graph.num_edges();
    let contested: Vec<usize> = (0..m)
        .filter(|&e| {
            let signs: Vec<i8> = unoriented.iter().map(|f| sign(f[e])).collect();
            signs.contains(&1) && signs.contains(&-1)
        })
        .collect();
    let free = Ctx {
        forced: None,
        masks: base.masks.clone(),
        ..*base
    };
    let (mut best, mut energies) = run_all(&free)?;
    let patterns: Vec<Vec<i8>> = if contested.len() <= MAX_CONTESTED {
        (0..1u32 << contested.len())
            .map(|bits| {
                let mut forced = vec![0i8; m];
                for (k, &e) in contested.iter().enumerate() {
                    forced[e] = if bits >> k & 1 == 1 { -1 } else { 1 };
                }
                forced
            })
            .collect()
    } else {
        // greedy: every contested edge follows the first scenario using it
        let mut forced = vec![0i8; m];
        for &e in &contested {
            forced[e] = unoriented
                .iter()
                .map(|f| sign(f[e]))
                .find(|&s| s != 0)
                .unwrap_or(1);
        }
        vec![forced]
    };
    for forced in patterns {
        let ctx = Ctx {
            forced: Some(forced.clone()),
            masks: base.masks.clone(),
            ..*base
        };
        let seeded = descend(&ctx, restrict_to(inst, unoriented, &forced))?;
        energies.push(seeded.energy);
        if seeded.energy < best.energy {
            best = seeded;
        }
    }
    Ok((best, energies))
}

/// Alternating descent with path moves and restarts for the Eulerian model,
/// oriented or not according to `opts.model`.
pub fn solve_eulerian(inst: &Instance, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    opts.check()?;
    if !opts.model.is_eulerian() {
        return Err(SolveError::Options(
            "solve_eulerian needs an Eulerian model".into(),
        ));
    }
    let start = Instant::now();
    let masks = inst
        .scenarios
        .iter()
        .map(|s| s.mask())
        .collect::<Result<Vec<_>, _>>()?;
    let base = Ctx {
        inst,
        opts,
        masks,
        oriented: false,
        forced: None,
        active: None,
    };
    let (best, energies) = with_pool(|| -> Result<_, SolveError> {
        let (unoriented, energies) = run_all(&base)?;
        if opts.model == Model::Eulerian {
            return Ok((unoriented, energies));
        }
        let oriented = Ctx {
            oriented: true,
            masks: base.masks.clone(),
            ..base
        };
        oriented_search(&oriented, &unoriented.state)
    })?;
    let c = competitor(&best.state);
    let energy = eulerian_energy(inst, &c)?;
    let admissibility = eulerian_certificate(inst, &c, opts.model)?;
    Ok(SolveReport {
        format: FORMAT_VERSION,
        options: opts.clone(),
        competitor: Competitor::Eulerian(c),
        energy,
        trace: best.trace,
        admissibility,
        restart_energies: energies,
        iterations: best.iterations,
        budget_exhausted: best.exhausted,
        oracle_gap: None,
        oracle: None,
        hypotheses: None,
        wall_time: start.elapsed(),
    })
}

/// Admissibility plus, in oriented mode, the shared-orientation constraint.
pub(crate) fn eulerian_certificate(
    inst: &Instance,
    c: &EulerianCompetitor,
    model: Model,
) -> Result<AdmissibilityReport, SolveError> {
    let mut report = check_eulerian_admissible(inst, c)?;
    if model == Model::EulerianOriented && report.first_violation.is_none() {
        if let Some(e) = orientation_conflict(c) {
            report.first_violation = Some(Violation {
                scenario: 0,
                constraint: Constraint::Orientation,
                item: e,
            });
        }
    }
    Ok(report)
}
