use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::dictionary::path_dictionary;
use super::{best_run, with_pool, Hypotheses, Model, Run, SolveError, SolveOptions, SolveReport};
use crate::decomposition::SNAP;
use crate::energy::{lagrangian_energy, path_efficiency};
use crate::model::{
    check_lagrangian_admissible, validate_instance, Competitor, Instance, LagrangianCompetitor,
    ModelError, Path, FORMAT_VERSION,
};

/// `w[p][i]`: sub-plan weight of path `p` in scenario `i`. The plan weight is
/// `max_i w[p][i]`; anything above it only adds phi-mass.
type Weights = Vec<Vec<f64>>;

struct Ctx<'a> {
    inst: &'a Instance,
    opts: &'a SolveOptions,
    paths: &'a [Path],
    /// Distinct edges of each path.
    edges: Vec<Vec<usize>>,
    /// `gain[p][i] = a_i f_i(p) (h(i, start) + h(i, end))`, zero when useless.
    gain: Vec<Vec<f64>>,
    active: Option<usize>,
}

/// A proposed change: new sub-weights for some `(path, scenario)` pairs.
type Move = Vec<(usize, usize, f64)>;

struct State {
    w: Weights,
    theta: Vec<f64>,
    /// Mass leaving each vertex, per scenario.
    out: Vec<Vec<f64>>,
    /// Mass arriving at each vertex, per scenario.
    into: Vec<Vec<f64>>,
}

fn plan_weight(row: &[f64]) -> f64 {
    row.iter().copied().fold(0.0, f64::max)
}

impl Ctx<'_> {
    fn scenarios(&self) -> Vec<usize> {
        match self.active {
            Some(i) => vec![i],
            None => (0..self.inst.num_scenarios()).collect(),
        }
    }

    fn state(&self, w: Weights) -> State {
        let g = &self.inst.graph;
        let s = self.inst.num_scenarios();
        let n = g.num_vertices();
        let mut theta = vec![0.0; g.num_edges()];
        let mut out = vec![vec![0.0; n]; s];
        let mut into = vec![vec![0.0; n]; s];
        for (p, row) in w.iter().enumerate() {
            let wp = plan_weight(row);
            for &e in &self.edges[p] {
                theta[e] += wp;
            }
            for (i, &x) in row.iter().enumerate() {
                out[i][self.paths[p].start()] += x;
                into[i][self.paths[p].end()] += x;
            }
        }
        State {
            w,
            theta,
            out,
            into,
        }
    }

    fn source_slack(&self, st: &State, i: usize, u: usize) -> f64 {
        self.inst.boundary.source_mass(u) - st.out[i][u]
    }

    fn target_slack(&self, st: &State, i: usize, v: usize) -> f64 {
        self.inst.boundary.target_mass(v) - st.into[i][v]
    }

    /// Largest admissible raise of `w[p][i]`.
    fn headroom(&self, st: &State, p: usize, i: usize) -> f64 {
        let path = &self.paths[p];
        self.source_slack(st, i, path.start())
            .min(self.target_slack(st, i, path.end()))
            .max(0.0)
    }

    /// Estimated energy change of a move, or `None` if it breaks the boundary constraint.
    fn delta(&self, st: &State, mv: &Move, scratch: &mut [f64]) -> Option<f64> {
        let g = &self.inst.graph;
        let cost = &self.inst.cost;
        let mut payoff = 0.0;
        // per-vertex boundary feasibility of the raises
        for &(p, i, new) in mv {
            let d = new - st.w[p][i];
            payoff += self.gain[p][i] * d;
            if d > 0.0 {
                let path = &self.paths[p];
                let extra_out: f64 = mv
                    .iter()
                    .filter(|&&(q, j, _)| j == i && self.paths[q].start() == path.start())
                    .map(|&(q, j, x)| x - st.w[q][j])
                    .sum();
                let extra_in: f64 = mv
                    .iter()
                    .filter(|&&(q, j, _)| j == i && self.paths[q].end() == path.end())
                    .map(|&(q, j, x)| x - st.w[q][j])
                    .sum();
                if extra_out > self.source_slack(st, i, path.start()) + SNAP
                    || extra_in > self.target_slack(st, i, path.end()) + SNAP
                {
                    return None;
                }
            }
        }
        let mut touched = Vec::new();
        let mut rows: Vec<usize> = mv.iter().map(|&(p, _, _)| p).collect();
        rows.sort_unstable();
        rows.dedup();
        for &p in &rows {
            let mut row = st.w[p].clone();
            for &(q, i, x) in mv {
                if q == p {
                    row[i] = x;
                }
            }
            let dw = plan_weight(&row) - plan_weight(&st.w[p]);
            if dw == 0.0 {
                continue;
            }
            for &e in &self.edges[p] {
                if scratch[e] == 0.0 {
                    touched.push(e);
                }
                scratch[e] += dw;
            }
        }
        let mut phi = 0.0;
        for e in touched {
            let t = st.theta[e];
            let nt = (t + scratch[e]).max(0.0);
            phi += g.edge(e).length * (cost.eval_unchecked(nt) - cost.eval_unchecked(t));
            scratch[e] = 0.0;
        }
        Some(phi - payoff)
    }

    fn moves(&self, st: &State) -> Vec<Move> {
        let delta = self.opts.delta;
        let scenarios = self.scenarios();
        let mut out = Vec::new();
        for p in 0..self.paths.len() {
            let useful: Vec<usize> = scenarios
                .iter()
                .copied()
                .filter(|&i| self.gain[p][i] > 0.0)
                .collect();
            for &i in &useful {
                let w = st.w[p][i];
                let room = self.headroom(st, p, i);
                if room >= delta - SNAP {
                    out.push(vec![(p, i, w + delta)]);
                }
                if room > SNAP {
                    out.push(vec![(p, i, w + room)]);
                }
                if w > SNAP {
                    out.push(vec![(p, i, (w - delta).max(0.0))]);
                    out.push(vec![(p, i, 0.0)]);
                }
            }
            if useful.len() > 1 {
                let step: Move = useful
                    .iter()
                    .filter(|&&i| self.headroom(st, p, i) >= delta - SNAP)
                    .map(|&i| (p, i, st.w[p][i] + delta))
                    .collect();
                if step.len() > 1 {
                    out.push(step);
                }
                let fill: Move = useful
                    .iter()
                    .filter(|&&i| self.headroom(st, p, i) > SNAP)
                    .map(|&i| (p, i, st.w[p][i] + self.headroom(st, p, i)))
                    .collect();
                if fill.len() > 1 {
                    out.push(fill);
                }
            }
            let wp = plan_weight(&st.w[p]);
            if wp > SNAP {
                let lower: Move = scenarios
                    .iter()
                    .filter(|&&i| st.w[p][i] > wp - delta)
                    .map(|&i| (p, i, (wp - delta).max(0.0)))
                    .collect();
                out.push(lower);
                out.push(scenarios.iter().map(|&i| (p, i, 0.0)).collect());
            }
        }
        // shift a whole sub-weight onto another route with the same endpoints
        for p in 0..self.paths.len() {
            for &i in &scenarios {
                let w = st.w[p][i];
                if w <= SNAP {
                    continue;
                }
                for q in 0..self.paths.len() {
                    if q == p
                        || self.gain[q][i] <= 0.0
                        || self.paths[q].start() != self.paths[p].start()
                        || self.paths[q].end() != self.paths[p].end()
                    {
                        continue;
                    }
                    out.push(vec![(p, i, 0.0), (q, i, st.w[q][i] + w)]);
                }
            }
        }
        // swap targets between two carried routes of one scenario
        let mut by_ends: std::collections::BTreeMap<(usize, usize), Vec<usize>> =
            Default::default();
        for (r, path) in self.paths.iter().enumerate() {
            by_ends
                .entry((path.start(), path.end()))
                .or_default()
                .push(r);
        }
        for &i in &scenarios {
            let carried: Vec<usize> = (0..self.paths.len())
                .filter(|&p| st.w[p][i] > SNAP)
                .collect();
            for (a, &p) in carried.iter().enumerate() {
                for &q in &carried[a + 1..] {
                    let (pp, qq) = (&self.paths[p], &self.paths[q]);
                    if pp.start() == qq.start() || pp.end() == qq.end() {
                        continue;
                    }
                    let (Some(rs), Some(ss)) = (
                        by_ends.get(&(pp.start(), qq.end())),
                        by_ends.get(&(qq.start(), pp.end())),
                    ) else {
                        continue;
                    };
                    let full = st.w[p][i].min(st.w[q][i]);
                    for &r in rs.iter().filter(|&&r| self.gain[r][i] > 0.0) {
                        for &s in ss.iter().filter(|&&s| self.gain[s][i] > 0.0) {
                            for m in [delta.min(full), full] {
                                out.push(vec![
                                    (p, i, st.w[p][i] - m),
                                    (q, i, st.w[q][i] - m),
                                    (r, i, st.w[r][i] + m),
                                    (s, i, st.w[s][i] + m),
                                ]);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn competitor(&self, w: &Weights) -> LagrangianCompetitor {
        let entries = self
            .paths
            .iter()
            .zip(w)
            .filter(|(_, row)| plan_weight(row) > 0.0)
            .map(|(p, row)| (p.clone(), plan_weight(row), row.clone()))
            .collect();
        LagrangianCompetitor::try_new(&self.inst.graph, self.inst.num_scenarios(), entries)
            .expect("dictionary paths are valid")
    }

    fn energy(&self, w: &Weights) -> f64 {
        lagrangian_energy(self.inst, &self.competitor(w))
            .expect("competitor has the instance shape")
            .energy
    }
}

fn descend(ctx: &Ctx, w: Weights) -> Run<Weights> {
    let mut st = ctx.state(w);
    let mut energy = ctx.energy(&st.w);
    let mut trace = vec![energy];
    let mut scratch = vec![0.0; ctx.inst.graph.num_edges()];
    for it in 0..ctx.opts.max_iters {
        let mut best: Option<(f64, Move)> = None;
        for mv in ctx.moves(&st) {
            if let Some(d) = ctx.delta(&st, &mv, &mut scratch) {
                if best.as_ref().is_none_or(|(b, _)| d < *b) {
                    best = Some((d, mv));
                }
            }
        }
        let accepted = match best {
            Some((d, mv)) if d < -ctx.opts.tol => {
                let mut w = st.w.clone();
                for (p, i, x) in mv {
                    w[p][i] = if x.abs() < SNAP { 0.0 } else { x };
                }
                let e = ctx.energy(&w);
                (e < energy).then_some((e, w))
            }
            _ => None,
        };
        match accepted {
            Some((e, w)) => {
                energy = e;
                trace.push(e);
                st = ctx.state(w);
            }
            None => {
                return Run {
                    state: st.w,
                    energy,
                    trace,
                    iterations: it,
                    exhausted: false,
                }
            }
        }
    }
    Run {
        state: st.w,
        energy,
        trace,
        iterations: ctx.opts.max_iters,
        exhausted: true,
    }
}

fn random_start(ctx: &Ctx, seed: u64) -> Weights {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = ctx.inst.num_scenarios();
    let mut st = ctx.state(vec![vec![0.0; s]; ctx.paths.len()]);
    for i in ctx.scenarios() {
        for u in ctx.inst.boundary.sources() {
            if !rng.gen_bool(0.5) {
                continue;
            }
            let options: Vec<usize> = (0..ctx.paths.len())
                .filter(|&p| ctx.paths[p].start() == u && ctx.gain[p][i] > 0.0)
                .collect();
            if options.is_empty() {
                continue;
            }
            let p = options[rng.gen_range(0..options.len())];
            let steps = super::quanta(ctx.headroom(&st, p, i), ctx.opts.delta);
            if steps < 1 {
                continue;
            }
            let mut w = st.w.clone();
            w[p][i] += rng.gen_range(1..=steps) as f64 * ctx.opts.delta;
            st = ctx.state(w);
        }
    }
    st.w
}

fn run(ctx: &Ctx, index: usize) -> Run<Weights> {
    let empty = vec![vec![0.0; ctx.inst.num_scenarios()]; ctx.paths.len()];
    match index {
        0 => descend(ctx, empty),
        1 => {
            let mut combined = empty.clone();
            for i in 0..ctx.inst.num_scenarios() {
                let solo = Ctx {
                    active: Some(i),
                    edges: ctx.edges.clone(),
                    gain: ctx.gain.clone(),
                    ..*ctx
                };
                let r = descend(&solo, empty.clone());
                for (row, solo_row) in combined.iter_mut().zip(&r.state) {
                    row[i] = solo_row[i];
                }
            }
            descend(ctx, combined)
        }
        k => descend(ctx, random_start(ctx, ctx.opts.seed.wrapping_add(k as u64))),
    }
}

/// Lagrangian local search over the default path dictionary.
pub fn solve_lagrangian(inst: &Instance, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    opts.check()?;
    let dictionary = path_dictionary(inst, opts.dictionary_size)?;
    solve_lagrangian_with_dictionary(inst, opts, &dictionary)
}

/// Lagrangian local search restricted to the given candidate paths. Paths that
/// do not join a source to a target, or that no scenario can use, are ignored.
pub fn solve_lagrangian_with_dictionary(
    inst: &Instance,
    opts: &SolveOptions,
    dictionary: &[Path],
) -> Result<SolveReport, SolveError> {
    opts.check()?;
    if opts.model != Model::Lagrangian {
        return Err(SolveError::Options(
            "solve_lagrangian needs the lagrangian model".into(),
        ));
    }
    let start = Instant::now();
    let g = &inst.graph;
    let effs = inst
        .scenarios
        .iter()
        .map(|s| s.efficiencies(g))
        .collect::<Result<Vec<_>, ModelError>>()?;
    let mut paths = Vec::new();
    let mut gain = Vec::new();
    for p in dictionary {
        p.check(g)?;
        if inst.boundary.source_mass(p.start()) <= 0.0 || inst.boundary.target_mass(p.end()) <= 0.0
        {
            continue;
        }
        let row: Vec<f64> = effs
            .iter()
            .enumerate()
            .map(|(i, eff)| {
                let f = path_efficiency(p, eff);
                inst.scenarios[i].prob
                    * f
                    * (inst.payoff_at(i, p.start()) + inst.payoff_at(i, p.end()))
            })
            .collect();
        if row.iter().any(|&x| x > 0.0) {
            paths.push(p.clone());
            gain.push(row);
        }
    }
    let edges = paths
        .iter()
        .map(|p| {
            let mut e = p.edges().to_vec();
            e.sort_unstable();
            e.dedup();
            e
        })
        .collect();
    let ctx = Ctx {
        inst,
        opts,
        paths: &paths,
        edges,
        gain,
        active: None,
    };
    let runs: Vec<Run<Weights>> = with_pool(|| {
        (0..=opts.restarts)
            .into_par_iter()
            .map(|k| run(&ctx, k))
            .collect()
    });
    let (best, energies) = best_run(runs);
    let c = ctx.competitor(&best.state);
    let energy = lagrangian_energy(inst, &c)?;
    let admissibility = check_lagrangian_admissible(inst, &c)?;
    let v = validate_instance(inst);
    Ok(SolveReport {
        format: FORMAT_VERSION,
        options: opts.clone(),
        competitor: Competitor::Lagrangian(c),
        energy,
        trace: best.trace,
        admissibility,
        restart_energies: energies,
        iterations: best.iterations,
        budget_exhausted: best.exhausted,
        oracle_gap: None,
        oracle: None,
        hypotheses: Some(Hypotheses {
            source_target_distance: v.source_target_distance,
            supports_separated: v.supports_separated,
            phi_unbounded: !v.phi_bounded,
        }),
        wall_time: start.elapsed(),
    })
}
