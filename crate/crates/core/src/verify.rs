//! Brute-force cross-checks of the library against small exhaustive
//! oracles. Each check reports how many instances it examined and the
//! first counterexample, if any.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::design::{degree_objective, f_of_b, sweep_k, tree_bound, DesignResult};
use crate::error::Result;
use crate::graph::{bridge_decomposition, BaseTopology, Digraph, Link, UndirectedGraph};
use crate::mixing::{min_weight, uniform_column_stochastic};
use crate::schedule::{
    brute_force_chromatic, build_conflict_graph, check_schedule, dc_bound, greedy_color,
    ConflictGraph, Schedule,
};
use crate::sim::{average, debias, sgp_step, ProblemSet, ProblemSpec, SgpState};
use crate::spanning::min_degree_spanning_tree;
use crate::topology::random_connected;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

impl std::str::FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            other => Err(format!("unknown level `{other}` (expected quick or full)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    pub name: &'static str,
    pub checked: usize,
    pub failure: Option<String>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Slot assignment routine under test.
pub type Colorer = fn(&ConflictGraph) -> Schedule;

struct Sizes {
    graphs: usize,
    max_nodes: usize,
    chromatic: usize,
    chromatic_vertices: usize,
    sim_iters: usize,
}

impl Level {
    fn sizes(self) -> Sizes {
        match self {
            Level::Quick => Sizes {
                graphs: 15,
                max_nodes: 12,
                chromatic: 30,
                chromatic_vertices: 10,
                sim_iters: 300,
            },
            Level::Full => Sizes {
                graphs: 60,
                max_nodes: 20,
                chromatic: 100,
                chromatic_vertices: crate::schedule::CHROMATIC_LIMIT,
                sim_iters: 2000,
            },
        }
    }
}

pub fn run_verify(level: Level, seed: u64) -> Vec<OracleReport> {
    run_verify_with(level, seed, greedy_color)
}

/// Runs every oracle, scheduling with `colorer`.
pub fn run_verify_with(level: Level, seed: u64, colorer: Colorer) -> Vec<OracleReport> {
    let sizes = level.sizes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bases: Vec<BaseTopology> = (0..sizes.graphs)
        .map(|_| {
            let n = rng.random_range(4..=sizes.max_nodes);
            let p = rng.random_range(0.2..0.6);
            random_connected(n, p, &mut rng).expect("valid parameters")
        })
        .collect();
    let designs: Vec<std::result::Result<(BaseTopology, DesignResult, f64), String>> = bases
        .iter()
        .map(|b| {
            let sweep = sweep_k(b, b.n(), true).map_err(|e| e.to_string())?;
            let bound = tree_bound(&sweep.tree).ln;
            Ok((b.clone(), sweep.best().clone(), bound))
        })
        .collect();

    vec![
        chromatic_oracle(&mut rng, sizes.chromatic, sizes.chromatic_vertices, colorer),
        schedule_oracle(&bases, &mut rng, colorer),
        strong_connectivity_oracle(&designs),
        uniform_weight_oracle(&mut rng, sizes.graphs),
        period_split_oracle(&bases, &mut rng),
        push_sum_oracle(&designs, sizes.sim_iters),
        bridge_oracle(&bases),
        spanning_tree_oracle(&mut rng, sizes.graphs),
    ]
}

fn report(name: &'static str, checked: usize, failure: Option<String>) -> OracleReport {
    OracleReport {
        name,
        checked,
        failure,
    }
}

fn random_conflict_graph<R: Rng>(rng: &mut R, max_vertices: usize) -> ConflictGraph {
    let m = rng.random_range(1..=max_vertices);
    let p = rng.random_range(0.1..0.8);
    let links: Vec<Link> = (0..m).map(|v| (v, v + 1)).collect();
    let mut edges = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            if rng.random_bool(p) {
                edges.push((a, b));
            }
        }
    }
    ConflictGraph::from_parts(links, &edges).expect("indices in range")
}

fn chromatic_oracle<R: Rng>(
    rng: &mut R,
    count: usize,
    max_vertices: usize,
    colorer: Colorer,
) -> OracleReport {
    for i in 0..count {
        let cg = random_conflict_graph(rng, max_vertices);
        let s = colorer(&cg);
        if let Err(v) = check_schedule(&s, &cg) {
            return report(
                "chromatic",
                i,
                Some(format!("instance {i}: invalid coloring: {v}")),
            );
        }
        let exact = match brute_force_chromatic(&cg) {
            Ok(k) => k,
            Err(e) => return report("chromatic", i, Some(e.to_string())),
        };
        if exact > s.tau() || s.tau() > cg.max_degree() + 1 {
            return report(
                "chromatic",
                i,
                Some(format!(
                    "instance {i}: optimum {exact}, colorer {}, degree bound {}",
                    s.tau(),
                    cg.max_degree() + 1
                )),
            );
        }
    }
    report("chromatic", count, None)
}

fn random_subgraph<R: Rng>(base: &BaseTopology, rng: &mut R) -> Digraph {
    let keep = rng.random_range(0.1..0.9);
    let links: Vec<Link> = base
        .links()
        .into_iter()
        .filter(|_| rng.random_bool(keep))
        .collect();
    Digraph::from_links(base.n(), &links).expect("links in range")
}

fn schedule_oracle<R: Rng>(bases: &[BaseTopology], rng: &mut R, colorer: Colorer) -> OracleReport {
    let mut checked = 0;
    for (idx, base) in bases.iter().enumerate() {
        let designed = match crate::design::design_graph(base, 0, false) {
            Ok(r) => r.g_a,
            Err(e) => return report("schedule-validity", checked, Some(e.to_string())),
        };
        for g_a in [designed, random_subgraph(base, rng), base.full_digraph()] {
            checked += 1;
            let cg = match build_conflict_graph(&g_a, base) {
                Ok(cg) => cg,
                Err(e) => return report("schedule-validity", checked, Some(e.to_string())),
            };
            let s = colorer(&cg);
            if let Err(v) = check_schedule(&s, &cg) {
                return report(
                    "schedule-validity",
                    checked,
                    Some(format!("graph {idx}: {v}")),
                );
            }
            let bound = dc_bound(&g_a, base);
            if cg.max_degree() > bound || s.tau() > cg.max_degree() + 1 {
                return report(
                    "schedule-validity",
                    checked,
                    Some(format!(
                        "graph {idx}: conflict degree {} vs bound {bound}, {} slots",
                        cg.max_degree(),
                        s.tau()
                    )),
                );
            }
        }
    }
    report("schedule-validity", checked, None)
}

fn strong_connectivity_oracle(
    designs: &[std::result::Result<(BaseTopology, DesignResult, f64), String>],
) -> OracleReport {
    for (i, d) in designs.iter().enumerate() {
        let (_, r, bound) = match d {
            Ok(x) => x,
            Err(e) => return report("design-guarantee", i, Some(e.clone())),
        };
        if !r.g_a.is_strongly_connected() {
            return report(
                "design-guarantee",
                i,
                Some(format!("graph {i}: design is not strongly connected")),
            );
        }
        if r.degree_objective.ln > *bound {
            return report(
                "design-guarantee",
                i,
                Some(format!(
                    "graph {i}: objective {} exceeds bound {}",
                    r.degree_objective.ln, bound
                )),
            );
        }
    }
    report("design-guarantee", designs.len(), None)
}

/// Largest achievable minimum weight of one column with `k` positive
/// entries on a grid of step `1/steps`.
fn best_grid_column(k: usize, steps: usize) -> f64 {
    fn go(left: usize, slots: usize, current_min: usize) -> usize {
        if slots == 1 {
            return current_min.min(left);
        }
        (1..left)
            .map(|v| go(left - v, slots - 1, current_min.min(v)))
            .max()
            .unwrap_or(0)
    }
    go(steps, k, steps) as f64 / steps as f64
}

fn uniform_weight_oracle<R: Rng>(rng: &mut R, count: usize) -> OracleReport {
    // fixed 3-node graph: out-degrees 2, 1, 1
    let g = Digraph::from_links(3, &[(0, 1), (0, 2), (1, 2), (2, 0)]).expect("valid links");
    let uniform = uniform_column_stochastic(&g);
    for j in 0..3 {
        let share = 1.0 / (g.out_degree(j) as f64 + 1.0);
        let best = best_grid_column(g.out_degree(j) + 1, 20);
        if best > share + 1e-12 {
            return report(
                "uniform-weights",
                j,
                Some(format!("column {j}: grid reaches {best} > {share}")),
            );
        }
        if uniform.column(j).iter().any(|&(_, v)| v != share) {
            return report(
                "uniform-weights",
                j,
                Some(format!("column {j} is not uniform")),
            );
        }
    }
    for i in 0..count {
        let n = rng.random_range(2..10);
        let p = rng.random_range(0.1..0.9);
        let links: Vec<Link> = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .filter(|&(a, b)| a != b)
            .filter(|_| rng.random_bool(p))
            .collect();
        let g = Digraph::from_links(n, &links).expect("links in range");
        let w = uniform_column_stochastic(&g);
        let expected = 1.0 / (g.max_degrees().0 as f64 + 1.0);
        match min_weight(&w) {
            Ok(delta) if delta == expected => {}
            other => {
                return report(
                    "uniform-weights",
                    i,
                    Some(format!(
                        "digraph {i}: min weight {other:?}, expected {expected}"
                    )),
                )
            }
        }
    }
    report("uniform-weights", count + 3, None)
}

fn period_split_oracle<R: Rng>(bases: &[BaseTopology], rng: &mut R) -> OracleReport {
    let mut checked = 0;
    for (i, base) in bases.iter().enumerate() {
        let g_a = match crate::design::design_graph(base, 0, false) {
            Ok(r) => r.g_a,
            Err(e) => return report("period-split", checked, Some(e.to_string())),
        };
        let links = g_a.links();
        let f1 = match f_of_b(1, &g_a, std::slice::from_ref(&links), base) {
            Ok(v) => v,
            Err(e) => return report("period-split", checked, Some(e.to_string())),
        };
        for b in 2..=4usize {
            let mut split = vec![Vec::new(); b];
            for &l in &links {
                split[rng.random_range(0..b)].push(l);
            }
            checked += 1;
            match f_of_b(b, &g_a, &split, base) {
                Ok(fb) if fb.ln >= f1.ln => {}
                other => {
                    return report(
                        "period-split",
                        checked,
                        Some(format!("graph {i}, B = {b}: {other:?} below {}", f1.ln)),
                    )
                }
            }
        }
    }
    report("period-split", checked, None)
}

fn push_sum_oracle(
    designs: &[std::result::Result<(BaseTopology, DesignResult, f64), String>],
    iters: usize,
) -> OracleReport {
    let mut checked = 0;
    for (i, d) in designs.iter().enumerate() {
        let Ok((base, r, _)) = d else { continue };
        checked += 1;
        let n = base.n();
        let w = uniform_column_stochastic(&r.g_a);
        let spec = ProblemSpec {
            d: 3,
            noise_sigma: 0.1,
            ..ProblemSpec::default()
        };
        let problems: ProblemSet = match spec.generate(n, i as u64) {
            Ok(p) => p,
            Err(e) => return report("push-sum", checked, Some(e.to_string())),
        };
        let x0: Vec<DVector<f64>> = (0..n)
            .map(|k| DVector::from_fn(3, |c, _| ((k * 3 + c) % 7) as f64 / 3.0 - 1.0))
            .collect();
        let target = average(&x0);
        let mut state = SgpState::new(x0);
        // a directed n-cycle contracts by cos(pi/n) per step, so the
        // budget grows with n²
        let budget = iters.max(20 * n * n);
        let mut reached = None;
        for t in 0..budget {
            state = match sgp_step(&state, &w, &problems, 0.0, 0) {
                Ok(s) => s,
                Err(e) => return report("push-sum", checked, Some(e.to_string())),
            };
            let mass: f64 = state.w.iter().sum();
            if (mass - n as f64).abs() >= 1e-9 {
                return report(
                    "push-sum",
                    checked,
                    Some(format!("graph {i}, step {t}: weight sum {mass}")),
                );
            }
            if reached.is_none() {
                let z = debias(&state).expect("weights stay positive");
                if z.iter().all(|zi| (zi - &target).norm() < 1e-8) {
                    reached = Some(t);
                }
            }
            if reached.is_some() && t + 1 >= iters {
                break;
            }
        }
        if reached.is_none() {
            return report(
                "push-sum",
                checked,
                Some(format!("graph {i}: no consensus within {budget} steps")),
            );
        }
        // average dynamics with gradient steps
        let eta = 0.1;
        let z = debias(&state).expect("weights stay positive");
        let grads: Vec<DVector<f64>> = problems
            .problems
            .iter()
            .enumerate()
            .map(|(j, p)| p.stochastic_grad(&z[j], 5, j, state.t))
            .collect();
        let next = sgp_step(&state, &w, &problems, eta, 5).expect("valid step");
        let expected = state.average() - average(&grads) * eta;
        let gap = (next.average() - expected).amax();
        if gap > 1e-12 {
            return report(
                "push-sum",
                checked,
                Some(format!("graph {i}: average identity off by {gap:e}")),
            );
        }
    }
    report("push-sum", checked, None)
}

fn bridge_oracle(bases: &[BaseTopology]) -> OracleReport {
    for (i, base) in bases.iter().enumerate() {
        let g = base.graph();
        let brute: Vec<(usize, usize)> = g
            .edges()
            .into_iter()
            .filter(|&(u, v)| {
                let mut h = g.clone();
                h.remove_edge(u, v);
                !h.is_connected()
            })
            .collect();
        match bridge_decomposition(g) {
            Ok(d) if d.bridges == brute => {}
            other => {
                return report(
                    "bridges",
                    i,
                    Some(format!(
                        "graph {i}: found {other:?}, expected bridges {brute:?}"
                    )),
                )
            }
        }
    }
    report("bridges", bases.len(), None)
}

/// Smallest possible maximum degree of a spanning tree, by enumeration.
fn optimal_tree_degree(g: &UndirectedGraph) -> usize {
    let edges = g.edges();
    let n = g.n();
    let mut best = n;
    let mut chosen = Vec::with_capacity(n - 1);
    fn find(parent: &mut [usize], v: usize) -> usize {
        if parent[v] != v {
            let r = find(parent, parent[v]);
            parent[v] = r;
        }
        parent[v]
    }
    fn go(
        edges: &[(usize, usize)],
        start: usize,
        n: usize,
        chosen: &mut Vec<(usize, usize)>,
        best: &mut usize,
    ) {
        if chosen.len() == n - 1 {
            let mut parent: Vec<usize> = (0..n).collect();
            let mut deg = vec![0; n];
            for &(u, v) in chosen.iter() {
                let (a, b) = (find(&mut parent, u), find(&mut parent, v));
                if a == b {
                    return;
                }
                parent[a] = b;
                deg[u] += 1;
                deg[v] += 1;
            }
            *best = (*best).min(deg.into_iter().max().unwrap_or(0));
            return;
        }
        for k in start..edges.len() {
            if edges.len() - k < n - 1 - chosen.len() {
                break;
            }
            chosen.push(edges[k]);
            go(edges, k + 1, n, chosen, best);
            chosen.pop();
        }
    }
    if n <= 1 {
        return 0;
    }
    go(&edges, 0, n, &mut chosen, &mut best);
    best
}

fn spanning_tree_oracle<R: Rng>(rng: &mut R, count: usize) -> OracleReport {
    for i in 0..count {
        let n = rng.random_range(3..=7);
        let p = rng.random_range(0.2..0.8);
        let base = random_connected(n, p, rng).expect("valid parameters");
        let tree = match min_degree_spanning_tree(base.graph()) {
            Ok(t) => t,
            Err(e) => return report("spanning-tree", i, Some(e.to_string())),
        };
        let opt = optimal_tree_degree(base.graph());
        if !tree.is_tree() || tree.max_degree() > opt + 1 {
            return report(
                "spanning-tree",
                i,
                Some(format!(
                    "graph {i} {:?}: tree degree {} vs optimum {opt}",
                    base.graph().edges(),
                    tree.max_degree()
                )),
            );
        }
        if let Ok(obj) = degree_objective(&Digraph::bidirected(tree.graph())) {
            if obj != tree_bound(&tree) {
                return report(
                    "spanning-tree",
                    i,
                    Some(format!("graph {i}: bidirected tree objective mismatch")),
                );
            }
        }
    }
    report("spanning-tree", count, None)
}

pub fn all_passed(reports: &[OracleReport]) -> bool {
    reports.iter().all(OracleReport::passed)
}

/// Human-readable summary, one line per oracle.
pub fn format_reports(reports: &[OracleReport]) -> String {
    reports
        .iter()
        .map(|r| match &r.failure {
            None => format!("PASS {} ({} checked)\n", r.name, r.checked),
            Some(f) => format!("FAIL {} after {} checked: {f}\n", r.name, r.checked),
        })
        .collect()
}

/// Checks that `result` is self-consistent; used after loading a design
/// back from disk.
pub fn design_is_consistent(result: &DesignResult, base: &BaseTopology) -> Result<bool> {
    let cg = build_conflict_graph(&result.g_a, base)?;
    Ok(check_schedule(&result.schedule, &cg).is_ok() && result.tau == result.schedule.tau())
}
