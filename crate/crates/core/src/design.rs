//! Communication graph design: spanning tree, distance-reducing edges,
//! strongly connected orientation and cost-preserving link augmentation,
//! plus the closed-form objectives used to compare designs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    bridge_decomposition, dfs_preorder, BaseTopology, Digraph, Link, UndirectedGraph, UNREACHABLE,
};
use crate::schedule::{build_conflict_graph_with, greedy_color, Schedule, SlotOccupancy};
use crate::spanning::{
    distance_augmentation_order, min_degree_spanning_tree, with_edges, SpanningGraph, TreeStats,
};

/// A positive quantity stored by its natural logarithm.
///
/// Objective values such as `(1 + D)^(4Δ)` overflow `f64` for moderate
/// diameters, so every comparison happens on `ln`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LogValue {
    pub ln: f64,
}

impl LogValue {
    pub fn from_ln(ln: f64) -> Self {
        LogValue { ln }
    }

    /// Linear value; `inf` when it does not fit in an `f64`.
    pub fn value(&self) -> f64 {
        self.ln.exp()
    }

    pub fn log10(&self) -> f64 {
        self.ln / std::f64::consts::LN_10
    }
}

impl std::fmt::Display for LogValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let v = self.value();
        if v.is_finite() {
            write!(f, "{v:.6e}")
        } else {
            let e = self.log10();
            write!(f, "{:.6}e{}", 10f64.powf(e - e.floor()), e.floor())
        }
    }
}

/// `ln(Δ² (1 + D⁺)^(4Δ))`, the iteration-count factor of a design.
pub fn iteration_factor(diameter: usize, max_out: usize) -> LogValue {
    let d = diameter as f64;
    LogValue::from_ln(2.0 * d.ln() + 4.0 * d * (1.0 + max_out as f64).ln())
}

/// `ln(weight · Δ² (1 + D⁺)^(4Δ))`.
pub fn weighted_objective(weight: usize, diameter: usize, max_out: usize) -> LogValue {
    LogValue::from_ln((weight as f64).ln() + iteration_factor(diameter, max_out).ln)
}

/// `(D⁺ + D⁻) Δ² (1 + D⁺)^(4Δ)`: slot-count proxy times iteration factor.
pub fn degree_objective(g_a: &Digraph) -> Result<LogValue> {
    let diameter = g_a.diameter()?;
    let (max_out, max_in) = g_a.max_degrees();
    Ok(weighted_objective(max_out + max_in, diameter, max_out))
}

/// `τ Δ² (1 + D⁺)^(4Δ)`: exact slot count times iteration factor.
pub fn objective_tau_form(g_a: &Digraph, tau: usize) -> Result<LogValue> {
    let diameter = g_a.diameter()?;
    let (max_out, _) = g_a.max_degrees();
    Ok(weighted_objective(tau, diameter, max_out))
}

/// Upper bound `2 D* (Δ*)² (1 + D*)^(4Δ*)` guaranteed for the optimal `K`,
/// with `D*` and `Δ*` the spanning tree's maximum degree and diameter.
pub fn tree_bound(tree: &SpanningGraph) -> LogValue {
    let d = tree.max_degree();
    weighted_objective(2 * d, tree.diameter(), d)
}

/// Cost of cycling through `B` sub-graphs whose union is `g_a`:
/// `(Σ τ(G_t)) Δ² B (⌈D⁺/B⌉ + 1)^(4ΔB)`, with `Δ` and `D⁺` from the union.
pub fn f_of_b(
    b: usize,
    g_a: &Digraph,
    split: &[Vec<Link>],
    base: &BaseTopology,
) -> Result<LogValue> {
    if b == 0 || split.len() != b {
        return Err(Error::InvalidPartition(format!(
            "expected {b} parts, got {}",
            split.len()
        )));
    }
    let n = g_a.n();
    let mut seen = Digraph::new(n);
    let mut tau_sum = 0usize;
    for part in split {
        let mut sub = Digraph::new(n);
        for &(i, j) in part {
            if !g_a.has_link(i, j) {
                return Err(Error::InvalidPartition(format!(
                    "({i}, {j}) is not a link of the graph"
                )));
            }
            if !seen.try_add_link(i, j)? {
                return Err(Error::InvalidPartition(format!("({i}, {j}) appears twice")));
            }
            sub.add_link(i, j);
        }
        tau_sum += greedy_color(&build_conflict_graph_with(&sub, base, base.graph())?).tau();
    }
    if seen.link_count() != g_a.link_count() {
        return Err(Error::InvalidPartition(format!(
            "parts cover {} of {} links",
            seen.link_count(),
            g_a.link_count()
        )));
    }
    let diameter = g_a.diameter()? as f64;
    let (max_out, _) = g_a.max_degrees();
    let bf = b as f64;
    let per_period = (max_out as f64 / bf).ceil();
    Ok(LogValue::from_ln(
        (tau_sum as f64).ln()
            + 2.0 * diameter.ln()
            + bf.ln()
            + 4.0 * diameter * bf * (per_period + 1.0).ln(),
    ))
}

/// Orients a connected graph into a strongly connected digraph.
///
/// Inside each bridge-connected component, DFS tree edges point from
/// parent to child and back edges from descendant to ancestor. Bridges
/// are kept in both directions.
pub fn orient_edges(g: &SpanningGraph) -> Result<Digraph> {
    let graph = g.graph();
    let decomposition = bridge_decomposition(graph)?;
    let mut reduced = graph.clone();
    for &(u, v) in &decomposition.bridges {
        reduced.remove_edge(u, v);
    }
    let mut g_a = Digraph::new(graph.n());
    for &(u, v) in &decomposition.bridges {
        g_a.add_link(u, v);
        g_a.add_link(v, u);
    }
    for (component, edges) in decomposition
        .components
        .iter()
        .zip(&decomposition.component_edges)
    {
        if edges.is_empty() {
            continue;
        }
        let dfs = dfs_preorder(&reduced, component[0])?;
        for &(u, v) in edges {
            let (a, b) = if dfs.pre[u] < dfs.pre[v] {
                (u, v)
            } else {
                (v, u)
            };
            if dfs.is_tree_edge(a, b) {
                g_a.add_link(a, b);
            } else {
                g_a.add_link(b, a);
            }
        }
    }
    Ok(g_a)
}

/// Greedily activates extra links that fit an existing slot, as long as
/// the iteration factor stays within `gamma`.
///
/// Each round picks the candidate with the smallest resulting factor (ties
/// go to the lexicographically smallest link) and places it in the first
/// slot it fits. Stops when no candidate fits or the best one exceeds
/// `gamma`.
pub fn augment_links(
    g_a: &Digraph,
    schedule: &Schedule,
    base: &BaseTopology,
    gamma: LogValue,
) -> Result<(Digraph, Schedule)> {
    augment_links_with(g_a, schedule, base, base.graph(), gamma)
}

pub fn augment_links_with(
    g_a: &Digraph,
    schedule: &Schedule,
    base: &BaseTopology,
    interference: &UndirectedGraph,
    gamma: LogValue,
) -> Result<(Digraph, Schedule)> {
    g_a.check_compliance(base)?;
    let n = g_a.n();
    let mut g = g_a.clone();
    let mut sched = schedule.clone();
    let mut occ = SlotOccupancy::new(&sched, n, interference);
    let mut dist = g.distance_matrix();
    if dist.iter().flatten().any(|&d| d == UNREACHABLE) {
        return Err(Error::NotStronglyConnected);
    }
    let mut candidates: Vec<Link> = base
        .links()
        .into_iter()
        .filter(|&(i, j)| !g.has_link(i, j))
        .collect();
    let mut slot_of: Vec<Option<usize>> = candidates.iter().map(|&c| occ.first_fit(c, 0)).collect();
    let (mut max_out, _) = g.max_degrees();

    loop {
        let diameter = dist.iter().flatten().copied().max().unwrap_or(0);
        let diametral: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (0..n).map(move |v| (u, v)))
            .filter(|&(u, v)| dist[u][v] == diameter)
            .collect();

        let mut best: Option<(LogValue, usize)> = None;
        for (idx, &(i, j)) in candidates.iter().enumerate() {
            if slot_of[idx].is_none() {
                continue;
            }
            let out = max_out.max(g.out_degree(i) + 1);
            let new_diameter = diameter_with_link(&dist, diameter, &diametral, (i, j));
            let factor = iteration_factor(new_diameter, out);
            if best.is_none_or(|(f, _)| factor < f) {
                best = Some((factor, idx));
            }
        }
        let Some((factor, idx)) = best else { break };
        if factor > gamma {
            break;
        }

        let (i, j) = candidates.remove(idx);
        let slot = slot_of.remove(idx).expect("candidate had a slot");
        g.add_link(i, j);
        sched.slots[slot].push((i, j));
        occ.insert((i, j), slot);
        max_out = max_out.max(g.out_degree(i));
        for u in 0..n {
            let via = dist[u][i] + 1;
            for v in 0..n {
                let alt = via + dist[j][v];
                if alt < dist[u][v] {
                    dist[u][v] = alt;
                }
            }
        }
        for (c, s) in candidates.iter().zip(slot_of.iter_mut()) {
            if *s == Some(slot) && !occ.fits(*c, slot) {
                *s = occ.first_fit(*c, slot + 1);
            }
        }
    }
    for slot in &mut sched.slots {
        slot.sort_unstable();
    }
    Ok((g, sched))
}

/// Diameter after adding `(i, j)`, given current distances. Returns early
/// when some diametral pair is not shortened.
fn diameter_with_link(
    dist: &[Vec<usize>],
    diameter: usize,
    diametral: &[(usize, usize)],
    (i, j): Link,
) -> usize {
    if diametral
        .iter()
        .any(|&(u, v)| dist[u][i] + 1 + dist[j][v] >= diameter)
    {
        return diameter;
    }
    let n = dist.len();
    let mut best = 0;
    for u in 0..n {
        let via = dist[u][i] + 1;
        for v in 0..n {
            best = best.max(dist[u][v].min(via + dist[j][v]));
        }
    }
    best
}

/// Output of the full design pipeline.
#[derive(Clone, Debug)]
pub struct DesignResult {
    pub k: usize,
    pub skip_step4: bool,
    pub tree: TreeStats,
    pub g_a: Digraph,
    pub schedule: Schedule,
    pub tau: usize,
    pub delta: f64,
    pub diameter: usize,
    pub max_out: usize,
    pub max_in: usize,
    pub degree_objective: LogValue,
    pub objective_tau_form: LogValue,
    /// Iteration factor of the orientation step's graph; the ceiling that
    /// augmentation respects.
    pub gamma: LogValue,
    /// Link count before augmentation.
    pub oriented_links: usize,
}

/// Serializable summary of a [`DesignResult`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub n: usize,
    pub links: Vec<Link>,
    pub schedule: Schedule,
    pub tau: usize,
    pub diameter: usize,
    pub max_out: usize,
    pub max_in: usize,
    pub delta: f64,
    pub log_objective: f64,
    pub log_objective_tau_form: f64,
    pub log_gamma: f64,
    pub tree: TreeStats,
    pub oriented_links: usize,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub k: usize,
    pub skip_step4: bool,
    pub seed: Option<u64>,
}

impl DesignResult {
    pub fn report(&self, seed: Option<u64>) -> DesignReport {
        DesignReport {
            n: self.g_a.n(),
            links: self.g_a.links(),
            schedule: self.schedule.clone(),
            tau: self.tau,
            diameter: self.diameter,
            max_out: self.max_out,
            max_in: self.max_in,
            delta: self.delta,
            log_objective: self.degree_objective.ln,
            log_objective_tau_form: self.objective_tau_form.ln,
            log_gamma: self.gamma.ln,
            tree: self.tree,
            oriented_links: self.oriented_links,
            provenance: Provenance {
                k: self.k,
                skip_step4: self.skip_step4,
                seed,
            },
        }
    }
}

/// Runs the full pipeline with `k` distance-reducing edges.
pub fn design_graph(base: &BaseTopology, k: usize, skip_step4: bool) -> Result<DesignResult> {
    design_graph_with(base, base.graph(), k, skip_step4)
}

/// Same as [`design_graph`] with a separate interference graph for
/// scheduling.
pub fn design_graph_with(
    base: &BaseTopology,
    interference: &UndirectedGraph,
    k: usize,
    skip_step4: bool,
) -> Result<DesignResult> {
    let tree = min_degree_spanning_tree(base.graph())?;
    let order = distance_augmentation_order(&tree, base.graph(), k)?;
    if order.len() < k {
        return Err(Error::AddsExhausted {
            added: order.len(),
            requested: k,
        });
    }
    finish_design(base, interference, &tree, &order, skip_step4)
}

fn finish_design(
    base: &BaseTopology,
    interference: &UndirectedGraph,
    tree: &SpanningGraph,
    extra: &[(usize, usize)],
    skip_step4: bool,
) -> Result<DesignResult> {
    if interference.n() != base.n() {
        return Err(Error::DimensionMismatch {
            expected: base.n(),
            got: interference.n(),
        });
    }
    let working = with_edges(tree, extra)?;
    let oriented = orient_edges(&working)?;
    let schedule = greedy_color(&build_conflict_graph_with(&oriented, base, interference)?);
    let (out0, _) = oriented.max_degrees();
    let gamma = iteration_factor(oriented.diameter()?, out0);
    let oriented_links = oriented.link_count();

    let (g_a, schedule) = if skip_step4 {
        (oriented, schedule)
    } else {
        augment_links_with(&oriented, &schedule, base, interference, gamma)?
    };
    let diameter = g_a.diameter()?;
    let (max_out, max_in) = g_a.max_degrees();
    let tau = schedule.tau();
    Ok(DesignResult {
        k: extra.len(),
        skip_step4,
        tree: TreeStats::from(tree),
        tau,
        delta: 1.0 / (max_out as f64 + 1.0),
        diameter,
        max_out,
        max_in,
        degree_objective: weighted_objective(max_out + max_in, diameter, max_out),
        objective_tau_form: weighted_objective(tau, diameter, max_out),
        gamma,
        oriented_links,
        g_a,
        schedule,
    })
}

/// Designs for every `K` in `0..=k_max` and the objective-minimizing one.
#[derive(Clone, Debug)]
pub struct Sweep {
    pub tree: SpanningGraph,
    /// Designs indexed by `K`.
    pub results: Vec<DesignResult>,
    pub best_k: usize,
}

impl Sweep {
    pub fn best(&self) -> &DesignResult {
        &self.results[self.best_k]
    }
}

/// Sweeps `K` from 0 to `k_max`, clamped to the number of edges the base
/// topology can contribute. `K*` minimizes the final design's objective,
/// ties going to the smallest `K`.
pub fn sweep_k(base: &BaseTopology, k_max: usize, skip_step4: bool) -> Result<Sweep> {
    sweep_k_with(base, base.graph(), k_max, skip_step4)
}

pub fn sweep_k_with(
    base: &BaseTopology,
    interference: &UndirectedGraph,
    k_max: usize,
    skip_step4: bool,
) -> Result<Sweep> {
    let tree = min_degree_spanning_tree(base.graph())?;
    // Step 2 is greedy, so the first K edges of the longest run are the
    // edges chosen for any smaller K.
    let order = distance_augmentation_order(&tree, base.graph(), k_max)?;
    let results = (0..=order.len())
        .into_par_iter()
        .map(|k| finish_design(base, interference, &tree, &order[..k], skip_step4))
        .collect::<Result<Vec<_>>>()?;
    let best_k = results.iter().enumerate().fold(0, |best, (k, r)| {
        if r.degree_objective < results[best].degree_objective {
            k
        } else {
            best
        }
    });
    Ok(Sweep {
        tree,
        results,
        best_k,
    })
}

/// Default sweep range: one candidate per node, at most.
pub fn default_k_max(base: &BaseTopology) -> usize {
    let tree_edges = base.n().saturating_sub(1);
    (base.graph().edge_count() - tree_edges).min(base.n())
}
