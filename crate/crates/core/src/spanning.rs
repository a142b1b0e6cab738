//! Spanning structures for the first two design steps: an approximate
//! minimum-degree spanning tree, then greedy diameter-reducing edges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{all_pairs_distances, NodeId, UndirectedGraph};

/// A connected spanning subgraph, optionally known to be a tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanningGraph {
    graph: UndirectedGraph,
    is_tree: bool,
}

impl SpanningGraph {
    /// Wraps a connected graph; `is_tree` is derived from the edge count.
    pub fn new(graph: UndirectedGraph) -> Result<Self> {
        graph.require_connected()?;
        let is_tree = graph.edge_count() + 1 == graph.n();
        Ok(SpanningGraph { graph, is_tree })
    }

    pub fn graph(&self) -> &UndirectedGraph {
        &self.graph
    }

    pub fn into_graph(self) -> UndirectedGraph {
        self.graph
    }

    pub fn is_tree(&self) -> bool {
        self.is_tree
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.graph.edges()
    }

    pub fn max_degree(&self) -> usize {
        self.graph.max_degree()
    }

    pub fn diameter(&self) -> usize {
        self.graph
            .diameter()
            .expect("spanning graphs are connected")
    }
}

/// Summary of a spanning tree used in reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStats {
    pub max_degree: usize,
    pub diameter: usize,
}

impl From<&SpanningGraph> for TreeStats {
    fn from(t: &SpanningGraph) -> Self {
        TreeStats {
            max_degree: t.max_degree(),
            diameter: t.diameter(),
        }
    }
}

fn bfs_spanning_tree(g: &UndirectedGraph) -> UndirectedGraph {
    let n = g.n();
    let mut tree = UndirectedGraph::new(n);
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    if n > 0 {
        seen[0] = true;
        queue.push_back(0);
    }
    while let Some(v) = queue.pop_front() {
        for &u in g.neighbors(v) {
            if !seen[u] {
                seen[u] = true;
                tree.add_edge(v, u);
                queue.push_back(u);
            }
        }
    }
    tree
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Parent/depth arrays of a tree rooted at node 0.
struct Rooted {
    parent: Vec<usize>,
    depth: Vec<usize>,
}

impl Rooted {
    fn new(tree: &UndirectedGraph) -> Self {
        let n = tree.n();
        let mut parent = vec![usize::MAX; n];
        let mut depth = vec![0; n];
        if n == 0 {
            return Rooted { parent, depth };
        }
        parent[0] = 0;
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            for &u in tree.neighbors(v) {
                if parent[u] == usize::MAX {
                    parent[u] = v;
                    depth[u] = depth[v] + 1;
                    stack.push(u);
                }
            }
        }
        Rooted { parent, depth }
    }

    /// Vertices on the tree path from `u` to `v`, inclusive.
    fn path(&self, mut u: usize, mut v: usize) -> Vec<usize> {
        let mut front = Vec::new();
        let mut back = Vec::new();
        while self.depth[u] > self.depth[v] {
            front.push(u);
            u = self.parent[u];
        }
        while self.depth[v] > self.depth[u] {
            back.push(v);
            v = self.parent[v];
        }
        while u != v {
            front.push(u);
            back.push(v);
            u = self.parent[u];
            v = self.parent[v];
        }
        front.push(u);
        front.extend(back.into_iter().rev());
        front
    }
}

enum Phase {
    Improved,
    Changed,
    Stuck,
}

/// Local-improvement state for one round at maximum degree `k`.
struct Improver<'a> {
    g: &'a UndirectedGraph,
    tree: &'a mut UndirectedGraph,
    k: usize,
    via: Vec<Option<(NodeId, NodeId)>>,
    swaps: &'a mut usize,
}

impl Improver<'_> {
    /// Adds `(u, v)` and drops the cycle edge at `w`, first unloading any
    /// endpoint that would otherwise reach degree `k`.
    fn apply(&mut self, w: NodeId, (u, v): (NodeId, NodeId)) -> bool {
        for x in [u, v] {
            if self.tree.degree(x) + 1 >= self.k {
                match self.via[x].take() {
                    Some(edge) => {
                        if !self.apply(x, edge) {
                            return false;
                        }
                    }
                    None => return false,
                }
            }
        }
        if self.tree.has_edge(u, v) {
            return false;
        }
        let path = Rooted::new(self.tree).path(u, v);
        let Some(pos) = path.iter().position(|&x| x == w) else {
            return false;
        };
        if pos == 0 || pos + 1 == path.len() {
            return false;
        }
        self.tree.remove_edge(w, path[pos + 1]);
        self.tree.add_edge(u, v);
        *self.swaps += 1;
        true
    }

    fn run(&mut self) -> Phase {
        let n = self.g.n();
        let k = self.k;
        let start_degree: Vec<usize> = (0..n).map(|v| self.tree.degree(v)).collect();
        let mut good: Vec<bool> = start_degree.iter().map(|&d| d + 2 <= k).collect();
        let mut uf = UnionFind::new(n);
        for (a, b) in self.tree.edges() {
            if good[a] && good[b] {
                uf.union(a, b);
            }
        }
        let rooted = Rooted::new(self.tree);
        let candidates: Vec<(NodeId, NodeId)> = self
            .g
            .edges()
            .into_iter()
            .filter(|&(a, b)| !self.tree.has_edge(a, b))
            .collect();

        loop {
            let mut merged = false;
            for &(u, v) in &candidates {
                if !good[u] || !good[v] || uf.find(u) == uf.find(v) {
                    continue;
                }
                let path = rooted.path(u, v);
                if let Some(&w) = path.iter().find(|&&x| !good[x] && start_degree[x] == k) {
                    return if self.apply(w, (u, v)) {
                        Phase::Improved
                    } else {
                        Phase::Changed
                    };
                }
                for &x in &path {
                    if !good[x] {
                        good[x] = true;
                        self.via[x] = Some((u, v));
                        for &y in self.tree.neighbors(x) {
                            if good[y] {
                                uf.union(x, y);
                            }
                        }
                    }
                }
                for pair in path.windows(2) {
                    uf.union(pair[0], pair[1]);
                }
                merged = true;
            }
            if !merged {
                return Phase::Stuck;
            }
        }
    }
}

/// Approximate minimum-degree spanning tree by Fürer–Raghavachari local
/// improvement, started from a BFS tree rooted at node 0.
///
/// At the fixpoint no edge joins two components of the forest left after
/// deleting every vertex of degree `k` or `k - 1`, which bounds the
/// maximum degree by the optimum plus one.
pub fn min_degree_spanning_tree(g: &UndirectedGraph) -> Result<SpanningGraph> {
    g.require_connected()?;
    let n = g.n();
    let mut tree = bfs_spanning_tree(g);
    let cap = n.saturating_mul(g.edge_count()).max(1);
    let mut swaps = 0usize;
    let mut stalled = 0usize;
    while swaps < cap {
        let k = tree.max_degree();
        if k <= 2 {
            break;
        }
        let phase = Improver {
            g,
            tree: &mut tree,
            k,
            via: vec![None; n],
            swaps: &mut swaps,
        }
        .run();
        match phase {
            Phase::Improved => stalled = 0,
            Phase::Changed => {
                // Partial propagation still leaves a valid tree; retry, but
                // never spin without progress.
                stalled += 1;
                if stalled > n {
                    break;
                }
            }
            Phase::Stuck => break,
        }
    }
    debug_assert_eq!(tree.edge_count() + 1, n);
    SpanningGraph::new(tree)
}

fn check_spanning(t: &SpanningGraph, g_u: &UndirectedGraph) -> Result<()> {
    if t.n() != g_u.n() {
        return Err(Error::DimensionMismatch {
            expected: g_u.n(),
            got: t.n(),
        });
    }
    if let Some((u, v)) = t.edges().into_iter().find(|&(u, v)| !g_u.has_edge(u, v)) {
        return Err(Error::NonCompliantLink((u, v)));
    }
    Ok(())
}

/// Greedy order in which non-tree base edges get added: each step picks
/// the candidate whose endpoints are farthest apart in the current working
/// graph, smallest `(u, v)` on ties. Stops after `k_max` edges or when the
/// candidates run out.
pub fn distance_augmentation_order(
    t: &SpanningGraph,
    g_u: &UndirectedGraph,
    k_max: usize,
) -> Result<Vec<(NodeId, NodeId)>> {
    check_spanning(t, g_u)?;
    let mut dist = all_pairs_distances(t.graph());
    let mut remaining: Vec<(NodeId, NodeId)> = g_u
        .edges()
        .into_iter()
        .filter(|&(u, v)| !t.graph().has_edge(u, v))
        .collect();
    let n = t.n();
    let mut order = Vec::new();
    while order.len() < k_max && !remaining.is_empty() {
        // `remaining` is sorted, so the first maximum is the lexicographic tie-break.
        let mut best = 0;
        for (idx, &(u, v)) in remaining.iter().enumerate() {
            let (bu, bv) = remaining[best];
            if dist[u][v] > dist[bu][bv] {
                best = idx;
            }
        }
        let (a, b) = remaining.remove(best);
        order.push((a, b));
        for x in 0..n {
            let (xa, xb) = (dist[x][a], dist[x][b]);
            for y in 0..n {
                let via_ab = xa + 1 + dist[b][y];
                let via_ba = xb + 1 + dist[a][y];
                let best = dist[x][y].min(via_ab).min(via_ba);
                dist[x][y] = best;
            }
        }
    }
    Ok(order)
}

/// Adds exactly `k` diameter-reducing base edges to `t`.
pub fn add_k_edges(t: &SpanningGraph, g_u: &UndirectedGraph, k: usize) -> Result<SpanningGraph> {
    let order = distance_augmentation_order(t, g_u, k)?;
    if order.len() < k {
        return Err(Error::AddsExhausted {
            added: order.len(),
            requested: k,
        });
    }
    with_edges(t, &order)
}

pub(crate) fn with_edges(t: &SpanningGraph, extra: &[(NodeId, NodeId)]) -> Result<SpanningGraph> {
    let mut graph = t.graph().clone();
    for &(u, v) in extra {
        graph.try_add_edge(u, v)?;
    }
    SpanningGraph::new(graph)
}
