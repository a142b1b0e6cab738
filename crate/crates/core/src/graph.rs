//! Graph representations shared by every stage of the pipeline.
//!
//! Adjacency lists are kept sorted so neighbor iteration is always in
//! ascending node order and membership queries are binary searches.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type NodeId = usize;

/// A directed link `(transmitter, receiver)`.
pub type Link = (NodeId, NodeId);

/// Distance value for unreachable pairs.
pub const UNREACHABLE: usize = usize::MAX;

fn insert_sorted(list: &mut Vec<NodeId>, v: NodeId) -> bool {
    match list.binary_search(&v) {
        Ok(_) => false,
        Err(pos) => {
            list.insert(pos, v);
            true
        }
    }
}

fn remove_sorted(list: &mut Vec<NodeId>, v: NodeId) -> bool {
    match list.binary_search(&v) {
        Ok(pos) => {
            list.remove(pos);
            true
        }
        Err(_) => false,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct UndirectedGraph {
    adj: Vec<Vec<NodeId>>,
    edge_count: usize,
}

impl UndirectedGraph {
    pub fn new(n: usize) -> Self {
        UndirectedGraph {
            adj: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    /// Builds a simple graph; duplicate edges are merged.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        let mut g = Self::new(n);
        for &(u, v) in edges {
            g.try_add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adj[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u < self.n() && self.adj[u].binary_search(&v).is_ok()
    }

    fn check(&self, u: NodeId, v: NodeId) -> Result<()> {
        let n = self.n();
        for node in [u, v] {
            if node >= n {
                return Err(Error::NodeOutOfRange { node, n });
            }
        }
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        Ok(())
    }

    /// Adds `{u, v}`; returns whether the edge is new.
    pub fn try_add_edge(&mut self, u: NodeId, v: NodeId) -> Result<bool> {
        self.check(u, v)?;
        let added = insert_sorted(&mut self.adj[u], v);
        if added {
            insert_sorted(&mut self.adj[v], u);
            self.edge_count += 1;
        }
        Ok(added)
    }

    /// Panics on out-of-range nodes or self-loops.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> bool {
        self.try_add_edge(u, v).expect("invalid edge")
    }

    pub fn remove_edge(&mut self, u: NodeId, v: NodeId) -> bool {
        if u >= self.n() || v >= self.n() {
            return false;
        }
        let removed = remove_sorted(&mut self.adj[u], v);
        if removed {
            remove_sorted(&mut self.adj[v], u);
            self.edge_count -= 1;
        }
        removed
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for (u, nbrs) in self.adj.iter().enumerate() {
            out.extend(nbrs.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    pub fn connected_components(&self) -> Vec<Vec<NodeId>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut comps = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &u in &self.adj[v] {
                    if !seen[u] {
                        seen[u] = true;
                        comp.push(u);
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.n() <= 1 || self.connected_components().len() == 1
    }

    pub(crate) fn require_connected(&self) -> Result<()> {
        let comps = self.connected_components();
        if comps.len() > 1 {
            return Err(Error::Disconnected { components: comps });
        }
        Ok(())
    }

    /// Hop distances from `src`; `UNREACHABLE` for other components.
    pub fn bfs_distances(&self, src: NodeId) -> Vec<usize> {
        let mut dist = vec![UNREACHABLE; self.n()];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            for &u in &self.adj[v] {
                if dist[u] == UNREACHABLE {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// Largest finite hop distance over all pairs.
    pub fn diameter(&self) -> Result<usize> {
        self.require_connected()?;
        Ok(all_pairs_distances(self)
            .iter()
            .flat_map(|row| row.iter().copied())
            .max()
            .unwrap_or(0))
    }
}

/// BFS from every node. Unreachable pairs hold `UNREACHABLE`.
pub fn all_pairs_distances(g: &UndirectedGraph) -> Vec<Vec<usize>> {
    (0..g.n()).map(|s| g.bfs_distances(s)).collect()
}

/// The bidirected wireless connectivity graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseTopology {
    graph: UndirectedGraph,
}

impl BaseTopology {
    /// Validates the undirected view is connected.
    pub fn from_graph(graph: UndirectedGraph) -> Result<Self> {
        if graph.n() == 0 {
            return Err(Error::Domain("topology has no nodes".into()));
        }
        graph.require_connected()?;
        Ok(BaseTopology { graph })
    }

    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        Self::from_graph(UndirectedGraph::from_edges(n, edges)?)
    }

    /// Parses the `i j` edge-list format. Node count is one past the
    /// largest index seen.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        Self::from_graph(parse_edge_list(text)?)
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Undirected view.
    pub fn graph(&self) -> &UndirectedGraph {
        &self.graph
    }

    pub fn has_link(&self, i: NodeId, j: NodeId) -> bool {
        self.graph.has_edge(i, j)
    }

    /// Maximum in/out-degree (they coincide for a bidirected graph).
    pub fn max_degree(&self) -> usize {
        self.graph.max_degree()
    }

    /// Every directed link, both orientations of each edge.
    pub fn links(&self) -> Vec<Link> {
        let mut out = Vec::with_capacity(2 * self.graph.edge_count());
        for i in 0..self.n() {
            out.extend(self.graph.neighbors(i).iter().map(|&j| (i, j)));
        }
        out
    }

    /// All links activated.
    pub fn full_digraph(&self) -> Digraph {
        Digraph::bidirected(&self.graph)
    }

    pub fn to_edge_list(&self) -> String {
        format_edge_list(&self.graph)
    }
}

/// Whitespace-separated index pairs, one per line, `#` starting a comment.
fn parse_pairs(text: &str) -> Result<Vec<(NodeId, NodeId)>> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(parse_err(format!(
                "expected two node indices, got {:?}",
                line
            )));
        }
        let mut ends = [0usize; 2];
        for (slot, field) in ends.iter_mut().zip(&fields) {
            *slot = field
                .parse()
                .map_err(|_| parse_err(format!("invalid node index {:?}", field)))?;
        }
        if ends[0] == ends[1] {
            return Err(parse_err(format!("self-loop on node {}", ends[0])));
        }
        pairs.push((ends[0], ends[1]));
    }
    Ok(pairs)
}

pub fn parse_edge_list(text: &str) -> Result<UndirectedGraph> {
    let edges = parse_pairs(text)?;
    let n = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
    UndirectedGraph::from_edges(n, &edges)
}

/// Directed links `i j`, one per line, on `n` nodes.
pub fn parse_link_list(text: &str, n: usize) -> Result<Digraph> {
    Digraph::from_links(n, &parse_pairs(text)?)
}

pub fn format_link_list(g: &Digraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} nodes, {} directed links", g.n(), g.link_count());
    for (i, j) in g.links() {
        let _ = writeln!(out, "{} {}", i, j);
    }
    out
}

pub fn format_edge_list(g: &UndirectedGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} nodes, {} edges", g.n(), g.edge_count());
    for (u, v) in g.edges() {
        let _ = writeln!(out, "{} {}", u, v);
    }
    out
}

/// A directed graph on nodes `0..n` without self-loops.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Digraph {
    out: Vec<Vec<NodeId>>,
    inc: Vec<Vec<NodeId>>,
    link_count: usize,
}

impl Digraph {
    pub fn new(n: usize) -> Self {
        Digraph {
            out: vec![Vec::new(); n],
            inc: vec![Vec::new(); n],
            link_count: 0,
        }
    }

    pub fn from_links(n: usize, links: &[Link]) -> Result<Self> {
        let mut g = Self::new(n);
        for &(i, j) in links {
            g.try_add_link(i, j)?;
        }
        Ok(g)
    }

    /// Both orientations of every edge of `g`.
    pub fn bidirected(g: &UndirectedGraph) -> Self {
        let mut d = Self::new(g.n());
        for (u, v) in g.edges() {
            d.add_link(u, v);
            d.add_link(v, u);
        }
        d
    }

    pub fn n(&self) -> usize {
        self.out.len()
    }

    pub fn link_count(&self) -> usize {
        self.link_count
    }

    pub fn try_add_link(&mut self, i: NodeId, j: NodeId) -> Result<bool> {
        let n = self.n();
        for node in [i, j] {
            if node >= n {
                return Err(Error::NodeOutOfRange { node, n });
            }
        }
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        let added = insert_sorted(&mut self.out[i], j);
        if added {
            insert_sorted(&mut self.inc[j], i);
            self.link_count += 1;
        }
        Ok(added)
    }

    /// Panics on out-of-range nodes or self-loops.
    pub fn add_link(&mut self, i: NodeId, j: NodeId) -> bool {
        self.try_add_link(i, j).expect("invalid link")
    }

    pub fn has_link(&self, i: NodeId, j: NodeId) -> bool {
        i < self.n() && self.out[i].binary_search(&j).is_ok()
    }

    pub fn out_neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.out[v]
    }

    pub fn in_neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.inc[v]
    }

    pub fn out_degree(&self, v: NodeId) -> usize {
        self.out[v].len()
    }

    pub fn in_degree(&self, v: NodeId) -> usize {
        self.inc[v].len()
    }

    /// Links in lexicographic order.
    pub fn links(&self) -> Vec<Link> {
        let mut links = Vec::with_capacity(self.link_count);
        for (i, nbrs) in self.out.iter().enumerate() {
            links.extend(nbrs.iter().map(|&j| (i, j)));
        }
        links
    }

    /// `(max out-degree, max in-degree)`, self-loops excluded.
    pub fn max_degrees(&self) -> (usize, usize) {
        let max_out = self.out.iter().map(Vec::len).max().unwrap_or(0);
        let max_in = self.inc.iter().map(Vec::len).max().unwrap_or(0);
        (max_out, max_in)
    }

    fn reach_count(adj: &[Vec<NodeId>], src: NodeId) -> usize {
        let mut seen = vec![false; adj.len()];
        seen[src] = true;
        let mut count = 1;
        let mut stack = vec![src];
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count
    }

    pub fn is_strongly_connected(&self) -> bool {
        let n = self.n();
        n <= 1 || (Self::reach_count(&self.out, 0) == n && Self::reach_count(&self.inc, 0) == n)
    }

    /// Directed hop distances from `src`.
    pub fn bfs_distances(&self, src: NodeId) -> Vec<usize> {
        let mut dist = vec![UNREACHABLE; self.n()];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            for &u in &self.out[v] {
                if dist[u] == UNREACHABLE {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// `dist[u][v]` is the directed hop count from `u` to `v`.
    pub fn distance_matrix(&self) -> Vec<Vec<usize>> {
        (0..self.n()).map(|s| self.bfs_distances(s)).collect()
    }

    /// Longest directed shortest path over ordered pairs.
    pub fn diameter(&self) -> Result<usize> {
        if !self.is_strongly_connected() {
            return Err(Error::NotStronglyConnected);
        }
        Ok((0..self.n())
            .map(|s| self.bfs_distances(s).into_iter().max().unwrap_or(0))
            .max()
            .unwrap_or(0))
    }

    /// Errors with the first link missing from `base`.
    pub fn check_compliance(&self, base: &BaseTopology) -> Result<()> {
        if self.n() != base.n() {
            return Err(Error::DimensionMismatch {
                expected: base.n(),
                got: self.n(),
            });
        }
        match self
            .links()
            .into_iter()
            .find(|&(i, j)| !base.has_link(i, j))
        {
            Some(link) => Err(Error::NonCompliantLink(link)),
            None => Ok(()),
        }
    }
}

/// Result of splitting a connected graph at its bridges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BridgeDecomposition {
    /// Vertex sets of the 2-edge-connected components, each sorted.
    pub components: Vec<Vec<NodeId>>,
    /// Non-bridge edges of each component, `(u, v)` with `u < v`.
    pub component_edges: Vec<Vec<(NodeId, NodeId)>>,
    /// Bridges as `(u, v)` with `u < v`, sorted.
    pub bridges: Vec<(NodeId, NodeId)>,
}

/// Tarjan's low-link bridge finding followed by a flood fill over
/// non-bridge edges.
pub fn bridge_decomposition(g: &UndirectedGraph) -> Result<BridgeDecomposition> {
    g.require_connected()?;
    let n = g.n();
    let mut disc = vec![UNREACHABLE; n];
    let mut low = vec![0usize; n];
    let mut bridges = Vec::new();
    let mut timer = 0;

    for root in 0..n {
        if disc[root] != UNREACHABLE {
            continue;
        }
        // (vertex, parent, next neighbor index)
        let mut stack: Vec<(NodeId, Option<NodeId>, usize)> = vec![(root, None, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (v, parent, ref mut next)) = stack.last_mut() {
            if let Some(&u) = g.neighbors(v).get(*next) {
                *next += 1;
                if Some(u) == parent {
                    continue;
                }
                if disc[u] == UNREACHABLE {
                    disc[u] = timer;
                    low[u] = timer;
                    timer += 1;
                    stack.push((u, Some(v), 0));
                } else {
                    low[v] = low[v].min(disc[u]);
                }
            } else {
                stack.pop();
                if let Some(p) = parent {
                    low[p] = low[p].min(low[v]);
                    if low[v] > disc[p] {
                        bridges.push((p.min(v), p.max(v)));
                    }
                }
            }
        }
    }
    bridges.sort_unstable();

    let mut reduced = g.clone();
    for &(u, v) in &bridges {
        reduced.remove_edge(u, v);
    }
    let components = reduced.connected_components();
    let mut comp_of = vec![0usize; n];
    for (c, verts) in components.iter().enumerate() {
        for &v in verts {
            comp_of[v] = c;
        }
    }
    let mut component_edges = vec![Vec::new(); components.len()];
    for (u, v) in reduced.edges() {
        component_edges[comp_of[u]].push((u, v));
    }
    Ok(BridgeDecomposition {
        components,
        component_edges,
        bridges,
    })
}

/// A depth-first search tree of the component containing the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DfsTree {
    pub root: NodeId,
    /// 1-based preorder numbers; `None` outside the root's component.
    pub pre: Vec<Option<usize>>,
    pub parent: Vec<Option<NodeId>>,
    /// `(parent, child)` pairs in visit order.
    pub tree_edges: Vec<(NodeId, NodeId)>,
}

impl DfsTree {
    pub fn is_tree_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.parent[v] == Some(u) || self.parent[u] == Some(v)
    }

    /// Whether `a` is `d` or lies on the tree path from `d` to the root.
    pub fn is_ancestor(&self, a: NodeId, d: NodeId) -> bool {
        let mut cur = Some(d);
        while let Some(v) = cur {
            if v == a {
                return true;
            }
            cur = self.parent[v];
        }
        false
    }
}

/// Iterative DFS visiting neighbors in ascending order.
pub fn dfs_preorder(g: &UndirectedGraph, root: NodeId) -> Result<DfsTree> {
    let n = g.n();
    if root >= n {
        return Err(Error::NodeOutOfRange { node: root, n });
    }
    let mut pre = vec![None; n];
    let mut parent = vec![None; n];
    let mut tree_edges = Vec::new();
    let mut counter = 1;
    pre[root] = Some(counter);
    let mut stack = vec![(root, 0usize)];
    while let Some(&mut (v, ref mut next)) = stack.last_mut() {
        if let Some(&u) = g.neighbors(v).get(*next) {
            *next += 1;
            if pre[u].is_none() {
                counter += 1;
                pre[u] = Some(counter);
                parent[u] = Some(v);
                tree_edges.push((v, u));
                stack.push((u, 0));
            }
        } else {
            stack.pop();
        }
    }
    Ok(DfsTree {
        root,
        pre,
        parent,
        tree_edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> UndirectedGraph {
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        UndirectedGraph::from_edges(n, &edges).unwrap()
    }

    fn complete(n: usize) -> UndirectedGraph {
        let mut g = UndirectedGraph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge(u, v);
            }
        }
        g
    }

    fn cycle3() -> Digraph {
        Digraph::from_links(3, &[(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(cycle3().diameter().unwrap(), 2);
        assert_eq!(Digraph::bidirected(&path(3)).diameter().unwrap(), 2);
        let split = Digraph::from_links(3, &[(0, 1), (1, 0)]).unwrap();
        assert!(matches!(split.diameter(), Err(Error::NotStronglyConnected)));
    }

    #[test]
    fn max_degree_examples() {
        let star = UndirectedGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(Digraph::bidirected(&star).max_degrees(), (3, 3));
        assert_eq!(cycle3().max_degrees(), (1, 1));
        assert_eq!(Digraph::new(4).max_degrees(), (0, 0));
    }

    #[test]
    fn strong_connectivity_examples() {
        assert!(cycle3().is_strongly_connected());
        let chain = Digraph::from_links(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(!chain.is_strongly_connected());
        let tree = UndirectedGraph::from_edges(5, &[(0, 1), (0, 2), (2, 3), (2, 4)]).unwrap();
        assert!(Digraph::bidirected(&tree).is_strongly_connected());
    }

    #[test]
    fn bridges_of_path_are_all_edges() {
        let d = bridge_decomposition(&path(3)).unwrap();
        assert_eq!(d.bridges, vec![(0, 1), (1, 2)]);
        assert_eq!(d.components, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn triangle_has_no_bridges() {
        let d = bridge_decomposition(&complete(3)).unwrap();
        assert!(d.bridges.is_empty());
        assert_eq!(d.components, vec![vec![0, 1, 2]]);
        assert_eq!(d.component_edges[0].len(), 3);
    }

    #[test]
    fn triangle_with_pendant() {
        // Removing c-d isolates d; removing any triangle edge leaves one component.
        let g = UndirectedGraph::from_edges(4, &[(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap();
        let d = bridge_decomposition(&g).unwrap();
        assert_eq!(d.bridges, vec![(2, 3)]);
        assert_eq!(d.components, vec![vec![0, 1, 2], vec![3]]);
    }

    #[test]
    fn bridge_decomposition_rejects_disconnected() {
        let g = UndirectedGraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(matches!(
            bridge_decomposition(&g),
            Err(Error::Disconnected { .. })
        ));
    }

    #[test]
    fn dfs_on_triangle() {
        let t = dfs_preorder(&complete(3), 0).unwrap();
        assert_eq!(t.pre, vec![Some(1), Some(2), Some(3)]);
        assert_eq!(t.tree_edges, vec![(0, 1), (1, 2)]);
        assert!(!t.is_tree_edge(0, 2));
        assert!(t.is_ancestor(0, 2));
    }

    #[test]
    fn dfs_single_vertex_and_path() {
        let t = dfs_preorder(&UndirectedGraph::new(1), 0).unwrap();
        assert_eq!(t.pre, vec![Some(1)]);
        assert!(t.tree_edges.is_empty());

        let g = path(3);
        let t = dfs_preorder(&g, 0).unwrap();
        assert_eq!(t.tree_edges, g.edges());
        assert!(matches!(
            dfs_preorder(&g, 7),
            Err(Error::NodeOutOfRange { node: 7, .. })
        ));
    }

    #[test]
    fn distances() {
        let d = all_pairs_distances(&path(3));
        assert_eq!(d[0][2], 2);
        let split = UndirectedGraph::from_edges(2, &[]).unwrap();
        assert_eq!(all_pairs_distances(&split)[0][1], UNREACHABLE);
        let k4 = all_pairs_distances(&complete(4));
        for u in 0..4 {
            for v in 0..4 {
                assert_eq!(k4[u][v], usize::from(u != v));
            }
        }
    }

    #[test]
    fn edge_list_round_trip_and_errors() {
        let text = "# windmill-ish\n0 1\n1 2 # trailing\n\n2 0\n";
        let base = BaseTopology::parse_edge_list(text).unwrap();
        assert_eq!(base.n(), 3);
        assert_eq!(base.links().len(), 6);
        let again = BaseTopology::parse_edge_list(&base.to_edge_list()).unwrap();
        assert_eq!(again, base);

        assert!(matches!(
            BaseTopology::parse_edge_list("0 1\n1 x\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            BaseTopology::parse_edge_list("0 1\n2 3\n"),
            Err(Error::Disconnected { .. })
        ));
    }

    #[test]
    fn link_list_round_trip() {
        let g = Digraph::from_links(4, &[(0, 1), (1, 0), (2, 3)]).unwrap();
        let text = format_link_list(&g);
        assert_eq!(parse_link_list(&text, 4).unwrap(), g);
        assert!(matches!(
            parse_link_list("0 7\n", 4),
            Err(Error::NodeOutOfRange { node: 7, n: 4 })
        ));
    }

    #[test]
    fn disconnected_error_names_components() {
        let err = BaseTopology::parse_edge_list("0 1\n2 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("{0, 1}") && msg.contains("{2, 3}"), "{msg}");
    }

    #[test]
    fn compliance() {
        let base = BaseTopology::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let ok = Digraph::from_links(3, &[(0, 1), (2, 1)]).unwrap();
        assert!(ok.check_compliance(&base).is_ok());
        let bad = Digraph::from_links(3, &[(0, 2)]).unwrap();
        assert!(matches!(
            bad.check_compliance(&base),
            Err(Error::NonCompliantLink((0, 2)))
        ));
    }
}
