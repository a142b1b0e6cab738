//! Broadcast cost model: which directed links may share a transmission
//! slot, and collision-free slot assignments for an activated graph.
//!
//! Two links `(i, j)` and `(k, l)` conflict when they break the
//! half-duplex rule (`i == l` or `j == k`) or, for distinct transmitters,
//! when the receiver of one hears the transmitter of the other
//! (`(i, l)` or `(k, j)` in the interference graph). Links that share a
//! transmitter are one broadcast and never conflict.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BaseTopology, Digraph, Link, UndirectedGraph};

/// Pairwise conflict relation. Irreflexive and symmetric.
pub fn conflicts(a: Link, b: Link, interference: &UndirectedGraph) -> bool {
    if a == b {
        return false;
    }
    let ((i, j), (k, l)) = (a, b);
    if i == l || j == k {
        return true;
    }
    i != k && (interference.has_edge(i, l) || interference.has_edge(k, j))
}

/// Conflict graph over the activated links.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConflictGraph {
    links: Vec<Link>,
    adj: Vec<Vec<usize>>,
}

impl ConflictGraph {
    /// Builds a conflict graph from explicit vertex pairs (indices into
    /// `links`). Used for abstract instances in tests and oracles.
    pub fn from_parts(links: Vec<Link>, edges: &[(usize, usize)]) -> Result<Self> {
        let m = links.len();
        let mut adj = vec![Vec::new(); m];
        for &(a, b) in edges {
            if a >= m || b >= m {
                return Err(Error::NodeOutOfRange {
                    node: a.max(b),
                    n: m,
                });
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(ConflictGraph { links, adj })
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn vertex_count(&self) -> usize {
        self.links.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Indices of links conflicting with link `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn index_of(&self, link: Link) -> Option<usize> {
        self.links.binary_search(&link).ok()
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }
}

/// Conflict graph of `g_a`, using the base topology as interference graph.
pub fn build_conflict_graph(g_a: &Digraph, base: &BaseTopology) -> Result<ConflictGraph> {
    build_conflict_graph_with(g_a, base, base.graph())
}

/// Conflict graph of `g_a` under a separate interference graph.
///
/// Conflicting partners of `(i, j)` are gathered from adjacency instead of
/// testing all pairs: links into `i`, links out of `j`, links into
/// interference-neighbors of `i` and links out of interference-neighbors
/// of `j`. Each gathered candidate is then confirmed with [`conflicts`].
pub fn build_conflict_graph_with(
    g_a: &Digraph,
    base: &BaseTopology,
    interference: &UndirectedGraph,
) -> Result<ConflictGraph> {
    g_a.check_compliance(base)?;
    if interference.n() != g_a.n() {
        return Err(Error::DimensionMismatch {
            expected: g_a.n(),
            got: interference.n(),
        });
    }
    let links = g_a.links();
    let n = g_a.n();
    // links are sorted, so the out-links of node i occupy a contiguous range
    let mut offset = vec![0usize; n + 1];
    for i in 0..n {
        offset[i + 1] = offset[i] + g_a.out_degree(i);
    }
    let index = |(i, j): Link| offset[i] + g_a.out_neighbors(i).binary_search(&j).unwrap();

    let mut adj = vec![Vec::new(); links.len()];
    let mut mark = vec![usize::MAX; links.len()];
    for (a, &(i, j)) in links.iter().enumerate() {
        let mut consider = |b: usize, adj_a: &mut Vec<usize>| {
            if b != a && mark[b] != a {
                mark[b] = a;
                if conflicts(links[a], links[b], interference) {
                    adj_a.push(b);
                }
            }
        };
        let mut list = Vec::new();
        for &k in g_a.in_neighbors(i) {
            consider(index((k, i)), &mut list);
        }
        for &l in g_a.out_neighbors(j) {
            consider(index((j, l)), &mut list);
        }
        for &l in interference.neighbors(i) {
            for &k in g_a.in_neighbors(l) {
                consider(index((k, l)), &mut list);
            }
        }
        for &k in interference.neighbors(j) {
            for &l in g_a.out_neighbors(k) {
                consider(index((k, l)), &mut list);
            }
        }
        list.sort_unstable();
        adj[a] = list;
    }
    Ok(ConflictGraph { links, adj })
}

/// Slot assignment; slot `s` (0-based here, reported 1-based) holds links
/// scheduled in parallel.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule {
    pub slots: Vec<Vec<Link>>,
}

impl Schedule {
    pub fn tau(&self) -> usize {
        self.slots.len()
    }

    pub fn link_count(&self) -> usize {
        self.slots.iter().map(Vec::len).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// First-fit coloring in order of descending conflict degree, ties by
/// link order. Never uses more than `max_degree + 1` slots.
pub fn greedy_color(cg: &ConflictGraph) -> Schedule {
    let m = cg.vertex_count();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| cg.degree(b).cmp(&cg.degree(a)).then(a.cmp(&b)));
    let mut color = vec![usize::MAX; m];
    let mut used = Vec::new();
    let mut colors = 0;
    for &v in &order {
        used.clear();
        used.resize(colors + 1, false);
        for &u in cg.neighbors(v) {
            if color[u] < used.len() {
                used[color[u]] = true;
            }
        }
        let c = used.iter().position(|&taken| !taken).unwrap_or(colors);
        color[v] = c;
        colors = colors.max(c + 1);
    }
    let mut slots = vec![Vec::new(); colors];
    for (v, &c) in color.iter().enumerate() {
        slots[c].push(cg.links()[v]);
    }
    Schedule { slots }
}

/// Largest conflict graph accepted by [`brute_force_chromatic`].
pub const CHROMATIC_LIMIT: usize = 14;

/// Exact chromatic number by backtracking over `k = 1, 2, ...`.
pub fn brute_force_chromatic(cg: &ConflictGraph) -> Result<usize> {
    let m = cg.vertex_count();
    if m > CHROMATIC_LIMIT {
        return Err(Error::TooLarge {
            size: m,
            limit: CHROMATIC_LIMIT,
        });
    }
    if m == 0 {
        return Ok(0);
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(cg.degree(v)));

    fn extend(
        cg: &ConflictGraph,
        order: &[usize],
        pos: usize,
        k: usize,
        color: &mut [usize],
    ) -> bool {
        if pos == order.len() {
            return true;
        }
        let v = order[pos];
        // symmetry breaking: never open more than one fresh color at a time
        let highest = order[..pos]
            .iter()
            .map(|&u| color[u] + 1)
            .max()
            .unwrap_or(0);
        for c in 0..k.min(highest + 1) {
            if cg.neighbors(v).iter().all(|&u| color[u] != c) {
                color[v] = c;
                if extend(cg, order, pos + 1, k, color) {
                    return true;
                }
                color[v] = usize::MAX;
            }
        }
        false
    }

    for k in 1..=m {
        let mut color = vec![usize::MAX; m];
        if extend(cg, &order, 0, k, &mut color) {
            return Ok(k);
        }
    }
    Ok(m)
}

/// Upper bound `(D + 1)(D_a^+ + D_a^-)` on the conflict-graph degree,
/// with `D` the base topology's maximum degree.
pub fn dc_bound(g_a: &Digraph, base: &BaseTopology) -> usize {
    let (max_out, max_in) = g_a.max_degrees();
    (base.max_degree() + 1) * (max_out + max_in)
}

/// Why a schedule is not a valid slot assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScheduleViolation {
    Conflict { slot: usize, a: Link, b: Link },
    Missing(Link),
    Duplicate(Link),
    Unknown(Link),
}

impl std::fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScheduleViolation::Conflict { slot, a, b } => write!(
                f,
                "slot {} holds conflicting links ({}, {}) and ({}, {})",
                slot + 1,
                a.0,
                a.1,
                b.0,
                b.1
            ),
            ScheduleViolation::Missing(l) => {
                write!(f, "link ({}, {}) is never scheduled", l.0, l.1)
            }
            ScheduleViolation::Duplicate(l) => {
                write!(f, "link ({}, {}) is scheduled more than once", l.0, l.1)
            }
            ScheduleViolation::Unknown(l) => {
                write!(f, "link ({}, {}) is not an activated link", l.0, l.1)
            }
        }
    }
}

/// Exhaustive pairwise check that `s` partitions the conflict graph's
/// links into independent sets.
pub fn check_schedule(
    s: &Schedule,
    cg: &ConflictGraph,
) -> std::result::Result<(), ScheduleViolation> {
    let mut seen = vec![false; cg.vertex_count()];
    for (slot, links) in s.slots.iter().enumerate() {
        let mut idx = Vec::with_capacity(links.len());
        for &l in links {
            let v = cg.index_of(l).ok_or(ScheduleViolation::Unknown(l))?;
            if std::mem::replace(&mut seen[v], true) {
                return Err(ScheduleViolation::Duplicate(l));
            }
            idx.push(v);
        }
        for (p, &a) in idx.iter().enumerate() {
            for &b in &idx[p + 1..] {
                if cg.are_adjacent(a, b) {
                    return Err(ScheduleViolation::Conflict {
                        slot,
                        a: cg.links()[a],
                        b: cg.links()[b],
                    });
                }
            }
        }
    }
    match seen.iter().position(|&s| !s) {
        Some(v) => Err(ScheduleViolation::Missing(cg.links()[v])),
        None => Ok(()),
    }
}

pub fn validate_schedule(s: &Schedule, cg: &ConflictGraph) -> bool {
    check_schedule(s, cg).is_ok()
}

/// Per-slot transmitter/receiver counts so a candidate link can be tested
/// against a slot in `O(deg)` instead of against every resident link.
pub(crate) struct SlotOccupancy<'a> {
    interference: &'a UndirectedGraph,
    tx: Vec<Vec<u32>>,
    rx: Vec<Vec<u32>>,
    slot_of: HashMap<Link, usize>,
}

impl<'a> SlotOccupancy<'a> {
    pub(crate) fn new(schedule: &Schedule, n: usize, interference: &'a UndirectedGraph) -> Self {
        let mut occ = SlotOccupancy {
            interference,
            tx: vec![vec![0; n]; schedule.tau()],
            rx: vec![vec![0; n]; schedule.tau()],
            slot_of: HashMap::new(),
        };
        for (s, links) in schedule.slots.iter().enumerate() {
            for &l in links {
                occ.insert(l, s);
            }
        }
        occ
    }

    pub(crate) fn insert(&mut self, (i, j): Link, s: usize) {
        self.tx[s][i] += 1;
        self.rx[s][j] += 1;
        self.slot_of.insert((i, j), s);
    }

    fn resident(&self, link: Link, s: usize) -> bool {
        self.slot_of.get(&link) == Some(&s)
    }

    /// Whether `(i, j)` conflicts with no link already in slot `s`.
    pub(crate) fn fits(&self, (i, j): Link, s: usize) -> bool {
        let (tx, rx) = (&self.tx[s], &self.rx[s]);
        if rx[i] > 0 || tx[j] > 0 {
            return false;
        }
        // a resident (k, l) with k != i and l adjacent to i
        for &l in self.interference.neighbors(i) {
            let own = u32::from(self.resident((i, l), s));
            if rx[l] > own {
                return false;
            }
        }
        // a resident transmitter k != i adjacent to j
        self.interference
            .neighbors(j)
            .iter()
            .all(|&k| k == i || tx[k] == 0)
    }

    pub(crate) fn first_fit(&self, link: Link, from: usize) -> Option<usize> {
        (from..self.tx.len()).find(|&s| self.fits(link, s))
    }
}
