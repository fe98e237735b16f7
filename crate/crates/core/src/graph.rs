//! Directed graphs for patterns and targets, plus the handful of undirected
//! analyses the solver needs (components, forest test, degree statistics).

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("node id {id} out of range for graph with {node_count} nodes")]
    NodeOutOfRange { id: usize, node_count: usize },
    #[error("self-loop on node {0} is not permitted")]
    SelfLoop(usize),
    #[error("duplicate arc ({0}, {1})")]
    DuplicateArc(usize, usize),
    #[error("empty graph")]
    Empty,
    #[error("graph is not connected over the requested nodes")]
    Disconnected,
}

/// A simple directed graph over dense node ids `0..node_count`.
///
/// Successor and predecessor lists are kept sorted; each node also carries a
/// successor and a predecessor bit row so that arc tests and domain
/// intersections are word operations.
#[derive(Debug, Clone)]
pub struct DirectedGraph {
    node_count: usize,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
    out_rows: Vec<FixedBitSet>,
    in_rows: Vec<FixedBitSet>,
    arc_count: usize,
    allow_self_loops: bool,
}

impl PartialEq for DirectedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.node_count == other.node_count && self.out_adj == other.out_adj
    }
}

impl Eq for DirectedGraph {}

impl DirectedGraph {
    pub fn new(node_count: usize) -> Self {
        Self::with_self_loops(node_count, false)
    }

    pub fn with_self_loops(node_count: usize, allow_self_loops: bool) -> Self {
        DirectedGraph {
            node_count,
            out_adj: vec![Vec::new(); node_count],
            in_adj: vec![Vec::new(); node_count],
            out_rows: vec![FixedBitSet::with_capacity(node_count); node_count],
            in_rows: vec![FixedBitSet::with_capacity(node_count); node_count],
            arc_count: 0,
            allow_self_loops,
        }
    }

    /// Builds a graph from an arc list, rejecting duplicates and self-loops.
    pub fn from_arcs<I>(node_count: usize, arcs: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = DirectedGraph::new(node_count);
        for (u, v) in arcs {
            g.add_arc(u, v)?;
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn arc_count(&self) -> usize {
        self.arc_count
    }

    fn check_node(&self, id: usize) -> Result<(), GraphError> {
        if id >= self.node_count {
            Err(GraphError::NodeOutOfRange {
                id,
                node_count: self.node_count,
            })
        } else {
            Ok(())
        }
    }

    pub fn add_arc(&mut self, u: usize, v: usize) -> Result<(), GraphError> {
        self.check_node(u)?;
        self.check_node(v)?;
        if u == v && !self.allow_self_loops {
            return Err(GraphError::SelfLoop(u));
        }
        if self.out_rows[u].contains(v) {
            return Err(GraphError::DuplicateArc(u, v));
        }
        self.out_rows[u].insert(v);
        self.in_rows[v].insert(u);
        let pos = self.out_adj[u].partition_point(|&x| x < v);
        self.out_adj[u].insert(pos, v);
        let pos = self.in_adj[v].partition_point(|&x| x < u);
        self.in_adj[v].insert(pos, u);
        self.arc_count += 1;
        Ok(())
    }

    /// Adds the arc unless it is already present. Returns whether it was added.
    pub fn add_arc_if_absent(&mut self, u: usize, v: usize) -> Result<bool, GraphError> {
        match self.add_arc(u, v) {
            Ok(()) => Ok(true),
            Err(GraphError::DuplicateArc(..)) => Ok(false),
            Err(e) => Err(e),
        }
    }

    #[inline]
    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        self.out_rows[u].contains(v)
    }

    #[inline]
    pub fn successors(&self, u: usize) -> &[usize] {
        &self.out_adj[u]
    }

    #[inline]
    pub fn predecessors(&self, v: usize) -> &[usize] {
        &self.in_adj[v]
    }

    /// Successor set of `u` as a bit row over node ids.
    #[inline]
    pub fn successor_row(&self, u: usize) -> &FixedBitSet {
        &self.out_rows[u]
    }

    /// Predecessor set of `v` as a bit row over node ids.
    #[inline]
    pub fn predecessor_row(&self, v: usize) -> &FixedBitSet {
        &self.in_rows[v]
    }

    pub fn out_degree(&self, u: usize) -> usize {
        self.out_adj[u].len()
    }

    pub fn in_degree(&self, u: usize) -> usize {
        self.in_adj[u].len()
    }

    /// All arcs, sorted by `(src, dst)`.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(u, succ)| succ.iter().map(move |&v| (u, v)))
    }

    /// Graph obtained by renaming node `u` to `perm[u]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self, GraphError> {
        assert_eq!(perm.len(), self.node_count, "permutation length mismatch");
        let mut g = DirectedGraph::with_self_loops(self.node_count, self.allow_self_loops);
        for (u, v) in self.arcs() {
            g.add_arc(perm[u], perm[v])?;
        }
        Ok(g)
    }

    pub fn undirected(&self) -> UndirectedView {
        UndirectedView::new(self)
    }
}

/// Undirected reading of a directed graph: `{u, v}` is an edge iff `(u, v)` or
/// `(v, u)` is an arc. Neighbor lists hold distinct neighbors in ascending
/// order; self-loops are dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedView {
    neighbors: Vec<Vec<usize>>,
    edge_count: usize,
}

impl UndirectedView {
    pub fn new(g: &DirectedGraph) -> Self {
        let n = g.node_count();
        let mut neighbors = Vec::with_capacity(n);
        let mut edge_count = 0;
        for u in 0..n {
            let mut nb: Vec<usize> = g
                .successors(u)
                .iter()
                .chain(g.predecessors(u))
                .copied()
                .filter(|&v| v != u)
                .collect();
            nb.sort_unstable();
            nb.dedup();
            edge_count += nb.len();
            neighbors.push(nb);
        }
        UndirectedView {
            neighbors,
            edge_count: edge_count / 2,
        }
    }

    /// Builds a view directly from undirected edges; duplicates and loops are ignored.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = DirectedGraph::new(node_count);
        for (u, v) in edges {
            if u == v {
                continue;
            }
            g.add_arc_if_absent(u, v)?;
        }
        Ok(UndirectedView::new(&g))
    }

    pub fn node_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    #[inline]
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.neighbors[u].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors[u].binary_search(&v).is_ok()
    }

    /// Each undirected edge once, as `(min, max)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(u, nb)| nb.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    pub fn all_nodes(&self) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(self.node_count());
        s.insert_range(..);
        s
    }
}

/// Connected components of the subgraph induced by `active`.
///
/// Components are listed in order of their smallest node; nodes within a
/// component are sorted ascending.
pub fn connected_components(g: &UndirectedView, active: &FixedBitSet) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let mut seen = FixedBitSet::with_capacity(n);
    let mut components = Vec::new();
    let mut queue = VecDeque::new();
    for start in active.ones() {
        if seen.contains(start) {
            continue;
        }
        seen.insert(start);
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(u) = queue.pop_front() {
            comp.push(u);
            for &v in g.neighbors(u) {
                if active.contains(v) && !seen.contains(v) {
                    seen.insert(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components
}

/// True iff the subgraph induced by `active` is a forest.
pub fn is_singly_connected(g: &UndirectedView, active: &FixedBitSet) -> bool {
    let nodes = active.count_ones(..);
    let edges: usize = active
        .ones()
        .map(|u| {
            g.neighbors(u)
                .iter()
                .filter(|&&v| v > u && active.contains(v))
                .count()
        })
        .sum();
    let components = connected_components(g, active).len();
    edges + components == nodes
}

/// How per-node degree is measured for statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegreeConvention {
    /// Distinct undirected neighbors; an antiparallel pair counts once.
    #[default]
    DistinctNeighbors,
    /// In-degree plus out-degree; an antiparallel pair counts twice.
    InPlusOut,
    /// Out-degree only.
    OutDegree,
}

/// Mean and population standard deviation of node degree.
pub fn degree_stats(
    g: &DirectedGraph,
    convention: DegreeConvention,
) -> Result<(f64, f64), GraphError> {
    let n = g.node_count();
    if n == 0 {
        return Err(GraphError::Empty);
    }
    let degrees: Vec<f64> = match convention {
        DegreeConvention::DistinctNeighbors => {
            let view = g.undirected();
            (0..n).map(|u| view.degree(u) as f64).collect()
        }
        DegreeConvention::InPlusOut => (0..n)
            .map(|u| (g.in_degree(u) + g.out_degree(u)) as f64)
            .collect(),
        DegreeConvention::OutDegree => (0..n).map(|u| g.out_degree(u) as f64).collect(),
    };
    let mean = degrees.iter().sum::<f64>() / n as f64;
    let var = degrees.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n as f64;
    Ok((mean, var.sqrt()))
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of `a` and `b`; returns false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}
