//! Directed graphs, partitions of their nodes, strongly connected components
//! and quotient (condensation) graphs.
//!
//! Node indices are 0-based. An edge `(src, dst)` means `src -> dst`.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A directed graph without self-loops or parallel edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DirectedGraph {
    d: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl DirectedGraph {
    pub fn new(d: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (src, dst) in edges {
            if src >= d || dst >= d {
                return Err(Error::InvalidGraph(format!(
                    "edge ({src}, {dst}) out of range for d = {d}"
                )));
            }
            if src == dst {
                return Err(Error::InvalidGraph(format!("self-loop at node {src}")));
            }
            if !set.insert((src, dst)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({src}, {dst})")));
            }
        }
        Ok(Self { d, edges: set })
    }

    /// Graph on `d` nodes with no edges.
    pub fn empty(d: usize) -> Self {
        Self {
            d,
            edges: BTreeSet::new(),
        }
    }

    // Internal constructor for edge sets that are valid by construction.
    pub(crate) fn from_set(d: usize, edges: BTreeSet<(usize, usize)>) -> Self {
        debug_assert!(edges.iter().all(|&(s, t)| s != t && s < d && t < d));
        Self { d, edges }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        self.edges.contains(&(src, dst))
    }

    /// Out-neighbour lists in increasing order.
    pub fn successors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.d];
        for &(s, t) in &self.edges {
            adj[s].push(t);
        }
        adj
    }

    /// Nodes reachable from `start` by a path of length >= 0.
    pub fn reachable_from(&self, start: usize) -> Vec<bool> {
        let adj = self.successors();
        reach(&adj, start)
    }

    /// Every simple directed cycle (first node repeated last), each reported once
    /// starting from its smallest node. Stops after `limit` cycles.
    pub fn simple_cycles(&self, limit: usize) -> Vec<Vec<usize>> {
        let adj = self.successors();
        let mut out = Vec::new();
        let mut on_path = vec![false; self.d];
        for start in 0..self.d {
            let mut path = vec![start];
            on_path[start] = true;
            cycles_from(&adj, start, &mut path, &mut on_path, &mut out, limit);
            on_path[start] = false;
            if out.len() >= limit {
                break;
            }
        }
        out
    }
}

fn cycles_from(
    adj: &[Vec<usize>],
    start: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    out: &mut Vec<Vec<usize>>,
    limit: usize,
) {
    let v = *path.last().expect("path is never empty");
    for &w in &adj[v] {
        if out.len() >= limit {
            return;
        }
        if w == start {
            let mut cycle = path.clone();
            cycle.push(start);
            out.push(cycle);
        } else if w > start && !on_path[w] {
            on_path[w] = true;
            path.push(w);
            cycles_from(adj, start, path, on_path, out, limit);
            path.pop();
            on_path[w] = false;
        }
    }
}

fn reach(adj: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen
}

/// A partition of `0..d` in canonical form: cluster ids are `0..k` and are
/// numbered in order of first appearance when scanning nodes `0, 1, ..., d-1`.
/// Two partitions describing the same grouping compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Canonicalizes an arbitrary labeling (any label values).
    pub fn from_labels(raw: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels: Vec<usize> = raw
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Self { labels, k: map.len() }
    }

    /// Builds a partition from explicit clusters; they must cover `0..d` exactly once.
    pub fn from_clusters(d: usize, clusters: &[Vec<usize>]) -> Result<Self> {
        let mut raw = vec![usize::MAX; d];
        for (c, members) in clusters.iter().enumerate() {
            for &v in members {
                if v >= d || raw[v] != usize::MAX {
                    return Err(Error::InvalidArgument(format!(
                        "node {v} is out of range or listed twice"
                    )));
                }
                raw[v] = c;
            }
        }
        if let Some(v) = raw.iter().position(|&l| l == usize::MAX) {
            return Err(Error::InvalidArgument(format!("node {v} not covered")));
        }
        Ok(Self::from_labels(&raw))
    }

    pub fn singletons(d: usize) -> Self {
        Self {
            labels: (0..d).collect(),
            k: d,
        }
    }

    pub fn single_cluster(d: usize) -> Self {
        Self {
            labels: vec![0; d],
            k: usize::from(d > 0),
        }
    }

    pub fn d(&self) -> usize {
        self.labels.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> usize {
        self.labels[node]
    }

    /// Members of each cluster, in increasing node order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (v, &l) in self.labels.iter().enumerate() {
            out[l].push(v);
        }
        out
    }

    /// True if every cluster of `self` lies inside a cluster of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        if self.d() != coarser.d() {
            return false;
        }
        let mut image = vec![usize::MAX; self.k];
        for (v, &l) in self.labels.iter().enumerate() {
            let target = coarser.labels[v];
            if image[l] == usize::MAX {
                image[l] = target;
            } else if image[l] != target {
                return false;
            }
        }
        true
    }
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = String;

    fn try_from(raw: Vec<usize>) -> std::result::Result<Self, Self::Error> {
        let p = Partition::from_labels(&raw);
        if p.labels != raw {
            return Err("partition labels are not canonical".into());
        }
        Ok(p)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.labels
    }
}

/// The SCC partition of a graph together with its acyclic cluster-level graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Condensation {
    pub partition: Partition,
    pub cluster_edges: BTreeSet<(usize, usize)>,
}

impl Condensation {
    pub fn cluster_graph(&self) -> DirectedGraph {
        DirectedGraph::from_set(self.partition.num_clusters(), self.cluster_edges.clone())
    }
}

/// Strongly connected components via Tarjan's algorithm (iterative, linear time).
pub fn tarjan_scc(g: &DirectedGraph) -> Partition {
    const UNVISITED: usize = usize::MAX;
    let adj = g.successors();
    let d = g.d();
    let mut index = vec![UNVISITED; d];
    let mut lowlink = vec![0; d];
    let mut on_stack = vec![false; d];
    let mut stack = Vec::with_capacity(d);
    let mut component = vec![UNVISITED; d];
    let mut next_index = 0;
    let mut next_component = 0;
    // (node, position of the next successor to visit)
    let mut call_stack: Vec<(usize, usize)> = Vec::new();

    for root in 0..d {
        if index[root] != UNVISITED {
            continue;
        }
        call_stack.push((root, 0));
        while let Some(&mut (v, ref mut pos)) = call_stack.last_mut() {
            if *pos == 0 && index[v] == UNVISITED {
                index[v] = next_index;
                lowlink[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(&w) = adj[v].get(*pos) {
                *pos += 1;
                if index[w] == UNVISITED {
                    call_stack.push((w, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
                continue;
            }
            call_stack.pop();
            if lowlink[v] == index[v] {
                loop {
                    let w = stack.pop().expect("v is on the stack");
                    on_stack[w] = false;
                    component[w] = next_component;
                    if w == v {
                        break;
                    }
                }
                next_component += 1;
            }
            if let Some(&(parent, _)) = call_stack.last() {
                lowlink[parent] = lowlink[parent].min(lowlink[v]);
            }
        }
    }
    Partition::from_labels(&component)
}

/// Quotient graph: one node per cluster, an edge between two distinct clusters
/// whenever some node-level edge crosses them. Intra-cluster edges are dropped.
pub fn quotient(g: &DirectedGraph, p: &Partition) -> Result<DirectedGraph> {
    if p.d() != g.d() {
        return Err(Error::DimensionMismatch {
            expected: g.d(),
            found: p.d(),
        });
    }
    let edges = g
        .edges()
        .iter()
        .map(|&(s, t)| (p.label(s), p.label(t)))
        .filter(|(a, b)| a != b)
        .collect();
    Ok(DirectedGraph::from_set(p.num_clusters(), edges))
}

/// True iff the graph has no directed cycle (every SCC is a singleton).
pub fn is_dag(g: &DirectedGraph) -> bool {
    tarjan_scc(g).num_clusters() == g.d()
}

pub fn condense(g: &DirectedGraph) -> Condensation {
    let partition = tarjan_scc(g);
    let cluster_edges = quotient(g, &partition)
        .expect("SCC partition has the graph's dimension")
        .edges
        .clone();
    Condensation {
        partition,
        cluster_edges,
    }
}

/// Reachability graph: `(u, v)` for every `u != v` with a directed path `u -> v`.
/// Reflexive pairs are left out because graphs carry no self-loops.
pub fn transitive_closure(g: &DirectedGraph) -> DirectedGraph {
    let adj = g.successors();
    let mut edges = BTreeSet::new();
    for u in 0..g.d() {
        for (v, r) in reach(&adj, u).into_iter().enumerate() {
            if r && u != v {
                edges.insert((u, v));
            }
        }
    }
    DirectedGraph::from_set(g.d(), edges)
}

/// Reverses every edge of a simple directed cycle given as a node sequence
/// whose first node is repeated at the end, e.g. `[1, 2, 3, 1]`.
pub fn reverse_cycle(g: &DirectedGraph, cycle: &[usize]) -> Result<DirectedGraph> {
    if cycle.len() < 3 || cycle.first() != cycle.last() {
        return Err(Error::InvalidCycle(format!(
            "{cycle:?} must list at least two nodes and repeat the first at the end"
        )));
    }
    let body = &cycle[..cycle.len() - 1];
    let distinct: BTreeSet<_> = body.iter().collect();
    if distinct.len() != body.len() {
        return Err(Error::InvalidCycle(format!("{cycle:?} is not simple")));
    }
    let mut edges = g.edges.clone();
    for pair in cycle.windows(2) {
        if !edges.remove(&(pair[0], pair[1])) {
            return Err(Error::InvalidCycle(format!(
                "edge ({}, {}) is missing",
                pair[0], pair[1]
            )));
        }
    }
    for pair in cycle.windows(2) {
        edges.insert((pair[1], pair[0]));
    }
    Ok(DirectedGraph::from_set(g.d(), edges))
}
