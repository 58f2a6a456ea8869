//! Network topologies, message conflict graphs and node splitting.
//!
//! Edge convention: in a [`ConflictGraph`] an edge `a -> b` means the source
//! of demand `a` reaches the destination of demand `b`, so `a` interferes at
//! `b`'s receiver. Topology links are stored as `(source, destination)`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::coloring::{Coloring, FractionalColoring};
use crate::error::{Error, Result};

/// A partially connected bipartite network with a multiple-unicast demand set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TopologyFile", into = "TopologyFile")]
pub struct TopologyInstance {
    num_sources: usize,
    num_destinations: usize,
    links: BTreeSet<(usize, usize)>,
    demands: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct TopologyFile {
    num_sources: usize,
    num_destinations: usize,
    links: Vec<[usize; 2]>,
    demands: Vec<[usize; 2]>,
}

impl TopologyInstance {
    pub fn new(
        num_sources: usize,
        num_destinations: usize,
        links: impl IntoIterator<Item = (usize, usize)>,
        demands: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let links: BTreeSet<_> = links.into_iter().collect();
        for &(s, d) in &links {
            if s >= num_sources || d >= num_destinations {
                return Err(Error::InvalidTopology(format!(
                    "link ({s}, {d}) out of range for {num_sources}x{num_destinations}"
                )));
            }
        }
        let demand_set: BTreeSet<_> = demands.into_iter().collect();
        let mut used_src = BTreeSet::new();
        let mut used_dst = BTreeSet::new();
        for &(s, d) in &demand_set {
            if !links.contains(&(s, d)) {
                return Err(Error::InvalidTopology(format!(
                    "demand ({s}, {d}) is not a link"
                )));
            }
            if !used_src.insert(s) {
                return Err(Error::InvalidTopology(format!(
                    "source {s} appears in more than one demand"
                )));
            }
            if !used_dst.insert(d) {
                return Err(Error::InvalidTopology(format!(
                    "destination {d} appears in more than one demand"
                )));
            }
        }
        Ok(Self {
            num_sources,
            num_destinations,
            links,
            demands: demand_set.into_iter().collect(),
        })
    }

    pub fn num_sources(&self) -> usize {
        self.num_sources
    }

    pub fn num_destinations(&self) -> usize {
        self.num_destinations
    }

    pub fn links(&self) -> &BTreeSet<(usize, usize)> {
        &self.links
    }

    /// Demands in canonical (sorted) order. Conflict-graph node `i` is `demands()[i]`.
    pub fn demands(&self) -> &[(usize, usize)] {
        &self.demands
    }

    pub fn has_link(&self, source: usize, destination: usize) -> bool {
        self.links.contains(&(source, destination))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("topology serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl From<TopologyInstance> for TopologyFile {
    fn from(t: TopologyInstance) -> Self {
        TopologyFile {
            num_sources: t.num_sources,
            num_destinations: t.num_destinations,
            links: t.links.iter().map(|&(s, d)| [s, d]).collect(),
            demands: t.demands.iter().map(|&(s, d)| [s, d]).collect(),
        }
    }
}

impl TryFrom<TopologyFile> for TopologyInstance {
    type Error = Error;

    fn try_from(file: TopologyFile) -> Result<Self> {
        Self::new(
            file.num_sources,
            file.num_destinations,
            file.links.into_iter().map(|[s, d]| (s, d)),
            file.demands.into_iter().map(|[s, d]| (s, d)),
        )
    }
}

/// Directed message conflict graph. Immutable once built; adjacency lists are
/// precomputed and sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictGraph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    labels: Option<Vec<(usize, usize)>>,
    in_nbrs: Vec<Vec<usize>>,
    out_nbrs: Vec<Vec<usize>>,
    und_nbrs: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct GraphFile {
    num_nodes: usize,
    directed: bool,
    edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<[usize; 2]>>,
}

impl ConflictGraph {
    /// Builds a graph from an edge list. Duplicate edges collapse; self-loops
    /// and out-of-range endpoints are rejected.
    pub fn from_edges(
        num_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) out of range for {num_nodes} nodes"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
            }
            set.insert((u, v));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut in_nbrs = vec![Vec::new(); num_nodes];
        let mut out_nbrs = vec![Vec::new(); num_nodes];
        let mut und: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); num_nodes];
        for &(u, v) in &edges {
            out_nbrs[u].push(v);
            in_nbrs[v].push(u);
            und[u].insert(v);
            und[v].insert(u);
        }
        for list in in_nbrs.iter_mut() {
            list.sort_unstable();
        }
        Ok(Self {
            num_nodes,
            edges,
            labels: None,
            in_nbrs,
            out_nbrs,
            und_nbrs: und.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    /// Builds a graph whose every undirected pair is present in both directions.
    pub fn from_undirected_edges(
        num_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let both: Vec<_> = edges.into_iter().flat_map(|(u, v)| [(u, v), (v, u)]).collect();
        Self::from_edges(num_nodes, both)
    }

    pub fn with_labels(mut self, labels: Vec<(usize, usize)>) -> Result<Self> {
        if labels.len() != self.num_nodes {
            return Err(Error::InvalidGraph(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.num_nodes
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn is_empty(&self) -> bool {
        self.num_nodes == 0
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Directed edges, sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn labels(&self) -> Option<&[(usize, usize)]> {
        self.labels.as_deref()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u, v)).is_ok()
    }

    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.in_nbrs[i]
    }

    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.out_nbrs[i]
    }

    /// Neighbors in the underlying undirected graph.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.und_nbrs[i]
    }

    /// Undirected edges `(u, v)` with `u < v`.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (u, nbrs) in self.und_nbrs.iter().enumerate() {
            out.extend(nbrs.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    /// Closed in-neighborhood as a sorted list: `{i} ∪ N⁺(i)`.
    pub fn closed_in(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.in_nbrs[i].len() + 1);
        let mut placed = false;
        for &j in &self.in_nbrs[i] {
            if !placed && i < j {
                out.push(i);
                placed = true;
            }
            out.push(j);
        }
        if !placed {
            out.push(i);
        }
        out
    }

    /// Induced subgraph on `nodes` (given in the order that defines the new indices).
    pub fn induced_subgraph(&self, nodes: &[usize]) -> ConflictGraph {
        let mut index = vec![usize::MAX; self.num_nodes];
        for (k, &v) in nodes.iter().enumerate() {
            index[v] = k;
        }
        let edges = self
            .edges
            .iter()
            .filter(|&&(u, v)| index[u] != usize::MAX && index[v] != usize::MAX)
            .map(|&(u, v)| (index[u], index[v]));
        ConflictGraph::from_edges(nodes.len(), edges).expect("induced subgraph is valid")
    }

    pub(crate) fn to_file(&self) -> GraphFile {
        GraphFile {
            num_nodes: self.num_nodes,
            directed: true,
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| l.iter().map(|&(s, d)| [s, d]).collect()),
        }
    }

    pub(crate) fn from_file(file: GraphFile) -> Result<Self> {
        let edges = file.edges.into_iter().flat_map(|[u, v]| {
            if file.directed {
                vec![(u, v)]
            } else {
                vec![(u, v), (v, u)]
            }
        });
        let g = Self::from_edges(file.num_nodes, edges)?;
        match file.labels {
            Some(l) => g.with_labels(l.into_iter().map(|[s, d]| (s, d)).collect()),
            None => Ok(g),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("graph serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }
}

impl Serialize for ConflictGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConflictGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = GraphFile::deserialize(d)?;
        Self::from_file(file).map_err(serde::de::Error::custom)
    }
}

/// Open and closed in-neighborhood of a node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub open_in: BTreeSet<usize>,
    pub closed_in: BTreeSet<usize>,
}

/// Builds the message conflict graph of a topology. One node per demand (in
/// canonical demand order); `a -> b` iff the source of `a` links to the
/// destination of `b`. Node labels carry the `(source, destination)` pairs.
pub fn build_conflict_graph(topo: &TopologyInstance) -> ConflictGraph {
    let demands = topo.demands();
    if demands.is_empty() {
        log::warn!("topology has no demanded messages; conflict graph is empty");
    }
    let mut edges = Vec::new();
    for (a, &(src_a, _)) in demands.iter().enumerate() {
        for (b, &(_, dst_b)) in demands.iter().enumerate() {
            if a != b && topo.has_link(src_a, dst_b) {
                edges.push((a, b));
            }
        }
    }
    ConflictGraph::from_edges(demands.len(), edges)
        .and_then(|g| g.with_labels(demands.to_vec()))
        .expect("conflict graph of a valid topology is valid")
}

pub fn closed_in_neighborhood(g: &ConflictGraph, i: usize) -> Result<Neighborhood> {
    if i >= g.num_nodes() {
        return Err(Error::NodeOutOfRange {
            node: i,
            num_nodes: g.num_nodes(),
        });
    }
    let open_in: BTreeSet<usize> = g.in_neighbors(i).iter().copied().collect();
    let mut closed_in = open_in.clone();
    closed_in.insert(i);
    Ok(Neighborhood { open_in, closed_in })
}

/// The b-order node splitting graph. Copies of node `v` occupy indices
/// `v*b .. v*b+b`; copies form a directed clique and every original edge
/// `(u, v)` becomes all `b²` edges between the copy blocks.
pub fn node_splitting_graph(g: &ConflictGraph, b: usize) -> Result<ConflictGraph> {
    if b == 0 {
        return Err(Error::InvalidParameter("split order b must be >= 1".into()));
    }
    let n = g.num_nodes();
    let mut edges = Vec::with_capacity(b * b * g.num_edges() + n * b * (b - 1));
    for &(u, v) in g.edges() {
        for i in 0..b {
            for j in 0..b {
                edges.push((u * b + i, v * b + j));
            }
        }
    }
    for v in 0..n {
        for i in 0..b {
            for j in 0..b {
                if i != j {
                    edges.push((v * b + i, v * b + j));
                }
            }
        }
    }
    ConflictGraph::from_edges(n * b, edges)
}

/// Merges a coloring of the b-order splitting graph back onto `g`: node `v`
/// receives the colors of its `b` copies.
pub fn merge_split_coloring(
    g: &ConflictGraph,
    b: usize,
    split_coloring: &Coloring,
) -> Result<FractionalColoring> {
    if b == 0 {
        return Err(Error::InvalidParameter("split order b must be >= 1".into()));
    }
    let n = g.num_nodes();
    if split_coloring.len() != n * b {
        return Err(Error::DimensionMismatch(format!(
            "split coloring has {} nodes, expected {}",
            split_coloring.len(),
            n * b
        )));
    }
    let mut sets = Vec::with_capacity(n);
    for v in 0..n {
        let set: BTreeSet<u32> = (0..b).map(|i| split_coloring.color(v * b + i)).collect();
        if set.len() != b {
            return Err(Error::InvalidColoring(format!(
                "split copies of node {v} share a color"
            )));
        }
        sets.push(set.into_iter().collect());
    }
    FractionalColoring::new(sets, split_coloring.num_colors())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn directed_triangle() -> ConflictGraph {
        ConflictGraph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    #[test]
    fn topology_invariants_are_enforced() {
        assert!(TopologyInstance::new(2, 2, [(0, 0)], [(0, 1)]).is_err());
        assert!(TopologyInstance::new(2, 2, [(0, 0), (0, 1)], [(0, 0), (0, 1)]).is_err());
        assert!(TopologyInstance::new(2, 2, [(2, 0)], []).is_err());
        assert!(TopologyInstance::new(2, 2, [(0, 0), (1, 0)], [(0, 0)]).is_ok());
    }

    #[test]
    fn no_cross_links_gives_edgeless_graph() {
        let t = TopologyInstance::new(3, 3, [(0, 0), (1, 1), (2, 2)], [(0, 0), (1, 1), (2, 2)])
            .unwrap();
        let g = build_conflict_graph(&t);
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.num_edges(), 0);
    }

    #[test]
    fn fully_connected_gives_complete_digraph() {
        let n = 5;
        let links: Vec<_> = (0..n).flat_map(|s| (0..n).map(move |d| (s, d))).collect();
        let t = TopologyInstance::new(n, n, links, (0..n).map(|i| (i, i))).unwrap();
        let g = build_conflict_graph(&t);
        assert_eq!(g.num_edges(), n * (n - 1));
    }

    #[test]
    fn edge_direction_follows_interfering_source() {
        // Source of demand 0 reaches the destination of demand 1 only.
        let t = TopologyInstance::new(2, 2, [(0, 0), (1, 1), (0, 1)], [(0, 0), (1, 1)]).unwrap();
        let g = build_conflict_graph(&t);
        assert_eq!(g.edges(), &[(0, 1)]);
        assert_eq!(g.labels().unwrap(), &[(0, 0), (1, 1)]);
    }

    #[test]
    fn empty_demands_give_empty_graph() {
        let t = TopologyInstance::new(2, 2, [(0, 1)], []).unwrap();
        assert!(build_conflict_graph(&t).is_empty());
    }

    #[test]
    fn closed_in_neighborhood_examples() {
        let g = directed_triangle();
        let nb = closed_in_neighborhood(&g, 1).unwrap();
        assert_eq!(nb.closed_in, BTreeSet::from([0, 1]));
        assert_eq!(nb.open_in, BTreeSet::from([0]));
        let iso = ConflictGraph::from_edges(2, []).unwrap();
        assert_eq!(closed_in_neighborhood(&iso, 1).unwrap().closed_in, BTreeSet::from([1]));
        assert!(matches!(
            closed_in_neighborhood(&g, 3),
            Err(Error::NodeOutOfRange { .. })
        ));
    }

    #[test]
    fn splitting_edge_counts() {
        let g1 = directed_triangle();
        assert_eq!(node_splitting_graph(&g1, 1).unwrap(), g1);
        let single = ConflictGraph::from_edges(2, [(0, 1)]).unwrap();
        let s = node_splitting_graph(&single, 2).unwrap();
        assert_eq!((s.num_nodes(), s.num_edges()), (4, 8));
        let s = node_splitting_graph(&g1, 2).unwrap();
        assert_eq!((s.num_nodes(), s.num_edges()), (6, 18));
        assert!(node_splitting_graph(&g1, 0).is_err());
    }

    #[test]
    fn merge_rejects_shared_copy_colors() {
        let g = ConflictGraph::from_edges(1, []).unwrap();
        let c = Coloring::new(vec![1, 1], 2).unwrap();
        assert!(merge_split_coloring(&g, 2, &c).is_err());
        let c = Coloring::new(vec![2, 1], 2).unwrap();
        let fc = merge_split_coloring(&g, 2, &c).unwrap();
        assert_eq!(fc.set(0), &[1, 2]);
    }

    #[test]
    fn merge_with_b1_is_identity() {
        let g = directed_triangle();
        let c = Coloring::new(vec![3, 1, 2], 3).unwrap();
        let fc = merge_split_coloring(&g, 1, &c).unwrap();
        for v in 0..3 {
            assert_eq!(fc.set(v), &[c.color(v)]);
        }
    }

    #[test]
    fn json_round_trip_is_canonical() {
        let g = ConflictGraph::from_edges(3, [(2, 0), (0, 1), (0, 1)]).unwrap();
        let text = g.to_json();
        assert_eq!(text, r#"{"num_nodes":3,"directed":true,"edges":[[0,1],[2,0]]}"#);
        assert_eq!(ConflictGraph::from_json(&text).unwrap().to_json(), text);

        let t = TopologyInstance::new(2, 2, [(1, 1), (0, 0), (0, 1)], [(1, 1), (0, 0)]).unwrap();
        let text = t.to_json();
        assert_eq!(
            text,
            r#"{"num_sources":2,"num_destinations":2,"links":[[0,0],[0,1],[1,1]],"demands":[[0,0],[1,1]]}"#
        );
        assert_eq!(TopologyInstance::from_json(&text).unwrap(), t);
    }

    fn arb_graph(max_nodes: usize) -> impl Strategy<Value = ConflictGraph> {
        (1..=max_nodes).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n), 0..(n * n))
                .prop_map(move |e| {
                    ConflictGraph::from_edges(n, e.into_iter().filter(|(u, v)| u != v)).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn closed_in_matches_edge_scan(g in arb_graph(8)) {
            for i in 0..g.num_nodes() {
                let mut scan: BTreeSet<usize> = g.edges().iter()
                    .filter(|&&(_, v)| v == i).map(|&(u, _)| u).collect();
                let in_deg = scan.len();
                scan.insert(i);
                let nb = closed_in_neighborhood(&g, i).unwrap();
                prop_assert_eq!(nb.closed_in.len(), in_deg + 1);
                prop_assert_eq!(&nb.closed_in, &scan);
                prop_assert_eq!(g.closed_in(i), scan.into_iter().collect::<Vec<_>>());
            }
        }

        #[test]
        fn splitting_sizes(g in arb_graph(7), b in 1usize..4) {
            let s = node_splitting_graph(&g, b).unwrap();
            prop_assert_eq!(s.num_nodes(), b * g.num_nodes());
            prop_assert_eq!(s.num_edges(), b * b * g.num_edges() + g.num_nodes() * b * (b - 1));
        }

        #[test]
        fn graph_json_round_trip(g in arb_graph(8)) {
            let text = g.to_json();
            let back = ConflictGraph::from_json(&text).unwrap();
            prop_assert_eq!(back.to_json(), text);
            prop_assert_eq!(back, g);
        }
    }
}
