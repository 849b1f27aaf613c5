//! Directed, unweighted social graphs.
//!
//! An edge `i -> j` means that `i` follows `j`: `i` is the follower and `j`
//! the followee. Out-neighbours are followees, in-neighbours are followers.
//! Graphs are immutable once built and store three sorted CSR adjacency
//! structures: forward, reverse and the undirected projection.

mod attributes;
mod binary;
mod ingest;
mod kshell;
mod neighborhood;
mod snapshot;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use attributes::{load_attributes, AttributeFormat, AttributeLoad, AttributeTable, Attitude};
pub use binary::{read_graph_binary, write_graph_binary};
pub use ingest::{load_edge_list, write_edge_list, EdgeListFormat, IngestReport, Separator};
pub use kshell::{k_shell, NodeMetrics};
pub use neighborhood::{k_hop_neighborhood, k_hop_neighborhood_into, HopScratch, DEFAULT_HOPS};
pub use snapshot::{load_snapshots, IdRegistry, Snapshot, SnapshotEntry, SnapshotManifest, SnapshotSeries};

/// Dense node index, `0..node_count`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    #[inline]
    fn from(i: usize) -> Self {
        NodeId(i as u32)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
}

impl Csr {
    /// Builds from (row, col) pairs that are already sorted and deduplicated.
    fn from_sorted(node_count: usize, pairs: &[(NodeId, NodeId)]) -> Self {
        let mut offsets = vec![0usize; node_count + 1];
        for &(u, _) in pairs {
            offsets[u.index() + 1] += 1;
        }
        for i in 0..node_count {
            offsets[i + 1] += offsets[i];
        }
        let targets = pairs.iter().map(|&(_, v)| v).collect();
        Csr { offsets, targets }
    }

    #[inline]
    fn row(&self, node: NodeId) -> &[NodeId] {
        let i = node.index();
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }
}

/// Immutable directed unweighted graph with an external-ID bijection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedGraph {
    ids: Vec<String>,
    index: HashMap<String, NodeId>,
    out: Csr,
    inc: Csr,
    und: Csr,
}

impl DirectedGraph {
    /// Builds a graph from external IDs and directed edges over them.
    ///
    /// Self-loops and duplicate edges are dropped; the returned pair counts
    /// them as `(self_loops, duplicates)`.
    pub(crate) fn from_parts(ids: Vec<String>, mut edges: Vec<(NodeId, NodeId)>) -> (Self, usize, usize) {
        let n = ids.len();
        let before = edges.len();
        edges.retain(|(u, v)| u != v);
        let self_loops = before - edges.len();
        edges.sort_unstable();
        let before = edges.len();
        edges.dedup();
        let duplicates = before - edges.len();

        let out = Csr::from_sorted(n, &edges);
        let mut rev: Vec<(NodeId, NodeId)> = edges.iter().map(|&(u, v)| (v, u)).collect();
        rev.sort_unstable();
        let inc = Csr::from_sorted(n, &rev);
        let mut und = edges;
        und.extend(rev);
        und.sort_unstable();
        und.dedup();
        let und = Csr::from_sorted(n, &und);

        let index = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), NodeId::from(i)))
            .collect();
        (
            DirectedGraph {
                ids,
                index,
                out,
                inc,
                und,
            },
            self_loops,
            duplicates,
        )
    }

    /// Builds a graph with integer external IDs `"0".."n-1"`, mostly useful in tests.
    pub fn from_edge_indices(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut pairs = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::validation(format!(
                    "edge ({u}, {v}) out of range for {node_count} nodes"
                )));
            }
            pairs.push((NodeId::from(u), NodeId::from(v)));
        }
        let ids = (0..node_count).map(|i| i.to_string()).collect();
        Ok(Self::from_parts(ids, pairs).0)
    }

    /// Same nodes with every edge made mutual, for friendship-style data.
    pub fn symmetrized(&self) -> Self {
        let mut edges: Vec<(NodeId, NodeId)> = self.edges().collect();
        edges.extend(self.edges().map(|(u, v)| (v, u)));
        Self::from_parts(self.ids.clone(), edges).0
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = NodeId> + Clone {
        (0..self.node_count() as u32).map(NodeId)
    }

    /// All directed edges `(follower, followee)` in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes()
            .flat_map(move |u| self.out_neighbors(u).iter().map(move |&v| (u, v)))
    }

    /// Followees of `node`, sorted ascending.
    #[inline]
    pub fn out_neighbors(&self, node: NodeId) -> &[NodeId] {
        self.out.row(node)
    }

    /// Followers of `node`, sorted ascending.
    #[inline]
    pub fn in_neighbors(&self, node: NodeId) -> &[NodeId] {
        self.inc.row(node)
    }

    /// Neighbours in the undirected projection, sorted ascending.
    #[inline]
    pub fn undirected_neighbors(&self, node: NodeId) -> &[NodeId] {
        self.und.row(node)
    }

    #[inline]
    pub fn out_degree(&self, node: NodeId) -> usize {
        self.out.row(node).len()
    }

    #[inline]
    pub fn in_degree(&self, node: NodeId) -> usize {
        self.inc.row(node).len()
    }

    #[inline]
    pub fn undirected_degree(&self, node: NodeId) -> usize {
        self.und.row(node).len()
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        self.out_neighbors(from).binary_search(&to).is_ok()
    }

    pub fn external_id(&self, node: NodeId) -> &str {
        &self.ids[node.index()]
    }

    pub fn external_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn node_id(&self, external: &str) -> Option<NodeId> {
        self.index.get(external).copied()
    }

    pub fn check_node(&self, node: NodeId) -> Result<()> {
        if node.index() < self.node_count() {
            Ok(())
        } else {
            Err(Error::validation(format!(
                "node {node} out of range for graph with {} nodes",
                self.node_count()
            )))
        }
    }
}

/// Incremental builder that assigns dense IDs in first-appearance order.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    ids: Vec<String>,
    index: HashMap<String, NodeId>,
    edges: Vec<(NodeId, NodeId)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, external: &str) -> NodeId {
        if let Some(&id) = self.index.get(external) {
            return id;
        }
        let id = NodeId::from(self.ids.len());
        self.ids.push(external.to_owned());
        self.index.insert(external.to_owned(), id);
        id
    }

    pub fn add_edge(&mut self, follower: &str, followee: &str) -> &mut Self {
        let u = self.add_node(follower);
        let v = self.add_node(followee);
        self.edges.push((u, v));
        self
    }

    /// Returns the graph and `(self_loops, duplicates)` drop counts.
    pub fn build_with_counts(self) -> (DirectedGraph, usize, usize) {
        DirectedGraph::from_parts(self.ids, self.edges)
    }

    pub fn build(self) -> DirectedGraph {
        self.build_with_counts().0
    }
}
