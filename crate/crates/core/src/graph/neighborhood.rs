use super::{DirectedGraph, NodeId};
use crate::error::{Error, Result};

/// Default neighbourhood radius used by NLCRank.
pub const DEFAULT_HOPS: usize = 3;

/// Reusable BFS buffers for repeated neighbourhood queries on one graph.
#[derive(Debug, Clone)]
pub struct HopScratch {
    stamp: Vec<u32>,
    epoch: u32,
    frontier: Vec<NodeId>,
    next: Vec<NodeId>,
}

impl HopScratch {
    pub fn new(node_count: usize) -> Self {
        HopScratch {
            stamp: vec![0; node_count],
            epoch: 0,
            frontier: Vec::new(),
            next: Vec::new(),
        }
    }
}

/// Collects the nodes at undirected distance `1..=k` from `node` into `out`
/// (cleared first, left in BFS discovery order).
pub fn k_hop_neighborhood_into(
    graph: &DirectedGraph,
    node: NodeId,
    k: usize,
    scratch: &mut HopScratch,
    out: &mut Vec<NodeId>,
) {
    out.clear();
    scratch.epoch = scratch.epoch.wrapping_add(1);
    if scratch.epoch == 0 {
        scratch.stamp.fill(0);
        scratch.epoch = 1;
    }
    let epoch = scratch.epoch;
    scratch.stamp[node.index()] = epoch;
    scratch.frontier.clear();
    scratch.frontier.push(node);
    for _ in 0..k {
        scratch.next.clear();
        for &v in &scratch.frontier {
            for &u in graph.undirected_neighbors(v) {
                if scratch.stamp[u.index()] != epoch {
                    scratch.stamp[u.index()] = epoch;
                    scratch.next.push(u);
                }
            }
        }
        if scratch.next.is_empty() {
            break;
        }
        out.extend_from_slice(&scratch.next);
        std::mem::swap(&mut scratch.frontier, &mut scratch.next);
    }
}

/// Nodes within undirected distance `1..=k` of `node`, excluding `node`,
/// sorted ascending.
pub fn k_hop_neighborhood(graph: &DirectedGraph, node: NodeId, k: usize) -> Result<Vec<NodeId>> {
    graph.check_node(node)?;
    if k == 0 {
        return Err(Error::validation("neighbourhood radius k must be at least 1"));
    }
    let mut scratch = HopScratch::new(graph.node_count());
    let mut out = Vec::new();
    k_hop_neighborhood_into(graph, node, k, &mut scratch, &mut out);
    out.sort_unstable();
    Ok(out)
}
