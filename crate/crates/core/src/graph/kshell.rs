use serde::{Deserialize, Serialize};

use super::{DirectedGraph, NodeId};

/// Per-node structural metrics used by the rankers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMetrics {
    /// Core number on the undirected projection.
    pub core: Vec<u32>,
    pub in_degree: Vec<u32>,
    pub out_degree: Vec<u32>,
}

impl NodeMetrics {
    #[inline]
    pub fn core(&self, node: NodeId) -> u32 {
        self.core[node.index()]
    }

    pub fn node_count(&self) -> usize {
        self.core.len()
    }
}

/// Core numbers of the undirected projection by bucket peeling
/// (Batagelj–Zaversnik), `O(n + m)`.
pub fn k_shell(graph: &DirectedGraph) -> NodeMetrics {
    let n = graph.node_count();
    let mut degree: Vec<usize> = graph.nodes().map(|v| graph.undirected_degree(v)).collect();
    let max_degree = degree.iter().copied().max().unwrap_or(0);

    // bin[d] = start of the degree-d block in `order`
    let mut bin = vec![0usize; max_degree + 2];
    for &d in &degree {
        bin[d + 1] += 1;
    }
    for d in 0..=max_degree {
        bin[d + 1] += bin[d];
    }
    let mut order = vec![0usize; n];
    let mut position = vec![0usize; n];
    {
        let mut next = bin.clone();
        for v in 0..n {
            let d = degree[v];
            position[v] = next[d];
            order[next[d]] = v;
            next[d] += 1;
        }
    }

    for i in 0..n {
        let v = order[i];
        for &u in graph.undirected_neighbors(NodeId::from(v)) {
            let u = u.index();
            if degree[u] > degree[v] {
                // swap u with the first vertex of its block, then shrink the block
                let du = degree[u];
                let pu = position[u];
                let pw = bin[du];
                let w = order[pw];
                if u != w {
                    order.swap(pu, pw);
                    position[u] = pw;
                    position[w] = pu;
                }
                bin[du] += 1;
                degree[u] -= 1;
            }
        }
    }

    NodeMetrics {
        core: degree.into_iter().map(|d| d as u32).collect(),
        in_degree: graph.nodes().map(|v| graph.in_degree(v) as u32).collect(),
        out_degree: graph.nodes().map(|v| graph.out_degree(v) as u32).collect(),
    }
}
