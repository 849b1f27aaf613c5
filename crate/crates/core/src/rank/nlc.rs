use rayon::prelude::*;
use serde_json::json;

use super::RankingResult;
use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::{k_hop_neighborhood_into, DirectedGraph, HopScratch, NodeId, NodeMetrics, DEFAULT_HOPS};

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// NLCRank: `NLC(i) = sum over j in G3(i) of Ks_i * exp(-|x_i - x_j|^2)`,
/// where `G3(i)` is the undirected 3-hop neighbourhood of `i`.
pub fn nlc_rank(graph: &DirectedGraph, emb: &EmbeddingMatrix, metrics: &NodeMetrics) -> Result<RankingResult> {
    let n = graph.node_count();
    if emb.node_count() != n || metrics.node_count() != n {
        return Err(Error::validation(format!(
            "nlcrank: graph has {n} nodes, embedding {} rows, metrics {} rows",
            emb.node_count(),
            metrics.node_count()
        )));
    }
    let scores: Vec<f64> = (0..n)
        .into_par_iter()
        .map_init(
            || (HopScratch::new(n), Vec::new()),
            |(scratch, hood), i| {
                let node = NodeId::from(i);
                k_hop_neighborhood_into(graph, node, DEFAULT_HOPS, scratch, hood);
                let ks = metrics.core(node) as f64;
                let xi = emb.row(node);
                hood.iter()
                    .map(|&j| ks * (-squared_distance(xi, emb.row(j))).exp())
                    .sum::<f64>()
            },
        )
        .collect();
    RankingResult::from_scores("nlcrank", json!({ "hops": DEFAULT_HOPS }), scores)
}
