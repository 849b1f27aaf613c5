use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{PageRankParams, RankingResult};
use crate::embed::{dot, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeId};

/// Exponent used for the follow-edge weight `exp(s(u_i, u_j))`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeScore {
    /// Raw dot product `u_j . u_i`.
    #[default]
    Dot,
    /// Cosine similarity (dot product of unit-normalised rows).
    Cosine,
}

/// Row-stochastic transition probabilities over each node's followees,
/// laid out in the order of [`DirectedGraph::edges`].
///
/// `P[i][j] = exp(s_ij - max_k s_ik) / sum_k exp(s_ik - max_k s_ik)`.
pub fn transition_weights(graph: &DirectedGraph, emb: &EmbeddingMatrix) -> Vec<f64> {
    let mut probs = Vec::with_capacity(graph.edge_count());
    for i in graph.nodes() {
        let ui = emb.row(i);
        let followees = graph.out_neighbors(i);
        let start = probs.len();
        let mut max = f64::NEG_INFINITY;
        for &j in followees {
            let s = dot(emb.row(j), ui);
            max = max.max(s);
            probs.push(s);
        }
        let row = &mut probs[start..];
        let mut total = 0.0;
        for w in row.iter_mut() {
            *w = (*w - max).exp();
            total += *w;
        }
        row.iter_mut().for_each(|w| *w /= total);
    }
    probs
}

/// Solves `r = (1-d)/N + d (P^T r + dangling mass / N)` by pull-style power
/// iteration. Each node's sum runs over its followers in a fixed order, so
/// the result does not depend on the thread count.
pub(crate) fn power_iteration(
    graph: &DirectedGraph,
    out_probs: &[f64],
    params: &PageRankParams,
    method: &'static str,
) -> Result<Vec<f64>> {
    params.validate()?;
    let n = graph.node_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    // Edge offsets into `out_probs` for every follower of every node.
    let mut out_start = Vec::with_capacity(n + 1);
    out_start.push(0usize);
    for v in graph.nodes() {
        out_start.push(out_start[v.index()] + graph.out_degree(v));
    }
    let in_probs: Vec<Vec<f64>> = graph
        .nodes()
        .map(|j| {
            graph
                .in_neighbors(j)
                .iter()
                .map(|&i| {
                    let k = graph.out_neighbors(i).binary_search(&j).expect("reverse edge present");
                    out_probs[out_start[i.index()] + k]
                })
                .collect()
        })
        .collect();
    let dangling: Vec<NodeId> = graph.nodes().filter(|&v| graph.out_degree(v) == 0).collect();

    let d = params.damping;
    let nf = n as f64;
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..params.max_iter {
        let dangling_mass: f64 = dangling.iter().map(|v| rank[v.index()]).sum();
        let base = (1.0 - d) / nf + d * dangling_mass / nf;
        next.par_iter_mut().enumerate().for_each(|(j, slot)| {
            let node = NodeId::from(j);
            let pulled: f64 = graph
                .in_neighbors(node)
                .iter()
                .zip(&in_probs[j])
                .map(|(&i, &p)| rank[i.index()] * p)
                .sum();
            *slot = base + d * pulled;
        });
        residual = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if residual < params.tolerance {
            let total: f64 = rank.iter().sum();
            rank.iter_mut().for_each(|r| *r /= total);
            return Ok(rank);
        }
    }
    Err(Error::NonConvergence {
        method,
        iterations: params.max_iter,
        residual,
    })
}

/// ASNERank with the literal `exp(u_j . u_i)` follow-edge weights.
pub fn asne_rank(graph: &DirectedGraph, emb: &EmbeddingMatrix, params: &PageRankParams) -> Result<RankingResult> {
    asne_rank_with(graph, emb, params, EdgeScore::Dot)
}

/// ASNERank: PageRank over follow edges `i -> j` weighted by
/// `exp(score(u_j, u_i))`, normalised per follower.
pub fn asne_rank_with(
    graph: &DirectedGraph,
    emb: &EmbeddingMatrix,
    params: &PageRankParams,
    score: EdgeScore,
) -> Result<RankingResult> {
    if emb.node_count() != graph.node_count() {
        return Err(Error::validation(format!(
            "asnerank: graph has {} nodes, embedding {} rows",
            graph.node_count(),
            emb.node_count()
        )));
    }
    let probs = match score {
        EdgeScore::Dot => transition_weights(graph, emb),
        EdgeScore::Cosine => transition_weights(graph, &emb.normalized()),
    };
    let ranks = power_iteration(graph, &probs, params, "asnerank")?;
    RankingResult::from_scores(
        "asnerank",
        json!({
            "damping": params.damping,
            "tolerance": params.tolerance,
            "max_iter": params.max_iter,
            "edge_score": score,
        }),
        ranks,
    )
}
