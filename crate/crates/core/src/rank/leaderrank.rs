use rayon::prelude::*;
use serde_json::json;

use super::RankingResult;
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeId};

/// LeaderRank: a ground node linked both ways to every node makes the
/// follow graph strongly connected; scores diffuse from followers to
/// followees until stationary, then the ground node's score is shared out
/// evenly.
///
/// Starts from `s_i = 1`, `s_g = 0` and iterates
/// `s_j <- sum over i -> j of s_i / outdeg(i)` in the augmented graph until
/// the L1 change drops below `tolerance`.
pub fn leader_rank(graph: &DirectedGraph, tolerance: f64, max_iter: usize) -> Result<RankingResult> {
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::validation("leaderrank needs a non-empty graph"));
    }
    if !(tolerance > 0.0) || max_iter == 0 {
        return Err(Error::validation("tolerance must be positive and max_iter at least 1"));
    }
    let params = json!({ "tolerance": tolerance, "max_iter": max_iter });

    // With no follow edges the augmented graph is bipartite (ground vs rest)
    // and the iteration oscillates; every node scores exactly 1.
    if graph.edge_count() == 0 {
        return RankingResult::from_scores("leaderrank", params, vec![1.0; n]);
    }

    let share: Vec<f64> = graph.nodes().map(|v| 1.0 / (graph.out_degree(v) + 1) as f64).collect();
    let nf = n as f64;
    let mut s = vec![1.0; n];
    let mut ground = 0.0;
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let from_ground = ground / nf;
        next.par_iter_mut().enumerate().for_each(|(j, slot)| {
            let pulled: f64 = graph
                .in_neighbors(NodeId::from(j))
                .iter()
                .map(|&i| s[i.index()] * share[i.index()])
                .sum();
            *slot = pulled + from_ground;
        });
        let next_ground: f64 = s.iter().zip(&share).map(|(x, w)| x * w).sum();
        residual = s.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum::<f64>() + (ground - next_ground).abs();
        std::mem::swap(&mut s, &mut next);
        ground = next_ground;
        if residual < tolerance {
            let final_scores = s.iter().map(|x| x + ground / nf).collect();
            return RankingResult::from_scores("leaderrank", params, final_scores);
        }
    }
    Err(Error::NonConvergence {
        method: "leaderrank",
        iterations: max_iter,
        residual,
    })
}
