//! Uniform (DeepWalk) and second-order biased (node2vec) random walks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeId};
use crate::seed;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WalkDirection {
    /// Follower to followee.
    #[default]
    OutEdges,
    Undirected,
}

impl WalkDirection {
    #[inline]
    pub fn neighbors(self, graph: &DirectedGraph, node: NodeId) -> &[NodeId] {
        match self {
            WalkDirection::OutEdges => graph.out_neighbors(node),
            WalkDirection::Undirected => graph.undirected_neighbors(node),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WalkStrategy {
    Uniform,
    /// `p` is the return parameter, `q` the in-out parameter.
    Biased { p: f64, q: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub walk_length: usize,
    pub num_walks: usize,
    pub window: usize,
    pub strategy: WalkStrategy,
    pub direction: WalkDirection,
    pub rng_seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walk_length: 80,
            num_walks: 10,
            window: 10,
            strategy: WalkStrategy::Uniform,
            direction: WalkDirection::OutEdges,
            rng_seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walk_length == 0 {
            return Err(Error::validation("walk_length must be at least 1"));
        }
        if self.num_walks == 0 {
            return Err(Error::validation("num_walks must be at least 1"));
        }
        if let WalkStrategy::Biased { p, q } = self.strategy {
            if !(p > 0.0 && p.is_finite() && q > 0.0 && q.is_finite()) {
                return Err(Error::validation(format!("node2vec p={p}, q={q} must be positive")));
            }
        }
        Ok(())
    }
}

/// Flat storage of walks; walk `r * node_count + v` starts at node `v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkCorpus {
    node_count: usize,
    offsets: Vec<usize>,
    tokens: Vec<NodeId>,
    truncated: usize,
}

impl WalkCorpus {
    /// Builds a corpus from explicit walks over `node_count` nodes.
    pub fn from_walks(node_count: usize, walks: Vec<Vec<NodeId>>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(walks.len() + 1);
        offsets.push(0);
        let mut tokens = Vec::new();
        for w in walks {
            if let Some(bad) = w.iter().find(|v| v.index() >= node_count) {
                return Err(Error::validation(format!("walk node {bad} out of range")));
            }
            tokens.extend(w);
            offsets.push(tokens.len());
        }
        Ok(WalkCorpus {
            node_count,
            offsets,
            tokens,
            truncated: 0,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    /// Walks that stopped early at a node without traversal neighbours.
    pub fn truncated(&self) -> usize {
        self.truncated
    }

    pub fn walk(&self, i: usize) -> &[NodeId] {
        &self.tokens[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[NodeId]> + '_ {
        (0..self.len()).map(move |i| self.walk(i))
    }

    /// Occurrence count of every node.
    pub fn frequencies(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.node_count];
        for t in &self.tokens {
            counts[t.index()] += 1;
        }
        counts
    }
}

fn biased_step<R: Rng>(
    graph: &DirectedGraph,
    direction: WalkDirection,
    prev: NodeId,
    neighbors: &[NodeId],
    p: f64,
    q: f64,
    weights: &mut Vec<f64>,
    rng: &mut R,
) -> NodeId {
    let prev_neighbors = direction.neighbors(graph, prev);
    weights.clear();
    let mut total = 0.0;
    for &x in neighbors {
        let w = if x == prev {
            1.0 / p
        } else if prev_neighbors.binary_search(&x).is_ok() {
            1.0
        } else {
            1.0 / q
        };
        total += w;
        weights.push(total);
    }
    let draw = rng.random::<f64>() * total;
    let k = weights.partition_point(|&c| c <= draw).min(neighbors.len() - 1);
    neighbors[k]
}

fn single_walk(graph: &DirectedGraph, cfg: &WalkConfig, start: NodeId, round: usize) -> Vec<NodeId> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.rng_seed, &[round as u64, start.0 as u64]));
    let mut walk = Vec::with_capacity(cfg.walk_length);
    let mut weights = Vec::new();
    walk.push(start);
    while walk.len() < cfg.walk_length {
        let cur = *walk.last().unwrap();
        let neighbors = cfg.direction.neighbors(graph, cur);
        if neighbors.is_empty() {
            break;
        }
        let next = match (cfg.strategy, walk.len()) {
            (WalkStrategy::Biased { p, q }, len) if len >= 2 => {
                biased_step(graph, cfg.direction, walk[len - 2], neighbors, p, q, &mut weights, &mut rng)
            }
            _ => neighbors[rng.random_range(0..neighbors.len())],
        };
        walk.push(next);
    }
    walk
}

/// Generates `num_walks` walks from every node.
///
/// Each (round, start node) pair has its own RNG stream derived from
/// `rng_seed`, so the corpus is identical for any thread count.
pub fn generate_walks(graph: &DirectedGraph, cfg: &WalkConfig) -> Result<WalkCorpus> {
    cfg.validate()?;
    if graph.is_empty() {
        return Err(Error::validation("cannot generate walks on an empty graph"));
    }
    let n = graph.node_count();
    let walks: Vec<Vec<NodeId>> = (0..cfg.num_walks * n)
        .into_par_iter()
        .map(|task| single_walk(graph, cfg, NodeId::from(task % n), task / n))
        .collect();
    let truncated = walks.iter().filter(|w| w.len() < cfg.walk_length).count();
    let mut corpus = WalkCorpus::from_walks(n, walks)?;
    corpus.truncated = truncated;
    Ok(corpus)
}
