//! Influence rankings: NLCRank, ASNERank and LeaderRank.

mod asnerank;
mod leaderrank;
mod nlc;

use std::cmp::Ordering;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeId};

pub use asnerank::{asne_rank, asne_rank_with, transition_weights, EdgeScore};
pub use leaderrank::leader_rank;
pub use nlc::nlc_rank;

/// Power-iteration settings shared by the PageRank-style rankers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PageRankParams {
    pub damping: f64,
    /// L1 change between successive iterates that counts as converged.
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        PageRankParams {
            damping: 0.85,
            tolerance: 1e-10,
            max_iter: 1000,
        }
    }
}

impl PageRankParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::validation(format!("damping {} outside (0, 1)", self.damping)));
        }
        if !(self.tolerance > 0.0) || self.max_iter == 0 {
            return Err(Error::validation("tolerance must be positive and max_iter at least 1"));
        }
        Ok(())
    }
}

/// Total order on `(node, score)`: score descending, then NodeId ascending.
pub fn rank_order(a: &(NodeId, f64), b: &(NodeId, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// All nodes of a graph in rank order with their scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingResult {
    /// Label such as `deepwalk+nlcrank` or `leaderrank`.
    pub method: String,
    pub params: serde_json::Value,
    pub entries: Vec<(NodeId, f64)>,
}

impl RankingResult {
    /// Sorts per-node scores (indexed by NodeId) into a ranking.
    pub fn from_scores(method: impl Into<String>, params: serde_json::Value, scores: Vec<f64>) -> Result<Self> {
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::validation(format!("non-finite score for node {i}")));
        }
        let mut entries: Vec<(NodeId, f64)> = scores.into_iter().enumerate().map(|(i, s)| (NodeId::from(i), s)).collect();
        entries.sort_by(rank_order);
        Ok(RankingResult {
            method: method.into(),
            params,
            entries,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    /// Scores indexed by NodeId.
    pub fn scores(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.entries.len()];
        for &(v, x) in &self.entries {
            s[v.index()] = x;
        }
        s
    }

    /// 0-based rank position of every node, indexed by NodeId.
    pub fn positions(&self) -> Vec<usize> {
        let mut p = vec![0; self.entries.len()];
        for (pos, &(v, _)) in self.entries.iter().enumerate() {
            p[v.index()] = pos;
        }
        p
    }

    pub fn with_method(mut self, method: impl Into<String>) -> Self {
        self.method = method.into();
        self
    }
}

/// The first `n` nodes of the ranking.
pub fn top_n(result: &RankingResult, n: usize) -> Result<Vec<NodeId>> {
    if n == 0 || n > result.len() {
        return Err(Error::validation(format!(
            "top-n size {n} outside 1..={} nodes",
            result.len()
        )));
    }
    Ok(result.entries[..n].iter().map(|e| e.0).collect())
}

/// CSV `rank,external_id,score,method`; rank is 1-based.
pub fn write_ranking_csv<W: Write>(result: &RankingResult, graph: &DirectedGraph, mut out: W) -> Result<()> {
    writeln!(out, "rank,external_id,score,method")?;
    for (pos, &(v, score)) in result.entries.iter().enumerate() {
        writeln!(out, "{},{},{:?},{}", pos + 1, graph.external_id(v), score, result.method)?;
    }
    Ok(())
}

/// Writes only the first `n` rows of the ranking CSV.
pub fn write_top_csv<W: Write>(result: &RankingResult, graph: &DirectedGraph, n: usize, mut out: W) -> Result<()> {
    let head = top_n(result, n)?;
    writeln!(out, "rank,external_id,score,method")?;
    for (pos, (&v, &(_, score))) in head.iter().zip(&result.entries).enumerate() {
        writeln!(out, "{},{},{:?},{}", pos + 1, graph.external_id(v), score, result.method)?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct JsonEntry {
    rank: usize,
    external_id: String,
    score: f64,
}

#[derive(Serialize, Deserialize)]
struct JsonRanking {
    method: String,
    params: serde_json::Value,
    entries: Vec<JsonEntry>,
}

pub fn write_ranking_json<W: Write>(result: &RankingResult, graph: &DirectedGraph, out: W) -> Result<()> {
    let doc = JsonRanking {
        method: result.method.clone(),
        params: result.params.clone(),
        entries: result
            .entries
            .iter()
            .enumerate()
            .map(|(pos, &(v, score))| JsonEntry {
                rank: pos + 1,
                external_id: graph.external_id(v).to_owned(),
                score,
            })
            .collect(),
    };
    serde_json::to_writer_pretty(out, &doc).map_err(|e| Error::validation(e.to_string()))
}

/// Reads a full ranking CSV back; it must cover every graph node once.
pub fn read_ranking_csv<R: Read>(source: R, graph: &DirectedGraph) -> Result<RankingResult> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let mut entries = Vec::with_capacity(graph.node_count());
    let mut seen = vec![false; graph.node_count()];
    let mut method = String::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 4 {
            return Err(Error::parse(line, "expected rank,external_id,score,method"));
        }
        let node = graph
            .node_id(&record[1])
            .ok_or_else(|| Error::parse(line, format!("unknown node ID {:?}", &record[1])))?;
        let score: f64 = record[2]
            .parse()
            .map_err(|_| Error::parse(line, format!("bad score {:?}", &record[2])))?;
        if std::mem::replace(&mut seen[node.index()], true) {
            return Err(Error::parse(line, format!("node {:?} listed twice", &record[1])));
        }
        method = record[3].to_owned();
        entries.push((node, score));
    }
    if entries.len() != graph.node_count() {
        return Err(Error::validation(format!(
            "ranking lists {} of {} nodes",
            entries.len(),
            graph.node_count()
        )));
    }
    entries.sort_by(rank_order);
    Ok(RankingResult {
        method,
        params: serde_json::Value::Null,
        entries,
    })
}
