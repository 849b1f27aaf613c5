//! Combining leader lists from several rankers, attitude summaries and
//! persistence of leaders across snapshots.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttributeTable, DirectedGraph, NodeId};
use crate::rank::RankingResult;

/// Value at percentile `p` (0..=100) of `values`, interpolating linearly
/// between closest ranks.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Flags nodes that have both few followers and few followees relative to
/// the rest of the graph.
#[derive(Clone, Debug, PartialEq)]
pub struct OutlierFilter {
    pub percentile: f64,
    /// In-degree (follower count) threshold.
    pub min_followers: f64,
    /// Out-degree (followee count) threshold.
    pub min_followees: f64,
    outlier: Vec<bool>,
}

impl OutlierFilter {
    pub fn new(graph: &DirectedGraph, percentile: f64) -> Result<Self> {
        if !(0.0..100.0).contains(&percentile) {
            return Err(Error::validation(format!("outlier percentile {percentile} outside [0, 100)")));
        }
        if graph.is_empty() {
            return Err(Error::validation("outlier filter needs a non-empty graph"));
        }
        let ins: Vec<f64> = graph.nodes().map(|v| graph.in_degree(v) as f64).collect();
        let outs: Vec<f64> = graph.nodes().map(|v| graph.out_degree(v) as f64).collect();
        let min_followers = percentile_or_floor(&ins, percentile);
        let min_followees = percentile_or_floor(&outs, percentile);
        let outlier = ins
            .iter()
            .zip(&outs)
            .map(|(&i, &o)| i < min_followers && o < min_followees)
            .collect();
        Ok(OutlierFilter {
            percentile,
            min_followers,
            min_followees,
            outlier,
        })
    }

    pub fn node_count(&self) -> usize {
        self.outlier.len()
    }

    pub fn is_outlier(&self, node: NodeId) -> bool {
        self.outlier[node.index()]
    }

    pub fn outlier_count(&self) -> usize {
        self.outlier.iter().filter(|&&o| o).count()
    }
}

// Percentile 0 is the minimum, which nothing can fall strictly below.
fn percentile_or_floor(values: &[f64], p: f64) -> f64 {
    if p == 0.0 {
        f64::NEG_INFINITY
    } else {
        percentile(values, p)
    }
}

/// Drops outliers from `nodes`, keeping order.
pub fn apply_outlier_filter(nodes: &[NodeId], graph: &DirectedGraph, percentile: f64) -> Result<Vec<NodeId>> {
    let filter = OutlierFilter::new(graph, percentile)?;
    for &v in nodes {
        graph.check_node(v)?;
    }
    Ok(nodes.iter().copied().filter(|&v| !filter.is_outlier(v)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub node: NodeId,
    pub borda: u64,
    /// 0-based position in each input list after filtering, in input order.
    pub positions: Vec<usize>,
}

/// Borda merge of several rankings produced by the same ranker.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergedList {
    /// Method label of each input list.
    pub methods: Vec<String>,
    pub candidates: Vec<Candidate>,
}

impl MergedList {
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.candidates.iter().map(|c| c.node)
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Equal-weight Borda merge. Outliers are removed from every list first;
/// then a node at 0-based position `p` of a list with `N'` survivors earns
/// `N' - p` points. Ties go to the smaller NodeId.
pub fn merge_same_ranker(lists: &[&RankingResult], filter: &OutlierFilter) -> Result<MergedList> {
    if lists.is_empty() {
        return Err(Error::validation("nothing to merge"));
    }
    let n = filter.node_count();
    for list in lists {
        if list.len() != n {
            return Err(Error::validation(format!(
                "ranking {:?} covers {} nodes, graph has {n}",
                list.method,
                list.len()
            )));
        }
    }
    let survivors = n - filter.outlier_count();
    let mut borda = vec![0u64; n];
    let mut positions = vec![Vec::with_capacity(lists.len()); n];
    for list in lists {
        let kept = list.nodes().filter(|&v| !filter.is_outlier(v));
        for (pos, v) in kept.enumerate() {
            borda[v.index()] += (survivors - pos) as u64;
            positions[v.index()].push(pos);
        }
    }
    let mut candidates: Vec<Candidate> = positions
        .into_iter()
        .enumerate()
        .filter(|(i, _)| !filter.is_outlier(NodeId::from(*i)))
        .map(|(i, positions)| Candidate {
            node: NodeId::from(i),
            borda: borda[i],
            positions,
        })
        .collect();
    candidates.sort_by(|a, b| b.borda.cmp(&a.borda).then(a.node.cmp(&b.node)));
    Ok(MergedList {
        methods: lists.iter().map(|l| l.method.clone()).collect(),
        candidates,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombineConfig {
    pub n: usize,
    /// ASNERank share : NLCRank share.
    pub ratio: (u32, u32),
    pub outlier_percentile: f64,
}

impl Default for CombineConfig {
    fn default() -> Self {
        CombineConfig {
            n: 15,
            ratio: (1, 2),
            outlier_percentile: 10.0,
        }
    }
}

impl CombineConfig {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.ratio;
        if a == 0 || b == 0 {
            return Err(Error::validation(format!("ratio parts must be positive, got {a}:{b}")));
        }
        if self.n < (a + b) as usize {
            return Err(Error::validation(format!(
                "n = {} cannot realise ratio {a}:{b}",
                self.n
            )));
        }
        if !(0.0..100.0).contains(&self.outlier_percentile) {
            return Err(Error::validation(format!(
                "outlier percentile {} outside [0, 100)",
                self.outlier_percentile
            )));
        }
        Ok(())
    }

    /// Size of the ASNERank part; the NLCRank part gets the rest.
    pub fn asnerank_quota(&self) -> usize {
        let (a, b) = self.ratio;
        self.n * a as usize / (a + b) as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinedLeaders {
    pub asnerank_part: Vec<NodeId>,
    pub nlcrank_part: Vec<NodeId>,
    /// Methods that placed each leader within their top `n`, or failing
    /// that the methods that ranked it highest.
    pub provenance: BTreeMap<NodeId, Vec<String>>,
}

impl CombinedLeaders {
    pub fn len(&self) -> usize {
        self.asnerank_part.len() + self.nlcrank_part.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.asnerank_part.iter().chain(&self.nlcrank_part).copied()
    }
}

/// Splits `cfg.n` leaders between the two merged lists by `cfg.ratio`.
/// A node heading both lists stays in the ASNERank part and the NLCRank
/// part moves on to its next candidate.
pub fn combine_leaders(asnerank: &MergedList, nlcrank: &MergedList, cfg: &CombineConfig) -> Result<CombinedLeaders> {
    cfg.validate()?;
    let quota_a = cfg.asnerank_quota();
    let quota_b = cfg.n - quota_a;
    if asnerank.len() < quota_a {
        return Err(Error::validation(format!(
            "ASNERank part needs {quota_a} candidates, {} remain after filtering (short by {})",
            asnerank.len(),
            quota_a - asnerank.len()
        )));
    }
    let asnerank_part: Vec<NodeId> = asnerank.nodes().take(quota_a).collect();
    let taken: HashSet<NodeId> = asnerank_part.iter().copied().collect();
    let nlcrank_part: Vec<NodeId> = nlcrank.nodes().filter(|v| !taken.contains(v)).take(quota_b).collect();
    if nlcrank_part.len() < quota_b {
        return Err(Error::validation(format!(
            "NLCRank part needs {quota_b} candidates, {} remain after filtering and deduplication (short by {})",
            nlcrank_part.len(),
            quota_b - nlcrank_part.len()
        )));
    }

    let lookup = |list: &MergedList| -> HashMap<NodeId, usize> {
        list.candidates.iter().enumerate().map(|(i, c)| (c.node, i)).collect()
    };
    let (idx_a, idx_b) = (lookup(asnerank), lookup(nlcrank));
    let mut provenance = BTreeMap::new();
    for v in asnerank_part.iter().chain(&nlcrank_part).copied() {
        let mut per_method: Vec<(&str, usize)> = Vec::new();
        for (list, idx) in [(asnerank, &idx_a), (nlcrank, &idx_b)] {
            if let Some(&i) = idx.get(&v) {
                let c = &list.candidates[i];
                per_method.extend(list.methods.iter().map(String::as_str).zip(c.positions.iter().copied()));
            }
        }
        let mut chosen: Vec<String> = per_method
            .iter()
            .filter(|(_, p)| *p < cfg.n)
            .map(|(m, _)| m.to_string())
            .collect();
        if chosen.is_empty() {
            let best = per_method.iter().map(|(_, p)| *p).min().unwrap_or(0);
            chosen = per_method
                .iter()
                .filter(|(_, p)| *p == best)
                .map(|(m, _)| m.to_string())
                .collect();
        }
        provenance.insert(v, chosen);
    }
    Ok(CombinedLeaders {
        asnerank_part,
        nlcrank_part,
        provenance,
    })
}

/// CSV `part,rank,external_id,provenance`; provenance methods are joined
/// with `;`.
pub fn write_combined_csv<W: Write>(leaders: &CombinedLeaders, graph: &DirectedGraph, mut out: W) -> Result<()> {
    writeln!(out, "part,rank,external_id,provenance")?;
    for (part, nodes) in [("asnerank", &leaders.asnerank_part), ("nlcrank", &leaders.nlcrank_part)] {
        for (pos, &v) in nodes.iter().enumerate() {
            let prov = leaders.provenance.get(&v).map(|m| m.join(";")).unwrap_or_default();
            writeln!(out, "{part},{},{},{prov}", pos + 1, graph.external_id(v))?;
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttitudeSummary {
    pub support: f64,
    pub reject: f64,
    pub irrelevant: f64,
    pub count: usize,
}

/// Mean attitude over a node set.
pub fn attitude_summary(nodes: &[NodeId], attrs: &AttributeTable) -> Result<AttitudeSummary> {
    if nodes.is_empty() {
        return Err(Error::validation("attitude summary of an empty node set"));
    }
    let mut missing = Vec::new();
    let (mut s, mut r, mut i) = (0.0, 0.0, 0.0);
    for &v in nodes {
        if v.index() >= attrs.node_count() {
            missing.push(v);
            continue;
        }
        match attrs.attitude(v) {
            Some(a) => {
                s += a.support;
                r += a.reject;
                i += a.irrelevant;
            }
            None => missing.push(v),
        }
    }
    if !missing.is_empty() {
        let ids: Vec<String> = missing.iter().map(|v| v.to_string()).collect();
        return Err(Error::validation(format!("no attitude data for nodes {}", ids.join(", "))));
    }
    let k = nodes.len() as f64;
    Ok(AttitudeSummary {
        support: s / k,
        reject: r / k,
        irrelevant: i / k,
        count: nodes.len(),
    })
}

/// CSV `group,support,reject,irrelevant`.
pub fn write_attitude_csv<W: Write>(groups: &[(String, AttitudeSummary)], mut out: W) -> Result<()> {
    writeln!(out, "group,support,reject,irrelevant")?;
    for (name, a) in groups {
        writeln!(out, "{name},{:?},{:?},{:?}", a.support, a.reject, a.irrelevant)?;
    }
    Ok(())
}

pub fn jaccard<T: Eq + std::hash::Hash>(a: &HashSet<T>, b: &HashSet<T>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    inter as f64 / (a.len() + b.len() - inter) as f64
}

/// A snapshot's complete ranking as external IDs, best first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRanking {
    pub label: String,
    pub ranked_ids: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodePersistence {
    pub external_id: String,
    /// Number of snapshots with the node in their top `k`.
    pub appearances: usize,
    /// 1-based rank in each snapshot; `None` where the node is absent.
    pub ranks: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersistenceReport {
    pub k: usize,
    pub labels: Vec<String>,
    /// Jaccard similarity of the top-`k` sets of snapshots `t` and `t+1`.
    pub adjacent_jaccard: Vec<f64>,
    /// Every node that reached some top `k`, most persistent first.
    pub nodes: Vec<NodePersistence>,
}

pub fn temporal_overlap(series: &[SnapshotRanking], k: usize) -> Result<PersistenceReport> {
    if series.len() < 2 {
        return Err(Error::validation("temporal overlap needs at least two snapshots"));
    }
    if k == 0 {
        return Err(Error::validation("k must be at least 1"));
    }
    for s in series {
        if k > s.ranked_ids.len() {
            return Err(Error::validation(format!(
                "k = {k} exceeds the {} nodes of snapshot {:?}",
                s.ranked_ids.len(),
                s.label
            )));
        }
    }
    let tops: Vec<HashSet<&str>> = series
        .iter()
        .map(|s| s.ranked_ids[..k].iter().map(String::as_str).collect())
        .collect();
    let adjacent_jaccard = tops.windows(2).map(|w| jaccard(&w[0], &w[1])).collect();

    let positions: Vec<HashMap<&str, usize>> = series
        .iter()
        .map(|s| s.ranked_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i + 1)).collect())
        .collect();
    let mut ids: Vec<&str> = tops.iter().flatten().copied().collect::<HashSet<_>>().into_iter().collect();
    ids.sort_unstable();
    let mut nodes: Vec<NodePersistence> = ids
        .into_iter()
        .map(|id| NodePersistence {
            external_id: id.to_owned(),
            appearances: tops.iter().filter(|t| t.contains(id)).count(),
            ranks: positions.iter().map(|p| p.get(id).copied()).collect(),
        })
        .collect();
    nodes.sort_by(|a, b| b.appearances.cmp(&a.appearances).then_with(|| a.external_id.cmp(&b.external_id)));
    Ok(PersistenceReport {
        k,
        labels: series.iter().map(|s| s.label.clone()).collect(),
        adjacent_jaccard,
        nodes,
    })
}

/// CSV `external_id,appearances,<one rank column per snapshot>`; absent
/// ranks are empty cells.
pub fn write_persistence_csv<W: Write>(report: &PersistenceReport, mut out: W) -> Result<()> {
    write!(out, "external_id,appearances")?;
    for l in &report.labels {
        write!(out, ",rank_{l}")?;
    }
    writeln!(out)?;
    for n in &report.nodes {
        write!(out, "{},{}", n.external_id, n.appearances)?;
        for r in &n.ranks {
            match r {
                Some(r) => write!(out, ",{r}")?,
                None => write!(out, ",")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}
