use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{DirectedGraph, GraphBuilder};
use crate::error::{Error, Result};

/// Token separator for edge-list lines.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Separator {
    /// Comma if the line contains one, whitespace otherwise.
    #[default]
    Auto,
    Whitespace,
    Comma,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeListFormat {
    #[serde(default)]
    pub separator: Separator,
    /// Skip the first non-comment line (e.g. `from,to`).
    #[serde(default)]
    pub header: bool,
}

/// Counts gathered while ingesting an edge list.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub lines_read: usize,
    pub nodes: usize,
    pub edges: usize,
    pub self_loops_dropped: usize,
    pub duplicate_edges_dropped: usize,
}

fn split_line(line: &str, sep: Separator) -> Vec<&str> {
    let comma = match sep {
        Separator::Comma => true,
        Separator::Whitespace => false,
        Separator::Auto => line.contains(','),
    };
    if comma {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Reads `follower followee` pairs, one per line.
///
/// Blank lines and lines starting with `#` are ignored. Dense IDs are
/// assigned in order of first appearance.
pub fn load_edge_list<R: BufRead>(reader: R, format: &EdgeListFormat) -> Result<(DirectedGraph, IngestReport)> {
    let mut builder = GraphBuilder::new();
    let mut report = IngestReport::default();
    let mut header_pending = format.header;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        report.lines_read = lineno;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        let tokens = split_line(trimmed, format.separator);
        if tokens.len() != 2 {
            return Err(Error::parse(
                lineno,
                format!("expected 2 tokens (follower, followee), found {}", tokens.len()),
            ));
        }
        if tokens.iter().any(|t| t.is_empty()) {
            return Err(Error::parse(lineno, "empty node ID"));
        }
        builder.add_edge(tokens[0], tokens[1]);
    }

    let (graph, loops, dups) = builder.build_with_counts();
    report.nodes = graph.node_count();
    report.edges = graph.edge_count();
    report.self_loops_dropped = loops;
    report.duplicate_edges_dropped = dups;
    if loops + dups > 0 {
        log::info!("edge list: dropped {loops} self-loops and {dups} duplicate edges");
    }
    Ok((graph, report))
}

/// Writes the edge set as `follower,followee` lines in ascending NodeId order.
pub fn write_edge_list<W: Write>(graph: &DirectedGraph, mut out: W) -> Result<()> {
    for (u, v) in graph.edges() {
        writeln!(out, "{},{}", graph.external_id(u), graph.external_id(v))?;
    }
    Ok(())
}
