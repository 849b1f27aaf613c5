use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{DirectedGraph, NodeId};
use crate::error::{Error, Result};

/// Per-user stance on a topic: shares of supporting, rejecting and
/// irrelevant content.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attitude {
    pub support: f64,
    pub reject: f64,
    pub irrelevant: f64,
}

impl Attitude {
    pub fn new(support: f64, reject: f64, irrelevant: f64) -> Result<Self> {
        for (name, v) in [("support", support), ("reject", reject), ("irrelevant", irrelevant)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::validation(format!("attitude {name}={v} outside [0, 1]")));
            }
        }
        Ok(Attitude {
            support,
            reject,
            irrelevant,
        })
    }
}

/// Column selection for an attribute CSV.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeFormat {
    /// Column holding the external node ID; defaults to the first column.
    #[serde(default)]
    pub id_column: Option<String>,
    /// Feature columns in order; defaults to every column except the ID.
    #[serde(default)]
    pub feature_columns: Option<Vec<String>>,
    /// Optional `(support, reject, irrelevant)` columns.
    #[serde(default)]
    pub attitude_columns: Option<[String; 3]>,
}

/// Dense `node_count x dim` attribute rows aligned to a graph.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributeTable {
    rows: usize,
    dim: usize,
    columns: Vec<String>,
    values: Vec<f64>,
    attitudes: Option<Vec<Option<Attitude>>>,
}

impl AttributeTable {
    pub fn zeros(node_count: usize, dim: usize) -> Self {
        AttributeTable {
            rows: node_count,
            dim,
            columns: (0..dim).map(|c| format!("f{c}")).collect(),
            values: vec![0.0; node_count * dim],
            attitudes: None,
        }
    }

    /// Builds a table from explicit rows; every row must have the same length.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut table = Self::zeros(rows.len(), dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::validation(format!(
                    "row {i} has {} values, expected {dim}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(format!("row {i} has a non-finite value")));
            }
            table.values[i * dim..(i + 1) * dim].copy_from_slice(&row);
        }
        Ok(table)
    }

    pub fn with_columns(mut self, columns: Vec<String>) -> Result<Self> {
        if columns.len() != self.dim {
            return Err(Error::validation(format!(
                "{} column names for dimension {}",
                columns.len(),
                self.dim
            )));
        }
        self.columns = columns;
        Ok(self)
    }

    pub fn with_attitudes(mut self, attitudes: Vec<Option<Attitude>>) -> Result<Self> {
        if attitudes.len() != self.node_count() {
            return Err(Error::validation(format!(
                "{} attitudes for {} nodes",
                attitudes.len(),
                self.node_count()
            )));
        }
        self.attitudes = Some(attitudes);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.rows
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    #[inline]
    pub fn row(&self, node: NodeId) -> &[f64] {
        let i = node.index();
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn has_attitudes(&self) -> bool {
        self.attitudes.is_some()
    }

    pub fn attitude(&self, node: NodeId) -> Option<Attitude> {
        self.attitudes.as_ref().and_then(|a| a.get(node.index()).copied().flatten())
    }
}

/// Result of [`load_attributes`]: the aligned table plus coverage diagnostics.
#[derive(Clone, Debug)]
pub struct AttributeLoad {
    pub table: AttributeTable,
    /// Graph nodes with no row in the file; they received zero vectors.
    pub missing_nodes: Vec<NodeId>,
    /// Rows whose ID is not a graph node; skipped.
    pub unknown_ids: Vec<String>,
}

fn parse_cell(cell: &str, line: usize, column: &str) -> Result<f64> {
    let cell = cell.trim();
    let value = match cell.to_ascii_lowercase().as_str() {
        "true" => 1.0,
        "false" => 0.0,
        _ => cell
            .parse::<f64>()
            .map_err(|_| Error::parse(line, format!("column {column}: non-numeric value {cell:?}")))?,
    };
    if !value.is_finite() {
        return Err(Error::parse(line, format!("column {column}: non-finite value {cell:?}")));
    }
    Ok(value)
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::validation(format!("attribute file has no column {name:?}")))
}

/// Reads a headered CSV of per-node attributes and aligns it to `graph`.
///
/// Booleans `true`/`false` are read as 1/0. Nodes without a row get the
/// zero vector and are listed in [`AttributeLoad::missing_nodes`].
pub fn load_attributes<R: Read>(source: R, graph: &DirectedGraph, format: &AttributeFormat) -> Result<AttributeLoad> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .clone();
    if headers.is_empty() {
        return Err(Error::parse(1, "attribute file has no header"));
    }

    let id_col = match &format.id_column {
        Some(name) => column_index(&headers, name)?,
        None => 0,
    };
    let feature_cols: Vec<usize> = match &format.feature_columns {
        Some(names) => names
            .iter()
            .map(|n| column_index(&headers, n))
            .collect::<Result<_>>()?,
        None => (0..headers.len()).filter(|&c| c != id_col).collect(),
    };
    let attitude_cols = match &format.attitude_columns {
        Some(names) => Some([
            column_index(&headers, &names[0])?,
            column_index(&headers, &names[1])?,
            column_index(&headers, &names[2])?,
        ]),
        None => None,
    };

    let n = graph.node_count();
    let dim = feature_cols.len();
    let mut values = vec![0.0; n * dim];
    let mut seen = vec![false; n];
    let mut attitudes = attitude_cols.map(|_| vec![None; n]);
    let mut unknown_ids = Vec::new();

    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let id = record.get(id_col).unwrap_or("").trim();
        if id.is_empty() {
            return Err(Error::parse(line, "empty node ID"));
        }
        let Some(node) = graph.node_id(id) else {
            unknown_ids.push(id.to_owned());
            continue;
        };
        let i = node.index();
        for (k, &c) in feature_cols.iter().enumerate() {
            let cell = record
                .get(c)
                .ok_or_else(|| Error::parse(line, format!("missing column {}", &headers[c])))?;
            values[i * dim + k] = parse_cell(cell, line, &headers[c])?;
        }
        if let (Some(cols), Some(att)) = (attitude_cols, attitudes.as_mut()) {
            let mut triple = [0.0; 3];
            for (t, &c) in triple.iter_mut().zip(cols.iter()) {
                let cell = record
                    .get(c)
                    .ok_or_else(|| Error::parse(line, format!("missing column {}", &headers[c])))?;
                *t = parse_cell(cell, line, &headers[c])?;
            }
            att[i] = Some(
                Attitude::new(triple[0], triple[1], triple[2])
                    .map_err(|e| Error::parse(line, e.to_string()))?,
            );
        }
        seen[i] = true;
    }

    if !unknown_ids.is_empty() {
        log::warn!("attribute file: skipped {} rows with unknown IDs", unknown_ids.len());
    }
    let missing_nodes: Vec<NodeId> = (0..n).filter(|&i| !seen[i]).map(NodeId::from).collect();
    if !missing_nodes.is_empty() {
        log::warn!(
            "attribute file: {} of {n} graph nodes have no row and get zero vectors",
            missing_nodes.len()
        );
    }

    let table = AttributeTable {
        rows: n,
        dim,
        columns: feature_cols.iter().map(|&c| headers[c].to_owned()).collect(),
        values,
        attitudes,
    };
    Ok(AttributeLoad {
        table,
        missing_nodes,
        unknown_ids,
    })
}
