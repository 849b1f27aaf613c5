//! Embedding export/import.
//!
//! CSV: header `id,e0,..,e{d-1}`, one row per node with the external ID and
//! shortest round-trip decimal floats.
//!
//! Binary (little-endian): magic `OLEM`, version `u32`, node count `u64`,
//! dim `u32`, then row-major `f64` values in NodeId order.

use std::io::{Read, Write};

use super::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;

const MAGIC: &[u8; 4] = b"OLEM";
const VERSION: u32 = 1;

pub fn write_embedding_csv<W: Write>(emb: &EmbeddingMatrix, graph: &DirectedGraph, mut out: W) -> Result<()> {
    if emb.node_count() != graph.node_count() {
        return Err(Error::validation("embedding and graph sizes differ"));
    }
    write!(out, "id")?;
    for k in 0..emb.dim() {
        write!(out, ",e{k}")?;
    }
    writeln!(out)?;
    for v in graph.nodes() {
        write!(out, "{}", graph.external_id(v))?;
        for x in emb.row(v) {
            write!(out, ",{x:?}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads a CSV written by [`write_embedding_csv`]; every graph node needs a row.
pub fn read_embedding_csv<R: Read>(source: R, graph: &DirectedGraph) -> Result<EmbeddingMatrix> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let dim = reader
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .len()
        .checked_sub(1)
        .filter(|d| *d > 0)
        .ok_or_else(|| Error::parse(1, "embedding CSV needs an id column and at least one value column"))?;
    let mut emb = EmbeddingMatrix::zeros(graph.node_count(), dim);
    let mut seen = vec![false; graph.node_count()];
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let node = graph
            .node_id(&record[0])
            .ok_or_else(|| Error::parse(line, format!("unknown node ID {:?}", &record[0])))?;
        if record.len() != dim + 1 {
            return Err(Error::parse(line, format!("expected {} values, found {}", dim, record.len() - 1)));
        }
        let row = emb.row_mut(node);
        for (k, cell) in record.iter().skip(1).enumerate() {
            row[k] = cell
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(line, format!("bad value {cell:?}")))?;
        }
        seen[node.index()] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::validation(format!(
            "embedding CSV has no row for node {:?}",
            graph.external_ids()[missing]
        )));
    }
    Ok(emb)
}

pub fn write_embedding_binary<W: Write>(emb: &EmbeddingMatrix, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(emb.node_count() as u64).to_le_bytes())?;
    out.write_all(&(emb.dim() as u32).to_le_bytes())?;
    for v in emb.as_slice() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_embedding_binary<R: Read>(mut input: R) -> Result<EmbeddingMatrix> {
    let mut head = [0u8; 20];
    input.read_exact(&mut head)?;
    if &head[..4] != MAGIC {
        return Err(Error::validation("not an embedding file (bad magic)"));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::validation(format!("unsupported embedding version {version}")));
    }
    let rows = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(head[16..20].try_into().unwrap()) as usize;
    let mut bytes = vec![0u8; rows * dim * 8];
    input.read_exact(&mut bytes)?;
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    EmbeddingMatrix::from_vec(rows, dim, data)
}
