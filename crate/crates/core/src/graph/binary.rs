//! Compact binary graph cache.
//!
//! Layout (little-endian): magic `OLGR`, version `u32`, node count `u64`,
//! edge count `u64`, then per node a `u32` byte length and UTF-8 external
//! ID, then `edge count` pairs of `u32` (follower, followee).

use std::io::{Read, Write};

use super::{DirectedGraph, NodeId};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"OLGR";
const VERSION: u32 = 1;

pub fn write_graph_binary<W: Write>(graph: &DirectedGraph, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(graph.node_count() as u64).to_le_bytes())?;
    out.write_all(&(graph.edge_count() as u64).to_le_bytes())?;
    for id in graph.external_ids() {
        out.write_all(&(id.len() as u32).to_le_bytes())?;
        out.write_all(id.as_bytes())?;
    }
    for (u, v) in graph.edges() {
        out.write_all(&u.0.to_le_bytes())?;
        out.write_all(&v.0.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_graph_binary<R: Read>(mut input: R) -> Result<DirectedGraph> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::validation("not a graph cache (bad magic)"));
    }
    let version = read_u32(&mut input)?;
    if version != VERSION {
        return Err(Error::validation(format!("unsupported graph cache version {version}")));
    }
    let n = read_u64(&mut input)? as usize;
    let m = read_u64(&mut input)? as usize;
    let mut ids = Vec::with_capacity(n);
    for _ in 0..n {
        let len = read_u32(&mut input)? as usize;
        let mut buf = vec![0u8; len];
        input.read_exact(&mut buf)?;
        ids.push(String::from_utf8(buf).map_err(|_| Error::validation("graph cache: invalid UTF-8 ID"))?);
    }
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let u = read_u32(&mut input)?;
        let v = read_u32(&mut input)?;
        if u as usize >= n || v as usize >= n {
            return Err(Error::validation("graph cache: edge endpoint out of range"));
        }
        edges.push((NodeId(u), NodeId(v)));
    }
    let (graph, loops, dups) = DirectedGraph::from_parts(ids, edges);
    if loops + dups > 0 || graph.edge_count() != m {
        return Err(Error::validation("graph cache: corrupt edge section"));
    }
    Ok(graph)
}
