//! Node embeddings: random-walk corpora, skip-gram training and the
//! attributed early-fusion embedder.

mod asne;
mod io;
mod sampling;
mod sgns;
mod walks;

use crate::error::{Error, Result};
use crate::graph::NodeId;

pub use asne::{train_asne_lite, AsneConfig};
pub use io::{read_embedding_binary, read_embedding_csv, write_embedding_binary, write_embedding_csv};
pub use sampling::AliasTable;
pub use sgns::{pair_gradient, pair_loss, train_sgns, PairGradient, SgnsConfig, TrainingTrace};
pub use walks::{generate_walks, WalkConfig, WalkCorpus, WalkDirection, WalkStrategy};

/// Row-major `node_count x dim` matrix of node vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        EmbeddingMatrix {
            rows,
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    pub fn from_vec(rows: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(Error::validation(format!(
                "embedding data has {} values, expected {rows} x {dim}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("embedding contains non-finite values"));
        }
        Ok(EmbeddingMatrix { rows, dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::validation("embedding rows have different lengths"));
        }
        Self::from_vec(rows.len(), dim, rows.concat())
    }

    pub fn node_count(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, node: NodeId) -> &[f64] {
        let i = node.index();
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, node: NodeId) -> &mut [f64] {
        let i = node.index();
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copy with every row scaled to unit Euclidean norm (zero rows stay zero).
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        for chunk in out.data.chunks_mut(self.dim.max(1)) {
            let norm = dot(chunk, chunk).sqrt();
            if norm > 0.0 {
                chunk.iter_mut().for_each(|v| *v /= norm);
            }
        }
        out
    }

    /// Columns `range` of every row as a new matrix.
    pub fn columns(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.dim || range.start > range.end {
            return Err(Error::validation(format!("column range {range:?} outside dim {}", self.dim)));
        }
        let width = range.end - range.start;
        let mut data = Vec::with_capacity(self.rows * width);
        for i in 0..self.rows {
            data.extend_from_slice(&self.data[i * self.dim + range.start..i * self.dim + range.end]);
        }
        Ok(EmbeddingMatrix {
            rows: self.rows,
            dim: width,
            data,
        })
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(sigmoid(x))` without overflow.
#[inline]
pub(crate) fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}
