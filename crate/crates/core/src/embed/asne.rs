//! Shallow attributed embedder with early fusion.
//!
//! Node `i` is represented by `h_i = [s_i ; W^T x_i]`, the concatenation of a
//! free structure vector and a linear map of its attribute row. Training
//! pushes `h_i . o_j` up for every follow edge `i -> j` and down for
//! uniformly drawn non-neighbours, with Adam on mini-batches of edges.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dot, log_sigmoid, sigmoid, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::graph::{AttributeTable, DirectedGraph, NodeId};
use crate::seed;

const INIT_SCALE: f64 = 0.1;
const NEGATIVE_TRIES: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsneConfig {
    pub d_struct: usize,
    pub d_attr_emb: usize,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub negatives: usize,
    /// Z-score attribute columns before the linear map.
    pub standardize: bool,
    pub rng_seed: u64,
}

impl Default for AsneConfig {
    fn default() -> Self {
        AsneConfig {
            d_struct: 20,
            d_attr_emb: 40,
            epochs: 20,
            batch: 128,
            lr: 0.001,
            negatives: 5,
            standardize: true,
            rng_seed: 0,
        }
    }
}

/// Dense parameter block with Adam moments.
struct Param {
    value: Vec<f64>,
    grad: Vec<f64>,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Param {
    fn new(len: usize, rng: &mut ChaCha8Rng, scale: f64) -> Self {
        Param {
            value: (0..len).map(|_| rng.random_range(-scale..scale)).collect(),
            grad: vec![0.0; len],
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
}

impl Adam {
    fn update(&self, p: &mut Param, range: std::ops::Range<usize>) {
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for k in range {
            let g = p.grad[k];
            p.m[k] = self.beta1 * p.m[k] + (1.0 - self.beta1) * g;
            p.v[k] = self.beta2 * p.v[k] + (1.0 - self.beta2) * g * g;
            p.value[k] -= self.lr * (p.m[k] / c1) / ((p.v[k] / c2).sqrt() + self.eps);
            p.grad[k] = 0.0;
        }
    }
}

fn prepared_attributes(attrs: &AttributeTable, standardize: bool) -> Vec<f64> {
    let n = attrs.node_count();
    let d = attrs.dim();
    let mut x: Vec<f64> = (0..n).flat_map(|i| attrs.row(NodeId::from(i)).to_vec()).collect();
    if standardize && n > 0 {
        for c in 0..d {
            let mean = (0..n).map(|i| x[i * d + c]).sum::<f64>() / n as f64;
            let var = (0..n).map(|i| (x[i * d + c] - mean).powi(2)).sum::<f64>() / n as f64;
            let sd = var.sqrt();
            for i in 0..n {
                x[i * d + c] = if sd > 0.0 { (x[i * d + c] - mean) / sd } else { 0.0 };
            }
        }
    }
    x
}

/// Trains the fused embedder; row `i` of the result is `h_i`, of width
/// `d_struct + d_attr_emb` (structure part first).
pub fn train_asne_lite(graph: &DirectedGraph, attrs: &AttributeTable, cfg: &AsneConfig) -> Result<EmbeddingMatrix> {
    if attrs.node_count() != graph.node_count() {
        return Err(Error::validation(format!(
            "attribute table has {} rows for {} graph nodes",
            attrs.node_count(),
            graph.node_count()
        )));
    }
    if cfg.d_struct == 0 || cfg.d_attr_emb == 0 {
        return Err(Error::validation("d_struct and d_attr_emb must be at least 1"));
    }
    if cfg.batch == 0 || cfg.epochs == 0 {
        return Err(Error::validation("batch and epochs must be at least 1"));
    }
    let edges: Vec<(NodeId, NodeId)> = graph.edges().collect();
    if edges.is_empty() {
        return Err(Error::validation("attributed embedding needs at least one edge"));
    }

    let n = graph.node_count();
    let ds = cfg.d_struct;
    let da = cfg.d_attr_emb;
    let width = ds + da;
    let dx = attrs.dim();
    let x = prepared_attributes(attrs, cfg.standardize);

    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.rng_seed, &[0xA5E]));
    let mut structure = Param::new(n * ds, &mut rng, INIT_SCALE);
    let mut map = Param::new(dx * da, &mut rng, INIT_SCALE);
    let mut context = Param::new(n * width, &mut rng, INIT_SCALE);
    let mut adam = Adam {
        lr: cfg.lr,
        beta1: 0.9,
        beta2: 0.999,
        eps: 1e-8,
        t: 0,
    };

    let fused = |structure: &Param, map: &Param, i: usize, h: &mut [f64]| {
        h[..ds].copy_from_slice(&structure.value[i * ds..(i + 1) * ds]);
        let xi = &x[i * dx..(i + 1) * dx];
        for a in 0..da {
            h[ds + a] = (0..dx).map(|c| xi[c] * map.value[c * da + a]).sum();
        }
    };

    let mut order: Vec<usize> = (0..edges.len()).collect();
    let mut h = vec![0.0; width];
    let mut gh = vec![0.0; width];
    let mut touched_struct = vec![false; n];
    let mut touched_ctx = vec![false; n];
    let mut struct_rows = Vec::new();
    let mut ctx_rows = Vec::new();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch) {
            let scale = 1.0 / batch.len() as f64;
            for &e in batch {
                let (src, dst) = edges[e];
                let i = src.index();
                fused(&structure, &map, i, &mut h);
                gh.iter_mut().for_each(|g| *g = 0.0);
                for k in 0..=cfg.negatives {
                    let (j, label) = if k == 0 {
                        (dst.index(), 1.0)
                    } else {
                        let mut pick = None;
                        for _ in 0..NEGATIVE_TRIES {
                            let c = rng.random_range(0..n);
                            if c != i && !graph.has_edge(src, NodeId::from(c)) {
                                pick = Some(c);
                                break;
                            }
                        }
                        match pick {
                            Some(c) => (c, 0.0),
                            None => continue,
                        }
                    };
                    let o = &context.value[j * width..(j + 1) * width];
                    let score = dot(&h, o);
                    epoch_loss -= if label > 0.0 { log_sigmoid(score) } else { log_sigmoid(-score) };
                    let coef = scale * (sigmoid(score) - label);
                    for d in 0..width {
                        gh[d] += coef * o[d];
                        context.grad[j * width + d] += coef * h[d];
                    }
                    if !touched_ctx[j] {
                        touched_ctx[j] = true;
                        ctx_rows.push(j);
                    }
                }
                for d in 0..ds {
                    structure.grad[i * ds + d] += gh[d];
                }
                if !touched_struct[i] {
                    touched_struct[i] = true;
                    struct_rows.push(i);
                }
                let xi = &x[i * dx..(i + 1) * dx];
                for c in 0..dx {
                    if xi[c] != 0.0 {
                        for a in 0..da {
                            map.grad[c * da + a] += xi[c] * gh[ds + a];
                        }
                    }
                }
            }
            adam.t += 1;
            for &i in &struct_rows {
                adam.update(&mut structure, i * ds..(i + 1) * ds);
                touched_struct[i] = false;
            }
            for &j in &ctx_rows {
                adam.update(&mut context, j * width..(j + 1) * width);
                touched_ctx[j] = false;
            }
            struct_rows.clear();
            ctx_rows.clear();
            let len = map.value.len();
            adam.update(&mut map, 0..len);
        }
        log::debug!("asne-lite epoch {epoch}: mean edge loss {:.6}", epoch_loss / edges.len() as f64);
    }

    let mut out = EmbeddingMatrix::zeros(n, width);
    for i in 0..n {
        fused(&structure, &map, i, out.row_mut(NodeId::from(i)));
    }
    if !out.is_finite() {
        return Err(Error::validation("attributed embedding diverged (non-finite values)"));
    }
    Ok(out)
}
