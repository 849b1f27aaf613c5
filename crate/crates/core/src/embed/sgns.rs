//! Skip-gram with negative sampling over walk corpora.
//!
//! Input vectors are the returned embedding; output (context) vectors are
//! discarded after training. Negatives come from the corpus unigram
//! distribution raised to 0.75 and the learning rate decays linearly from
//! `lr` to `lr / 100` over all epochs.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sampling::AliasTable;
use super::{dot, log_sigmoid, sigmoid, EmbeddingMatrix, WalkCorpus};
use crate::error::{Error, Result};
use crate::seed;

const NOISE_EXPONENT: f64 = 0.75;
const MIN_LR_FRACTION: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgnsConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f64,
    pub rng_seed: u64,
    /// 1 = deterministic. More workers apply unsynchronized updates.
    pub workers: usize,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        SgnsConfig {
            dim: 64,
            window: 10,
            negatives: 5,
            epochs: 1,
            lr: 0.025,
            rng_seed: 0,
            workers: 1,
        }
    }
}

/// Mean per-pair loss of each epoch.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub epoch_losses: Vec<f64>,
}

/// Negative-sampling loss of one (center, context, negatives) triple:
/// `-ln s(c.v) - sum_k ln s(-n_k.v)`.
pub fn pair_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    -log_sigmoid(dot(context, center)) - negatives.iter().map(|n| log_sigmoid(-dot(n, center))).sum::<f64>()
}

/// Gradient of [`pair_loss`] with respect to each argument.
#[derive(Clone, Debug, PartialEq)]
pub struct PairGradient {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn pair_gradient(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> PairGradient {
    let dim = center.len();
    let mut g_center = vec![0.0; dim];
    let coef = sigmoid(dot(context, center)) - 1.0;
    let g_context = center.iter().map(|v| coef * v).collect();
    for (g, c) in g_center.iter_mut().zip(context) {
        *g += coef * c;
    }
    let mut g_negs = Vec::with_capacity(negatives.len());
    for n in negatives {
        let coef = sigmoid(dot(n, center));
        g_negs.push(center.iter().map(|v| coef * v).collect());
        for (g, x) in g_center.iter_mut().zip(n.iter()) {
            *g += coef * x;
        }
    }
    PairGradient {
        center: g_center,
        context: g_context,
        negatives: g_negs,
    }
}

/// Matrix whose cells tolerate racy concurrent read-modify-write.
struct SharedMatrix {
    dim: usize,
    cells: Vec<AtomicU64>,
}

impl SharedMatrix {
    fn new(rows: usize, dim: usize, mut init: impl FnMut() -> f64) -> Self {
        SharedMatrix {
            dim,
            cells: (0..rows * dim).map(|_| AtomicU64::new(init().to_bits())).collect(),
        }
    }

    #[inline]
    fn load_row(&self, row: usize, out: &mut [f64]) {
        let base = row * self.dim;
        for (k, o) in out.iter_mut().enumerate() {
            *o = f64::from_bits(self.cells[base + k].load(Ordering::Relaxed));
        }
    }

    #[inline]
    fn add_row(&self, row: usize, delta: &[f64]) {
        let base = row * self.dim;
        for (k, d) in delta.iter().enumerate() {
            let cell = &self.cells[base + k];
            let v = f64::from_bits(cell.load(Ordering::Relaxed)) + d;
            cell.store(v.to_bits(), Ordering::Relaxed);
        }
    }

    fn into_vec(self) -> Vec<f64> {
        self.cells.into_iter().map(|c| f64::from_bits(c.into_inner())).collect()
    }
}

struct Model<'a> {
    input: SharedMatrix,
    output: SharedMatrix,
    noise: AliasTable,
    cfg: &'a SgnsConfig,
    total_tokens: f64,
}

struct Scratch {
    center: Vec<f64>,
    target: Vec<f64>,
    center_delta: Vec<f64>,
    target_delta: Vec<f64>,
}

impl Model<'_> {
    /// One SGD step on a (center, context) pair; returns the pair loss.
    fn step<R: Rng>(&self, center: usize, context: usize, lr: f64, rng: &mut R, s: &mut Scratch) -> f64 {
        self.input.load_row(center, &mut s.center);
        s.center_delta.iter_mut().for_each(|v| *v = 0.0);
        let mut loss = 0.0;
        for k in 0..=self.cfg.negatives {
            let (target, label) = if k == 0 {
                (context, 1.0)
            } else {
                let t = self.noise.sample(rng);
                if t == context {
                    continue;
                }
                (t, 0.0)
            };
            self.output.load_row(target, &mut s.target);
            let score = dot(&s.center, &s.target);
            loss -= if label > 0.0 { log_sigmoid(score) } else { log_sigmoid(-score) };
            // descent step: -(sigmoid(score) - label)
            let g = lr * (label - sigmoid(score));
            for ((cd, td), (c, t)) in s
                .center_delta
                .iter_mut()
                .zip(s.target_delta.iter_mut())
                .zip(s.center.iter().zip(s.target.iter()))
            {
                *cd += g * t;
                *td = g * c;
            }
            self.output.add_row(target, &s.target_delta);
        }
        self.input.add_row(center, &s.center_delta);
        loss
    }

    /// Trains on `walks` for one epoch; returns (loss sum, pair count).
    fn run_walks<'w, R: Rng>(
        &self,
        walks: impl Iterator<Item = &'w [crate::graph::NodeId]>,
        tokens_before: usize,
        rng: &mut R,
    ) -> (f64, u64) {
        let dim = self.cfg.dim;
        let mut s = Scratch {
            center: vec![0.0; dim],
            target: vec![0.0; dim],
            center_delta: vec![0.0; dim],
            target_delta: vec![0.0; dim],
        };
        let mut loss = 0.0;
        let mut pairs = 0u64;
        let mut processed = tokens_before;
        for walk in walks {
            for (t, &center) in walk.iter().enumerate() {
                let progress = processed as f64 / self.total_tokens;
                let lr = self.cfg.lr * (1.0 - (1.0 - MIN_LR_FRACTION) * progress.min(1.0));
                let lo = t.saturating_sub(self.cfg.window);
                let hi = (t + self.cfg.window).min(walk.len() - 1);
                for j in lo..=hi {
                    if j == t {
                        continue;
                    }
                    loss += self.step(center.index(), walk[j].index(), lr, rng, &mut s);
                    pairs += 1;
                }
                processed += 1;
            }
        }
        (loss, pairs)
    }
}

/// Trains skip-gram embeddings on `corpus`, returning the input vectors
/// and the per-epoch mean loss.
pub fn train_sgns(corpus: &WalkCorpus, cfg: &SgnsConfig) -> Result<(EmbeddingMatrix, TrainingTrace)> {
    if corpus.is_empty() {
        return Err(Error::validation("cannot train on an empty walk corpus"));
    }
    if cfg.dim < 2 {
        return Err(Error::validation("embedding dimension must be at least 2"));
    }
    if cfg.epochs == 0 || cfg.window == 0 {
        return Err(Error::validation("epochs and window must be at least 1"));
    }
    if !(cfg.lr > 0.0 && cfg.lr.is_finite()) {
        return Err(Error::validation(format!("learning rate {} must be positive", cfg.lr)));
    }
    let n = corpus.node_count();
    let dim = cfg.dim;

    let weights: Vec<f64> = corpus
        .frequencies()
        .into_iter()
        .map(|c| (c as f64).powf(NOISE_EXPONENT))
        .collect();
    let noise = AliasTable::new(&weights).expect("non-empty corpus has positive frequencies");

    let mut init_rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.rng_seed, &[0x1417]));
    let half = 0.5 / dim as f64;
    let input = SharedMatrix::new(n, dim, || init_rng.random_range(-half..half));
    let output = SharedMatrix::new(n, dim, || 0.0);
    let model = Model {
        input,
        output,
        noise,
        cfg,
        total_tokens: (corpus.token_count() * cfg.epochs) as f64,
    };

    let workers = cfg.workers.max(1).min(corpus.len());
    let mut trace = TrainingTrace::default();
    for epoch in 0..cfg.epochs {
        let tokens_before = epoch * corpus.token_count();
        let (loss, pairs) = if workers == 1 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.rng_seed, &[epoch as u64]));
            model.run_walks(corpus.iter(), tokens_before, &mut rng)
        } else {
            let chunk = corpus.len().div_ceil(workers);
            let model = &model;
            let results: Vec<(f64, u64)> = std::thread::scope(|scope| {
                let handles: Vec<_> = (0..workers)
                    .map(|w| {
                        scope.spawn(move || {
                            let mut rng =
                                ChaCha8Rng::seed_from_u64(seed::derive(cfg.rng_seed, &[epoch as u64, w as u64 + 1]));
                            let range = (w * chunk)..((w + 1) * chunk).min(corpus.len());
                            // approximate progress: every worker starts from the epoch boundary
                            model.run_walks(range.map(|i| corpus.walk(i)), tokens_before, &mut rng)
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("sgns worker panicked")).collect()
            });
            results.into_iter().fold((0.0, 0), |(l, p), (l2, p2)| (l + l2, p + p2))
        };
        let mean = if pairs > 0 { loss / pairs as f64 } else { 0.0 };
        log::debug!("sgns epoch {epoch}: mean pair loss {mean:.6}");
        trace.epoch_losses.push(mean);
    }

    let data = model.input.into_vec();
    let matrix = EmbeddingMatrix::from_vec(n, dim, data)
        .map_err(|_| Error::validation("skip-gram training diverged (non-finite embedding)"))?;
    Ok((matrix, trace))
}
