//! Skip-gram with negative sampling over a walk corpus.
//!
//! Two parameter matrices (input and context embeddings) are trained with
//! plain SGD on the negative-sampling objective; the input matrix is the
//! returned embedding. Negative samples follow the unigram^0.75 noise
//! distribution over corpus token frequencies. Training is single-threaded
//! with a fixed iteration order, so fixed seeds give bitwise-identical
//! output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EmbeddingMatrix, WalkCorpus};
use crate::error::{Error, Result};
use crate::seeding::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipgramParams {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Starting learning rate; decays linearly per epoch.
    pub learning_rate: f64,
}

impl Default for SkipgramParams {
    fn default() -> Self {
        SkipgramParams {
            dim: 128,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
        }
    }
}

pub struct SkipgramOutput {
    pub embedding: EmbeddingMatrix,
    /// Total negative-sampling loss per epoch.
    pub epoch_losses: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Numerically stable log(sigmoid(x)).
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(1.0 + (-x).exp()).ln()
    } else {
        x - (1.0 + x.exp()).ln()
    }
}

/// Negative-sampling loss of one (center, context) pair:
/// `-log sigmoid(v . u)` for a positive pair, `-log sigmoid(-v . u)` for a
/// noise pair.
pub fn pair_loss(center: &[f64], context: &[f64], positive: bool) -> f64 {
    let score: f64 = center.iter().zip(context).map(|(a, b)| a * b).sum();
    if positive {
        -log_sigmoid(score)
    } else {
        -log_sigmoid(-score)
    }
}

/// Analytic gradients of [`pair_loss`] with respect to (center, context).
pub fn pair_gradients(center: &[f64], context: &[f64], positive: bool) -> (Vec<f64>, Vec<f64>) {
    let score: f64 = center.iter().zip(context).map(|(a, b)| a * b).sum();
    let label = if positive { 1.0 } else { 0.0 };
    let coeff = sigmoid(score) - label;
    let grad_center: Vec<f64> = context.iter().map(|&u| coeff * u).collect();
    let grad_context: Vec<f64> = center.iter().map(|&v| coeff * v).collect();
    (grad_center, grad_context)
}

/// Cumulative unigram^0.75 table for negative sampling.
struct NoiseTable {
    cumulative: Vec<f64>,
}

impl NoiseTable {
    fn build(corpus: &WalkCorpus) -> Self {
        let mut counts = vec![0usize; corpus.graph_node_count];
        for walk in &corpus.walks {
            for &node in walk {
                counts[node as usize] += 1;
            }
        }
        let mut cumulative = Vec::with_capacity(counts.len());
        let mut total = 0.0;
        for &c in &counts {
            total += (c as f64).powf(0.75);
            cumulative.push(total);
        }
        NoiseTable { cumulative }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u32 {
        let total = *self.cumulative.last().expect("non-empty corpus");
        let r = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= r) as u32
    }
}

/// Train skip-gram embeddings on a walk corpus.
///
/// Both matrices initialize uniformly in `[-0.5/dim, 0.5/dim]`. For every
/// center/context pair within the window, one positive update and
/// `negatives` noise updates are applied; noise draws equal to the true
/// context are skipped. The per-epoch learning rate is
/// `learning_rate * (1 - epoch/epochs)`.
pub fn train_skipgram(
    corpus: &WalkCorpus,
    params: &SkipgramParams,
    seed: u64,
) -> Result<SkipgramOutput> {
    if params.dim == 0 {
        return Err(Error::param("dim", "must be positive"));
    }
    if params.window == 0 {
        return Err(Error::param("window", "must be positive"));
    }
    if corpus.walks.is_empty() || corpus.graph_node_count == 0 {
        return Err(Error::Empty("walk corpus"));
    }

    let n = corpus.graph_node_count;
    let dim = params.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x5f_0001, 0));
    let bound = 0.5 / dim as f64;
    let mut input = EmbeddingMatrix::zeros(n, dim);
    let mut context = EmbeddingMatrix::zeros(n, dim);
    for matrix in [&mut input, &mut context] {
        for i in 0..n {
            for x in matrix.row_mut(i) {
                *x = rng.random_range(-bound..bound);
            }
        }
    }

    let noise = NoiseTable::build(corpus);
    let mut epoch_losses = Vec::with_capacity(params.epochs);
    let mut center_update = vec![0.0f64; dim];

    for epoch in 0..params.epochs {
        let lr = params.learning_rate * (1.0 - epoch as f64 / params.epochs.max(1) as f64);
        let mut loss = 0.0;
        for walk in &corpus.walks {
            for (pos, &center) in walk.iter().enumerate() {
                let lo = pos.saturating_sub(params.window);
                let hi = (pos + params.window).min(walk.len() - 1);
                for ctx_pos in lo..=hi {
                    if ctx_pos == pos {
                        continue;
                    }
                    let target = walk[ctx_pos];
                    center_update.fill(0.0);

                    // Positive pair plus `negatives` noise pairs share the
                    // accumulated center-row update, word2vec style.
                    for k in 0..=params.negatives {
                        let (sample, positive) = if k == 0 {
                            (target, true)
                        } else {
                            let draw = noise.sample(&mut rng);
                            if draw == target {
                                continue;
                            }
                            (draw, false)
                        };
                        let center_row = input.row(center as usize);
                        let ctx_row = context.row(sample as usize);
                        loss += pair_loss(center_row, ctx_row, positive);
                        let (grad_center, grad_context) =
                            pair_gradients(center_row, ctx_row, positive);
                        for (acc, g) in center_update.iter_mut().zip(&grad_center) {
                            *acc += g;
                        }
                        for (u, g) in context
                            .row_mut(sample as usize)
                            .iter_mut()
                            .zip(&grad_context)
                        {
                            *u -= lr * g;
                        }
                    }
                    for (v, acc) in input
                        .row_mut(center as usize)
                        .iter_mut()
                        .zip(&center_update)
                    {
                        *v -= lr * acc;
                    }
                }
            }
        }
        epoch_losses.push(loss);
    }

    if !input.is_finite() {
        return Err(Error::NonFinite("skip-gram embedding".into()));
    }
    Ok(SkipgramOutput {
        embedding: input,
        epoch_losses,
    })
}
