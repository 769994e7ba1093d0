//! Numerical verification of the analytic backpropagation.
//!
//! Central finite differences of the cross-entropy loss are compared against
//! the gradients produced by [`backward`] at randomly sampled parameters.
//! Dropout stays off (evaluation-mode forward) so the loss is deterministic.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{backward, cross_entropy, forward, Class, GnnModel, Gradients, PreparedGraph, ReadoutMode};
use crate::error::Result;
use crate::seeding::derive_seed;

fn param_count(model: &GnnModel) -> usize {
    model.conv_weight.data().len()
        + model.conv_bias.len()
        + model.attn_src.len()
        + model.attn_dst.len()
        + model.dense_weight.data().len()
        + model.dense_bias.len()
}

fn param_mut(model: &mut GnnModel, idx: usize) -> &mut f64 {
    let mut idx = idx;
    let sizes = [
        model.conv_weight.data().len(),
        model.conv_bias.len(),
        model.attn_src.len(),
        model.attn_dst.len(),
        model.dense_weight.data().len(),
        model.dense_bias.len(),
    ];
    for (block, &size) in sizes.iter().enumerate() {
        if idx < size {
            return match block {
                0 => &mut model.conv_weight.data_mut()[idx],
                1 => &mut model.conv_bias[idx],
                2 => &mut model.attn_src[idx],
                3 => &mut model.attn_dst[idx],
                4 => &mut model.dense_weight.data_mut()[idx],
                _ => &mut model.dense_bias[idx],
            };
        }
        idx -= size;
    }
    unreachable!("parameter index out of range");
}

fn grad_at(grads: &Gradients, idx: usize) -> f64 {
    let mut idx = idx;
    let blocks: [&[f64]; 6] = [
        grads.conv_weight.data(),
        &grads.conv_bias,
        &grads.attn_src,
        &grads.attn_dst,
        grads.dense_weight.data(),
        &grads.dense_bias,
    ];
    for block in blocks {
        if idx < block.len() {
            return block[idx];
        }
        idx -= block.len();
    }
    unreachable!("gradient index out of range");
}

fn loss_of(
    model: &GnnModel,
    graph: &PreparedGraph,
    readout: Option<ReadoutMode>,
    targets: &[(usize, Class)],
) -> Result<f64> {
    let trace = forward(model, graph, readout, None)?;
    Ok(cross_entropy(&trace.logits, targets, [1.0, 1.0])?.0)
}

/// Compare analytic gradients against central finite differences on
/// `samples` randomly chosen parameters (all of them when the model has
/// fewer). Returns the maximum relative error.
pub fn gradient_check(
    model: &GnnModel,
    graph: &PreparedGraph,
    readout: Option<ReadoutMode>,
    targets: &[(usize, Class)],
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let trace = forward(model, graph, readout, None)?;
    let (_, dlogits) = cross_entropy(&trace.logits, targets, [1.0, 1.0])?;
    let grads = backward(model, graph, &trace, &dlogits);

    let total = param_count(model);
    let mut indices: Vec<usize> = (0..total).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x9c, 0));
    indices.shuffle(&mut rng);
    indices.truncate(samples.min(total));

    let mut probe = model.clone();
    let mut max_relative = 0.0f64;
    for idx in indices {
        let original = *param_mut(&mut probe, idx);
        *param_mut(&mut probe, idx) = original + epsilon;
        let plus = loss_of(&probe, graph, readout, targets)?;
        *param_mut(&mut probe, idx) = original - epsilon;
        let minus = loss_of(&probe, graph, readout, targets)?;
        *param_mut(&mut probe, idx) = original;

        let numeric = (plus - minus) / (2.0 * epsilon);
        let analytic = grad_at(&grads, idx);
        let scale = analytic.abs().max(numeric.abs());
        let relative = if scale < 1e-10 {
            // Both effectively zero.
            (analytic - numeric).abs()
        } else {
            (analytic - numeric).abs() / scale
        };
        max_relative = max_relative.max(relative);
    }
    Ok(max_relative)
}
