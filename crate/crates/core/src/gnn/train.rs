//! Training loops, stratified splitting, and evaluation reports.
//!
//! Both tasks train full-batch with Adam, track validation accuracy per
//! epoch, and report test metrics at the best-validation checkpoint (ties
//! keep the earlier epoch). Everything derives from the config seed, so one
//! (data, config) pair maps to exactly one [`EvalReport`].

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::DenseMatrix;
use super::model::{
    backward, cross_entropy, forward, init_model, Class, GnnKind, GnnModel, Gradients,
    PreparedGraph, ReadoutMode, NUM_CLASSES,
};
use crate::error::{Error, Result};
use crate::seeding::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub hidden_dim: usize,
    /// Train/validation/test fractions; must sum to 1.
    pub split: (f64, f64, f64),
    pub seed: u64,
    /// Weight classes inversely to their frequency in the training split.
    pub class_weighted: bool,
    pub readout: ReadoutMode,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            dropout: 0.8,
            learning_rate: 1e-4,
            hidden_dim: 64,
            split: (0.6, 0.2, 0.2),
            seed: 0,
            class_weighted: false,
            readout: ReadoutMode::Mean,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        let (a, b, c) = self.split;
        if (a + b + c - 1.0).abs() > 1e-9 || a <= 0.0 || b < 0.0 || c < 0.0 {
            return Err(Error::param("split", format!("fractions {a}/{b}/{c} must sum to 1")));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::param("dropout", "must be in [0, 1)"));
        }
        if self.learning_rate <= 0.0 || !(0.0..1.0).contains(&self.learning_rate) {
            return Err(Error::param("learning_rate", "must be in (0, 1)"));
        }
        if self.epochs == 0 {
            return Err(Error::param("epochs", "must be positive"));
        }
        Ok(())
    }
}

/// Meta-graph node classification input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDataset {
    pub features: DenseMatrix,
    pub edges: Vec<(u32, u32)>,
    /// Aligned with `edges`; None trains on the binary adjacency.
    pub edge_weights: Option<Vec<f64>>,
    pub labels: Vec<(usize, Class)>,
}

/// One labeled cascade sub-graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphInstance {
    pub features: DenseMatrix,
    pub edges: Vec<(u32, u32)>,
    pub label: Class,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDataset {
    pub graphs: Vec<GraphInstance>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub accuracy: f64,
    pub f1: f64,
    pub confusion: Confusion,
}

/// Accuracy, binary F1 (fake positive), and confusion counts for one
/// logits/labels pairing. F1 is 0 when precision + recall is 0.
pub fn evaluate(logits: &DenseMatrix, labels: &[(usize, Class)]) -> Result<SplitMetrics> {
    if labels.is_empty() {
        return Err(Error::Empty("evaluation label set"));
    }
    let mut confusion = Confusion::default();
    for &(row, class) in labels {
        let predicted_fake = logits.at(row, 1) > logits.at(row, 0);
        match (predicted_fake, class) {
            (true, Class::Fake) => confusion.tp += 1,
            (true, Class::NonFake) => confusion.fp += 1,
            (false, Class::Fake) => confusion.fn_ += 1,
            (false, Class::NonFake) => confusion.tn += 1,
        }
    }
    let accuracy = (confusion.tp + confusion.tn) as f64 / labels.len() as f64;
    let denom = 2 * confusion.tp + confusion.fp + confusion.fn_;
    let f1 = if denom == 0 {
        0.0
    } else {
        2.0 * confusion.tp as f64 / denom as f64
    };
    Ok(SplitMetrics {
        accuracy,
        f1,
        confusion,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub train: SplitMetrics,
    pub validation: SplitMetrics,
    pub test: SplitMetrics,
    pub best_epoch: usize,
    /// The optimized objective per epoch, dropout noise included.
    pub epoch_losses: Vec<f64>,
    /// Deterministic (dropout-off) training loss after each epoch's update;
    /// the smoother series used for convergence checks.
    pub epoch_eval_losses: Vec<f64>,
    pub epoch_val_accuracy: Vec<f64>,
}

/// Stratified index split: each class is shuffled by the seed and cut into
/// train/validation/test fractions (train keeps at least one item per
/// class). Errors when fewer than two classes are present.
pub fn stratified_split(
    labels: &[(usize, Class)],
    split: (f64, f64, f64),
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let mut per_class: [Vec<usize>; NUM_CLASSES] = [Vec::new(), Vec::new()];
    for (position, &(_, class)) in labels.iter().enumerate() {
        per_class[class.index()].push(position);
    }
    if per_class.iter().filter(|c| !c.is_empty()).count() < 2 {
        return Err(Error::Other(
            "training needs both classes among labeled items".into(),
        ));
    }
    let mut train = Vec::new();
    let mut validation = Vec::new();
    let mut test = Vec::new();
    for (class_idx, members) in per_class.iter_mut().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x59117, class_idx as u64));
        members.shuffle(&mut rng);
        let n = members.len();
        let n_train = ((split.0 * n as f64).floor() as usize).max(1).min(n);
        let n_val = ((split.1 * n as f64).floor() as usize).min(n - n_train);
        train.extend(&members[..n_train]);
        validation.extend(&members[n_train..n_train + n_val]);
        test.extend(&members[n_train + n_val..]);
    }
    train.sort_unstable();
    validation.sort_unstable();
    test.sort_unstable();
    Ok((train, validation, test))
}

fn class_weights(labels: &[(usize, Class)], weighted: bool) -> [f64; NUM_CLASSES] {
    if !weighted {
        return [1.0, 1.0];
    }
    let mut counts = [0usize; NUM_CLASSES];
    for &(_, class) in labels {
        counts[class.index()] += 1;
    }
    let total = labels.len() as f64;
    let mut weights = [1.0; NUM_CLASSES];
    for c in 0..NUM_CLASSES {
        if counts[c] > 0 {
            weights[c] = total / (NUM_CLASSES as f64 * counts[c] as f64);
        }
    }
    weights
}

/// Adam with bias correction over the model's parameter arrays.
struct Adam {
    m: Gradients,
    v: Gradients,
    t: usize,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    learning_rate: f64,
}

impl Adam {
    fn new(model: &GnnModel, config: &TrainConfig) -> Adam {
        Adam {
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
            t: 0,
            beta1: config.adam_beta1,
            beta2: config.adam_beta2,
            epsilon: config.adam_epsilon,
            learning_rate: config.learning_rate,
        }
    }

    fn step(&mut self, model: &mut GnnModel, grads: &Gradients) {
        self.t += 1;
        let bias1 = 1.0 - self.beta1.powi(self.t as i32);
        let bias2 = 1.0 - self.beta2.powi(self.t as i32);
        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.epsilon, self.learning_rate);
        let update = |param: &mut [f64], grad: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..param.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
                v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                param[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        };
        update(
            model.conv_weight.data_mut(),
            grads.conv_weight.data(),
            self.m.conv_weight.data_mut(),
            self.v.conv_weight.data_mut(),
        );
        update(
            &mut model.conv_bias,
            &grads.conv_bias,
            &mut self.m.conv_bias,
            &mut self.v.conv_bias,
        );
        update(
            &mut model.attn_src,
            &grads.attn_src,
            &mut self.m.attn_src,
            &mut self.v.attn_src,
        );
        update(
            &mut model.attn_dst,
            &grads.attn_dst,
            &mut self.m.attn_dst,
            &mut self.v.attn_dst,
        );
        update(
            model.dense_weight.data_mut(),
            grads.dense_weight.data(),
            self.m.dense_weight.data_mut(),
            self.v.dense_weight.data_mut(),
        );
        update(
            &mut model.dense_bias,
            &grads.dense_bias,
            &mut self.m.dense_bias,
            &mut self.v.dense_bias,
        );
    }
}

fn subset(labels: &[(usize, Class)], positions: &[usize]) -> Vec<(usize, Class)> {
    positions.iter().map(|&p| labels[p]).collect()
}

/// Train a node classifier on one (meta-)graph with a stratified
/// train/validation/test split over its labeled nodes.
pub fn train_node_classifier(
    kind: GnnKind,
    dataset: &NodeDataset,
    config: &TrainConfig,
) -> Result<(GnnModel, EvalReport)> {
    config.validate()?;
    if dataset.labels.is_empty() {
        return Err(Error::Empty("labeled node set"));
    }
    let graph = super::model::prepare_graph(
        dataset.features.clone(),
        &dataset.edges,
        dataset.edge_weights.as_deref(),
    )?;
    let (train_pos, val_pos, test_pos) =
        stratified_split(&dataset.labels, config.split, config.seed)?;
    let train_labels = subset(&dataset.labels, &train_pos);
    let val_labels = subset(&dataset.labels, &val_pos);
    let test_labels = subset(&dataset.labels, &test_pos);
    if train_labels.iter().map(|&(_, c)| c.index()).collect::<std::collections::HashSet<_>>().len() < 2 {
        return Err(Error::Other("training split ended up single-class".into()));
    }
    let weights = class_weights(&train_labels, config.class_weighted);

    let mut model = init_model(
        kind,
        dataset.features.cols(),
        config.hidden_dim,
        config.dropout,
        config.seed,
    )?;
    let mut adam = Adam::new(&model, config);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 0xd20, kind as u64));

    let mut best: Option<(f64, usize, GnnModel)> = None;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut epoch_eval_losses = Vec::with_capacity(config.epochs);
    let mut epoch_val_accuracy = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let trace = forward(&model, &graph, None, Some(&mut dropout_rng))?;
        let (loss, dlogits) = cross_entropy(&trace.logits, &train_labels, weights)?;
        let grads = backward(&model, &graph, &trace, &dlogits);
        adam.step(&mut model, &grads);
        epoch_losses.push(loss);

        let eval_trace = forward(&model, &graph, None, None)?;
        epoch_eval_losses.push(cross_entropy(&eval_trace.logits, &train_labels, weights)?.0);
        let val_metrics = if val_labels.is_empty() {
            evaluate(&eval_trace.logits, &train_labels)?
        } else {
            evaluate(&eval_trace.logits, &val_labels)?
        };
        epoch_val_accuracy.push(val_metrics.accuracy);
        if best
            .as_ref()
            .map(|(acc, _, _)| val_metrics.accuracy > *acc)
            .unwrap_or(true)
        {
            best = Some((val_metrics.accuracy, epoch, model.clone()));
        }
    }

    let (_, best_epoch, best_model) = best.expect("at least one epoch ran");
    let final_trace = forward(&best_model, &graph, None, None)?;
    let report = EvalReport {
        train: evaluate(&final_trace.logits, &train_labels)?,
        validation: if val_labels.is_empty() {
            evaluate(&final_trace.logits, &train_labels)?
        } else {
            evaluate(&final_trace.logits, &val_labels)?
        },
        test: if test_labels.is_empty() {
            evaluate(&final_trace.logits, &train_labels)?
        } else {
            evaluate(&final_trace.logits, &test_labels)?
        },
        best_epoch,
        epoch_losses,
        epoch_eval_losses,
        epoch_val_accuracy,
    };
    Ok((best_model, report))
}

/// Train a whole-graph classifier over independent labeled graphs,
/// full-batch: one Adam step per epoch from gradients accumulated over every
/// training graph.
pub fn train_graph_classifier(
    kind: GnnKind,
    dataset: &GraphDataset,
    config: &TrainConfig,
) -> Result<(GnnModel, EvalReport)> {
    config.validate()?;
    if dataset.graphs.is_empty() {
        return Err(Error::Empty("graph dataset"));
    }
    let input_dim = dataset.graphs[0].features.cols();
    let prepared: Vec<PreparedGraph> = dataset
        .graphs
        .iter()
        .map(|g| super::model::prepare_graph(g.features.clone(), &g.edges, None))
        .collect::<Result<_>>()?;
    let labels: Vec<(usize, Class)> = dataset
        .graphs
        .iter()
        .enumerate()
        .map(|(i, g)| (i, g.label))
        .collect();
    let (train_pos, val_pos, test_pos) = stratified_split(&labels, config.split, config.seed)?;
    let weights = class_weights(&subset(&labels, &train_pos), config.class_weighted);

    let mut model = init_model(kind, input_dim, config.hidden_dim, config.dropout, config.seed)?;
    let mut adam = Adam::new(&model, config);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 0xd21, kind as u64));

    let total_weight: f64 = train_pos
        .iter()
        .map(|&i| weights[dataset.graphs[i].label.index()])
        .sum();

    // Logits for all graphs under a given model, eval mode.
    let eval_logits = |model: &GnnModel| -> Result<DenseMatrix> {
        let mut logits = DenseMatrix::zeros(prepared.len(), NUM_CLASSES);
        for (i, graph) in prepared.iter().enumerate() {
            let trace = forward(model, graph, Some(config.readout), None)?;
            logits.row_mut(i).copy_from_slice(trace.logits.row(0));
        }
        Ok(logits)
    };

    let mut best: Option<(f64, usize, GnnModel)> = None;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut epoch_eval_losses = Vec::with_capacity(config.epochs);
    let mut epoch_val_accuracy = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut total_loss = 0.0;
        let mut accumulated = Gradients::zeros_like(&model);
        for &i in &train_pos {
            let graph = &prepared[i];
            let label = dataset.graphs[i].label;
            let weight = weights[label.index()] / total_weight;
            let trace = forward(&model, graph, Some(config.readout), Some(&mut dropout_rng))?;
            let probs = super::model::softmax_rows(&trace.logits);
            let p = probs.at(0, label.index()).max(1e-300);
            total_loss -= weight * p.ln();
            let mut dlogits = DenseMatrix::zeros(1, NUM_CLASSES);
            for c in 0..NUM_CLASSES {
                let indicator = if c == label.index() { 1.0 } else { 0.0 };
                *dlogits.at_mut(0, c) = weight * (probs.at(0, c) - indicator);
            }
            accumulated.accumulate(&backward(&model, graph, &trace, &dlogits));
        }
        adam.step(&mut model, &accumulated);
        epoch_losses.push(total_loss);

        let logits = eval_logits(&model)?;
        let train_targets = subset(&labels, &train_pos);
        epoch_eval_losses.push(cross_entropy(&logits, &train_targets, weights)?.0);
        let val_metrics = if val_pos.is_empty() {
            evaluate(&logits, &train_targets)?
        } else {
            evaluate(&logits, &subset(&labels, &val_pos))?
        };
        epoch_val_accuracy.push(val_metrics.accuracy);
        if best
            .as_ref()
            .map(|(acc, _, _)| val_metrics.accuracy > *acc)
            .unwrap_or(true)
        {
            best = Some((val_metrics.accuracy, epoch, model.clone()));
        }
    }

    let (_, best_epoch, best_model) = best.expect("at least one epoch ran");
    let logits = eval_logits(&best_model)?;
    let report = EvalReport {
        train: evaluate(&logits, &subset(&labels, &train_pos))?,
        validation: if val_pos.is_empty() {
            evaluate(&logits, &subset(&labels, &train_pos))?
        } else {
            evaluate(&logits, &subset(&labels, &val_pos))?
        },
        test: if test_pos.is_empty() {
            evaluate(&logits, &subset(&labels, &train_pos))?
        } else {
            evaluate(&logits, &subset(&labels, &test_pos))?
        },
        best_epoch,
        epoch_losses,
        epoch_eval_losses,
        epoch_val_accuracy,
    };
    Ok((best_model, report))
}
