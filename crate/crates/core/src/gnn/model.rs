//! One-conv-layer + one-dense-layer GNN classifiers with hand-derived
//! backpropagation.
//!
//! Forward paths:
//! - GCN:  logits = Dense(dropout(ReLU(Ahat X W + b)))  with
//!   Ahat = D^{-1/2} (A + I) D^{-1/2}
//! - SAGE: logits = Dense(dropout(ReLU([X || Abar X] W + b))) with Abar the
//!   row-normalized adjacency (no self-loops; self handled by concatenation)
//! - GAT:  single-head attention with LeakyReLU-scored softmax over each
//!   neighborhood (self-loop included), then the same ReLU/dropout/dense tail
//!
//! Graph-level classification pools node activations (mean by default,
//! max switchable) before the dense layer. Dropout is inverted (scaled at
//! training time), so evaluation needs no rescaling and applies none.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{Adjacency, DenseMatrix, SPARSE_NODE_THRESHOLD};
use crate::error::{Error, Result};
use crate::seeding::derive_seed;

pub const NUM_CLASSES: usize = 2;
const LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GnnKind {
    Gcn,
    Sage,
    Gat,
}

impl GnnKind {
    fn tag(self) -> u64 {
        match self {
            GnnKind::Gcn => 1,
            GnnKind::Sage => 2,
            GnnKind::Gat => 3,
        }
    }
}

impl std::str::FromStr for GnnKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(GnnKind::Gcn),
            "sage" | "graphsage" => Ok(GnnKind::Sage),
            "gat" => Ok(GnnKind::Gat),
            other => Err(Error::Unknown {
                what: "gnn kind",
                value: other.to_string(),
            }),
        }
    }
}

/// Binary class; `Fake` is the positive class throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    NonFake,
    Fake,
}

impl Class {
    pub fn index(self) -> usize {
        match self {
            Class::NonFake => 0,
            Class::Fake => 1,
        }
    }

    pub fn from_index(idx: usize) -> Class {
        if idx == 1 {
            Class::Fake
        } else {
            Class::NonFake
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnnModel {
    pub kind: GnnKind,
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// F x h for GCN/GAT, 2F x h for SAGE.
    pub conv_weight: DenseMatrix,
    pub conv_bias: Vec<f64>,
    /// Attention vectors, GAT only (empty otherwise).
    pub attn_src: Vec<f64>,
    pub attn_dst: Vec<f64>,
    pub dense_weight: DenseMatrix,
    pub dense_bias: Vec<f64>,
    pub dropout_rate: f64,
    pub seed: u64,
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let mut m = DenseMatrix::zeros(rows, cols);
    for x in m.data_mut() {
        *x = rng.random_range(-limit..limit);
    }
    m
}

pub fn init_model(
    kind: GnnKind,
    input_dim: usize,
    hidden_dim: usize,
    dropout_rate: f64,
    seed: u64,
) -> Result<GnnModel> {
    if input_dim == 0 || hidden_dim == 0 {
        return Err(Error::param("hidden_dim", "layer dimensions must be positive"));
    }
    if !(0.0..1.0).contains(&dropout_rate) {
        return Err(Error::param("dropout", "must be in [0, 1)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x6e11, kind.tag()));
    let conv_rows = match kind {
        GnnKind::Sage => 2 * input_dim,
        _ => input_dim,
    };
    let conv_weight = glorot(&mut rng, conv_rows, hidden_dim);
    let (attn_src, attn_dst) = if kind == GnnKind::Gat {
        let limit = (6.0 / (hidden_dim + 1) as f64).sqrt();
        let mut draw = |_: usize| {
            (0..hidden_dim)
                .map(|_| rng.random_range(-limit..limit))
                .collect::<Vec<f64>>()
        };
        (draw(0), draw(1))
    } else {
        (Vec::new(), Vec::new())
    };
    let dense_weight = glorot(&mut rng, hidden_dim, NUM_CLASSES);
    Ok(GnnModel {
        kind,
        input_dim,
        hidden_dim,
        conv_weight,
        conv_bias: vec![0.0; hidden_dim],
        attn_src,
        attn_dst,
        dense_weight,
        dense_bias: vec![0.0; NUM_CLASSES],
        dropout_rate,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    Gcn,
    Sage,
}

/// Normalize a dense adjacency matrix.
///
/// `Gcn`: `D^{-1/2} (A + I) D^{-1/2}` with degrees taken from A + I (the self
/// loop guards zero-degree rows). Requires a square symmetric input.
/// `Sage`: rows divided by their degree, no self-loops; zero rows stay zero.
pub fn normalize_adjacency(adjacency: &DenseMatrix, mode: NormMode) -> Result<DenseMatrix> {
    let n = adjacency.rows();
    if adjacency.cols() != n {
        return Err(Error::Dimension(format!(
            "adjacency must be square, got {n} x {}",
            adjacency.cols()
        )));
    }
    match mode {
        NormMode::Gcn => {
            for i in 0..n {
                for j in (i + 1)..n {
                    if adjacency.at(i, j) != adjacency.at(j, i) {
                        return Err(Error::Dimension(format!(
                            "gcn normalization needs a symmetric adjacency; ({i},{j}) differs"
                        )));
                    }
                }
            }
            let mut with_loops = adjacency.clone();
            for i in 0..n {
                *with_loops.at_mut(i, i) += 1.0;
            }
            let degrees: Vec<f64> = (0..n)
                .map(|i| with_loops.row(i).iter().sum::<f64>())
                .collect();
            let mut out = DenseMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let v = with_loops.at(i, j);
                    if v != 0.0 {
                        *out.at_mut(i, j) = v / (degrees[i] * degrees[j]).sqrt();
                    }
                }
            }
            Ok(out)
        }
        NormMode::Sage => {
            let mut out = DenseMatrix::zeros(n, n);
            for i in 0..n {
                let degree: f64 = adjacency.row(i).iter().sum();
                if degree > 0.0 {
                    for j in 0..n {
                        let v = adjacency.at(i, j);
                        if v != 0.0 {
                            *out.at_mut(i, j) = v / degree;
                        }
                    }
                }
            }
            Ok(out)
        }
    }
}

/// A graph instance with every per-kind adjacency operator precomputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedGraph {
    pub features: DenseMatrix,
    pub gcn_adj: Adjacency,
    pub sage_adj: Adjacency,
    /// Sorted neighbor lists without self-loops (GAT attention support).
    pub neighbors: Vec<Vec<usize>>,
}

/// Prepare a graph from undirected edges over `features.rows()` nodes.
/// `weights`, when given, must align with `edges`; otherwise edges weigh 1.
pub fn prepare_graph(
    features: DenseMatrix,
    edges: &[(u32, u32)],
    weights: Option<&[f64]>,
) -> Result<PreparedGraph> {
    let n = features.rows();
    if let Some(w) = weights {
        if w.len() != edges.len() {
            return Err(Error::Dimension(format!(
                "{} edge weights for {} edges",
                w.len(),
                edges.len()
            )));
        }
    }
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut weighted: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (idx, &(a, b)) in edges.iter().enumerate() {
        let (a, b) = (a as usize, b as usize);
        if a >= n || b >= n {
            return Err(Error::Dimension(format!(
                "edge ({a},{b}) out of range for {n} nodes"
            )));
        }
        if a == b {
            continue;
        }
        let w = weights.map(|ws| ws[idx]).unwrap_or(1.0);
        neighbors[a].push(b);
        neighbors[b].push(a);
        weighted[a].push((b, w));
        weighted[b].push((a, w));
    }
    for list in &mut neighbors {
        list.sort_unstable();
        list.dedup();
    }
    for list in &mut weighted {
        list.sort_unstable_by_key(|&(j, _)| j);
    }

    let sparse = n > SPARSE_NODE_THRESHOLD;

    // GCN: degrees from A + I, values w / sqrt(d_i * d_j); matches
    // `normalize_adjacency(.., Gcn)` on the dense path.
    let degrees: Vec<f64> = weighted
        .iter()
        .map(|list| 1.0 + list.iter().map(|&(_, w)| w).sum::<f64>())
        .collect();
    let mut gcn_triplets: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        gcn_triplets.push((i, i, 1.0 / (degrees[i] * degrees[i]).sqrt()));
        for &(j, w) in &weighted[i] {
            gcn_triplets.push((i, j, w / (degrees[i] * degrees[j]).sqrt()));
        }
    }
    let gcn_adj = Adjacency::from_triplets(n, &gcn_triplets, sparse);

    let mut sage_triplets: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        let degree: f64 = weighted[i].iter().map(|&(_, w)| w).sum();
        if degree > 0.0 {
            for &(j, w) in &weighted[i] {
                sage_triplets.push((i, j, w / degree));
            }
        }
    }
    let sage_adj = Adjacency::from_triplets(n, &sage_triplets, sparse);

    Ok(PreparedGraph {
        features,
        gcn_adj,
        sage_adj,
        neighbors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutMode {
    Mean,
    Max,
}

/// Pool node activations into one graph-level vector.
pub fn graph_readout(activations: &DenseMatrix, mode: ReadoutMode) -> Vec<f64> {
    let (n, h) = (activations.rows(), activations.cols());
    match mode {
        ReadoutMode::Mean => {
            let mut out = activations.column_sums();
            out.iter_mut().for_each(|x| *x /= n as f64);
            out
        }
        ReadoutMode::Max => {
            let mut out = vec![f64::NEG_INFINITY; h];
            for i in 0..n {
                for (o, &x) in out.iter_mut().zip(activations.row(i)) {
                    *o = o.max(x);
                }
            }
            out
        }
    }
}

fn readout_argmax(activations: &DenseMatrix) -> Vec<usize> {
    let (n, h) = (activations.rows(), activations.cols());
    (0..h)
        .map(|c| {
            let mut best = 0;
            for i in 1..n {
                if activations.at(i, c) > activations.at(best, c) {
                    best = i;
                }
            }
            best
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct GatTrace {
    /// P = X W, shape N x h.
    pub projected: DenseMatrix,
    /// Per node i: (j, alpha_ij) over {i} union N(i), ascending j.
    pub attention: Vec<Vec<(usize, f64)>>,
    /// Raw scores s_i + t_j before LeakyReLU, aligned with `attention`.
    pub pre_scores: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// GCN: Ahat X. SAGE: [X || Abar X]. None for GAT.
    pub conv_input: Option<DenseMatrix>,
    pub pre_activation: DenseMatrix,
    pub hidden: DenseMatrix,
    /// Per-entry multipliers (0 or 1/keep); None in evaluation mode.
    pub dropout_scale: Option<DenseMatrix>,
    pub dropped: DenseMatrix,
    /// Graph mode only: (pooled vector, mode, per-column argmax for Max).
    pub pooled: Option<(Vec<f64>, ReadoutMode, Vec<usize>)>,
    /// N x 2 (node mode) or 1 x 2 (graph mode).
    pub logits: DenseMatrix,
    pub gat: Option<GatTrace>,
}

fn leaky_relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

fn gat_convolve(model: &GnnModel, graph: &PreparedGraph) -> (DenseMatrix, GatTrace) {
    let n = graph.features.rows();
    let h = model.hidden_dim;
    let projected = graph.features.matmul(&model.conv_weight);
    let src_scores: Vec<f64> = (0..n)
        .map(|i| projected.row(i).iter().zip(&model.attn_src).map(|(a, b)| a * b).sum())
        .collect();
    let dst_scores: Vec<f64> = (0..n)
        .map(|i| projected.row(i).iter().zip(&model.attn_dst).map(|(a, b)| a * b).sum())
        .collect();

    let mut pre_activation = DenseMatrix::zeros(n, h);
    let mut attention = Vec::with_capacity(n);
    let mut pre_scores = Vec::with_capacity(n);
    for i in 0..n {
        let mut targets: Vec<usize> = Vec::with_capacity(graph.neighbors[i].len() + 1);
        targets.push(i);
        targets.extend(&graph.neighbors[i]);
        targets.sort_unstable();

        let pres: Vec<f64> = targets
            .iter()
            .map(|&j| leaky_relu(src_scores[i] + dst_scores[j]))
            .collect();
        let max = pres.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let exps: Vec<f64> = pres.iter().map(|&x| (x - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let alphas: Vec<(usize, f64)> = targets
            .iter()
            .zip(&exps)
            .map(|(&j, &e)| (j, e / total))
            .collect();

        let row = pre_activation.row_mut(i);
        for &(j, alpha) in &alphas {
            for (o, &p) in row.iter_mut().zip(projected.row(j)) {
                *o += alpha * p;
            }
        }
        attention.push(alphas);
        pre_scores.push(
            targets
                .iter()
                .map(|&j| src_scores[i] + dst_scores[j])
                .collect(),
        );
    }
    (
        pre_activation,
        GatTrace {
            projected,
            attention,
            pre_scores,
        },
    )
}

/// Run the forward pass.
///
/// `readout = Some(mode)` switches to graph-level classification. Dropout is
/// applied only when `dropout_rng` is supplied (training mode); evaluation
/// passes are fully deterministic.
pub fn forward(
    model: &GnnModel,
    graph: &PreparedGraph,
    readout: Option<ReadoutMode>,
    dropout_rng: Option<&mut ChaCha8Rng>,
) -> Result<ForwardTrace> {
    if graph.features.cols() != model.input_dim {
        return Err(Error::Dimension(format!(
            "features have {} columns, model expects {}",
            graph.features.cols(),
            model.input_dim
        )));
    }

    let (conv_input, mut pre_activation, gat) = match model.kind {
        GnnKind::Gcn => {
            let mixed = graph.gcn_adj.apply(&graph.features);
            let z = mixed.matmul(&model.conv_weight);
            (Some(mixed), z, None)
        }
        GnnKind::Sage => {
            let neighbor_mean = graph.sage_adj.apply(&graph.features);
            let concat = graph.features.hconcat(&neighbor_mean);
            let z = concat.matmul(&model.conv_weight);
            (Some(concat), z, None)
        }
        GnnKind::Gat => {
            let (z, trace) = gat_convolve(model, graph);
            (None, z, Some(trace))
        }
    };
    pre_activation.add_row_bias(&model.conv_bias);

    let hidden = pre_activation.map(|x| x.max(0.0));

    let (dropped, dropout_scale) = match dropout_rng {
        Some(rng) if model.dropout_rate > 0.0 => {
            let keep = 1.0 - model.dropout_rate;
            let mut scale = DenseMatrix::zeros(hidden.rows(), hidden.cols());
            for x in scale.data_mut() {
                *x = if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 };
            }
            (hidden.hadamard(&scale), Some(scale))
        }
        _ => (hidden.clone(), None),
    };

    let (pooled, logits) = match readout {
        None => {
            let mut logits = dropped.matmul(&model.dense_weight);
            logits.add_row_bias(&model.dense_bias);
            (None, logits)
        }
        Some(mode) => {
            let vector = graph_readout(&dropped, mode);
            let argmax = match mode {
                ReadoutMode::Max => readout_argmax(&dropped),
                ReadoutMode::Mean => Vec::new(),
            };
            let pooled_row = DenseMatrix::from_rows(vec![vector.clone()]);
            let mut logits = pooled_row.matmul(&model.dense_weight);
            logits.add_row_bias(&model.dense_bias);
            (Some((vector, mode, argmax)), logits)
        }
    };

    Ok(ForwardTrace {
        conv_input,
        pre_activation,
        hidden,
        dropout_scale,
        dropped,
        pooled,
        logits,
        gat,
    })
}

/// Row-wise softmax.
pub fn softmax_rows(logits: &DenseMatrix) -> DenseMatrix {
    let mut out = logits.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let mut total = 0.0;
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            total += *x;
        }
        for x in row.iter_mut() {
            *x /= total;
        }
    }
    out
}

/// Parameter gradients, shaped like the model.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub conv_weight: DenseMatrix,
    pub conv_bias: Vec<f64>,
    pub attn_src: Vec<f64>,
    pub attn_dst: Vec<f64>,
    pub dense_weight: DenseMatrix,
    pub dense_bias: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(model: &GnnModel) -> Gradients {
        Gradients {
            conv_weight: DenseMatrix::zeros(model.conv_weight.rows(), model.conv_weight.cols()),
            conv_bias: vec![0.0; model.conv_bias.len()],
            attn_src: vec![0.0; model.attn_src.len()],
            attn_dst: vec![0.0; model.attn_dst.len()],
            dense_weight: DenseMatrix::zeros(model.dense_weight.rows(), model.dense_weight.cols()),
            dense_bias: vec![0.0; model.dense_bias.len()],
        }
    }

    pub fn accumulate(&mut self, other: &Gradients) {
        let pairs = [
            (self.conv_weight.data_mut(), other.conv_weight.data()),
            (&mut self.conv_bias[..], &other.conv_bias[..]),
            (&mut self.attn_src[..], &other.attn_src[..]),
            (&mut self.attn_dst[..], &other.attn_dst[..]),
            (self.dense_weight.data_mut(), other.dense_weight.data()),
            (&mut self.dense_bias[..], &other.dense_bias[..]),
        ];
        for (dst, src) in pairs {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }
}

/// Backpropagate `dlogits` (matching `trace.logits` in shape) into parameter
/// gradients. Node mode expects N x 2; graph mode 1 x 2 with `trace.pooled`.
pub fn backward(
    model: &GnnModel,
    graph: &PreparedGraph,
    trace: &ForwardTrace,
    dlogits: &DenseMatrix,
) -> Gradients {
    let mut grads = Gradients::zeros_like(model);
    let n = graph.features.rows();

    // Dense layer, then distribute back to node activations.
    let ddropped: DenseMatrix = match &trace.pooled {
        None => {
            grads.dense_weight = trace.dropped.transposed_matmul(dlogits);
            grads.dense_bias = dlogits.column_sums();
            dlogits.matmul_transposed(&model.dense_weight)
        }
        Some((pooled, mode, argmax)) => {
            let pooled_row = DenseMatrix::from_rows(vec![pooled.clone()]);
            grads.dense_weight = pooled_row.transposed_matmul(dlogits);
            grads.dense_bias = dlogits.column_sums();
            let dpooled = dlogits.matmul_transposed(&model.dense_weight); // 1 x h
            let mut out = DenseMatrix::zeros(n, model.hidden_dim);
            match mode {
                ReadoutMode::Mean => {
                    for i in 0..n {
                        for (o, &g) in out.row_mut(i).iter_mut().zip(dpooled.row(0)) {
                            *o = g / n as f64;
                        }
                    }
                }
                ReadoutMode::Max => {
                    for (c, &row) in argmax.iter().enumerate() {
                        *out.at_mut(row, c) = dpooled.at(0, c);
                    }
                }
            }
            out
        }
    };

    let dhidden = match &trace.dropout_scale {
        Some(scale) => ddropped.hadamard(scale),
        None => ddropped,
    };
    let relu_mask = trace.pre_activation.map(|x| if x > 0.0 { 1.0 } else { 0.0 });
    let dpre = dhidden.hadamard(&relu_mask);

    grads.conv_bias = dpre.column_sums();

    match model.kind {
        GnnKind::Gcn | GnnKind::Sage => {
            let conv_input = trace.conv_input.as_ref().expect("trace carries conv input");
            grads.conv_weight = conv_input.transposed_matmul(&dpre);
        }
        GnnKind::Gat => {
            let gat = trace.gat.as_ref().expect("trace carries gat state");
            let h = model.hidden_dim;
            let mut dprojected = DenseMatrix::zeros(n, h);
            let mut dsrc_score = vec![0.0; n];
            let mut ddst_score = vec![0.0; n];

            for i in 0..n {
                let alphas = &gat.attention[i];
                let pres = &gat.pre_scores[i];
                // z_i = sum_j alpha_ij P_j : gradient into alphas and P rows.
                let dalpha: Vec<f64> = alphas
                    .iter()
                    .map(|&(j, _)| {
                        dpre.row(i)
                            .iter()
                            .zip(gat.projected.row(j))
                            .map(|(a, b)| a * b)
                            .sum()
                    })
                    .collect();
                for &(j, alpha) in alphas {
                    for (o, &g) in dprojected.row_mut(j).iter_mut().zip(dpre.row(i)) {
                        *o += alpha * g;
                    }
                }
                // Softmax then LeakyReLU backward.
                let weighted_sum: f64 = alphas
                    .iter()
                    .zip(&dalpha)
                    .map(|(&(_, alpha), &da)| alpha * da)
                    .sum();
                for ((&(j, alpha), &da), &pre) in alphas.iter().zip(&dalpha).zip(pres) {
                    let de = alpha * (da - weighted_sum);
                    let dpre_score = de * if pre > 0.0 { 1.0 } else { LEAKY_SLOPE };
                    dsrc_score[i] += dpre_score;
                    ddst_score[j] += dpre_score;
                }
            }

            for i in 0..n {
                let p_row = gat.projected.row(i);
                for (slot, &p) in p_row.iter().enumerate() {
                    grads.attn_src[slot] += dsrc_score[i] * p;
                    grads.attn_dst[slot] += ddst_score[i] * p;
                }
                let dp_row = dprojected.row_mut(i);
                for slot in 0..h {
                    dp_row[slot] +=
                        dsrc_score[i] * model.attn_src[slot] + ddst_score[i] * model.attn_dst[slot];
                }
            }
            grads.conv_weight = graph.features.transposed_matmul(&dprojected);
        }
    }
    grads
}

/// Cross-entropy loss and logits gradient for labeled rows. Row weights are
/// `class_weights[class]`, normalized to sum 1 over the batch.
pub fn cross_entropy(
    logits: &DenseMatrix,
    targets: &[(usize, Class)],
    class_weights: [f64; NUM_CLASSES],
) -> Result<(f64, DenseMatrix)> {
    if targets.is_empty() {
        return Err(Error::Empty("cross-entropy targets"));
    }
    let probs = softmax_rows(logits);
    let total_weight: f64 = targets
        .iter()
        .map(|&(_, class)| class_weights[class.index()])
        .sum();
    let mut loss = 0.0;
    let mut dlogits = DenseMatrix::zeros(logits.rows(), logits.cols());
    for &(row, class) in targets {
        let weight = class_weights[class.index()] / total_weight;
        let p = probs.at(row, class.index()).max(1e-300);
        loss -= weight * p.ln();
        for c in 0..NUM_CLASSES {
            let indicator = if c == class.index() { 1.0 } else { 0.0 };
            *dlogits.at_mut(row, c) += weight * (probs.at(row, c) - indicator);
        }
    }
    Ok((loss, dlogits))
}

const MODEL_MAGIC: &[u8; 4] = b"MGNN";
const MODEL_VERSION: u32 = 1;

/// Checkpoint layout (little-endian): `"MGNN"`, `u32` version, `u8` kind
/// (1 = gcn, 2 = sage, 3 = gat), `u64` input_dim, `u64` hidden_dim,
/// `f64` dropout, `u64` seed, then six length-prefixed f64 arrays in the
/// order conv_weight (row-major), conv_bias, attn_src, attn_dst,
/// dense_weight, dense_bias.
pub fn write_model<W: std::io::Write>(model: &GnnModel, mut w: W) -> Result<()> {
    let io_err = |e| Error::io("<model checkpoint>", e);
    w.write_all(MODEL_MAGIC).map_err(io_err)?;
    w.write_all(&MODEL_VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&[model.kind.tag() as u8]).map_err(io_err)?;
    w.write_all(&(model.input_dim as u64).to_le_bytes()).map_err(io_err)?;
    w.write_all(&(model.hidden_dim as u64).to_le_bytes()).map_err(io_err)?;
    w.write_all(&model.dropout_rate.to_le_bytes()).map_err(io_err)?;
    w.write_all(&model.seed.to_le_bytes()).map_err(io_err)?;
    let arrays: [&[f64]; 6] = [
        model.conv_weight.data(),
        &model.conv_bias,
        &model.attn_src,
        &model.attn_dst,
        model.dense_weight.data(),
        &model.dense_bias,
    ];
    for array in arrays {
        w.write_all(&(array.len() as u64).to_le_bytes()).map_err(io_err)?;
        for value in array {
            w.write_all(&value.to_le_bytes()).map_err(io_err)?;
        }
    }
    Ok(())
}

pub fn read_model<R: std::io::Read>(mut r: R) -> Result<GnnModel> {
    let corrupt = |reason: &str| Error::CorruptArtifact {
        path: "<model checkpoint>".into(),
        reason: reason.to_string(),
    };
    let io_err = |e| Error::io("<model checkpoint>", e);
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4).map_err(io_err)?;
    if &b4 != MODEL_MAGIC {
        return Err(corrupt("bad magic"));
    }
    r.read_exact(&mut b4).map_err(io_err)?;
    if u32::from_le_bytes(b4) != MODEL_VERSION {
        return Err(corrupt("unsupported version"));
    }
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b1).map_err(io_err)?;
    let kind = match b1[0] {
        1 => GnnKind::Gcn,
        2 => GnnKind::Sage,
        3 => GnnKind::Gat,
        _ => return Err(corrupt("unknown model kind")),
    };
    let mut b8 = [0u8; 8];
    let mut read_u64 = |r: &mut R| -> Result<u64> {
        r.read_exact(&mut b8).map_err(|e| Error::io("<model checkpoint>", e))?;
        Ok(u64::from_le_bytes(b8))
    };
    let input_dim = read_u64(&mut r)? as usize;
    let hidden_dim = read_u64(&mut r)? as usize;
    let mut f8 = [0u8; 8];
    r.read_exact(&mut f8).map_err(io_err)?;
    let dropout_rate = f64::from_le_bytes(f8);
    r.read_exact(&mut f8).map_err(io_err)?;
    let seed = u64::from_le_bytes(f8);

    let read_array = |r: &mut R| -> Result<Vec<f64>> {
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8).map_err(|e| Error::io("<model checkpoint>", e))?;
        let len = u64::from_le_bytes(b8) as usize;
        let mut out = vec![0.0; len];
        for value in &mut out {
            r.read_exact(&mut b8).map_err(|e| Error::io("<model checkpoint>", e))?;
            *value = f64::from_le_bytes(b8);
        }
        Ok(out)
    };
    let conv_weight_data = read_array(&mut r)?;
    let conv_bias = read_array(&mut r)?;
    let attn_src = read_array(&mut r)?;
    let attn_dst = read_array(&mut r)?;
    let dense_weight_data = read_array(&mut r)?;
    let dense_bias = read_array(&mut r)?;

    let conv_rows = match kind {
        GnnKind::Sage => 2 * input_dim,
        _ => input_dim,
    };
    if conv_weight_data.len() != conv_rows * hidden_dim
        || dense_weight_data.len() != hidden_dim * NUM_CLASSES
    {
        return Err(corrupt("parameter array size mismatch"));
    }
    let mut conv_weight = DenseMatrix::zeros(conv_rows, hidden_dim);
    conv_weight.data_mut().copy_from_slice(&conv_weight_data);
    let mut dense_weight = DenseMatrix::zeros(hidden_dim, NUM_CLASSES);
    dense_weight.data_mut().copy_from_slice(&dense_weight_data);
    Ok(GnnModel {
        kind,
        input_dim,
        hidden_dim,
        conv_weight,
        conv_bias,
        attn_src,
        attn_dst,
        dense_weight,
        dense_bias,
        dropout_rate,
        seed,
    })
}
