//! Dense-math GNN classifiers (GCN, GraphSAGE, GAT): one graph feature
//! extraction layer plus one dense layer, with training, evaluation, and a
//! finite-difference gradient harness.

mod gradcheck;
mod matrix;
mod model;
mod train;

pub use gradcheck::gradient_check;
pub use matrix::{Adjacency, DenseMatrix, SPARSE_NODE_THRESHOLD};
pub use model::{
    backward, cross_entropy, forward, graph_readout, init_model, normalize_adjacency, read_model,
    softmax_rows, write_model, Class, ForwardTrace, GnnKind, GnnModel, Gradients, NormMode,
    PreparedGraph, ReadoutMode, NUM_CLASSES,
};
pub use model::prepare_graph;
pub use train::{
    evaluate, stratified_split, train_graph_classifier, train_node_classifier, Confusion,
    EvalReport, GraphDataset, GraphInstance, NodeDataset, SplitMetrics, TrainConfig,
};
