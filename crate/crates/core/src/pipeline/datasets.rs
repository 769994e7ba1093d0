//! Assembling training datasets from pipeline artifacts.
//!
//! Both classification tasks share the corpus slices and the seeded
//! stratified split; feature normalization statistics always come from the
//! training portion of that split, never from validation or test items.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::cascade::{Cascade, CascadeGraph};
use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::gnn::{
    stratified_split, Class, DenseMatrix, GraphDataset, GraphInstance, NodeDataset,
};
use crate::ingest::annotations::AnnotationStore;
use crate::ingest::UserProfile;
use crate::metagraph::{
    apply_norm_stats, assemble_node_features, assemble_user_features, build_metagraph,
    compute_norm_stats, populate_edge_features, CascadeLabel, FeatureContext, LabelDecision,
    MetaGraph, NodeLabel,
};

/// Everything needed to build datasets; slices are index-aligned
/// (`cascades[i]`, `graphs[i]`, `embeddings[i]`, `decisions[i]`).
pub struct CorpusSlices<'a> {
    pub cascades: &'a [Cascade],
    pub graphs: &'a [CascadeGraph],
    pub embeddings: &'a [EmbeddingMatrix],
    pub profiles: &'a HashMap<String, UserProfile>,
    pub annotations: Option<&'a AnnotationStore>,
    pub decisions: &'a [CascadeLabel],
}

impl<'a> CorpusSlices<'a> {
    fn check_alignment(&self) -> Result<()> {
        let n = self.cascades.len();
        if self.graphs.len() != n || self.embeddings.len() != n || self.decisions.len() != n {
            return Err(Error::Dimension(format!(
                "corpus slices misaligned: {n} cascades, {} graphs, {} embeddings, {} decisions",
                self.graphs.len(),
                self.embeddings.len(),
                self.decisions.len()
            )));
        }
        Ok(())
    }

    /// Indices of cascades that stay in the dataset (contradictory-label
    /// cascades are discarded outright).
    pub fn kept_indices(&self) -> Vec<usize> {
        self.decisions
            .iter()
            .enumerate()
            .filter(|(_, d)| d.decision != LabelDecision::Discarded)
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn reference_time(cascades: &[Cascade]) -> i64 {
    cascades
        .iter()
        .map(|c| c.root_tweet.created_at)
        .max()
        .unwrap_or(0)
}

fn decision_to_node_label(decision: LabelDecision) -> NodeLabel {
    match decision {
        LabelDecision::Fake => NodeLabel::Fake,
        LabelDecision::NonFake => NodeLabel::NonFake,
        LabelDecision::Unlabeled | LabelDecision::Discarded => NodeLabel::Unlabeled,
    }
}

fn labeled_items(labels: &[NodeLabel]) -> Vec<(usize, Class)> {
    labels
        .iter()
        .enumerate()
        .filter_map(|(i, label)| match label {
            NodeLabel::Fake => Some((i, Class::Fake)),
            NodeLabel::NonFake => Some((i, Class::NonFake)),
            NodeLabel::Unlabeled => None,
        })
        .collect()
}

/// Build the fully featured, labeled meta-graph over the kept cascades.
///
/// Node features are assembled per cascade, then the numeric block is
/// z-normalized with statistics from the seeded training split of the
/// labeled nodes.
pub fn build_meta_graph(
    slices: &CorpusSlices,
    min_shared: usize,
    lang_top_k: usize,
    split: (f64, f64, f64),
    seed: u64,
) -> Result<MetaGraph> {
    slices.check_alignment()?;
    let kept = slices.kept_indices();
    let cascades: Vec<Cascade> = kept.iter().map(|&i| slices.cascades[i].clone()).collect();
    let graphs: Vec<CascadeGraph> = kept.iter().map(|&i| slices.graphs[i].clone()).collect();

    let mut meta = build_metagraph(&cascades, min_shared)?;
    populate_edge_features(&mut meta, &cascades, &graphs)?;
    for (node_pos, &orig) in kept.iter().enumerate() {
        meta.nodes[node_pos].label = decision_to_node_label(slices.decisions[orig].decision);
    }

    let ctx = FeatureContext::new(
        slices.profiles,
        slices.annotations,
        lang_top_k,
        reference_time(&cascades),
    );
    let mut features: Vec<Vec<f64>> = kept
        .par_iter()
        .map(|&i| {
            assemble_node_features(
                &slices.cascades[i],
                &slices.graphs[i],
                &slices.embeddings[i],
                &ctx,
            )
        })
        .collect::<Result<_>>()?;

    let labels: Vec<NodeLabel> = meta.nodes.iter().map(|n| n.label).collect();
    let labeled = labeled_items(&labels);
    if !labeled.is_empty() && !features.is_empty() {
        let (train_pos, _, _) = stratified_split(&labeled, split, seed)?;
        let train_nodes: Vec<usize> = train_pos.iter().map(|&p| labeled[p].0).collect();
        let embed_dim = slices.embeddings.first().map(|m| m.dim()).unwrap_or(0);
        let (offset, width) = ctx.numeric_block(embed_dim);
        let stats = compute_norm_stats(&features, &train_nodes, offset, width);
        for row in &mut features {
            apply_norm_stats(row, &stats);
        }
    }
    for (node, feats) in meta.nodes.iter_mut().zip(features) {
        node.features = feats;
    }
    Ok(meta)
}

/// Node-classification dataset view of a (possibly filtered) meta-graph.
pub fn node_dataset_from_metagraph(meta: &MetaGraph, use_edge_weights: bool) -> Result<NodeDataset> {
    if meta.nodes.is_empty() {
        return Err(Error::Empty("meta-graph"));
    }
    let feature_len = meta.nodes[0].features.len();
    if meta.nodes.iter().any(|n| n.features.len() != feature_len) || feature_len == 0 {
        return Err(Error::Dimension(
            "meta-graph node features missing or unequal length".into(),
        ));
    }
    let features =
        DenseMatrix::from_rows(meta.nodes.iter().map(|n| n.features.clone()).collect());
    let edges: Vec<(u32, u32)> = meta.edges.iter().map(|e| (e.a, e.b)).collect();
    let edge_weights = use_edge_weights
        .then(|| meta.edges.iter().map(|e| e.shared_users as f64).collect());
    let labels = labeled_items(&meta.nodes.iter().map(|n| n.label).collect::<Vec<_>>());
    Ok(NodeDataset {
        features,
        edges,
        edge_weights,
        labels,
    })
}

/// Graph-classification dataset: one instance per labeled kept cascade, with
/// per-user feature rows (each user inherits the root annotation). The
/// per-user numeric block is normalized with statistics pooled over the
/// users of training-split cascades.
pub fn build_cascade_dataset(
    slices: &CorpusSlices,
    lang_top_k: usize,
    split: (f64, f64, f64),
    seed: u64,
) -> Result<GraphDataset> {
    slices.check_alignment()?;
    let labeled: Vec<(usize, Class)> = slices
        .decisions
        .iter()
        .enumerate()
        .filter_map(|(i, d)| match d.decision {
            LabelDecision::Fake => Some((i, Class::Fake)),
            LabelDecision::NonFake => Some((i, Class::NonFake)),
            _ => None,
        })
        .collect();
    if labeled.is_empty() {
        return Err(Error::Empty("labeled cascade set"));
    }

    let cascades_for_ref: Vec<Cascade> = labeled
        .iter()
        .map(|&(i, _)| slices.cascades[i].clone())
        .collect();
    let ctx = FeatureContext::new(
        slices.profiles,
        slices.annotations,
        lang_top_k,
        reference_time(&cascades_for_ref),
    );

    let mut per_instance_rows: Vec<Vec<Vec<f64>>> = labeled
        .par_iter()
        .map(|&(i, _)| {
            assemble_user_features(
                &slices.cascades[i],
                &slices.graphs[i],
                &slices.embeddings[i],
                &ctx,
            )
        })
        .collect::<Result<_>>()?;

    // Instance-level labels drive the split; user rows of the training
    // instances feed the normalization statistics.
    let instance_labels: Vec<(usize, Class)> = labeled
        .iter()
        .enumerate()
        .map(|(pos, &(_, class))| (pos, class))
        .collect();
    let (train_pos, _, _) = stratified_split(&instance_labels, split, seed)?;
    let embed_dim = slices.embeddings.first().map(|m| m.dim()).unwrap_or(0);
    let (offset, width) = ctx.user_numeric_block(embed_dim);
    let train_rows: Vec<&[f64]> = train_pos
        .iter()
        .flat_map(|&p| per_instance_rows[p].iter().map(Vec::as_slice))
        .collect();
    let all_train: Vec<usize> = (0..train_rows.len()).collect();
    let stats = compute_norm_stats(&train_rows, &all_train, offset, width);
    for rows in &mut per_instance_rows {
        for row in rows {
            apply_norm_stats(row, &stats);
        }
    }

    let graphs: Vec<GraphInstance> = labeled
        .iter()
        .zip(per_instance_rows)
        .map(|(&(i, class), rows)| GraphInstance {
            features: DenseMatrix::from_rows(rows),
            edges: slices.graphs[i].edges.clone(),
            label: class,
        })
        .collect();
    Ok(GraphDataset { graphs })
}
