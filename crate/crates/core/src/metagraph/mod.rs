//! The meta-graph: one node per retweet cascade, undirected weighted edges
//! between cascades sharing retweeters, node features concatenating cascade
//! embedding pools, user pools, and semantic annotations.

mod disparity;
mod features;
mod labels;

pub use disparity::disparity_filter;
pub use features::{
    apply_norm_stats, assemble_node_features, assemble_user_features, compute_norm_stats,
    degree_sequence_cosine, token_jaccard, FeatureContext, NormStats,
};
pub use labels::{transfer_labels, CascadeLabel, LabelDecision};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cascade::{Cascade, CascadeGraph};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeLabel {
    Fake,
    NonFake,
    Unlabeled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaNode {
    pub cascade_id: String,
    pub features: Vec<f64>,
    pub label: NodeLabel,
}

/// Undirected edge; endpoints stored with `a < b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaEdge {
    pub a: u32,
    pub b: u32,
    /// |RT_a intersect RT_b|, the edge weight.
    pub shared_users: u32,
    pub graph_sim: f64,
    pub content_sim: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetaGraph {
    pub nodes: Vec<MetaNode>,
    pub edges: Vec<MetaEdge>,
}

impl MetaGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Nodes incident to at least one edge.
    pub fn non_isolated_count(&self) -> usize {
        let mut touched = vec![false; self.nodes.len()];
        for e in &self.edges {
            touched[e.a as usize] = true;
            touched[e.b as usize] = true;
        }
        touched.iter().filter(|&&t| t).count()
    }

    /// Per-node (strength, degree) over the weighted edges.
    pub fn strengths_and_degrees(&self) -> Vec<(f64, usize)> {
        let mut acc = vec![(0.0, 0usize); self.nodes.len()];
        for e in &self.edges {
            acc[e.a as usize].0 += e.shared_users as f64;
            acc[e.a as usize].1 += 1;
            acc[e.b as usize].0 += e.shared_users as f64;
            acc[e.b as usize].1 += 1;
        }
        acc
    }
}

/// Build the meta-graph skeleton: one node per cascade, an edge wherever two
/// cascades share at least `min_shared` retweeters, weighted by the exact
/// intersection size. Root users are not part of the retweeter sets.
///
/// Node features are empty and labels `Unlabeled` at this point; they are
/// attached by [`assemble_node_features`] and [`transfer_labels`].
pub fn build_metagraph(cascades: &[Cascade], min_shared: usize) -> Result<MetaGraph> {
    if min_shared == 0 {
        return Err(Error::param("min_shared", "must be >= 1"));
    }
    // Inverted index: retweeter -> cascades containing them, built
    // single-writer; pair counts follow from each user's cascade list.
    let mut by_user: HashMap<&str, Vec<u32>> = HashMap::new();
    for (idx, cascade) in cascades.iter().enumerate() {
        for user in &cascade.unique_retweeters {
            by_user.entry(user.as_str()).or_default().push(idx as u32);
        }
    }
    let mut pair_counts: HashMap<(u32, u32), u32> = HashMap::new();
    for list in by_user.values() {
        for (i, &a) in list.iter().enumerate() {
            for &b in &list[i + 1..] {
                let key = (a.min(b), a.max(b));
                *pair_counts.entry(key).or_insert(0) += 1;
            }
        }
    }

    let mut edges: Vec<MetaEdge> = pair_counts
        .into_iter()
        .filter(|&(_, count)| count as usize >= min_shared)
        .map(|((a, b), count)| MetaEdge {
            a,
            b,
            shared_users: count,
            graph_sim: 0.0,
            content_sim: 0.0,
        })
        .collect();
    edges.sort_unstable_by_key(|e| (e.a, e.b));

    Ok(MetaGraph {
        nodes: cascades
            .iter()
            .map(|c| MetaNode {
                cascade_id: c.id().to_string(),
                features: Vec::new(),
                label: NodeLabel::Unlabeled,
            })
            .collect(),
        edges,
    })
}

/// Structural and content similarity for one meta-graph edge.
///
/// `graph_sim` is the cosine of the two zero-padded descending degree
/// sequences; `content_sim` the token-set Jaccard of the root-tweet texts.
pub fn assemble_edge_features(
    cascade_a: &Cascade,
    graph_a: &CascadeGraph,
    cascade_b: &Cascade,
    graph_b: &CascadeGraph,
) -> (f64, f64) {
    (
        degree_sequence_cosine(&graph_a.degrees(), &graph_b.degrees()),
        token_jaccard(&cascade_a.root_tweet.text, &cascade_b.root_tweet.text),
    )
}

/// Fill `graph_sim` / `content_sim` on every edge. `cascades[i]` and
/// `graphs[i]` must describe the node at index i.
pub fn populate_edge_features(
    graph: &mut MetaGraph,
    cascades: &[Cascade],
    cascade_graphs: &[CascadeGraph],
) -> Result<()> {
    if cascades.len() != graph.nodes.len() || cascade_graphs.len() != graph.nodes.len() {
        return Err(Error::Dimension(format!(
            "meta-graph has {} nodes but {} cascades / {} graphs supplied",
            graph.nodes.len(),
            cascades.len(),
            cascade_graphs.len()
        )));
    }
    for edge in &mut graph.edges {
        let (a, b) = (edge.a as usize, edge.b as usize);
        let (gs, cs) = assemble_edge_features(
            &cascades[a],
            &cascade_graphs[a],
            &cascades[b],
            &cascade_graphs[b],
        );
        edge.graph_sim = gs;
        edge.content_sim = cs;
    }
    Ok(())
}
