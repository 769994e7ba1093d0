//! Node feature assembly.
//!
//! Meta-graph nodes get one fixed-length vector per cascade:
//!
//! ```text
//! [ mean-pooled embedding (d) | max-pooled embedding (d)
//! | mean of per-user numerics (5) | max of per-user numerics (5)
//! | verified fraction (1) | dominant-language one-hot (K)
//! | topic ids (3) | sentiment label, score (2) | text embedding (L) ]
//! ```
//!
//! Per-user numerics are (account age in days, followers, friends, statuses,
//! favourites), log1p-transformed before pooling and z-normalized afterwards
//! with statistics from the training split only. The annotation tail (topics,
//! sentiment, text embedding) appears only when annotations are supplied;
//! cascades without an annotation get the neutral defaults
//! (-1, -1, -1, 1, 0.5) and a zero text embedding.
//!
//! Cascade sub-graph classification uses the same ingredients per user
//! instead of pooled: every user row carries their own embedding row and
//! numerics, and inherits the root tweet's annotation tail.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cascade::{Cascade, CascadeGraph};
use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::ingest::annotations::AnnotationStore;
use crate::ingest::UserProfile;

/// Shared context for feature assembly across one meta-graph.
pub struct FeatureContext<'a> {
    pub profiles: &'a HashMap<String, UserProfile>,
    pub annotations: Option<&'a AnnotationStore>,
    /// Top-K languages; the one-hot block has exactly this many slots.
    pub lang_vocab: Vec<String>,
    /// Account ages are measured backwards from this time.
    pub reference_time: i64,
}

impl<'a> FeatureContext<'a> {
    /// Build a context whose language vocabulary is the top `lang_top_k`
    /// languages by profile count (ties broken lexicographically).
    pub fn new(
        profiles: &'a HashMap<String, UserProfile>,
        annotations: Option<&'a AnnotationStore>,
        lang_top_k: usize,
        reference_time: i64,
    ) -> Self {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for profile in profiles.values() {
            if !profile.lang.is_empty() {
                *counts.entry(profile.lang.as_str()).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        FeatureContext {
            profiles,
            annotations,
            lang_vocab: ranked
                .into_iter()
                .take(lang_top_k)
                .map(|(lang, _)| lang.to_string())
                .collect(),
            reference_time,
        }
    }

    fn text_embedding_dim(&self) -> usize {
        self.annotations
            .and_then(|store| store.embedding_dim)
            .unwrap_or(0)
    }

    /// Total feature-vector length for meta-graph nodes.
    pub fn node_feature_len(&self, embed_dim: usize) -> usize {
        let annotation_tail = if self.annotations.is_some() {
            5 + self.text_embedding_dim()
        } else {
            0
        };
        2 * embed_dim + 10 + 1 + self.lang_vocab.len() + annotation_tail
    }

    /// Offset and width of the z-normalized numeric block.
    pub fn numeric_block(&self, embed_dim: usize) -> (usize, usize) {
        (2 * embed_dim, 10)
    }

    /// Per-user feature length for cascade sub-graph classification.
    pub fn user_feature_len(&self, embed_dim: usize) -> usize {
        let annotation_tail = if self.annotations.is_some() {
            5 + self.text_embedding_dim()
        } else {
            0
        };
        embed_dim + 5 + 1 + self.lang_vocab.len() + annotation_tail
    }

    /// Offset and width of the per-user numeric block.
    pub fn user_numeric_block(&self, embed_dim: usize) -> (usize, usize) {
        (embed_dim, 5)
    }

    fn user_numerics(&self, user: &str) -> ([f64; 5], bool, &str) {
        match self.profiles.get(user) {
            Some(p) => {
                let age_days =
                    ((self.reference_time - p.account_created_at).max(0) as f64) / 86_400.0;
                (
                    [
                        age_days.ln_1p(),
                        (p.followers_count as f64).ln_1p(),
                        (p.friends_count as f64).ln_1p(),
                        (p.statuses_count as f64).ln_1p(),
                        (p.favourites_count as f64).ln_1p(),
                    ],
                    p.verified,
                    p.lang.as_str(),
                )
            }
            None => ([0.0; 5], false, ""),
        }
    }

    fn push_annotation_tail(&self, out: &mut Vec<f64>, tweet_id: &str) {
        let Some(store) = self.annotations else {
            return;
        };
        match store.get(tweet_id) {
            Some(ann) => {
                out.extend([
                    ann.topic_ew as f64,
                    ann.topic_pmi as f64,
                    ann.topic_idf as f64,
                    ann.sentiment_label.code() as f64,
                    ann.sentiment_score,
                ]);
                match (&ann.text_embedding, self.text_embedding_dim()) {
                    (Some(embedding), dim) if embedding.len() == dim => {
                        out.extend(embedding.iter().copied())
                    }
                    (_, dim) => out.extend(std::iter::repeat_n(0.0, dim)),
                }
            }
            None => {
                // Neutral defaults: reserved topic id -1, sentiment (1, 0.5).
                out.extend([-1.0, -1.0, -1.0, 1.0, 0.5]);
                out.extend(std::iter::repeat_n(0.0, self.text_embedding_dim()));
            }
        }
    }

    fn lang_one_hot(&self, out: &mut Vec<f64>, lang: &str) {
        for vocab_lang in &self.lang_vocab {
            out.push(if vocab_lang == lang { 1.0 } else { 0.0 });
        }
    }
}

/// Assemble the pooled meta-graph node feature vector for one cascade.
/// The numeric block is raw (log1p only); z-normalize afterwards with
/// [`compute_norm_stats`] / [`apply_norm_stats`] using the training split.
pub fn assemble_node_features(
    cascade: &Cascade,
    graph: &CascadeGraph,
    embedding: &EmbeddingMatrix,
    ctx: &FeatureContext,
) -> Result<Vec<f64>> {
    if embedding.n() != graph.node_count() {
        return Err(Error::Dimension(format!(
            "cascade {}: embedding rows {} != graph nodes {}",
            cascade.id(),
            embedding.n(),
            graph.node_count()
        )));
    }
    let mut out = Vec::with_capacity(ctx.node_feature_len(embedding.dim()));
    out.extend(embedding.mean_pool());
    out.extend(embedding.max_pool());

    let n = graph.users.len() as f64;
    let mut mean = [0.0f64; 5];
    let mut max = [f64::NEG_INFINITY; 5];
    let mut verified = 0usize;
    let mut lang_counts: HashMap<&str, usize> = HashMap::new();
    for user in &graph.users {
        let (numerics, is_verified, lang) = ctx.user_numerics(user);
        for (slot, value) in numerics.iter().enumerate() {
            mean[slot] += value;
            max[slot] = max[slot].max(*value);
        }
        if is_verified {
            verified += 1;
        }
        if !lang.is_empty() {
            *lang_counts.entry(lang).or_insert(0) += 1;
        }
    }
    out.extend(mean.iter().map(|m| m / n));
    out.extend(max.iter().copied());
    out.push(verified as f64 / n);

    // Dominant language: highest count, ties to the lexicographically
    // smallest; cascades with no known language stay all-zero.
    let dominant = lang_counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(a.0)))
        .map(|(lang, _)| lang)
        .unwrap_or("");
    ctx.lang_one_hot(&mut out, dominant);

    ctx.push_annotation_tail(&mut out, cascade.id());

    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("features of cascade {}", cascade.id())));
    }
    Ok(out)
}

/// Assemble per-user feature rows for cascade sub-graph classification, in
/// the cascade's canonical node order. Every user inherits the root tweet's
/// annotation tail.
pub fn assemble_user_features(
    cascade: &Cascade,
    graph: &CascadeGraph,
    embedding: &EmbeddingMatrix,
    ctx: &FeatureContext,
) -> Result<Vec<Vec<f64>>> {
    if embedding.n() != graph.node_count() {
        return Err(Error::Dimension(format!(
            "cascade {}: embedding rows {} != graph nodes {}",
            cascade.id(),
            embedding.n(),
            graph.node_count()
        )));
    }
    let mut rows = Vec::with_capacity(graph.node_count());
    for (idx, user) in graph.users.iter().enumerate() {
        let mut row = Vec::with_capacity(ctx.user_feature_len(embedding.dim()));
        row.extend_from_slice(embedding.row(idx));
        let (numerics, is_verified, lang) = ctx.user_numerics(user);
        row.extend(numerics);
        row.push(if is_verified { 1.0 } else { 0.0 });
        ctx.lang_one_hot(&mut row, lang);
        ctx.push_annotation_tail(&mut row, cascade.id());
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!(
                "user features of cascade {}",
                cascade.id()
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Mean/std of one slot range, estimated on the training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub offset: usize,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

pub fn compute_norm_stats<R: AsRef<[f64]>>(
    rows: &[R],
    train_indices: &[usize],
    offset: usize,
    width: usize,
) -> NormStats {
    let mut means = vec![0.0; width];
    let mut stds = vec![0.0; width];
    if train_indices.is_empty() {
        return NormStats { offset, means, stds };
    }
    let n = train_indices.len() as f64;
    for &i in train_indices {
        let row = rows[i].as_ref();
        for (slot, m) in means.iter_mut().enumerate() {
            *m += row[offset + slot];
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    for &i in train_indices {
        let row = rows[i].as_ref();
        for (slot, s) in stds.iter_mut().enumerate() {
            let d = row[offset + slot] - means[slot];
            *s += d * d;
        }
    }
    stds.iter_mut().for_each(|s| *s = (*s / n).sqrt());
    NormStats { offset, means, stds }
}

/// Apply z-normalization in place; zero-variance slots are centered only.
pub fn apply_norm_stats(row: &mut [f64], stats: &NormStats) {
    for slot in 0..stats.means.len() {
        let value = &mut row[stats.offset + slot];
        *value -= stats.means[slot];
        if stats.stds[slot] > 0.0 {
            *value /= stats.stds[slot];
        }
    }
}

/// Cosine similarity of two degree sequences, each sorted descending and
/// zero-padded to a common length.
pub fn degree_sequence_cosine(degrees_a: &[usize], degrees_b: &[usize]) -> f64 {
    let mut a: Vec<f64> = degrees_a.iter().map(|&d| d as f64).collect();
    let mut b: Vec<f64> = degrees_b.iter().map(|&d| d as f64).collect();
    a.sort_unstable_by(|x, y| y.partial_cmp(x).unwrap());
    b.sort_unstable_by(|x, y| y.partial_cmp(x).unwrap());
    let len = a.len().max(b.len());
    a.resize(len, 0.0);
    b.resize(len, 0.0);
    let sim = crate::embed::cosine_similarity(&a, &b);
    sim.clamp(0.0, 1.0)
}

/// Token-set Jaccard of two texts: lowercased, punctuation stripped,
/// whitespace tokenized. Empty token sets give 0.
pub fn token_jaccard(text_a: &str, text_b: &str) -> f64 {
    let tokens = |text: &str| -> std::collections::HashSet<String> {
        text.to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect()
    };
    let (set_a, set_b) = (tokens(text_a), tokens(text_b));
    if set_a.is_empty() || set_b.is_empty() {
        return 0.0;
    }
    let intersection = set_a.intersection(&set_b).count() as f64;
    let union = set_a.union(&set_b).count() as f64;
    intersection / union
}
