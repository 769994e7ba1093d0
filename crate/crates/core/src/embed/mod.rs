//! DeepWalk graph embedding: truncated uniform random walks feeding a
//! skip-gram model trained with negative sampling.

mod skipgram;
mod walks;

pub use skipgram::{
    pair_gradients, pair_loss, train_skipgram, SkipgramOutput, SkipgramParams,
};
pub use walks::{random_walks, WalkCorpus, WalkParams};

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::cascade::CascadeGraph;
use crate::error::{Error, Result};

/// Dense N x d embedding, rows keyed by the cascade's canonical node order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    n: usize,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn zeros(n: usize, dim: usize) -> Self {
        EmbeddingMatrix {
            n,
            dim,
            data: vec![0.0; n * dim],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Column-wise mean over all rows.
    pub fn mean_pool(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for i in 0..self.n {
            for (o, &x) in out.iter_mut().zip(self.row(i)) {
                *o += x;
            }
        }
        if self.n > 0 {
            out.iter_mut().for_each(|o| *o /= self.n as f64);
        }
        out
    }

    /// Column-wise maximum over all rows.
    pub fn max_pool(&self) -> Vec<f64> {
        let mut out = vec![f64::NEG_INFINITY; self.dim];
        for i in 0..self.n {
            for (o, &x) in out.iter_mut().zip(self.row(i)) {
                *o = o.max(x);
            }
        }
        if self.n == 0 {
            out.fill(0.0);
        }
        out
    }
}

/// Cosine similarity between two vectors; 0 when either norm vanishes.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Full embedding configuration for one cascade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedParams {
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for EmbedParams {
    fn default() -> Self {
        EmbedParams {
            walks_per_node: 10,
            walk_length: 80,
            dim: 128,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
        }
    }
}

/// Walk generation plus skip-gram training; rows follow the cascade's
/// canonical node order.
pub fn embed_cascade(
    graph: &CascadeGraph,
    params: &EmbedParams,
    seed: u64,
) -> Result<EmbeddingMatrix> {
    let corpus = random_walks(
        graph,
        &WalkParams {
            walks_per_node: params.walks_per_node,
            walk_length: params.walk_length,
        },
        seed,
    )?;
    let output = train_skipgram(
        &corpus,
        &SkipgramParams {
            dim: params.dim,
            window: params.window,
            negatives: params.negatives,
            epochs: params.epochs,
            learning_rate: params.learning_rate,
        },
        seed,
    )?;
    Ok(output.embedding)
}

const EMBEDDING_HEADER: &str = "MGEMB v1";

/// Persist an embedding matrix: one text header line
/// `MGEMB v1 <cascade_id> <N> <d>\n` followed by `N * d` little-endian f64
/// values in row-major order. The cascade id must not contain whitespace.
pub fn write_embedding<W: Write>(
    matrix: &EmbeddingMatrix,
    cascade_id: &str,
    mut w: W,
) -> Result<()> {
    let io_err = |e| Error::io("<embedding>", e);
    if cascade_id.contains(char::is_whitespace) {
        return Err(Error::param("cascade_id", "must not contain whitespace"));
    }
    writeln!(
        w,
        "{EMBEDDING_HEADER} {cascade_id} {} {}",
        matrix.n, matrix.dim
    )
    .map_err(io_err)?;
    for value in &matrix.data {
        w.write_all(&value.to_le_bytes()).map_err(io_err)?;
    }
    Ok(())
}

/// Read back a persisted embedding; returns (cascade id, matrix).
///
/// Reads exactly one block, leaving the reader positioned at the next one,
/// so concatenated blocks can be consumed sequentially.
pub fn read_embedding<R: Read>(mut reader: R) -> Result<(String, EmbeddingMatrix)> {
    // Byte-wise header read: never consumes past the newline.
    let mut header_bytes = Vec::with_capacity(64);
    let mut byte = [0u8; 1];
    loop {
        reader
            .read_exact(&mut byte)
            .map_err(|e| Error::io("<embedding>", e))?;
        if byte[0] == b'\n' {
            break;
        }
        header_bytes.push(byte[0]);
        if header_bytes.len() > 4096 {
            return Err(Error::CorruptArtifact {
                path: "<embedding>".into(),
                reason: "unterminated header".to_string(),
            });
        }
    }
    let header = String::from_utf8(header_bytes).map_err(|_| Error::CorruptArtifact {
        path: "<embedding>".into(),
        reason: "header not UTF-8".to_string(),
    })?;
    let parts: Vec<&str> = header.trim_end().split(' ').collect();
    let corrupt = |reason: &str| Error::CorruptArtifact {
        path: "<embedding>".into(),
        reason: reason.to_string(),
    };
    if parts.len() != 5 || parts[0] != "MGEMB" || parts[1] != "v1" {
        return Err(corrupt("bad header"));
    }
    let cascade_id = parts[2].to_string();
    let n: usize = parts[3].parse().map_err(|_| corrupt("bad row count"))?;
    let dim: usize = parts[4].parse().map_err(|_| corrupt("bad dim"))?;
    let mut data = vec![0.0f64; n * dim];
    let mut buf = [0u8; 8];
    for value in &mut data {
        reader
            .read_exact(&mut buf)
            .map_err(|e| Error::io("<embedding>", e))?;
        *value = f64::from_le_bytes(buf);
    }
    Ok((cascade_id, EmbeddingMatrix { n, dim, data }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::CascadeGraph;

    fn star(leaves: usize) -> CascadeGraph {
        let users: Vec<String> = (0..=leaves).map(|i| format!("u{i}")).collect();
        let edges: Vec<(u32, u32)> = (1..=leaves as u32).map(|i| (0, i)).collect();
        CascadeGraph::from_edges("c0", users, edges)
    }

    #[test]
    fn star_embedding_shape() {
        let m = embed_cascade(&star(3), &EmbedParams::default(), 7).unwrap();
        assert_eq!((m.n(), m.dim()), (4, 128));
        assert!(m.is_finite());
    }

    #[test]
    fn custom_dim_respected() {
        let m = embed_cascade(
            &star(2),
            &EmbedParams {
                dim: 16,
                epochs: 1,
                ..EmbedParams::default()
            },
            7,
        )
        .unwrap();
        assert_eq!((m.n(), m.dim()), (3, 16));
    }

    #[test]
    fn same_seed_same_matrix() {
        let params = EmbedParams {
            dim: 8,
            epochs: 2,
            walk_length: 10,
            ..EmbedParams::default()
        };
        let a = embed_cascade(&star(4), &params, 99).unwrap();
        let b = embed_cascade(&star(4), &params, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn renamed_users_same_canonical_structure_same_matrix() {
        // Relabeling users leaves the canonical indexed structure untouched,
        // so the matrices agree row-for-row under the canonical bijection.
        let g1 = star(3);
        let users2: Vec<String> = vec!["w0", "w1", "w2", "w3"]
            .into_iter()
            .map(String::from)
            .collect();
        let g2 = CascadeGraph::from_edges("c1", users2, vec![(0, 1), (0, 2), (0, 3)]);
        let params = EmbedParams {
            dim: 8,
            epochs: 1,
            walk_length: 10,
            ..EmbedParams::default()
        };
        let m1 = embed_cascade(&g1, &params, 5).unwrap();
        let m2 = embed_cascade(&g2, &params, 5).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn persistence_round_trip() {
        let m = embed_cascade(
            &star(2),
            &EmbedParams {
                dim: 4,
                epochs: 1,
                walk_length: 6,
                ..EmbedParams::default()
            },
            3,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_embedding(&m, "cascade-9", &mut buf).unwrap();
        let (id, back) = read_embedding(buf.as_slice()).unwrap();
        assert_eq!(id, "cascade-9");
        assert_eq!(back, m);
    }

    #[test]
    fn pooling_on_identical_rows_is_that_row() {
        let mut m = EmbeddingMatrix::zeros(3, 2);
        for i in 0..3 {
            m.row_mut(i).copy_from_slice(&[1.5, -2.0]);
        }
        assert_eq!(m.mean_pool(), vec![1.5, -2.0]);
        assert_eq!(m.max_pool(), vec![1.5, -2.0]);
    }
}
