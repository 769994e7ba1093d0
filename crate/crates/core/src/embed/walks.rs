//! Truncated uniform random walks over a cascade graph.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::CascadeGraph;
use crate::error::{Error, Result};
use crate::seeding::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkParams {
    pub walks_per_node: usize,
    /// Node count per walk, including the start node. Walks truncate early
    /// only when the current node has no neighbors.
    pub walk_length: usize,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams {
            walks_per_node: 10,
            walk_length: 80,
        }
    }
}

/// The generated walk corpus; `walks_per_node * node_count` sequences of
/// canonical node indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<u32>>,
    pub graph_node_count: usize,
}

fn single_walk(graph: &CascadeGraph, start: u32, length: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let mut walk = Vec::with_capacity(length);
    walk.push(start);
    let mut current = start;
    for _ in 1..length {
        let neighbors = &graph.adjacency[current as usize];
        if neighbors.is_empty() {
            break;
        }
        current = neighbors[rng.random_range(0..neighbors.len())];
        walk.push(current);
    }
    walk
}

/// Generate `walks_per_node` walks from every node, in canonical node order.
///
/// Each walk draws from its own generator seeded by (seed, node, walk index),
/// so the corpus is identical no matter how generation is scheduled.
pub fn random_walks(graph: &CascadeGraph, params: &WalkParams, seed: u64) -> Result<WalkCorpus> {
    if graph.node_count() == 0 {
        return Err(Error::Empty("cascade graph has no nodes"));
    }
    if params.walk_length == 0 {
        return Err(Error::param("walk_length", "must be positive"));
    }
    let walks: Vec<Vec<u32>> = (0..graph.node_count() as u32)
        .into_par_iter()
        .flat_map_iter(|node| {
            (0..params.walks_per_node).map(move |w| (node, w))
        })
        .map(|(node, w)| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(seed, node as u64, w as u64));
            single_walk(graph, node, params.walk_length, &mut rng)
        })
        .collect();
    Ok(WalkCorpus {
        walks,
        graph_node_count: graph.node_count(),
    })
}
