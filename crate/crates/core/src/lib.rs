//! Retweet-cascade analytics: reconstruct diffusion cascades from raw event
//! streams, embed them with DeepWalk, assemble a cascade-level meta-graph
//! with disparity-filter sparsification, and classify disinformation with
//! from-scratch GNNs, either per cascade (graph classification) or on the
//! meta-graph (node classification).

pub mod cascade;
pub mod embed;
pub mod error;
pub mod export;
pub mod gnn;
pub mod ingest;
pub mod metagraph;
pub mod pipeline;
pub mod seeding;
pub mod socialnet;
pub mod synth;

pub use error::{Error, Result};
