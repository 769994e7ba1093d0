//! Pipeline configuration: a TOML file of flat sections, every field
//! defaulted, plus the `paper2016` preset pinning the published
//! hyperparameters.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cascade::EdgeRule;
use crate::embed::EmbedParams;
use crate::error::{Error, Result};
use crate::gnn::{GnnKind, ReadoutMode, TrainConfig};
use crate::ingest::SchemaConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub events: PathBuf,
    pub labels: PathBuf,
    pub annotations: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            events: PathBuf::from("data/events.jsonl"),
            labels: PathBuf::from("data/labels.csv"),
            annotations: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResolverKind {
    /// URLs pass through unchanged.
    None,
    /// Follow redirects over HTTP.
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestSection {
    pub max_malformed_fraction: f64,
    pub time_window_start: Option<i64>,
    pub time_window_end: Option<i64>,
    pub resolver: ResolverKind,
    pub max_hops: usize,
    pub label_delimiter: char,
    pub schema: SchemaConfig,
}

impl Default for IngestSection {
    fn default() -> Self {
        IngestSection {
            max_malformed_fraction: 0.01,
            time_window_start: None,
            time_window_end: None,
            resolver: ResolverKind::None,
            max_hops: 10,
            label_delimiter: ',',
            schema: SchemaConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CascadeSection {
    pub min_retweeters: usize,
    pub require_url: bool,
    pub edge_rule: EdgeRule,
}

impl Default for CascadeSection {
    fn default() -> Self {
        CascadeSection {
            min_retweeters: 2,
            require_url: true,
            edge_rule: EdgeRule::FollowerBefore,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetagraphSection {
    pub min_shared: usize,
    /// Disparity-filter significance level used by the filter stage.
    pub alpha: f64,
    pub lang_top_k: usize,
    pub use_annotations: bool,
}

impl Default for MetagraphSection {
    fn default() -> Self {
        MetagraphSection {
            min_shared: 1,
            alpha: 0.5,
            lang_top_k: 8,
            use_annotations: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSection {
    pub model: GnnKind,
    pub epochs: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub hidden_dim: usize,
    pub split: [f64; 3],
    pub class_weighted: bool,
    pub use_edge_weights: bool,
    pub readout: ReadoutMode,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            model: GnnKind::Gcn,
            epochs: 50,
            dropout: 0.8,
            learning_rate: 1e-4,
            hidden_dim: 64,
            split: [0.6, 0.2, 0.2],
            class_weighted: false,
            use_edge_weights: false,
            readout: ReadoutMode::Mean,
        }
    }
}

impl TrainSection {
    pub fn to_train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            dropout: self.dropout,
            learning_rate: self.learning_rate,
            hidden_dim: self.hidden_dim,
            split: (self.split[0], self.split[1], self.split[2]),
            seed,
            class_weighted: self.class_weighted,
            readout: self.readout,
            ..TrainConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub workspace: PathBuf,
    pub paths: Paths,
    pub ingest: IngestSection,
    pub cascade: CascadeSection,
    pub embed: EmbedParams,
    pub metagraph: MetagraphSection,
    pub train: TrainSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            workspace: PathBuf::from("runs/default"),
            paths: Paths::default(),
            ingest: IngestSection::default(),
            cascade: CascadeSection::default(),
            embed: EmbedParams::default(),
            metagraph: MetagraphSection::default(),
            train: TrainSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<PipelineConfig> {
        let config: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Other(format!("config parse: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ingest.max_malformed_fraction) {
            return Err(Error::param("max_malformed_fraction", "must be in [0, 1]"));
        }
        if !(self.metagraph.alpha > 0.0 && self.metagraph.alpha < 1.0) {
            return Err(Error::param("alpha", "must be in (0, 1)"));
        }
        if self.metagraph.min_shared == 0 {
            return Err(Error::param("min_shared", "must be >= 1"));
        }
        let total: f64 = self.train.split.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::param("split", "fractions must sum to 1"));
        }
        if !(0.0..1.0).contains(&self.train.dropout) {
            return Err(Error::param("dropout", "must be in [0, 1)"));
        }
        if self.embed.dim == 0 || self.embed.window == 0 {
            return Err(Error::param("embed", "dim and window must be positive"));
        }
        Ok(())
    }

    /// The published hyperparameters: at least 100 unique retweeters per
    /// cascade, 10 walks of length 80, 128-dimensional embeddings, 50 epochs,
    /// dropout 0.8, learning rate 1e-4, 60-20-20 split, edges at one shared
    /// retweeter, filter level 0.5.
    pub fn apply_paper2016_preset(&mut self) {
        self.cascade.min_retweeters = 100;
        self.cascade.require_url = true;
        self.embed.walks_per_node = 10;
        self.embed.walk_length = 80;
        self.embed.dim = 128;
        self.train.epochs = 50;
        self.train.dropout = 0.8;
        self.train.learning_rate = 1e-4;
        self.train.split = [0.6, 0.2, 0.2];
        self.metagraph.min_shared = 1;
        self.metagraph.alpha = 0.5;
    }

    /// Alpha grid reported in the published sweep.
    pub fn paper2016_alpha_sweep() -> Vec<f64> {
        let mut alphas: Vec<f64> = (1..=9).map(|i| i as f64 / 100.0).collect();
        alphas.extend((1..=9).map(|i| i as f64 / 10.0));
        alphas
    }
}
