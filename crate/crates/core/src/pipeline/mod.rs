//! Stage-by-stage pipeline: configuration, cached stage execution with
//! manifests, dataset assembly, and the alpha sweep experiment.

pub mod config;
pub mod datasets;
pub mod manifest;
pub mod stages;

pub use config::{PipelineConfig, ResolverKind};
pub use datasets::{
    build_cascade_dataset, build_meta_graph, node_dataset_from_metagraph, CorpusSlices,
};
pub use manifest::Manifest;
pub use stages::{
    format_report, format_sweep_table, run_all, run_stage, sweep_alpha, Stage, SweepRow,
    ALL_STAGES,
};
