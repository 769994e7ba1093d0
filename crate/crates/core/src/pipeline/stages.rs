//! Stage orchestration over a workspace directory.
//!
//! Every stage writes its artifacts under `workspace/<stage>/` together with
//! a manifest recording the stage-relevant config hash and the hashes of its
//! inputs; re-running with unchanged inputs is a cache hit that touches
//! nothing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use super::config::{PipelineConfig, ResolverKind};
use super::datasets::{
    build_cascade_dataset, build_meta_graph, node_dataset_from_metagraph, CorpusSlices,
};
use super::manifest::{
    hash_file, hash_json, is_fresh, load_manifest, now_unix, store_manifest, Manifest,
};
use crate::cascade::{
    group_cascades, reconstruct_cascade_graph, write_cascade_edge_list, Cascade, CascadeGraph,
};
use crate::embed::{embed_cascade, read_embedding, write_embedding, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::export;
use crate::gnn::{
    train_graph_classifier, train_node_classifier, EvalReport, GnnModel,
};
use crate::ingest::annotations::{load_annotations_from_path, AnnotationStore};
use crate::ingest::labels::{merge_label_sources, read_label_records_from_path, LabelStore};
use crate::ingest::resolver::{HttpResolver, IdentityResolver, Resolve, UrlExpander};
use crate::ingest::{parse_events_from_path, EventStore, ParseOptions};
use crate::metagraph::{disparity_filter, transfer_labels, CascadeLabel, MetaGraph};
use crate::seeding::derive_seed;
use crate::socialnet::build_interaction_graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Ingest,
    Socialnet,
    Cascades,
    Embed,
    Metagraph,
    Filter,
    TrainCascade,
    TrainMetagraph,
    Evaluate,
    Export,
}

pub const ALL_STAGES: [Stage; 10] = [
    Stage::Ingest,
    Stage::Socialnet,
    Stage::Cascades,
    Stage::Embed,
    Stage::Metagraph,
    Stage::Filter,
    Stage::TrainCascade,
    Stage::TrainMetagraph,
    Stage::Evaluate,
    Stage::Export,
];

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Socialnet => "socialnet",
            Stage::Cascades => "cascades",
            Stage::Embed => "embed",
            Stage::Metagraph => "metagraph",
            Stage::Filter => "filter",
            Stage::TrainCascade => "train-cascade",
            Stage::TrainMetagraph => "train-metagraph",
            Stage::Evaluate => "evaluate",
            Stage::Export => "export",
        }
    }

    pub fn dir(self, config: &PipelineConfig) -> PathBuf {
        config.workspace.join(self.name())
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ALL_STAGES
            .iter()
            .find(|stage| stage.name() == s)
            .copied()
            .ok_or_else(|| Error::Unknown {
                what: "stage",
                value: s.to_string(),
            })
    }
}

// Artifact locations.
fn events_artifact(c: &PipelineConfig) -> PathBuf {
    Stage::Ingest.dir(c).join("events.json")
}
fn labels_artifact(c: &PipelineConfig) -> PathBuf {
    Stage::Ingest.dir(c).join("labels.json")
}
fn annotations_artifact(c: &PipelineConfig) -> PathBuf {
    Stage::Ingest.dir(c).join("annotations.json")
}
fn social_artifact(c: &PipelineConfig) -> PathBuf {
    Stage::Socialnet.dir(c).join("social.bin")
}
fn cascades_artifact(c: &PipelineConfig) -> PathBuf {
    Stage::Cascades.dir(c).join("cascades.json")
}
fn cascade_graphs_artifact(c: &PipelineConfig) -> PathBuf {
    Stage::Cascades.dir(c).join("cascade_graphs.json")
}
fn embeddings_artifact(c: &PipelineConfig) -> PathBuf {
    Stage::Embed.dir(c).join("embeddings.bin")
}
fn metagraph_artifact(c: &PipelineConfig) -> PathBuf {
    Stage::Metagraph.dir(c).join("metagraph.bin")
}
fn label_outcomes_artifact(c: &PipelineConfig) -> PathBuf {
    Stage::Metagraph.dir(c).join("label_outcomes.json")
}
fn filtered_artifact(c: &PipelineConfig) -> PathBuf {
    Stage::Filter.dir(c).join("metagraph_filtered.bin")
}
fn report_artifact(c: &PipelineConfig, stage: Stage) -> PathBuf {
    stage.dir(c).join("report.json")
}

fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let text = serde_json::to_string(value).map_err(|e| Error::Json {
        context: format!("serializing {}", path.display()),
        source: e,
    })?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        context: format!("reading {}", path.display()),
        source: e,
    })
}

/// Inputs a stage consumes: (label for the manifest, path, producing stage
/// when it is a pipeline artifact).
fn stage_inputs(stage: Stage, c: &PipelineConfig) -> Vec<(String, PathBuf, Option<Stage>)> {
    let artifact = |name: &str, path: PathBuf, producer: Stage| {
        (name.to_string(), path, Some(producer))
    };
    match stage {
        Stage::Ingest => {
            let mut inputs = vec![
                ("events".to_string(), c.paths.events.clone(), None),
                ("labels".to_string(), c.paths.labels.clone(), None),
            ];
            if let Some(annotations) = &c.paths.annotations {
                inputs.push(("annotations".to_string(), annotations.clone(), None));
            }
            inputs
        }
        Stage::Socialnet => vec![artifact("events", events_artifact(c), Stage::Ingest)],
        Stage::Cascades => vec![
            artifact("events", events_artifact(c), Stage::Ingest),
            artifact("social", social_artifact(c), Stage::Socialnet),
        ],
        Stage::Embed => vec![artifact(
            "cascade_graphs",
            cascade_graphs_artifact(c),
            Stage::Cascades,
        )],
        Stage::Metagraph => vec![
            artifact("events", events_artifact(c), Stage::Ingest),
            artifact("labels", labels_artifact(c), Stage::Ingest),
            artifact("annotations", annotations_artifact(c), Stage::Ingest),
            artifact("cascades", cascades_artifact(c), Stage::Cascades),
            artifact("cascade_graphs", cascade_graphs_artifact(c), Stage::Cascades),
            artifact("embeddings", embeddings_artifact(c), Stage::Embed),
        ],
        Stage::Filter => vec![artifact("metagraph", metagraph_artifact(c), Stage::Metagraph)],
        Stage::TrainMetagraph => vec![artifact(
            "metagraph_filtered",
            filtered_artifact(c),
            Stage::Filter,
        )],
        Stage::TrainCascade => vec![
            artifact("events", events_artifact(c), Stage::Ingest),
            artifact("annotations", annotations_artifact(c), Stage::Ingest),
            artifact("cascades", cascades_artifact(c), Stage::Cascades),
            artifact("cascade_graphs", cascade_graphs_artifact(c), Stage::Cascades),
            artifact("embeddings", embeddings_artifact(c), Stage::Embed),
            artifact(
                "label_outcomes",
                label_outcomes_artifact(c),
                Stage::Metagraph,
            ),
        ],
        Stage::Evaluate => vec![
            artifact(
                "cascade_report",
                report_artifact(c, Stage::TrainCascade),
                Stage::TrainCascade,
            ),
            artifact(
                "metagraph_report",
                report_artifact(c, Stage::TrainMetagraph),
                Stage::TrainMetagraph,
            ),
        ],
        Stage::Export => vec![artifact(
            "metagraph_filtered",
            filtered_artifact(c),
            Stage::Filter,
        )],
    }
}

/// The slice of the config a stage's outputs depend on; hashed into the
/// manifest so unrelated config edits do not invalidate caches.
fn stage_config_hash(stage: Stage, c: &PipelineConfig) -> String {
    match stage {
        Stage::Ingest => hash_json(&(&c.paths, &c.ingest)),
        Stage::Socialnet => hash_json(&"socialnet-v1"),
        Stage::Cascades => hash_json(&c.cascade),
        Stage::Embed => hash_json(&(&c.embed, c.seed)),
        Stage::Metagraph => hash_json(&(&c.metagraph, &c.train.split, c.seed)),
        Stage::Filter => hash_json(&c.metagraph.alpha),
        Stage::TrainCascade | Stage::TrainMetagraph => {
            hash_json(&(&c.train, c.seed, c.metagraph.use_annotations, c.metagraph.lang_top_k))
        }
        Stage::Evaluate => hash_json(&"evaluate-v1"),
        Stage::Export => hash_json(&"export-v1"),
    }
}

struct StageOutcome {
    outputs: Vec<PathBuf>,
    counters: BTreeMap<String, serde_json::Value>,
}

fn counter(value: impl Into<serde_json::Value>) -> serde_json::Value {
    value.into()
}

/// Append one structured line per stage event to `workspace/pipeline_log.jsonl`.
fn log_stage_event(config: &PipelineConfig, manifest: &Manifest) {
    let line = serde_json::json!({
        "unix": manifest.created_unix,
        "stage": manifest.stage,
        "cache_hit": manifest.cache_hit,
        "elapsed_ms": manifest.elapsed_ms,
        "counters": manifest.counters,
    })
    .to_string();
    let path = config.workspace.join("pipeline_log.jsonl");
    if let Some(parent) = path.parent() {
        let _ = std::fs::create_dir_all(parent);
    }
    if let Ok(mut file) = std::fs::OpenOptions::new().create(true).append(true).open(&path) {
        use std::io::Write;
        let _ = writeln!(file, "{line}");
    }
}

/// Run one stage (or return its cached manifest). Missing predecessor
/// artifacts produce an error naming the stage to run first.
pub fn run_stage(stage: Stage, config: &PipelineConfig) -> Result<Manifest> {
    let inputs = stage_inputs(stage, config);
    for (_, path, producer) in &inputs {
        if !path.exists() {
            return match producer {
                Some(producer) => Err(Error::MissingStage {
                    missing: producer.name().to_string(),
                }),
                None => Err(Error::Other(format!(
                    "input file {} not found",
                    path.display()
                ))),
            };
        }
    }
    let mut input_hashes = BTreeMap::new();
    for (name, path, _) in &inputs {
        input_hashes.insert(name.clone(), hash_file(path)?);
    }
    let config_hash = stage_config_hash(stage, config);
    let stage_dir = stage.dir(config);
    if let Some(existing) = load_manifest(&stage_dir)? {
        if is_fresh(&existing, &config_hash, &input_hashes) {
            let mut cached = existing;
            cached.cache_hit = true;
            log_stage_event(config, &cached);
            return Ok(cached);
        }
    }

    let started = std::time::Instant::now();
    let outcome = match stage {
        Stage::Ingest => run_ingest(config)?,
        Stage::Socialnet => run_socialnet(config)?,
        Stage::Cascades => run_cascades(config)?,
        Stage::Embed => run_embed(config)?,
        Stage::Metagraph => run_metagraph(config)?,
        Stage::Filter => run_filter(config)?,
        Stage::TrainCascade => run_train_cascade(config)?,
        Stage::TrainMetagraph => run_train_metagraph(config)?,
        Stage::Evaluate => run_evaluate(config)?,
        Stage::Export => run_export(config)?,
    };
    let manifest = Manifest {
        stage: stage.name().to_string(),
        config_hash,
        input_hashes,
        outputs: outcome.outputs,
        counters: outcome.counters,
        elapsed_ms: started.elapsed().as_millis(),
        cache_hit: false,
        created_unix: now_unix(),
    };
    store_manifest(&stage_dir, &manifest)?;
    log_stage_event(config, &manifest);
    Ok(manifest)
}

/// Run every stage in dependency order.
pub fn run_all(config: &PipelineConfig) -> Result<Vec<Manifest>> {
    ALL_STAGES
        .iter()
        .map(|&stage| run_stage(stage, config))
        .collect()
}

fn run_ingest(config: &PipelineConfig) -> Result<StageOutcome> {
    let options = ParseOptions {
        max_malformed_fraction: config.ingest.max_malformed_fraction,
        time_window: match (config.ingest.time_window_start, config.ingest.time_window_end) {
            (Some(start), Some(end)) => Some((start, end)),
            _ => None,
        },
    };
    let mut events = parse_events_from_path(&config.paths.events, &config.ingest.schema, &options)?;

    let resolver: Box<dyn Resolve> = match config.ingest.resolver {
        ResolverKind::None => Box::new(IdentityResolver),
        ResolverKind::Http => Box::new(HttpResolver::new(10).map_err(Error::Other)?),
    };
    let mut expander = UrlExpander::new(resolver, config.ingest.max_hops);
    events.expand_urls(&mut expander);

    let records =
        read_label_records_from_path(&config.paths.labels, config.ingest.label_delimiter as u8)?;
    let labels = merge_label_sources(&records);

    let annotations = match &config.paths.annotations {
        Some(path) => load_annotations_from_path(path)?,
        None => AnnotationStore::default(),
    };

    let events_path = events_artifact(config);
    let labels_path = labels_artifact(config);
    let annotations_path = annotations_artifact(config);
    save_json(&events_path, &events)?;
    save_json(&labels_path, &labels)?;
    save_json(&annotations_path, &annotations)?;

    let mut counters = BTreeMap::new();
    counters.insert("events".into(), counter(events.len()));
    counters.insert("malformed_lines".into(), counter(events.stats.malformed_lines));
    counters.insert("duplicate_events".into(), counter(events.stats.duplicate_events));
    counters.insert("profiles".into(), counter(events.profiles().len()));
    counters.insert("labeled_urls".into(), counter(labels.len()));
    counters.insert("label_conflicts".into(), counter(labels.conflict_count));
    counters.insert("annotations".into(), counter(annotations.len()));
    counters.insert("urls_expanded".into(), counter(expander.cache_len()));
    Ok(StageOutcome {
        outputs: vec![events_path, labels_path, annotations_path],
        counters,
    })
}

fn run_socialnet(config: &PipelineConfig) -> Result<StageOutcome> {
    let events: EventStore = load_json(&events_artifact(config))?;
    let graph = build_interaction_graph(&events);
    let bin_path = social_artifact(config);
    std::fs::create_dir_all(bin_path.parent().unwrap())
        .map_err(|e| Error::io(bin_path.parent().unwrap(), e))?;
    let file = std::fs::File::create(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
    crate::socialnet::write_snapshot(&graph, std::io::BufWriter::new(file))?;
    let edges_path = Stage::Socialnet.dir(config).join("social_edges.txt");
    let file = std::fs::File::create(&edges_path).map_err(|e| Error::io(&edges_path, e))?;
    crate::socialnet::write_edge_list(&graph, std::io::BufWriter::new(file))?;

    let mut counters = BTreeMap::new();
    counters.insert("nodes".into(), counter(graph.node_count()));
    counters.insert("edges".into(), counter(graph.edge_count()));
    Ok(StageOutcome {
        outputs: vec![bin_path, edges_path],
        counters,
    })
}

fn run_cascades(config: &PipelineConfig) -> Result<StageOutcome> {
    let events: EventStore = load_json(&events_artifact(config))?;
    let social_file = std::fs::File::open(social_artifact(config))
        .map_err(|e| Error::io(social_artifact(config), e))?;
    let social = crate::socialnet::read_snapshot(std::io::BufReader::new(social_file))?;

    let (cascades, stats) =
        group_cascades(&events, config.cascade.min_retweeters, config.cascade.require_url);
    let graphs: Vec<CascadeGraph> = cascades
        .par_iter()
        .map(|cascade| reconstruct_cascade_graph(cascade, &social, config.cascade.edge_rule))
        .collect();

    let cascades_path = cascades_artifact(config);
    let graphs_path = cascade_graphs_artifact(config);
    save_json(&cascades_path, &cascades)?;
    save_json(&graphs_path, &graphs)?;
    let debug_path = Stage::Cascades.dir(config).join("cascade_graphs.txt");
    let mut debug_file = std::io::BufWriter::new(
        std::fs::File::create(&debug_path).map_err(|e| Error::io(&debug_path, e))?,
    );
    for (cascade, graph) in cascades.iter().zip(&graphs) {
        write_cascade_edge_list(graph, &cascade.root_tweet.tweet_id, &mut debug_file)?;
    }

    let extra_edges: usize = graphs
        .iter()
        .map(|g| g.edge_count() + 1 - g.node_count())
        .sum();
    let mut counters = BTreeMap::new();
    counters.insert("cascades".into(), counter(cascades.len()));
    counters.insert("orphan_retweets".into(), counter(stats.orphan_retweets));
    counters.insert("time_violations".into(), counter(stats.time_violations));
    counters.insert("self_retweets".into(), counter(stats.self_retweets));
    counters.insert("filtered_roots".into(), counter(stats.filtered_roots));
    counters.insert("non_star_edges".into(), counter(extra_edges));
    Ok(StageOutcome {
        outputs: vec![cascades_path, graphs_path, debug_path],
        counters,
    })
}

fn run_embed(config: &PipelineConfig) -> Result<StageOutcome> {
    let graphs: Vec<CascadeGraph> = load_json(&cascade_graphs_artifact(config))?;
    let embeddings: Vec<EmbeddingMatrix> = graphs
        .par_iter()
        .enumerate()
        .map(|(idx, graph)| {
            embed_cascade(graph, &config.embed, derive_seed(config.seed, 0xe3bed, idx as u64))
        })
        .collect::<Result<_>>()?;

    let path = embeddings_artifact(config);
    std::fs::create_dir_all(path.parent().unwrap())
        .map_err(|e| Error::io(path.parent().unwrap(), e))?;
    let mut file = std::io::BufWriter::new(
        std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?,
    );
    for (graph, matrix) in graphs.iter().zip(&embeddings) {
        write_embedding(matrix, &graph.cascade_id, &mut file)?;
    }

    let mut counters = BTreeMap::new();
    counters.insert("embeddings".into(), counter(embeddings.len()));
    counters.insert("dim".into(), counter(config.embed.dim));
    Ok(StageOutcome {
        outputs: vec![path],
        counters,
    })
}

fn load_embeddings(config: &PipelineConfig, graphs: &[CascadeGraph]) -> Result<Vec<EmbeddingMatrix>> {
    let path = embeddings_artifact(config);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let mut cursor = std::io::Cursor::new(bytes);
    let mut embeddings = Vec::with_capacity(graphs.len());
    for graph in graphs {
        let (id, matrix) = read_embedding(&mut cursor)?;
        if id != graph.cascade_id {
            return Err(Error::CorruptArtifact {
                path: path.clone(),
                reason: format!("embedding id {id} does not match cascade {}", graph.cascade_id),
            });
        }
        embeddings.push(matrix);
    }
    Ok(embeddings)
}

struct Corpus {
    events: EventStore,
    annotations: AnnotationStore,
    cascades: Vec<Cascade>,
    graphs: Vec<CascadeGraph>,
    embeddings: Vec<EmbeddingMatrix>,
}

fn load_corpus(config: &PipelineConfig) -> Result<Corpus> {
    let events: EventStore = load_json(&events_artifact(config))?;
    let annotations: AnnotationStore = load_json(&annotations_artifact(config))?;
    let cascades: Vec<Cascade> = load_json(&cascades_artifact(config))?;
    let graphs: Vec<CascadeGraph> = load_json(&cascade_graphs_artifact(config))?;
    let embeddings = load_embeddings(config, &graphs)?;
    Ok(Corpus {
        events,
        annotations,
        cascades,
        graphs,
        embeddings,
    })
}

fn run_metagraph(config: &PipelineConfig) -> Result<StageOutcome> {
    let corpus = load_corpus(config)?;
    let labels: LabelStore = load_json(&labels_artifact(config))?;
    let decisions = transfer_labels(&corpus.cascades, &labels);

    let slices = CorpusSlices {
        cascades: &corpus.cascades,
        graphs: &corpus.graphs,
        embeddings: &corpus.embeddings,
        profiles: corpus.events.profiles(),
        annotations: config
            .metagraph
            .use_annotations
            .then_some(&corpus.annotations),
        decisions: &decisions,
    };
    let meta = build_meta_graph(
        &slices,
        config.metagraph.min_shared,
        config.metagraph.lang_top_k,
        (config.train.split[0], config.train.split[1], config.train.split[2]),
        config.seed,
    )?;

    let meta_path = metagraph_artifact(config);
    std::fs::create_dir_all(meta_path.parent().unwrap())
        .map_err(|e| Error::io(meta_path.parent().unwrap(), e))?;
    let file = std::fs::File::create(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    export::write_snapshot(&meta, std::io::BufWriter::new(file))?;
    let outcomes_path = label_outcomes_artifact(config);
    save_json(&outcomes_path, &decisions)?;

    let discarded = decisions
        .iter()
        .filter(|d| d.decision == crate::metagraph::LabelDecision::Discarded)
        .count();
    let labeled = meta
        .nodes
        .iter()
        .filter(|n| n.label != crate::metagraph::NodeLabel::Unlabeled)
        .count();
    let mut counters = BTreeMap::new();
    counters.insert("nodes".into(), counter(meta.node_count()));
    counters.insert("edges".into(), counter(meta.edge_count()));
    counters.insert("labeled_nodes".into(), counter(labeled));
    counters.insert("discarded_cascades".into(), counter(discarded));
    counters.insert(
        "feature_len".into(),
        counter(meta.nodes.first().map(|n| n.features.len()).unwrap_or(0)),
    );
    Ok(StageOutcome {
        outputs: vec![meta_path, outcomes_path],
        counters,
    })
}

fn load_metagraph(path: &Path) -> Result<MetaGraph> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    export::read_snapshot(std::io::BufReader::new(file))
}

fn run_filter(config: &PipelineConfig) -> Result<StageOutcome> {
    let meta = load_metagraph(&metagraph_artifact(config))?;
    let filtered = disparity_filter(&meta, config.metagraph.alpha)?;
    let path = filtered_artifact(config);
    std::fs::create_dir_all(path.parent().unwrap())
        .map_err(|e| Error::io(path.parent().unwrap(), e))?;
    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    export::write_snapshot(&filtered, std::io::BufWriter::new(file))?;

    let mut counters = BTreeMap::new();
    counters.insert("alpha".into(), counter(config.metagraph.alpha));
    counters.insert("edges_before".into(), counter(meta.edge_count()));
    counters.insert("edges_after".into(), counter(filtered.edge_count()));
    counters.insert("non_isolated_nodes".into(), counter(filtered.non_isolated_count()));
    Ok(StageOutcome {
        outputs: vec![path],
        counters,
    })
}

fn write_report(dir: &Path, task: &str, report: &EvalReport, model: &GnnModel) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json_path = dir.join("report.json");
    save_json(&json_path, report)?;

    // Line-delimited structured records, one per split.
    let jsonl_path = dir.join("report.jsonl");
    let mut lines = String::new();
    for (split, metrics) in [
        ("train", &report.train),
        ("validation", &report.validation),
        ("test", &report.test),
    ] {
        lines.push_str(
            &serde_json::json!({
                "task": task,
                "split": split,
                "accuracy": metrics.accuracy,
                "f1": metrics.f1,
                "tp": metrics.confusion.tp,
                "fp": metrics.confusion.fp,
                "fn": metrics.confusion.fn_,
                "tn": metrics.confusion.tn,
            })
            .to_string(),
        );
        lines.push('\n');
    }
    std::fs::write(&jsonl_path, lines).map_err(|e| Error::io(&jsonl_path, e))?;

    let table_path = dir.join("report.txt");
    std::fs::write(&table_path, format_report(task, report)).map_err(|e| Error::io(&table_path, e))?;

    let model_path = dir.join("model.bin");
    let file = std::fs::File::create(&model_path).map_err(|e| Error::io(&model_path, e))?;
    crate::gnn::write_model(model, std::io::BufWriter::new(file))?;
    Ok(vec![json_path, jsonl_path, table_path, model_path])
}

/// Human-readable metrics table.
pub fn format_report(task: &str, report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("task: {task} (best epoch {})\n", report.best_epoch));
    out.push_str("split        accuracy   f1       tp    fp    fn    tn\n");
    for (name, m) in [
        ("train", &report.train),
        ("validation", &report.validation),
        ("test", &report.test),
    ] {
        out.push_str(&format!(
            "{name:<12} {:<10.4} {:<8.4} {:<5} {:<5} {:<5} {:<5}\n",
            m.accuracy, m.f1, m.confusion.tp, m.confusion.fp, m.confusion.fn_, m.confusion.tn
        ));
    }
    out
}

fn run_train_metagraph(config: &PipelineConfig) -> Result<StageOutcome> {
    let filtered = load_metagraph(&filtered_artifact(config))?;
    let dataset = node_dataset_from_metagraph(&filtered, config.train.use_edge_weights)?;
    let train_config = config.train.to_train_config(config.seed);
    let (model, report) = train_node_classifier(config.train.model, &dataset, &train_config)?;
    let outputs = write_report(
        &Stage::TrainMetagraph.dir(config),
        "metagraph-node-classification",
        &report,
        &model,
    )?;
    let mut counters = BTreeMap::new();
    counters.insert("test_accuracy".into(), counter(report.test.accuracy));
    counters.insert("test_f1".into(), counter(report.test.f1));
    counters.insert("best_epoch".into(), counter(report.best_epoch));
    Ok(StageOutcome { outputs, counters })
}

fn run_train_cascade(config: &PipelineConfig) -> Result<StageOutcome> {
    let corpus = load_corpus(config)?;
    let decisions: Vec<CascadeLabel> = load_json(&label_outcomes_artifact(config))?;
    let slices = CorpusSlices {
        cascades: &corpus.cascades,
        graphs: &corpus.graphs,
        embeddings: &corpus.embeddings,
        profiles: corpus.events.profiles(),
        annotations: config
            .metagraph
            .use_annotations
            .then_some(&corpus.annotations),
        decisions: &decisions,
    };
    let dataset = build_cascade_dataset(
        &slices,
        config.metagraph.lang_top_k,
        (config.train.split[0], config.train.split[1], config.train.split[2]),
        config.seed,
    )?;
    let train_config = config.train.to_train_config(config.seed);
    let (model, report) = train_graph_classifier(config.train.model, &dataset, &train_config)?;
    let outputs = write_report(
        &Stage::TrainCascade.dir(config),
        "cascade-graph-classification",
        &report,
        &model,
    )?;
    let mut counters = BTreeMap::new();
    counters.insert("graphs".into(), counter(dataset.graphs.len()));
    counters.insert("test_accuracy".into(), counter(report.test.accuracy));
    counters.insert("test_f1".into(), counter(report.test.f1));
    Ok(StageOutcome { outputs, counters })
}

fn run_evaluate(config: &PipelineConfig) -> Result<StageOutcome> {
    let cascade_report: EvalReport = load_json(&report_artifact(config, Stage::TrainCascade))?;
    let metagraph_report: EvalReport = load_json(&report_artifact(config, Stage::TrainMetagraph))?;
    let mut text = String::new();
    text.push_str(&format_report("cascade-graph-classification", &cascade_report));
    text.push('\n');
    text.push_str(&format_report("metagraph-node-classification", &metagraph_report));
    text.push('\n');
    text.push_str(&format!(
        "metagraph test-accuracy advantage: {:+.4}\n",
        metagraph_report.test.accuracy - cascade_report.test.accuracy
    ));
    let path = Stage::Evaluate.dir(config).join("evaluation.txt");
    std::fs::create_dir_all(path.parent().unwrap())
        .map_err(|e| Error::io(path.parent().unwrap(), e))?;
    std::fs::write(&path, &text).map_err(|e| Error::io(&path, e))?;

    let mut counters = BTreeMap::new();
    counters.insert(
        "cascade_test_accuracy".into(),
        counter(cascade_report.test.accuracy),
    );
    counters.insert(
        "metagraph_test_accuracy".into(),
        counter(metagraph_report.test.accuracy),
    );
    Ok(StageOutcome {
        outputs: vec![path],
        counters,
    })
}

fn run_export(config: &PipelineConfig) -> Result<StageOutcome> {
    let filtered = load_metagraph(&filtered_artifact(config))?;
    let dir = Stage::Export.dir(config);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut outputs = Vec::new();
    for (name, format) in [
        ("metagraph.graphml", export::ExportFormat::GraphMl),
        ("metagraph.dot", export::ExportFormat::Dot),
        ("metagraph.edgelist", export::ExportFormat::EdgeList),
    ] {
        let path = dir.join(name);
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        export::export_graph(&filtered, format, std::io::BufWriter::new(file))?;
        outputs.push(path);
    }
    let mut counters = BTreeMap::new();
    counters.insert("nodes".into(), counter(filtered.node_count()));
    counters.insert("edges".into(), counter(filtered.edge_count()));
    Ok(StageOutcome { outputs, counters })
}

/// One row of the alpha sweep: filter at alpha, retrain, evaluate.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub nodes: usize,
    pub edges: usize,
    pub test_accuracy: f64,
}

/// Sweep the disparity-filter level over a built meta-graph: for each alpha,
/// filter, train the configured node classifier, and record non-isolated
/// node count, surviving edge count, and test accuracy.
pub fn sweep_alpha(config: &PipelineConfig, alphas: &[f64]) -> Result<Vec<SweepRow>> {
    if alphas.is_empty() {
        return Err(Error::Empty("alpha list"));
    }
    let meta = load_metagraph(&metagraph_artifact(config))?;
    let train_config = config.train.to_train_config(config.seed);
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let filtered = disparity_filter(&meta, alpha)?;
        let dataset = node_dataset_from_metagraph(&filtered, config.train.use_edge_weights)?;
        let (_, report) = train_node_classifier(config.train.model, &dataset, &train_config)?;
        rows.push(SweepRow {
            alpha,
            nodes: filtered.non_isolated_count(),
            edges: filtered.edge_count(),
            test_accuracy: report.test.accuracy,
        });
    }
    Ok(rows)
}

pub fn format_sweep_table(rows: &[SweepRow]) -> String {
    let mut out = String::from("alpha    nodes    edges      accuracy\n");
    for row in rows {
        out.push_str(&format!(
            "{:<8} {:<8} {:<10} {:.4}\n",
            row.alpha, row.nodes, row.edges, row.test_accuracy
        ));
    }
    out
}
