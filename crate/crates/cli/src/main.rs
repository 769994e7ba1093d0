//! `metagraph`: run the cascade meta-graph pipeline stage by stage, generate
//! synthetic corpora, sweep the disparity-filter level, and export graphs.

use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use metagraph_core::export::ExportFormat;
use metagraph_core::pipeline::{
    format_sweep_table, run_all, run_stage, sweep_alpha, PipelineConfig, Stage,
};
use metagraph_core::socialnet;
use metagraph_core::synth::{generate_synthetic, SynthConfig};

#[derive(Parser)]
#[command(name = "metagraph", version, about = "Retweet-cascade meta-graph pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Pipeline config file (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Apply the published hyperparameter preset before overrides.
    #[arg(long)]
    paper2016: bool,

    /// Override the run seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Override the workspace directory.
    #[arg(long)]
    workspace: Option<PathBuf>,

    /// Override the disparity-filter level.
    #[arg(long)]
    alpha: Option<f64>,

    /// Override the classifier (gcn, sage, gat).
    #[arg(long)]
    model: Option<String>,

    /// Override the shared-retweeter edge threshold.
    #[arg(long)]
    min_shared: Option<usize>,

    /// Override the minimum unique-retweeter count per cascade.
    #[arg(long)]
    min_retweeters: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> anyhow::Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::from_path(path)
                .with_context(|| format!("loading config {}", path.display()))?,
            None => PipelineConfig::default(),
        };
        if self.paper2016 {
            config.apply_paper2016_preset();
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(workspace) = &self.workspace {
            config.workspace = workspace.clone();
        }
        if let Some(alpha) = self.alpha {
            config.metagraph.alpha = alpha;
        }
        if let Some(model) = &self.model {
            config.train.model = model.parse()?;
        }
        if let Some(min_shared) = self.min_shared {
            config.metagraph.min_shared = min_shared;
        }
        if let Some(min_retweeters) = self.min_retweeters {
            config.cascade.min_retweeters = min_retweeters;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every pipeline stage in order.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run one stage (ingest, socialnet, cascades, embed, metagraph, filter,
    /// train-cascade, train-metagraph, evaluate, export).
    Stage {
        name: String,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Generate a synthetic two-community corpus in the ingest formats.
    Synth {
        /// Output directory for events.jsonl / labels.csv / annotations.jsonl.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 500)]
        cascades: usize,
        #[arg(long, default_value_t = 1200)]
        users: usize,
        #[arg(long, default_value_t = 0.9)]
        label_alignment: f64,
        #[arg(long, default_value_t = 0.5)]
        annotation_alignment: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Filter the built meta-graph at several alpha levels and retrain.
    SweepAlpha {
        /// Comma-separated alpha values; defaults to the published grid.
        #[arg(long)]
        alphas: Option<String>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Export the filtered meta-graph (graphml, dot, edgelist) to a file.
    Export {
        #[arg(long)]
        format: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Direction-sensitive edge overlap of two social graphs in the
    /// edge-list text format.
    CompareSocial {
        #[arg(long)]
        empirical: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
}

fn print_manifest(manifest: &metagraph_core::pipeline::Manifest) {
    let status = if manifest.cache_hit { "cached" } else { "ran" };
    println!(
        "[{}] {} ({} ms)",
        manifest.stage, status, manifest.elapsed_ms
    );
    for (key, value) in &manifest.counters {
        println!("    {key}: {value}");
    }
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run { config } => {
            let config = config.resolve()?;
            for manifest in run_all(&config)? {
                print_manifest(&manifest);
            }
            let evaluation = config.workspace.join("evaluate/evaluation.txt");
            if let Ok(text) = std::fs::read_to_string(evaluation) {
                println!("\n{text}");
            }
        }
        Command::Stage { name, config } => {
            let stage: Stage = name.parse()?;
            let config = config.resolve()?;
            print_manifest(&run_stage(stage, &config)?);
        }
        Command::Synth {
            out,
            cascades,
            users,
            label_alignment,
            annotation_alignment,
            seed,
        } => {
            let synth_config = SynthConfig {
                n_cascades: cascades,
                n_users: users,
                label_alignment,
                annotation_alignment,
                seed,
                ..SynthConfig::default()
            };
            let summary = generate_synthetic(&synth_config, &out)?;
            println!(
                "wrote {} events, {} cascades under {}",
                summary.event_count,
                summary.cascades.len(),
                out.display()
            );
        }
        Command::SweepAlpha { alphas, config } => {
            let config = config.resolve()?;
            let alphas: Vec<f64> = match alphas {
                Some(list) => list
                    .split(',')
                    .map(|a| a.trim().parse::<f64>().context("parsing alpha list"))
                    .collect::<anyhow::Result<_>>()?,
                None => PipelineConfig::paper2016_alpha_sweep(),
            };
            let rows = sweep_alpha(&config, &alphas)?;
            print!("{}", format_sweep_table(&rows));
            let sweep_dir = config.workspace.join("sweep");
            std::fs::create_dir_all(&sweep_dir)?;
            std::fs::write(
                sweep_dir.join("sweep.json"),
                serde_json::to_string_pretty(&rows)?,
            )?;
            std::fs::write(sweep_dir.join("sweep.txt"), format_sweep_table(&rows))?;
        }
        Command::Export {
            format,
            out,
            config,
        } => {
            let config = config.resolve()?;
            let format: ExportFormat = format.parse()?;
            let path = config.workspace.join("filter/metagraph_filtered.bin");
            let file = std::fs::File::open(&path)
                .with_context(|| format!("{} missing; run filter first", path.display()))?;
            let graph = metagraph_core::export::read_snapshot(std::io::BufReader::new(file))?;
            let out_file = std::fs::File::create(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            metagraph_core::export::export_graph(&graph, format, std::io::BufWriter::new(out_file))?;
            println!(
                "exported {} nodes / {} edges to {}",
                graph.node_count(),
                graph.edge_count(),
                out.display()
            );
        }
        Command::CompareSocial { empirical, truth } => {
            let empirical_graph = socialnet::read_edge_list_from_path(&empirical)?;
            let truth_graph = socialnet::read_edge_list_from_path(&truth)?;
            let report = socialnet::compare_to_ground_truth(&empirical_graph, &truth_graph);
            println!(
                "empirical edges: {}\ntruth edges: {}\nshared: {}",
                report.empirical_edges, report.truth_edges, report.shared_edges
            );
            match report.fraction {
                Some(fraction) => println!("overlap fraction: {fraction:.4}"),
                None => println!("overlap fraction: undefined (empirical graph has no edges)"),
            }
        }
    }
    Ok(())
}
