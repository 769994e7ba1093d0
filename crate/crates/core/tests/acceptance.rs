//! Acceptance suite: one test per criterion, each printing its own pass/fail
//! line through the harness. Oracles here are written independently of the
//! library code paths they check.

use std::collections::HashSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use metagraph_core::cascade::{
    group_cascades, reconstruct_cascade_graph, Cascade, CascadeGraph, EdgeRule,
};
use metagraph_core::embed::{
    cosine_similarity, embed_cascade, EmbedParams, EmbeddingMatrix,
};
use metagraph_core::gnn::{
    gradient_check, init_model, normalize_adjacency, prepare_graph, train_graph_classifier,
    train_node_classifier, Class, DenseMatrix, GnnKind, NormMode, ReadoutMode, TrainConfig,
};
use metagraph_core::ingest::labels::{merge_label_sources, LabelClass, LabelRecord};
use metagraph_core::ingest::{self, annotations::AnnotationStore, EventStore};
use metagraph_core::metagraph::{
    disparity_filter, transfer_labels, CascadeLabel, LabelDecision, MetaEdge, MetaGraph, MetaNode,
    NodeLabel,
};
use metagraph_core::pipeline::{
    build_cascade_dataset, build_meta_graph, node_dataset_from_metagraph, run_all, CorpusSlices,
    PipelineConfig,
};
use metagraph_core::socialnet::{SocialGraph, SocialGraphBuilder};
use metagraph_core::synth::{generate_synthetic, SynthConfig};

// ---------------------------------------------------------------------------
// Helpers shared by the criteria.

fn meta_graph_with(n: usize, edges: &[(u32, u32, u32)]) -> MetaGraph {
    MetaGraph {
        nodes: (0..n)
            .map(|i| MetaNode {
                cascade_id: format!("c{i}"),
                features: vec![0.0],
                label: NodeLabel::Unlabeled,
            })
            .collect(),
        edges: edges
            .iter()
            .map(|&(a, b, w)| MetaEdge {
                a: a.min(b),
                b: a.max(b),
                shared_users: w,
                graph_sim: 0.0,
                content_sim: 0.0,
            })
            .collect(),
    }
}

fn random_weighted_graph(rng: &mut ChaCha8Rng) -> MetaGraph {
    let n = rng.random_range(5..=200usize);
    let max_edges = (n * (n - 1) / 2).min(2000);
    let m = rng.random_range(1..=max_edges);
    let mut pairs = HashSet::new();
    while pairs.len() < m {
        let a = rng.random_range(0..n as u32);
        let b = rng.random_range(0..n as u32);
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let edges: Vec<(u32, u32, u32)> = pairs
        .into_iter()
        .map(|(a, b)| (a, b, rng.random_range(1..50u32)))
        .collect();
    meta_graph_with(n, &edges)
}

/// Independent disparity oracle: evaluates the closed form per edge, with
/// strengths and degrees recomputed from scratch by scanning the edge list.
fn disparity_oracle_keeps(graph: &MetaGraph, alpha: f64) -> HashSet<(u32, u32)> {
    let significance = |node: u32, weight: f64| -> f64 {
        let mut strength = 0.0;
        let mut degree = 0usize;
        for e in &graph.edges {
            if e.a == node || e.b == node {
                strength += e.shared_users as f64;
                degree += 1;
            }
        }
        if degree <= 1 {
            1.0
        } else {
            (1.0 - weight / strength).powi(degree as i32 - 1)
        }
    };
    graph
        .edges
        .iter()
        .filter(|e| {
            let w = e.shared_users as f64;
            significance(e.a, w) < alpha || significance(e.b, w) < alpha
        })
        .map(|e| (e.a, e.b))
        .collect()
}

fn edge_set(graph: &MetaGraph) -> HashSet<(u32, u32)> {
    graph.edges.iter().map(|e| (e.a, e.b)).collect()
}

/// A fully ingested, reconstructed, and embedded synthetic corpus.
struct Corpus {
    store: EventStore,
    annotations: AnnotationStore,
    cascades: Vec<Cascade>,
    graphs: Vec<CascadeGraph>,
    embeddings: Vec<EmbeddingMatrix>,
    decisions: Vec<CascadeLabel>,
}

fn bench_embed_params() -> EmbedParams {
    EmbedParams {
        walks_per_node: 5,
        walk_length: 20,
        dim: 16,
        window: 3,
        negatives: 3,
        epochs: 2,
        learning_rate: 0.025,
    }
}

fn build_corpus(synth: &SynthConfig) -> Corpus {
    let dir = tempfile::tempdir().unwrap();
    let summary = generate_synthetic(synth, dir.path()).unwrap();
    let store = ingest::parse_events_from_path(
        &summary.events_path,
        &ingest::SchemaConfig::default(),
        &ingest::ParseOptions::default(),
    )
    .unwrap();
    let annotations =
        ingest::annotations::load_annotations_from_path(&summary.annotations_path).unwrap();
    let records =
        ingest::labels::read_label_records_from_path(&summary.labels_path, b',').unwrap();
    let label_store = merge_label_sources(&records);

    let social = metagraph_core::socialnet::build_interaction_graph(&store);
    let (cascades, _) = group_cascades(&store, 2, true);
    let graphs: Vec<CascadeGraph> = cascades
        .iter()
        .map(|c| reconstruct_cascade_graph(c, &social, EdgeRule::FollowerBefore))
        .collect();
    let params = bench_embed_params();
    let embeddings: Vec<EmbeddingMatrix> = graphs
        .iter()
        .enumerate()
        .map(|(i, g)| embed_cascade(g, &params, synth.seed.wrapping_add(i as u64)).unwrap())
        .collect();
    let decisions = transfer_labels(&cascades, &label_store);
    Corpus {
        store,
        annotations,
        cascades,
        graphs,
        embeddings,
        decisions,
    }
}

impl Corpus {
    fn slices(&self, with_annotations: bool) -> CorpusSlices<'_> {
        CorpusSlices {
            cascades: &self.cascades,
            graphs: &self.graphs,
            embeddings: &self.embeddings,
            profiles: self.store.profiles(),
            annotations: with_annotations.then_some(&self.annotations),
            decisions: &self.decisions,
        }
    }
}

fn bench_train_config(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 300,
        dropout: 0.5,
        learning_rate: 0.01,
        hidden_dim: 32,
        split: (0.6, 0.2, 0.2),
        seed,
        class_weighted: false,
        readout: ReadoutMode::Mean,
        ..TrainConfig::default()
    }
}

const BENCH_ALPHA: f64 = 0.5;
const BENCH_LANG_TOP_K: usize = 4;

fn meta_report(
    corpus: &Corpus,
    annotations: bool,
    kind: GnnKind,
    seed: u64,
) -> metagraph_core::gnn::EvalReport {
    let meta = build_meta_graph(
        &corpus.slices(annotations),
        1,
        BENCH_LANG_TOP_K,
        (0.6, 0.2, 0.2),
        seed,
    )
    .unwrap();
    let filtered = disparity_filter(&meta, BENCH_ALPHA).unwrap();
    let dataset = node_dataset_from_metagraph(&filtered, false).unwrap();
    let (_, report) = train_node_classifier(kind, &dataset, &bench_train_config(seed)).unwrap();
    report
}

fn meta_test_accuracy(corpus: &Corpus, annotations: bool, kind: GnnKind, seed: u64) -> f64 {
    meta_report(corpus, annotations, kind, seed).test.accuracy
}

fn cascade_test_accuracy(corpus: &Corpus, annotations: bool, kind: GnnKind, seed: u64) -> f64 {
    let dataset = build_cascade_dataset(
        &corpus.slices(annotations),
        BENCH_LANG_TOP_K,
        (0.6, 0.2, 0.2),
        seed,
    )
    .unwrap();
    let (_, report) = train_graph_classifier(kind, &dataset, &bench_train_config(seed)).unwrap();
    report.test.accuracy
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

// ---------------------------------------------------------------------------
// Criterion 1: disparity filter matches a closed-form oracle exactly on 100
// random weighted graphs (<= 200 nodes, <= 2000 edges) for each alpha in
// {0.01, 0.05, 0.1, 0.5}, in under 10 seconds.
#[test]
fn criterion_01_disparity_filter_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xd15);
    for case in 0..100 {
        let graph = random_weighted_graph(&mut rng);
        for alpha in [0.01, 0.05, 0.1, 0.5] {
            let filtered = disparity_filter(&graph, alpha).unwrap();
            assert_eq!(
                edge_set(&filtered),
                disparity_oracle_keeps(&graph, alpha),
                "case {case}, alpha {alpha}, n={} m={}",
                graph.node_count(),
                graph.edge_count()
            );
        }
    }
    assert!(
        started.elapsed().as_secs_f64() < 10.0,
        "took {:?}",
        started.elapsed()
    );
}

// Criterion 2: the worked star example. Weights (10,1,1,1) at alpha = 0.05
// keep exactly the w=10 edge; (3/13)^3 ~ 0.0123.
#[test]
fn criterion_02_disparity_worked_star_example() {
    let graph = meta_graph_with(5, &[(0, 1, 10), (0, 2, 1), (0, 3, 1), (0, 4, 1)]);
    let filtered = disparity_filter(&graph, 0.05).unwrap();
    assert_eq!(filtered.edge_count(), 1);
    assert_eq!((filtered.edges[0].a, filtered.edges[0].b), (0, 1));
    assert_eq!(filtered.edges[0].shared_users, 10);
    assert_eq!(filtered.node_count(), 5);

    let alpha_heavy = (3.0f64 / 13.0).powi(3);
    assert!(alpha_heavy < 0.05);
    assert!((alpha_heavy - 27.0 / 2197.0).abs() < 1e-15);
    assert!((alpha_heavy - 0.0123).abs() < 1e-4);
    let alpha_light = (12.0f64 / 13.0).powi(3);
    assert!(alpha_light > 0.05);
}

// Criterion 3: analytic gradients match central finite differences within
// relative error 1e-4 over >= 100 sampled parameters on 5-20 node instances,
// for GCN and GraphSAGE, in under 30 seconds.
#[test]
fn criterion_03_gcn_and_sage_gradient_checks() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x9ad);
    for (instance, &n) in [5usize, 12, 20].iter().enumerate() {
        // Random connected-ish instance: a ring plus random chords.
        let mut edges: Vec<(u32, u32)> = (0..n as u32).map(|i| (i, (i + 1) % n as u32)).collect();
        for _ in 0..n {
            let a = rng.random_range(0..n as u32);
            let b = rng.random_range(0..n as u32);
            if a != b {
                edges.push((a.min(b), a.max(b)));
            }
        }
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let graph = prepare_graph(DenseMatrix::from_rows(rows), &edges, None).unwrap();
        let targets: Vec<(usize, Class)> = (0..n)
            .map(|i| (i, Class::from_index(i % 2)))
            .collect();
        for kind in [GnnKind::Gcn, GnnKind::Sage] {
            let model = init_model(kind, 4, 6, 0.0, 7 + instance as u64).unwrap();
            let err = gradient_check(&model, &graph, None, &targets, 1e-5, 120, 11).unwrap();
            assert!(
                err < 1e-4,
                "{kind:?} on {n}-node instance: max relative error {err}"
            );
        }
    }
    assert!(
        started.elapsed().as_secs_f64() < 30.0,
        "took {:?}",
        started.elapsed()
    );
}

// Criterion 4: GCN normalization worked example is exact, and the normalized
// adjacency is symmetric with spectral radius <= 1 + 1e-9 on 50 random
// graphs.
#[test]
fn criterion_04_gcn_normalization_exactness_and_spectrum() {
    let path = DenseMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    let ahat = normalize_adjacency(&path, NormMode::Gcn).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert_eq!(ahat.at(i, j), 0.5, "entry ({i},{j})");
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x5bec);
    for case in 0..50 {
        let n = rng.random_range(2..40usize);
        let mut adjacency = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < 0.3 {
                    let w = rng.random_range(1..5) as f64;
                    *adjacency.at_mut(i, j) = w;
                    *adjacency.at_mut(j, i) = w;
                }
            }
        }
        let ahat = normalize_adjacency(&adjacency, NormMode::Gcn).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(ahat.at(i, j), ahat.at(j, i), "case {case} asymmetric");
            }
        }
        // Power iteration with the Rayleigh quotient; for symmetric matrices
        // the quotient never exceeds the top eigenvalue.
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        for _ in 0..200 {
            let mut next = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    next[i] += ahat.at(i, j) * v[j];
                }
            }
            let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            next.iter_mut().for_each(|x| *x /= norm);
            v = next;
        }
        let mut av = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                av[i] += ahat.at(i, j) * v[j];
            }
        }
        let rayleigh: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum::<f64>()
            / v.iter().map(|x| x * x).sum::<f64>();
        assert!(
            rayleigh.abs() <= 1.0 + 1e-9,
            "case {case}: spectral radius estimate {rayleigh}"
        );
        assert!(rayleigh > 0.5, "case {case}: power iteration degenerated");
    }
}

// Criterion 5: DeepWalk homophily on barbell(5,5) and planted-partition
// graphs: intra-community cosine similarity exceeds inter-community in at
// least 9 of 10 seeds per family, in under 60 seconds.
#[test]
fn criterion_05_deepwalk_homophily() {
    let started = Instant::now();

    fn homophily_holds(graph: &CascadeGraph, communities: (&[usize], &[usize]), seed: u64) -> bool {
        let params = EmbedParams {
            walks_per_node: 8,
            walk_length: 20,
            dim: 16,
            window: 3,
            negatives: 3,
            epochs: 3,
            learning_rate: 0.025,
        };
        let matrix = embed_cascade(graph, &params, seed).unwrap();
        let (a, b) = communities;
        let mut intra = Vec::new();
        let mut inter = Vec::new();
        for group in [a, b] {
            for (i, &x) in group.iter().enumerate() {
                for &y in &group[i + 1..] {
                    intra.push(cosine_similarity(matrix.row(x), matrix.row(y)));
                }
            }
        }
        for &x in a {
            for &y in b {
                inter.push(cosine_similarity(matrix.row(x), matrix.row(y)));
            }
        }
        mean(&intra) > mean(&inter)
    }

    // Barbell(5,5): two 5-cliques joined by a 5-node path.
    let barbell = {
        let users: Vec<String> = (0..15).map(|i| format!("u{i}")).collect();
        let mut edges = Vec::new();
        for base in [0u32, 5] {
            for i in base..base + 5 {
                for j in (i + 1)..base + 5 {
                    edges.push((i, j));
                }
            }
        }
        // path 10-11-12-13-14 bridging clique ends 4 and 5
        edges.push((4, 10));
        edges.extend([(10, 11), (11, 12), (12, 13), (13, 14)]);
        edges.push((14, 5));
        CascadeGraph::from_edges("barbell", users, edges)
    };
    let clique_a: Vec<usize> = (0..5).collect();
    let clique_b: Vec<usize> = (5..10).collect();
    let barbell_passes = (0..10)
        .filter(|&seed| homophily_holds(&barbell, (&clique_a, &clique_b), seed))
        .count();
    assert!(
        barbell_passes >= 9,
        "barbell homophily held in only {barbell_passes}/10 seeds"
    );

    // Planted partition: two 10-node blocks, dense inside, sparse across.
    let block_a: Vec<usize> = (0..10).collect();
    let block_b: Vec<usize> = (10..20).collect();
    let planted_passes = (0..10u64)
        .filter(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(0x91a + seed);
            let users: Vec<String> = (0..20).map(|i| format!("u{i}")).collect();
            let mut edges = Vec::new();
            for base in [0u32, 10] {
                // Intra-block ring keeps each block connected.
                for i in 0..10u32 {
                    edges.push((base + i, base + (i + 1) % 10));
                }
                for i in base..base + 10 {
                    for j in (i + 1)..base + 10 {
                        if rng.random::<f64>() < 0.6 {
                            edges.push((i, j));
                        }
                    }
                }
            }
            edges.push((0, 10)); // one guaranteed bridge keeps it connected
            for i in 0..10u32 {
                for j in 10..20u32 {
                    if rng.random::<f64>() < 0.05 {
                        edges.push((i, j));
                    }
                }
            }
            let graph = CascadeGraph::from_edges("planted", users.clone(), edges);
            homophily_holds(&graph, (&block_a, &block_b), seed)
        })
        .count();
    assert!(
        planted_passes >= 9,
        "planted-partition homophily held in only {planted_passes}/10 seeds"
    );

    assert!(
        started.elapsed().as_secs_f64() < 60.0,
        "took {:?}",
        started.elapsed()
    );
}

// Criterion 6: on the planted benchmark (label alignment 0.9, 500 cascades),
// mean meta-graph node-classification accuracy exceeds mean isolated-cascade
// accuracy with a one-sided paired t-test at p < 0.05 over 10 seeds, in
// under 10 minutes. Only the ordering is asserted, not the published gap.
#[test]
fn criterion_06_metagraph_beats_cascade_classification() {
    let started = Instant::now();
    let corpus = build_corpus(&SynthConfig {
        n_cascades: 500,
        n_users: 1200,
        label_alignment: 0.9,
        annotation_alignment: 0.5,
        seed: 42,
        ..SynthConfig::default()
    });

    let seeds: Vec<u64> = (0..10).collect();
    let meta_reports: Vec<metagraph_core::gnn::EvalReport> = seeds
        .iter()
        .map(|&s| meta_report(&corpus, false, GnnKind::Gcn, s))
        .collect();
    let meta: Vec<f64> = meta_reports.iter().map(|r| r.test.accuracy).collect();
    let cascade: Vec<f64> = seeds
        .iter()
        .map(|&s| cascade_test_accuracy(&corpus, false, GnnKind::Gcn, s))
        .collect();

    // Training-loss descent on the planted benchmark: the deterministic
    // end-of-epoch loss must be non-increasing in at least 80% of epoch
    // transitions (dropout noise in the gradients allows upticks).
    for (s, report) in seeds.iter().zip(&meta_reports) {
        let transitions = report.epoch_eval_losses.windows(2).count();
        let non_increasing = report
            .epoch_eval_losses
            .windows(2)
            .filter(|w| w[1] <= w[0] + 1e-12)
            .count();
        assert!(
            non_increasing as f64 >= 0.8 * transitions as f64,
            "seed {s}: only {non_increasing}/{transitions} loss transitions non-increasing"
        );
    }

    let diffs: Vec<f64> = meta.iter().zip(&cascade).map(|(m, c)| m - c).collect();
    let mean_diff = mean(&diffs);
    let sd = (diffs.iter().map(|d| (d - mean_diff).powi(2)).sum::<f64>()
        / (diffs.len() - 1) as f64)
        .sqrt();
    let t = mean_diff / (sd / (diffs.len() as f64).sqrt());
    let t_dist = StudentsT::new(0.0, 1.0, (diffs.len() - 1) as f64).unwrap();
    let p = 1.0 - t_dist.cdf(t);

    eprintln!(
        "meta mean {:.4}, cascade mean {:.4}, diff {:+.4}, t = {t:.3}, p = {p:.6}",
        mean(&meta),
        mean(&cascade),
        mean_diff
    );
    assert!(mean_diff > 0.0, "meta-graph advantage not positive: {mean_diff}");
    assert!(p < 0.05, "paired test not significant: p = {p}");
    assert!(
        started.elapsed().as_secs_f64() < 600.0,
        "took {:?}",
        started.elapsed()
    );
}

// Supporting example for the training contract: when communities align
// perfectly with labels, meta-graph node classification exceeds 0.9 test
// accuracy in at least 8 of 10 seeds.
#[test]
fn planted_benchmark_with_perfect_alignment_tops_090() {
    let corpus = build_corpus(&SynthConfig {
        n_cascades: 500,
        n_users: 1200,
        label_alignment: 1.0,
        annotation_alignment: 0.5,
        seed: 45,
        ..SynthConfig::default()
    });
    let passes = (0..10u64)
        .filter(|&s| meta_test_accuracy(&corpus, false, GnnKind::Gcn, s) > 0.9)
        .count();
    assert!(passes >= 8, "accuracy > 0.9 in only {passes}/10 seeds");
}

// Criterion 7: with label-correlated annotations (alignment 0.8), mean
// accuracy with annotations >= mean accuracy without, across 10 seeds.
#[test]
fn criterion_07_annotations_do_not_hurt() {
    let corpus = build_corpus(&SynthConfig {
        n_cascades: 500,
        n_users: 1200,
        label_alignment: 0.9,
        annotation_alignment: 0.8,
        seed: 43,
        ..SynthConfig::default()
    });
    let seeds: Vec<u64> = (0..10).collect();
    let with: Vec<f64> = seeds
        .iter()
        .map(|&s| meta_test_accuracy(&corpus, true, GnnKind::Gcn, s))
        .collect();
    let without: Vec<f64> = seeds
        .iter()
        .map(|&s| meta_test_accuracy(&corpus, false, GnnKind::Gcn, s))
        .collect();
    eprintln!(
        "with annotations {:.4}, without {:.4}",
        mean(&with),
        mean(&without)
    );
    assert!(
        mean(&with) >= mean(&without),
        "annotations hurt: {:.4} < {:.4}",
        mean(&with),
        mean(&without)
    );
}

// Criterion 8: with label alignment 0.5 (no signal), every model's mean test
// accuracy stays in [0.4, 0.6] on both tasks; no leakage.
#[test]
fn criterion_08_null_signal_sanity() {
    let corpus = build_corpus(&SynthConfig {
        n_cascades: 500,
        n_users: 1200,
        label_alignment: 0.5,
        annotation_alignment: 0.5,
        seed: 44,
        ..SynthConfig::default()
    });
    let seeds = [0u64, 1, 2];
    for kind in [GnnKind::Gcn, GnnKind::Sage, GnnKind::Gat] {
        let meta = mean(
            &seeds
                .iter()
                .map(|&s| meta_test_accuracy(&corpus, true, kind, s))
                .collect::<Vec<_>>(),
        );
        assert!(
            (0.4..=0.6).contains(&meta),
            "{kind:?} meta accuracy {meta} outside [0.4, 0.6]"
        );
        let cascade = mean(
            &seeds
                .iter()
                .map(|&s| cascade_test_accuracy(&corpus, true, kind, s))
                .collect::<Vec<_>>(),
        );
        assert!(
            (0.4..=0.6).contains(&cascade),
            "{kind:?} cascade accuracy {cascade} outside [0.4, 0.6]"
        );
    }
}

// Criterion 9: cascade reconstruction matches a brute-force edge enumerator
// exactly on 1000 randomized cascades, and every graph is connected and
// contains all star edges.
#[test]
fn criterion_09_cascade_reconstruction_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xca5);
    for case in 0..1000 {
        // Random cascade over a small user pool.
        let n_users = rng.random_range(2..12usize);
        let users: Vec<String> = (0..n_users).map(|i| format!("u{i}")).collect();
        let root = "root";
        let n_retweeters = rng.random_range(1..n_users);
        let mut pool = users.clone();
        pool.shuffle(&mut rng);
        let retweets: Vec<(String, i64)> = pool[..n_retweeters]
            .iter()
            .map(|u| (u.clone(), rng.random_range(100..200i64)))
            .collect();

        // Random directed interactions, duplicates allowed; the oracle takes
        // earliest-wins on raw interactions, the implementation goes through
        // the frozen graph.
        let n_interactions = rng.random_range(0..30usize);
        let interactions: Vec<(String, String, i64)> = (0..n_interactions)
            .filter_map(|_| {
                let a = &users[rng.random_range(0..n_users)];
                let b = &users[rng.random_range(0..n_users)];
                (a != b).then(|| (a.clone(), b.clone(), rng.random_range(0..250i64)))
            })
            .collect();
        let mut builder = SocialGraphBuilder::new();
        for (a, b, t) in &interactions {
            builder.add_interaction(a, b, *t);
        }
        let social: SocialGraph = builder.freeze();

        let cascade = Cascade {
            root_tweet: metagraph_core::ingest::TweetEvent {
                tweet_id: format!("case{case}"),
                user_id: root.to_string(),
                created_at: 50,
                text: String::new(),
                kind: metagraph_core::ingest::EventKind::Original,
                ref_tweet_id: None,
                ref_user_id: None,
                urls: vec![],
                mentions: vec![],
            },
            root_user: root.to_string(),
            retweets: retweets.clone(),
            urls: vec![],
            unique_retweeters: retweets.iter().map(|(u, _)| u.clone()).collect(),
        };
        let graph = reconstruct_cascade_graph(&cascade, &social, EdgeRule::FollowerBefore);

        // Brute-force oracle straight from the raw interaction list.
        let rt_time = |user: &str| -> i64 {
            retweets
                .iter()
                .filter(|(u, _)| u == user)
                .map(|&(_, t)| t)
                .min()
                .unwrap()
        };
        let earliest = |a: &str, b: &str| -> Option<i64> {
            interactions
                .iter()
                .filter(|(x, y, _)| x == a && y == b)
                .map(|&(_, _, t)| t)
                .min()
        };
        let retweeter_set: Vec<&str> = cascade
            .unique_retweeters
            .iter()
            .map(String::as_str)
            .collect();
        let mut expected: HashSet<(String, String)> = HashSet::new();
        for r in &retweeter_set {
            let key = (root.to_string().min(r.to_string()), root.to_string().max(r.to_string()));
            expected.insert(key);
        }
        for (i, a) in retweeter_set.iter().enumerate() {
            for b in &retweeter_set[i + 1..] {
                let qualifies = earliest(a, b).map(|t| t < rt_time(a)).unwrap_or(false)
                    || earliest(b, a).map(|t| t < rt_time(b)).unwrap_or(false);
                if qualifies {
                    let key = (a.to_string().min(b.to_string()), a.to_string().max(b.to_string()));
                    expected.insert(key);
                }
            }
        }
        let actual: HashSet<(String, String)> = graph
            .edges
            .iter()
            .map(|&(a, b)| {
                let (ua, ub) = (&graph.users[a as usize], &graph.users[b as usize]);
                (ua.clone().min(ub.clone()), ua.clone().max(ub.clone()))
            })
            .collect();
        assert_eq!(actual, expected, "case {case}");

        // Connectivity and star containment.
        assert!(graph.is_connected(), "case {case} disconnected");
        assert!(graph.edge_count() >= cascade.unique_retweeters.len());
        for r in 1..graph.node_count() as u32 {
            assert!(
                graph.edges.contains(&(0, r)),
                "case {case} missing star edge to node {r}"
            );
        }
    }
}

// Criterion 10: a cascade whose URLs carry both definitive labels is always
// discarded; property-tested over randomized assignments.
#[test]
fn criterion_10_label_transfer_discards_contradictions() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1ab);
    for case in 0..500 {
        let n_urls = rng.random_range(1..8usize);
        let urls: Vec<String> = (0..n_urls).map(|i| format!("https://x.test/{case}/{i}")).collect();
        let records: Vec<LabelRecord> = urls
            .iter()
            .map(|url| LabelRecord {
                url: url.clone(),
                label: match rng.random_range(0..3) {
                    0 => LabelClass::Fake,
                    1 => LabelClass::NonFake,
                    _ => LabelClass::Unknown,
                },
                source: "synth".into(),
            })
            .collect();
        let store = merge_label_sources(&records);
        let mut cascade = metagraph_core::cascade::Cascade {
            root_tweet: metagraph_core::ingest::TweetEvent {
                tweet_id: format!("c{case}"),
                user_id: "r".into(),
                created_at: 0,
                text: String::new(),
                kind: metagraph_core::ingest::EventKind::Original,
                ref_tweet_id: None,
                ref_user_id: None,
                urls: urls.clone(),
                mentions: vec![],
            },
            root_user: "r".into(),
            retweets: vec![("a".into(), 1)],
            urls,
            unique_retweeters: ["a".to_string()].into_iter().collect(),
        };
        cascade.urls = cascade.root_tweet.urls.clone();

        let decisions = transfer_labels(std::slice::from_ref(&cascade), &store);
        let has_fake = records.iter().any(|r| r.label == LabelClass::Fake);
        let has_non_fake = records.iter().any(|r| r.label == LabelClass::NonFake);
        if has_fake && has_non_fake {
            assert_eq!(
                decisions[0].decision,
                LabelDecision::Discarded,
                "case {case} not discarded"
            );
        } else {
            assert_ne!(decisions[0].decision, LabelDecision::Discarded);
        }
    }
}

// Criterion 11: two full pipeline runs with identical config and seed produce
// identical evaluation reports and byte-identical GraphML exports.
#[test]
fn criterion_11_end_to_end_determinism() {
    let data = tempfile::tempdir().unwrap();
    generate_synthetic(
        &SynthConfig {
            n_cascades: 80,
            n_users: 300,
            cascade_size_min: 5,
            cascade_size_max: 9,
            seed: 5,
            ..SynthConfig::default()
        },
        data.path(),
    )
    .unwrap();

    let run = |workspace: &std::path::Path| {
        let mut config = PipelineConfig::default();
        config.seed = 9;
        config.workspace = workspace.to_path_buf();
        config.paths.events = data.path().join("events.jsonl");
        config.paths.labels = data.path().join("labels.csv");
        config.paths.annotations = Some(data.path().join("annotations.jsonl"));
        config.cascade.min_retweeters = 2;
        config.embed.dim = 8;
        config.embed.walks_per_node = 3;
        config.embed.walk_length = 12;
        config.embed.window = 2;
        config.embed.negatives = 2;
        config.embed.epochs = 1;
        config.metagraph.lang_top_k = 4;
        config.train.hidden_dim = 16;
        config.train.epochs = 60;
        config.train.learning_rate = 0.01;
        config.train.dropout = 0.5;
        run_all(&config).unwrap();
        (
            std::fs::read(workspace.join("train-cascade/report.json")).unwrap(),
            std::fs::read(workspace.join("train-metagraph/report.json")).unwrap(),
            std::fs::read(workspace.join("export/metagraph.graphml")).unwrap(),
        )
    };

    let ws_a = tempfile::tempdir().unwrap();
    let ws_b = tempfile::tempdir().unwrap();
    let (cascade_a, meta_a, graphml_a) = run(ws_a.path());
    let (cascade_b, meta_b, graphml_b) = run(ws_b.path());
    assert_eq!(cascade_a, cascade_b, "cascade reports differ");
    assert_eq!(meta_a, meta_b, "metagraph reports differ");
    assert_eq!(graphml_a, graphml_b, "GraphML bytes differ");
}

// Criterion 12: kept-edge count is non-decreasing in alpha on the synthetic
// meta-graph, exactly.
#[test]
fn criterion_12_alpha_sweep_edge_monotonicity() {
    let corpus = build_corpus(&SynthConfig {
        n_cascades: 200,
        n_users: 600,
        label_alignment: 0.9,
        seed: 46,
        ..SynthConfig::default()
    });
    let meta = build_meta_graph(&corpus.slices(false), 1, BENCH_LANG_TOP_K, (0.6, 0.2, 0.2), 0)
        .unwrap();
    let alphas = PipelineConfig::paper2016_alpha_sweep();
    let mut previous = 0usize;
    for &alpha in &alphas {
        let kept = disparity_filter(&meta, alpha).unwrap().edge_count();
        assert!(
            kept >= previous,
            "edge count decreased at alpha {alpha}: {kept} < {previous}"
        );
        previous = kept;
    }
    let near_one = disparity_filter(&meta, 0.9999).unwrap();
    assert!(near_one.edge_count() >= previous);
}
