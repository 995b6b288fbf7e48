//! Stage implementations shared by the CLI and the browser demo.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use crate::dataset::{
    fixture, ingest, make_windows, read_edges, read_nodes, split, write_fixture, FixtureConfig, Normalizer, SplitSpec,
    TemporalFeatureTable, WindowedDataset,
};
use crate::error::{Error, Result};
use crate::graph::{adjacency_matrix, dedupe, mask_inactive_nodes, DirectedGraph, GraphOperators, ProductNode};
use crate::models::{init_params, ModelConfig, ModelKind, ModelParams};
use crate::trainer::{evaluate, train, EpochRecord, EvalResult, TrainConfig};

/// Node and edge counts through deduplication and masking.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaSummary {
    pub edge_type: String,
    pub feature: String,
    pub zero_fraction_threshold: f64,
    pub time_points: usize,
    pub node_rows: usize,
    pub edge_rows: usize,
    pub nodes_before: usize,
    pub edges_before: usize,
    pub nodes_after: usize,
    pub edges_after: usize,
    pub removed: Vec<String>,
    pub retained: Vec<String>,
}

impl QaSummary {
    pub fn headline(&self) -> String {
        format!(
            "nodes: {} → {} (removed {})",
            self.nodes_before,
            self.nodes_after,
            self.removed.len()
        )
    }
}

/// Resolved input files: explicit paths, or the fixture under `<out>/data`.
pub fn data_paths(cfg: &PipelineConfig) -> (PathBuf, PathBuf, PathBuf) {
    match (&cfg.nodes_path, &cfg.edges_path, &cfg.feature_path) {
        (Some(n), Some(e), Some(f)) => (n.clone(), e.clone(), f.clone()),
        _ => {
            let dir = synth_dir(cfg);
            (
                dir.join("nodes.csv"),
                dir.join(format!("edges_{}.csv", cfg.edge_type)),
                dir.join(format!("{}.csv", cfg.feature)),
            )
        }
    }
}

pub fn synth_dir(cfg: &PipelineConfig) -> PathBuf {
    cfg.out_dir.join("data")
}

/// Writes the synthetic fixture CSVs.
pub fn run_synth(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let fx = fixture(&FixtureConfig { synth: cfg.synth })?;
    write_fixture(&synth_dir(cfg), &fx)
}

/// Everything downstream of QA for one configuration.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub qa: QaSummary,
    pub graph: DirectedGraph,
    pub operators: GraphOperators,
    /// Raw feature values of the retained products.
    pub table: TemporalFeatureTable,
    pub split: SplitSpec,
    pub normalizer: Normalizer,
    pub dataset: WindowedDataset,
}

/// Ingests, deduplicates and masks the configured inputs.
pub fn run_qa(cfg: &PipelineConfig) -> Result<(QaSummary, DirectedGraph, TemporalFeatureTable)> {
    let (nodes_path, edges_path, feature_path) = data_paths(cfg);
    let node_rows = read_nodes(&nodes_path)?.len();
    let edge_rows = read_edges(&edges_path)?.len();
    let (graph, tables) = ingest(&nodes_path, &edges_path, cfg.edge_type, &[(cfg.feature, &feature_path)])?;
    let table = tables.into_iter().next().expect("one table requested");
    summarize_qa(cfg, node_rows, edge_rows, graph, table)
}

/// As [`run_qa`] for inputs already in memory; `table` may list products in
/// any order but must cover exactly the deduplicated node set.
pub fn run_qa_in_memory(
    cfg: &PipelineConfig,
    raw_nodes: &[ProductNode],
    raw_edges: &[(String, String)],
    table: &TemporalFeatureTable,
) -> Result<(QaSummary, DirectedGraph, TemporalFeatureTable)> {
    let graph = dedupe(raw_nodes, raw_edges, cfg.edge_type)?;
    let table = table.select(&graph.codes())?;
    summarize_qa(cfg, raw_nodes.len(), raw_edges.len(), graph, table)
}

fn summarize_qa(
    cfg: &PipelineConfig,
    node_rows: usize,
    edge_rows: usize,
    graph: DirectedGraph,
    table: TemporalFeatureTable,
) -> Result<(QaSummary, DirectedGraph, TemporalFeatureTable)> {
    let masked = mask_inactive_nodes(&graph, &table, cfg.zero_fraction_threshold)?;
    let qa = QaSummary {
        edge_type: cfg.edge_type.to_string(),
        feature: cfg.feature.to_string(),
        zero_fraction_threshold: cfg.zero_fraction_threshold,
        time_points: table.len(),
        node_rows,
        edge_rows,
        nodes_before: graph.node_count(),
        edges_before: graph.edge_count(),
        nodes_after: masked.graph.node_count(),
        edges_after: masked.graph.edge_count(),
        removed: masked.removed,
        retained: masked.graph.codes(),
    };
    let table = table.select(&masked.graph.codes())?;
    Ok((qa, masked.graph, table))
}

/// QA followed by splitting, normalization and windowing.
pub fn prepare(cfg: &PipelineConfig) -> Result<Prepared> {
    let (qa, graph, table) = run_qa(cfg)?;
    prepare_from(cfg, qa, graph, table)
}

/// As [`prepare`], starting from an already QA'd graph and table.
pub fn prepare_from(
    cfg: &PipelineConfig,
    qa: QaSummary,
    graph: DirectedGraph,
    table: TemporalFeatureTable,
) -> Result<Prepared> {
    let operators = GraphOperators::new(&graph, cfg.adjacency_mode)?;
    let split = split(table.len(), cfg.train_ratio, cfg.window)?;
    let normalizer = Normalizer::fit(&table, &split, cfg.normalize_scope)?;
    let dataset = make_windows(&normalizer.apply(&table)?, &split, cfg.window)?;
    Ok(Prepared {
        qa,
        graph,
        operators,
        table,
        split,
        normalizer,
        dataset,
    })
}

/// One trained model and its evaluation on both segments.
#[derive(Clone, Debug)]
pub struct ModelRun {
    pub kind: ModelKind,
    pub seed: u64,
    pub params: ModelParams,
    pub curves: Vec<EpochRecord>,
    pub train_eval: EvalResult,
    pub test_eval: EvalResult,
}

/// Initializes and trains one model; `seed` drives initialization and dropout.
pub fn train_model(prepared: &Prepared, kind: ModelKind, train_cfg: &TrainConfig, seed: u64) -> Result<ModelRun> {
    let config = ModelConfig::standard(kind, prepared.dataset.window);
    let params = init_params(&config, seed)?;
    let graph = kind.uses_graph().then_some(&prepared.operators);
    let cfg = TrainConfig { seed, ..*train_cfg };
    let (params, curves) = train(params, &prepared.dataset, graph, &cfg)?;
    let train_eval = evaluate(&params, &prepared.dataset.train, graph)?;
    let test_eval = evaluate(&params, &prepared.dataset.test, graph)?;
    Ok(ModelRun {
        kind,
        seed,
        params,
        curves,
        train_eval,
        test_eval,
    })
}

/// Writes the binary adjacency of `graph` as CSV with code headers.
pub fn write_adjacency_csv(path: &Path, graph: &DirectedGraph) -> Result<()> {
    let a = adjacency_matrix(graph);
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut header = vec![String::new()];
    header.extend(graph.codes());
    w.write_record(&header)?;
    for (i, code) in graph.codes().into_iter().enumerate() {
        let mut row = vec![code];
        row.extend(a.row(i).iter().map(|v| (*v as u8).to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
