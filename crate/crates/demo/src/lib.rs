//! Browser demo: generate the synthetic supply graph, train one model, and
//! compare all three on the same data. Every entry point takes configuration
//! text in the CLI's `key = value` format and returns JSON.

use serde::Serialize;
use supplygnn::dataset::{fixture, FixtureConfig};
use supplygnn::models::ModelKind;
use supplygnn::report::layout::force_layout;
use supplygnn::report::svg::{self, BoxEntry, Series};
use supplygnn::report::{prepare_from, run_qa_in_memory, train_model, PipelineConfig, Prepared, QaSummary};
use supplygnn::stats::{compare_groups, SampleGroup, StatReport};
use supplygnn::{Error, Result};
use wasm_bindgen::prelude::*;

fn config(text: &str) -> Result<PipelineConfig> {
    let cfg = PipelineConfig::parse(text)?;
    if !cfg.uses_synthetic_data() {
        return Err(Error::Config("the demo only runs on synthetic data".into()));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn qa(cfg: &PipelineConfig) -> Result<(QaSummary, Prepared)> {
    let fx = fixture(&FixtureConfig { synth: cfg.synth })?;
    let table = fx
        .table(cfg.feature)
        .ok_or_else(|| Error::Config(format!("no synthetic table for {}", cfg.feature)))?;
    let (summary, graph, table) = run_qa_in_memory(cfg, &fx.raw_nodes, fx.edges(cfg.edge_type), table)?;
    let prepared = prepare_from(cfg, summary.clone(), graph, table)?;
    Ok((summary, prepared))
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::InvalidArgument(e.to_string()))
}

#[derive(Serialize)]
struct GraphView {
    headline: String,
    edges: String,
    removed: Vec<String>,
    train_windows: usize,
    test_windows: usize,
    svg: String,
}

/// QA summary and adjacency figure of the synthetic graph.
pub fn graph_view(config_text: &str) -> Result<String> {
    let cfg = config(config_text)?;
    let (summary, prepared) = qa(&cfg)?;
    let labels = prepared.graph.codes();
    let edges: Vec<(usize, usize)> = prepared.graph.edges().collect();
    let positions = force_layout(labels.len(), &edges);
    json(&GraphView {
        headline: summary.headline(),
        edges: format!(
            "edges ({}): {} → {}",
            summary.edge_type, summary.edges_before, summary.edges_after
        ),
        removed: summary.removed.clone(),
        train_windows: prepared.dataset.train.len(),
        test_windows: prepared.dataset.test.len(),
        svg: svg::adjacency_figure(
            &format!(
                "{} graph after QA ({} products)",
                summary.edge_type, summary.nodes_after
            ),
            &labels,
            &edges,
            &positions,
        )?,
    })
}

#[derive(Serialize)]
struct TrainView {
    model: String,
    params: usize,
    train_mse: f64,
    test_mse: f64,
    svg: String,
}

/// Trains one model and draws its learning curve.
pub fn train_view(config_text: &str, model: &str, seed: u64) -> Result<String> {
    let cfg = config(config_text)?;
    let kind: ModelKind = model.parse()?;
    let (_, prepared) = qa(&cfg)?;
    let run = train_model(&prepared, kind, &cfg.train, seed)?;
    let curve = |f: fn(&supplygnn::trainer::EpochRecord) -> f64| -> Vec<(f64, f64)> {
        run.curves.iter().map(|r| (r.epoch as f64, f(r))).collect()
    };
    let chart = svg::line_chart(
        &format!("{} learning curve (seed {seed})", kind.label()),
        "epoch",
        "MSE loss",
        &[
            Series {
                label: "train".into(),
                color: svg::TRAIN_COLOR.into(),
                points: curve(|r| r.train_loss),
            },
            Series {
                label: "test".into(),
                color: svg::TEST_COLOR.into(),
                points: curve(|r| r.test_loss),
            },
        ],
    )?;
    json(&TrainView {
        model: kind.label().to_string(),
        params: run.params.scalar_count(),
        train_mse: run.train_eval.mse,
        test_mse: run.test_eval.mse,
        svg: chart,
    })
}

#[derive(Serialize)]
struct ModelScore {
    model: String,
    test_mse: f64,
    test_median_se: f64,
}

#[derive(Serialize)]
struct CompareView {
    scores: Vec<ModelScore>,
    stats: StatReport,
    svg: String,
}

/// Trains every configured model with one seed and tests their test-segment
/// squared errors against each other.
pub fn compare_view(config_text: &str, seed: u64) -> Result<String> {
    let cfg = config(config_text)?;
    let (_, prepared) = qa(&cfg)?;
    let runs = cfg
        .models
        .iter()
        .map(|&k| train_model(&prepared, k, &cfg.train, seed))
        .collect::<Result<Vec<_>>>()?;
    let groups = runs
        .iter()
        .map(|r| SampleGroup::new(r.kind.label(), r.test_eval.flat_se()))
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(usize, usize)> = (1..runs.len()).map(|i| (i - 1, i)).collect();
    let stats = compare_groups(&groups, &pairs)?;
    let entries = runs
        .iter()
        .map(|r| BoxEntry::from_values(r.kind.label(), &r.test_eval.flat_se()))
        .collect::<Result<Vec<_>>>()?;
    let plot = svg::box_plot(
        "Squared error, test segment",
        "squared error",
        &[(format!("seed {seed}"), entries)],
    )?;
    json(&CompareView {
        scores: runs
            .iter()
            .map(|r| ModelScore {
                model: r.kind.label().to_string(),
                test_mse: r.test_eval.mse,
                test_median_se: r.test_eval.median_se,
            })
            .collect(),
        stats,
        svg: plot.svg,
    })
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = graphView)]
pub fn graph_view_js(config_text: &str) -> std::result::Result<String, JsError> {
    js(graph_view(config_text))
}

#[wasm_bindgen(js_name = trainView)]
pub fn train_view_js(config_text: &str, model: &str, seed: u32) -> std::result::Result<String, JsError> {
    js(train_view(config_text, model, u64::from(seed)))
}

#[wasm_bindgen(js_name = compareView)]
pub fn compare_view_js(config_text: &str, seed: u32) -> std::result::Result<String, JsError> {
    js(compare_view(config_text, u64::from(seed)))
}

/// Default configuration text, for the page's editor.
#[wasm_bindgen(js_name = defaultConfig)]
pub fn default_config() -> String {
    PipelineConfig::default().to_text()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHORT: &str = "epochs = 15\n";

    fn parse(s: &str) -> serde_json::Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn graph_view_reports_masking() {
        let v = parse(&graph_view("").unwrap());
        assert_eq!(v["headline"], "nodes: 40 → 29 (removed 11)");
        assert_eq!(v["removed"].as_array().unwrap().len(), 11);
        assert_eq!(
            (v["train_windows"].as_u64(), v["test_windows"].as_u64()),
            (Some(204), Some(7))
        );
        assert!(v["svg"].as_str().unwrap().contains("<svg"));
    }

    #[test]
    fn train_view_matches_pipeline() {
        let v = parse(&train_view(SHORT, "gat", 3).unwrap());
        let cfg = config(SHORT).unwrap();
        let (_, prepared) = qa(&cfg).unwrap();
        let run = train_model(&prepared, ModelKind::Gat, &cfg.train, 3).unwrap();
        assert_eq!(v["test_mse"].as_f64(), Some(run.test_eval.mse));
        assert_eq!(v["params"].as_u64(), Some(219));
    }

    #[test]
    fn compare_view_has_omnibus_and_pairs() {
        let v = parse(&compare_view(SHORT, 1).unwrap());
        assert_eq!(v["scores"].as_array().unwrap().len(), 3);
        assert_eq!(v["stats"]["pairwise"].as_array().unwrap().len(), 2);
        let p = v["stats"]["omnibus"]["p_value"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(graph_view("nope = 1").unwrap_err().to_string().contains("nope"));
        assert!(train_view("", "rnn", 1).is_err());
        assert!(graph_view("nodes_path = a.csv\nedges_path = b.csv\nfeature_path = c.csv").is_err());
    }
}
