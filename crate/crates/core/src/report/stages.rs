//! File-backed pipeline stages: `synth`, `qa`, `train`, `stats`, `report`.
//!
//! Layout under `out_dir`:
//!
//! ```text
//! data/                       synthetic inputs (synth)
//! qa.json, adjacency.csv      (qa)
//! seed_<k>/checkpoint_<m>.txt, curves_<m>.csv, se_<m>.csv   (train)
//! seed_<k>/stats.csv          (stats)
//! report.json, fig_*.svg      (report)
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::layout::force_layout;
use super::pipeline::{prepare_from, run_qa, run_synth, train_model, write_adjacency_csv, QaSummary};
use super::svg::{self, BoxEntry, ProductTrace, Series};
use crate::dataset::split;
use crate::error::{Error, Result};
use crate::models::{write_checkpoint, ModelKind};
use crate::stats::{compare_groups, median, PairwiseResult, SampleGroup, StatReport, TestResult};
use crate::trainer::{EpochRecord, EvalResult};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const SEGMENTS: [&str; 2] = ["train", "test"];

/// Writes through a temporary sibling and a rename, so readers never see a
/// half-written file.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("partial");
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Shortest round-trip text for a float, with an exponent for very small or
/// large magnitudes.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e.to_string()))?;
    let got: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if got != header {
        return Err(Error::parse(
            path,
            format!("expected header `{}`, found `{}`", header.join(","), got.join(",")),
        ));
    }
    r.records()
        .map(|rec| rec.map_err(|e| Error::parse(path, e.to_string())))
        .collect()
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(|_| {
        Error::parse(
            path,
            format!("line {}: cannot parse `{raw}` in column {}", line_of(rec), i + 1),
        )
    })
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

pub fn seed_dir(cfg: &PipelineConfig, seed: u64) -> PathBuf {
    cfg.out_dir.join(format!("seed_{seed}"))
}

fn qa_path(cfg: &PipelineConfig) -> PathBuf {
    cfg.out_dir.join("qa.json")
}

fn curves_path(cfg: &PipelineConfig, seed: u64, m: ModelKind) -> PathBuf {
    seed_dir(cfg, seed).join(format!("curves_{m}.csv"))
}

fn se_path(cfg: &PipelineConfig, seed: u64, m: ModelKind) -> PathBuf {
    seed_dir(cfg, seed).join(format!("se_{m}.csv"))
}

fn stats_path(cfg: &PipelineConfig, seed: u64) -> PathBuf {
    seed_dir(cfg, seed).join("stats.csv")
}

pub fn stage_synth(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    if !cfg.uses_synthetic_data() {
        return Err(Error::Config(
            "synth writes the built-in fixture; remove the data paths from the config".into(),
        ));
    }
    run_synth(cfg)
}

pub fn stage_qa(cfg: &PipelineConfig) -> Result<QaSummary> {
    let (qa, graph, _) = run_qa(cfg)?;
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    write_file(&qa_path(cfg), &(serde_json::to_string_pretty(&qa)? + "\n"))?;
    write_adjacency_csv(&cfg.out_dir.join("adjacency.csv"), &graph)?;
    Ok(qa)
}

const CURVES_HEADER: [&str; 3] = ["epoch", "train_loss", "test_loss"];
const SE_HEADER: [&str; 6] = ["segment", "t", "product", "prediction", "label", "se"];
const STATS_HEADER: [&str; 9] = [
    "dataset_segment",
    "test",
    "first",
    "second",
    "statistic",
    "df",
    "p",
    "corrected_p",
    "significant",
];

fn se_rows(segment: &str, eval: &EvalResult, codes: &[String]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (k, &t) in eval.label_times.iter().enumerate() {
        for (n, code) in codes.iter().enumerate() {
            rows.push(vec![
                segment.to_string(),
                t.to_string(),
                code.clone(),
                num(eval.predictions[k][n]),
                num(eval.labels[k][n]),
                num(eval.se[k][n]),
            ]);
        }
    }
    rows
}

/// Trains every configured model for every seed and writes checkpoints,
/// learning curves and per-window squared errors.
pub fn stage_train(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let (qa, graph, table) = run_qa(cfg)?;
    let prepared = prepare_from(cfg, qa, graph, table)?;
    let codes = prepared.graph.codes();
    let mut written = Vec::new();
    for &seed in &cfg.seeds {
        for &kind in &cfg.models {
            let run = train_model(&prepared, kind, &cfg.train, seed)?;
            let dir = seed_dir(cfg, seed);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

            let ckpt = dir.join(format!("checkpoint_{kind}.txt"));
            write_checkpoint(&ckpt, &run.params)?;
            let curves = csv_text(
                &CURVES_HEADER,
                run.curves
                    .iter()
                    .map(|r| vec![r.epoch.to_string(), num(r.train_loss), num(r.test_loss)]),
            )?;
            let cp = curves_path(cfg, seed, kind);
            write_file(&cp, &curves)?;
            let mut rows = se_rows("train", &run.train_eval, &codes);
            rows.extend(se_rows("test", &run.test_eval, &codes));
            let sp = se_path(cfg, seed, kind);
            write_file(&sp, &csv_text(&SE_HEADER, rows)?)?;
            written.extend([ckpt, cp, sp]);
        }
    }
    Ok(written)
}

pub fn read_curves(path: &Path) -> Result<Vec<EpochRecord>> {
    read_csv(path, &CURVES_HEADER)?
        .iter()
        .map(|r| {
            Ok(EpochRecord {
                epoch: field(path, r, 0)?,
                train_loss: field(path, r, 1)?,
                test_loss: field(path, r, 2)?,
            })
        })
        .collect()
}

/// Rows of one `se_<model>.csv`, grouped by segment in file order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SegmentErrors {
    pub times: Vec<usize>,
    pub products: Vec<String>,
    pub predictions: Vec<f64>,
    pub labels: Vec<f64>,
    pub se: Vec<f64>,
}

pub fn read_se(path: &Path) -> Result<BTreeMap<String, SegmentErrors>> {
    let mut out: BTreeMap<String, SegmentErrors> = BTreeMap::new();
    for r in read_csv(path, &SE_HEADER)? {
        let seg = r.get(0).unwrap_or("").to_string();
        if !SEGMENTS.contains(&seg.as_str()) {
            return Err(Error::parse(
                path,
                format!("line {}: unknown segment `{seg}`", line_of(&r)),
            ));
        }
        let e = out.entry(seg).or_default();
        e.times.push(field(path, &r, 1)?);
        e.products.push(r.get(2).unwrap_or("").to_string());
        e.predictions.push(field(path, &r, 3)?);
        e.labels.push(field(path, &r, 4)?);
        e.se.push(field(path, &r, 5)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub segment: String,
    pub report: StatReport,
}

/// Consecutive pairs of the configured model list.
pub fn model_pairs(models: &[ModelKind]) -> Vec<(usize, usize)> {
    (1..models.len()).map(|i| (i - 1, i)).collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn stats_rows(stats: &[SegmentStats]) -> Vec<Vec<String>> {
    let row = |seg: &str, first: &str, second: &str, r: &TestResult| {
        vec![
            seg.to_string(),
            r.test_name.clone(),
            first.to_string(),
            second.to_string(),
            num(r.statistic),
            opt(r.df),
            num(r.p_value),
            opt(r.corrected_p),
            r.significant.to_string(),
        ]
    };
    let mut rows = Vec::new();
    for s in stats {
        rows.push(row(&s.segment, "", "", &s.report.omnibus));
        for p in &s.report.pairwise {
            rows.push(row(&s.segment, &p.first, &p.second, &p.result));
        }
    }
    rows
}

/// Kruskal-Wallis and corrected pairwise Mann-Whitney U per segment.
pub fn compute_seed_stats(cfg: &PipelineConfig, seed: u64) -> Result<Vec<SegmentStats>> {
    if cfg.models.len() < 2 {
        return Err(Error::Config("stats needs at least two models".into()));
    }
    let errors: Vec<BTreeMap<String, SegmentErrors>> = cfg
        .models
        .iter()
        .map(|&m| read_se(&se_path(cfg, seed, m)))
        .collect::<Result<_>>()?;
    SEGMENTS
        .iter()
        .map(|&seg| {
            let groups: Vec<SampleGroup> = cfg
                .models
                .iter()
                .zip(&errors)
                .map(|(m, e)| {
                    let se = e.get(seg).map(|s| s.se.clone()).unwrap_or_default();
                    SampleGroup::new(m.as_str(), se)
                })
                .collect::<Result<_>>()?;
            Ok(SegmentStats {
                segment: seg.to_string(),
                report: compare_groups(&groups, &model_pairs(&cfg.models))?,
            })
        })
        .collect()
}

pub fn stage_stats(cfg: &PipelineConfig) -> Result<Vec<(u64, Vec<SegmentStats>)>> {
    let mut out = Vec::new();
    for &seed in &cfg.seeds {
        let stats = compute_seed_stats(cfg, seed)?;
        write_file(&stats_path(cfg, seed), &csv_text(&STATS_HEADER, stats_rows(&stats))?)?;
        out.push((seed, stats));
    }
    Ok(out)
}

fn opt_field(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<Option<f64>> {
    match rec.get(i) {
        Some("") | None => Ok(None),
        Some(_) => field(path, rec, i).map(Some),
    }
}

pub fn read_stats(path: &Path) -> Result<Vec<SegmentStats>> {
    let mut out: Vec<SegmentStats> = Vec::new();
    for r in read_csv(path, &STATS_HEADER)? {
        let seg = r.get(0).unwrap_or("").to_string();
        let mut result = TestResult {
            test_name: r.get(1).unwrap_or("").to_string(),
            statistic: field(path, &r, 4)?,
            df: opt_field(path, &r, 5)?,
            p_value: field(path, &r, 6)?,
            corrected_p: opt_field(path, &r, 7)?,
            alpha: crate::stats::DEFAULT_ALPHA,
            significant: field(path, &r, 8)?,
        };
        let first = r.get(2).unwrap_or("");
        if first.is_empty() {
            out.push(SegmentStats {
                segment: seg,
                report: StatReport {
                    omnibus: result,
                    pairwise: Vec::new(),
                },
            });
        } else {
            let current = out.last_mut().filter(|s| s.segment == seg).ok_or_else(|| {
                Error::parse(
                    path,
                    format!("line {}: pairwise row before its omnibus row", line_of(&r)),
                )
            })?;
            result.alpha = current.report.omnibus.alpha;
            current.report.pairwise.push(PairwiseResult {
                first: first.to_string(),
                second: r.get(3).unwrap_or("").to_string(),
                result,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub time_points: usize,
    pub boundary: usize,
    pub train_windows: usize,
    pub test_windows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: ModelKind,
    pub train_mse: f64,
    pub train_median_se: f64,
    pub test_mse: f64,
    pub test_median_se: f64,
    pub curves: Vec<EpochRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub models: Vec<ModelReport>,
    pub stats: Vec<SegmentStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    /// Text form of the configuration; parsing it reproduces `config`.
    pub config_text: String,
    pub config: PipelineConfig,
    pub qa: QaSummary,
    pub split: SplitSummary,
    pub seeds: Vec<SeedReport>,
    /// Paths relative to `out_dir`, sorted.
    pub files: Vec<String>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let report: RunReport = serde_json::from_str(&read_file(path)?)?;
        if report.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::parse(
                path,
                format!(
                    "unsupported report schema {} (expected {REPORT_SCHEMA_VERSION})",
                    report.schema_version
                ),
            ));
        }
        Ok(report)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Builds `report.json` and the figures from the files of earlier stages.
/// Figures show the first configured seed.
pub fn stage_report(cfg: &PipelineConfig) -> Result<RunReport> {
    let qa: QaSummary = serde_json::from_str(&read_file(&qa_path(cfg))?)?;
    let sp = split(qa.time_points, cfg.train_ratio, cfg.window)?;
    let split_summary = SplitSummary {
        time_points: qa.time_points,
        boundary: sp.boundary,
        train_windows: sp.train_len() - cfg.window,
        test_windows: sp.test_len() - cfg.window,
    };

    let mut seeds = Vec::new();
    let mut se_cache: Vec<Vec<BTreeMap<String, SegmentErrors>>> = Vec::new();
    for &seed in &cfg.seeds {
        let mut models = Vec::new();
        let mut errs = Vec::new();
        for &m in &cfg.models {
            let se = read_se(&se_path(cfg, seed, m))?;
            let seg = |name: &str| -> Result<&SegmentErrors> {
                se.get(name)
                    .ok_or_else(|| Error::parse(se_path(cfg, seed, m), format!("no `{name}` rows")))
            };
            let (tr, te) = (seg("train")?, seg("test")?);
            models.push(ModelReport {
                model: m,
                train_mse: mean(&tr.se),
                train_median_se: median(&tr.se),
                test_mse: mean(&te.se),
                test_median_se: median(&te.se),
                curves: read_curves(&curves_path(cfg, seed, m))?,
            });
            errs.push(se);
        }
        seeds.push(SeedReport {
            seed,
            models,
            stats: read_stats(&stats_path(cfg, seed))?,
        });
        se_cache.push(errs);
    }

    let mut figures = write_figures(cfg, &qa, &split_summary, &seeds, &se_cache)?;

    // manifest: every artifact except report.json itself
    let mut files: Vec<String> = vec!["qa.json".into(), "adjacency.csv".into()];
    for &seed in &cfg.seeds {
        for &m in &cfg.models {
            for f in [
                format!("checkpoint_{m}.txt"),
                format!("curves_{m}.csv"),
                format!("se_{m}.csv"),
            ] {
                files.push(format!("seed_{seed}/{f}"));
            }
        }
        files.push(format!("seed_{seed}/stats.csv"));
    }
    files.append(&mut figures);
    files.sort();

    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config_text: cfg.to_text(),
        config: cfg.clone(),
        qa,
        split: split_summary,
        seeds,
        files,
    };
    write_file(&cfg.out_dir.join("report.json"), &report.to_json()?)?;
    Ok(report)
}

fn write_figures(
    cfg: &PipelineConfig,
    qa: &QaSummary,
    split: &SplitSummary,
    seeds: &[SeedReport],
    se: &[Vec<BTreeMap<String, SegmentErrors>>],
) -> Result<Vec<String>> {
    let mut names = Vec::new();
    let mut emit = |name: String, body: String| -> Result<()> {
        write_file(&cfg.out_dir.join(&name), &body)?;
        names.push(name);
        Ok(())
    };

    // Fig 1: adjacency of the QA'd graph
    let adj = read_adjacency(&cfg.out_dir.join("adjacency.csv"))?;
    let positions = force_layout(adj.0.len(), &adj.1);
    emit(
        "fig_adjacency.svg".into(),
        svg::adjacency_figure(
            &format!("{} graph after QA ({} products)", qa.edge_type, qa.nodes_after),
            &adj.0,
            &adj.1,
            &positions,
        )?,
    )?;

    let first = seeds
        .first()
        .ok_or_else(|| Error::Config("report needs at least one seed".into()))?;
    for (mi, m) in first.models.iter().enumerate() {
        // Fig 2: learning curves
        let curve = |f: fn(&EpochRecord) -> f64| m.curves.iter().map(|r| (r.epoch as f64, f(r))).collect();
        emit(
            format!("fig_curves_{}.svg", m.model),
            svg::line_chart(
                &format!("{} learning curve (seed {})", m.model.label(), first.seed),
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
            )?,
        )?;

        // Fig 3: predicted vs actual per product
        let mut traces: BTreeMap<&str, ProductTrace> = BTreeMap::new();
        let mut order: Vec<&str> = Vec::new();
        for seg in SEGMENTS {
            if let Some(e) = se[0][mi].get(seg) {
                for i in 0..e.se.len() {
                    let code = e.products[i].as_str();
                    let tr = traces.entry(code).or_insert_with(|| {
                        order.push(code);
                        ProductTrace {
                            code: code.to_string(),
                            times: vec![],
                            actual: vec![],
                            predicted: vec![],
                        }
                    });
                    tr.times.push(e.times[i]);
                    tr.actual.push(e.labels[i]);
                    tr.predicted.push(e.predictions[i]);
                }
            }
        }
        let ordered: Vec<ProductTrace> = order.iter().map(|c| traces[c].clone()).collect();
        emit(
            format!("fig_series_{}.svg", m.model),
            svg::series_panels(
                &format!(
                    "{}: predicted vs actual {} (z-scored, seed {})",
                    m.model.label(),
                    qa.feature,
                    first.seed
                ),
                &ordered,
                split.boundary,
            )?,
        )?;
    }

    // Figs 4-5: squared-error box plots per segment, grouped by seed
    for seg in SEGMENTS {
        let mut groups = Vec::new();
        for (s, seed) in seeds.iter().enumerate() {
            let mut entries = Vec::new();
            for (mi, m) in seed.models.iter().enumerate() {
                let values = se[s][mi].get(seg).map(|e| e.se.clone()).unwrap_or_default();
                entries.push(BoxEntry::from_values(m.model.label(), &values)?);
            }
            groups.push((format!("seed {}", seed.seed), entries));
        }
        let plot = svg::box_plot(&format!("Squared error, {seg} segment"), "squared error", &groups)?;
        emit(format!("fig_box_{seg}.svg"), plot.svg)?;
    }
    Ok(names)
}

/// Directed `(source, target)` index pairs.
pub type Edges = Vec<(usize, usize)>;

/// Reads `adjacency.csv` back into codes and directed edges.
pub fn read_adjacency(path: &Path) -> Result<(Vec<String>, Edges)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e.to_string()))?;
    let codes: Vec<String> = r.headers()?.iter().skip(1).map(str::to_string).collect();
    let mut edges = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(path, e.to_string()))?;
        for (j, v) in rec.iter().skip(1).enumerate() {
            match v {
                "1" => edges.push((i, j)),
                "0" => {}
                _ => return Err(Error::parse(path, format!("row {}: bad cell `{v}`", i + 1))),
            }
        }
    }
    Ok((codes, edges))
}

/// Every stage in order; synthetic inputs are generated first when no data
/// paths are configured.
pub fn stage_run(cfg: &PipelineConfig) -> std::result::Result<RunReport, (Stage, Error)> {
    if cfg.uses_synthetic_data() {
        stage_synth(cfg).map_err(|e| (Stage::Synth, e))?;
    }
    stage_qa(cfg).map_err(|e| (Stage::Qa, e))?;
    stage_train(cfg).map_err(|e| (Stage::Train, e))?;
    stage_stats(cfg).map_err(|e| (Stage::Stats, e))?;
    stage_report(cfg).map_err(|e| (Stage::Report, e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Config,
    Synth,
    Qa,
    Train,
    Stats,
    Report,
    Run,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Synth => "synth",
            Stage::Qa => "qa",
            Stage::Train => "train",
            Stage::Stats => "stats",
            Stage::Report => "report",
            Stage::Run => "run",
        }
    }
}

/// Leaves a `FAILED` marker in `out_dir` naming the stage that stopped, so
/// partial outputs are recognizable.
pub fn mark_failed(out_dir: &Path, stage: Stage, err: &Error) {
    if out_dir.is_dir() {
        let _ = fs::write(out_dir.join("FAILED"), format!("ERROR {}: {err}\n", stage.as_str()));
    }
}

pub fn clear_failed(out_dir: &Path) {
    let _ = fs::remove_file(out_dir.join("FAILED"));
}
