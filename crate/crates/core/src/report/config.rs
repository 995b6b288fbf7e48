//! Flat `key = value` pipeline configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureKind, NormalizeScope, SynthConfig};
use crate::error::{Error, Result};
use crate::graph::{AdjacencyMode, EdgeType};
use crate::models::ModelKind;
use crate::trainer::{BatchMode, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Explicit data files. When all three are absent the synthetic fixture
    /// is generated into `<out_dir>/data`.
    pub nodes_path: Option<PathBuf>,
    pub edges_path: Option<PathBuf>,
    pub feature_path: Option<PathBuf>,
    pub synth: SynthConfig,
    pub edge_type: EdgeType,
    pub feature: FeatureKind,
    pub train_ratio: f64,
    pub window: usize,
    pub zero_fraction_threshold: f64,
    pub adjacency_mode: AdjacencyMode,
    pub normalize_scope: NormalizeScope,
    pub models: Vec<ModelKind>,
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            nodes_path: None,
            edges_path: None,
            feature_path: None,
            synth: SynthConfig::default(),
            edge_type: EdgeType::Plant,
            feature: FeatureKind::SalesOrder,
            train_ratio: 0.95,
            window: 5,
            zero_fraction_threshold: 0.9,
            adjacency_mode: AdjacencyMode::Symmetrized,
            normalize_scope: NormalizeScope::TrainOnly,
            models: ModelKind::ALL.to_vec(),
            train: TrainConfig::default(),
            seeds: vec![7],
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Every accepted key, in the order [`PipelineConfig::to_text`] writes them.
pub const CONFIG_KEYS: [&str; 24] = [
    "nodes_path",
    "edges_path",
    "feature_path",
    "synth_len",
    "synth_coupling",
    "synth_noise_std",
    "synth_seed",
    "edge_type",
    "feature",
    "train_ratio",
    "window",
    "zero_fraction_threshold",
    "adjacency_mode",
    "normalize_scope",
    "models",
    "epochs",
    "learning_rate",
    "weight_decay",
    "beta1",
    "beta2",
    "epsilon",
    "batch_mode",
    "seeds",
    "out_dir",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("key `{key}`: cannot parse `{value}`: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let items: Vec<T> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!("key `{key}`: empty list")));
    }
    Ok(items)
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

impl PipelineConfig {
    pub fn uses_synthetic_data(&self) -> bool {
        self.nodes_path.is_none() && self.edges_path.is_none() && self.feature_path.is_none()
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "nodes_path" => self.nodes_path = Some(PathBuf::from(value)),
            "edges_path" => self.edges_path = Some(PathBuf::from(value)),
            "feature_path" => self.feature_path = Some(PathBuf::from(value)),
            "synth_len" => self.synth.len = parse_value(key, value)?,
            "synth_coupling" => self.synth.coupling = parse_value(key, value)?,
            "synth_noise_std" => self.synth.noise_std = parse_value(key, value)?,
            "synth_seed" => self.synth.seed = parse_value(key, value)?,
            "edge_type" => self.edge_type = parse_value(key, value)?,
            "feature" => self.feature = parse_value(key, value)?,
            "train_ratio" => self.train_ratio = parse_value(key, value)?,
            "window" => self.window = parse_value(key, value)?,
            "zero_fraction_threshold" => self.zero_fraction_threshold = parse_value(key, value)?,
            "adjacency_mode" => self.adjacency_mode = parse_value(key, value)?,
            "normalize_scope" => self.normalize_scope = parse_value(key, value)?,
            "models" => self.models = parse_list(key, value)?,
            "epochs" => self.train.epochs = parse_value(key, value)?,
            "learning_rate" => self.train.learning_rate = parse_value(key, value)?,
            "weight_decay" => self.train.weight_decay = parse_value(key, value)?,
            "beta1" => self.train.beta1 = parse_value(key, value)?,
            "beta2" => self.train.beta2 = parse_value(key, value)?,
            "epsilon" => self.train.epsilon = parse_value(key, value)?,
            "batch_mode" => {
                self.train.batch_mode = match value {
                    "full_batch" => BatchMode::FullBatch,
                    _ => return Err(Error::Config(format!("key `batch_mode`: unknown mode `{value}`"))),
                }
            }
            "seeds" => self.seeds = parse_list(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses config text on top of the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let given = [&self.nodes_path, &self.edges_path, &self.feature_path]
            .iter()
            .filter(|p| p.is_some())
            .count();
        if given != 0 && given != 3 {
            return Err(Error::Config(
                "nodes_path, edges_path and feature_path must be given together".into(),
            ));
        }
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return Err(Error::Config(format!(
                "train_ratio must be in (0, 1), got {}",
                self.train_ratio
            )));
        }
        if self.window == 0 {
            return Err(Error::Config("window must be >= 1".into()));
        }
        if self.train.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        let mut models = self.models.clone();
        models.sort_by_key(|m| m.as_str());
        models.dedup();
        if models.len() != self.models.len() {
            return Err(Error::Config("models list has duplicates".into()));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(Error::Config("seeds list has duplicates".into()));
        }
        Ok(())
    }

    /// Serializes every key, so the text reproduces this configuration.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let values: [Option<String>; 24] = [
            path(&self.nodes_path),
            path(&self.edges_path),
            path(&self.feature_path),
            Some(self.synth.len.to_string()),
            Some(format!("{:?}", self.synth.coupling)),
            Some(format!("{:?}", self.synth.noise_std)),
            Some(self.synth.seed.to_string()),
            Some(self.edge_type.to_string()),
            Some(self.feature.to_string()),
            Some(format!("{:?}", self.train_ratio)),
            Some(self.window.to_string()),
            Some(format!("{:?}", self.zero_fraction_threshold)),
            Some(self.adjacency_mode.as_str().to_string()),
            Some(self.normalize_scope.as_str().to_string()),
            Some(join(&self.models.iter().map(|m| m.as_str()).collect::<Vec<_>>())),
            Some(self.train.epochs.to_string()),
            Some(format!("{:?}", self.train.learning_rate)),
            Some(format!("{:?}", self.train.weight_decay)),
            Some(format!("{:?}", self.train.beta1)),
            Some(format!("{:?}", self.train.beta2)),
            Some(format!("{:?}", self.train.epsilon)),
            Some("full_batch".to_string()),
            Some(join(&self.seeds)),
            Some(self.out_dir.display().to_string()),
        ];
        for (key, value) in CONFIG_KEYS.iter().zip(values) {
            if let Some(v) = value {
                let _ = writeln!(out, "{key} = {v}");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = PipelineConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        assert_eq!(cfg.window, 5);
        assert_eq!(cfg.train.epochs, 200);
        assert_eq!(cfg.models, vec![ModelKind::Mlp, ModelKind::Gcn, ModelKind::Gat]);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = PipelineConfig::parse("window = 5\nlearnin_rate = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("learnin_rate"), "{err}");
    }

    #[test]
    fn duplicate_key_rejected() {
        assert!(PipelineConfig::parse("window = 5\nwindow = 6\n").is_err());
    }

    #[test]
    fn partial_paths_rejected() {
        assert!(PipelineConfig::parse("nodes_path = a.csv\n").is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = PipelineConfig::default();
        cfg.set("models", "gat, mlp").unwrap();
        cfg.set("seeds", "1,2,3").unwrap();
        cfg.set("learning_rate", "0.003").unwrap();
        cfg.set("adjacency_mode", "directed_in").unwrap();
        cfg.set("nodes_path", "d/nodes.csv").unwrap();
        cfg.set("edges_path", "d/edges_plant.csv").unwrap();
        cfg.set("feature_path", "d/sales_order.csv").unwrap();
        assert_eq!(PipelineConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }
}
