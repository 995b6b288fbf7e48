//! Plain-text parameter checkpoints.
//!
//! ```text
//! supplygnn-checkpoint 1
//! kind gat
//! input_dim 5
//! hidden_dim 4
//! heads 6
//! output_dim 1
//! dropout_p 0.5
//! leaky_relu_slope 0.2
//! param w1_h0 5 4
//! <one line per matrix row, space-separated>
//! ...
//! ```
//!
//! Values use shortest round-trip formatting, so a reload is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use super::{ModelConfig, ModelParams};
use crate::compute::{Matrix, Parameter};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "supplygnn-checkpoint";

pub fn encode_checkpoint(params: &ModelParams) -> String {
    let c = &params.config;
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC} {CHECKPOINT_VERSION}");
    let _ = writeln!(s, "kind {}", c.kind);
    let _ = writeln!(s, "input_dim {}", c.input_dim);
    let _ = writeln!(s, "hidden_dim {}", c.hidden_dim);
    let _ = writeln!(s, "heads {}", c.heads);
    let _ = writeln!(s, "output_dim {}", c.output_dim);
    let _ = writeln!(s, "dropout_p {}", c.dropout_p);
    let _ = writeln!(s, "leaky_relu_slope {}", c.leaky_relu_slope);
    for p in &params.params {
        let _ = writeln!(s, "param {} {} {}", p.name, p.value.rows(), p.value.cols());
        for r in 0..p.value.rows() {
            let row: Vec<String> = p.value.row(r).iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
    }
    s
}

pub fn decode_checkpoint(text: &str) -> std::result::Result<ModelParams, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| format!("unexpected end of file reading {what}"))
    };

    let header = next("header")?;
    let version = header
        .strip_prefix(MAGIC)
        .map(str::trim)
        .ok_or_else(|| format!("not a checkpoint: `{header}`"))?;
    if version != CHECKPOINT_VERSION.to_string() {
        return Err(format!("unsupported checkpoint version {version}"));
    }
    fn field<'a>(line: &'a str, key: &str) -> std::result::Result<&'a str, String> {
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| format!("expected `{key}`, found `{line}`"))
    }
    fn num<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
        s.trim().parse().map_err(|_| format!("invalid number `{s}`"))
    }
    let kind = field(next("kind")?, "kind")?
        .parse()
        .map_err(|e: Error| e.to_string())?;
    let config = ModelConfig {
        kind,
        input_dim: num(field(next("input_dim")?, "input_dim")?)?,
        hidden_dim: num(field(next("hidden_dim")?, "hidden_dim")?)?,
        heads: num(field(next("heads")?, "heads")?)?,
        output_dim: num(field(next("output_dim")?, "output_dim")?)?,
        dropout_p: num(field(next("dropout_p")?, "dropout_p")?)?,
        leaky_relu_slope: num(field(next("leaky_relu_slope")?, "leaky_relu_slope")?)?,
    };
    config.validate().map_err(|e| e.to_string())?;

    let mut params = Vec::new();
    for (name, rows, cols) in config.layout() {
        let line = next("param")?;
        let parts: Vec<&str> = field(line, "param")?.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != name || num::<usize>(parts[1])? != rows || num::<usize>(parts[2])? != cols {
            return Err(format!("expected param {name} {rows} {cols}, found `{line}`"));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let row: Vec<f64> = next(&name)?
                .split_whitespace()
                .map(num)
                .collect::<std::result::Result<_, _>>()?;
            if row.len() != cols {
                return Err(format!("{name}: row has {} values, expected {cols}", row.len()));
            }
            data.extend(row);
        }
        params.push(Parameter::new(
            name,
            Matrix::from_vec(rows, cols, data).map_err(|e| e.to_string())?,
        ));
    }
    if let Ok(extra) = next("trailer") {
        return Err(format!("trailing content `{extra}`"));
    }
    Ok(ModelParams { config, params })
}

pub fn write_checkpoint(path: &Path, params: &ModelParams) -> Result<()> {
    std::fs::write(path, encode_checkpoint(params)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<ModelParams> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&text).map_err(|m| Error::parse(path, m))
}
