//! Per-node MLP, two-layer GCN and two-layer multi-head GAT regressors.
//!
//! All three map an `N × input_dim` matrix of node windows to `N × 1`
//! predictions. Backward passes accumulate into [`ModelParams`] gradients.

mod checkpoint;
mod gat;
mod gcn;
mod mlp;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, CHECKPOINT_VERSION};
pub use gat::gat_forward;
pub use gcn::gcn_forward;
pub use mlp::mlp_forward;

use crate::compute::{Matrix, Parameter, Phase};
use crate::error::{Error, Result};
use crate::graph::GraphOperators;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Mlp,
    Gcn,
    Gat,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Mlp, ModelKind::Gcn, ModelKind::Gat];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Mlp => "mlp",
            ModelKind::Gcn => "gcn",
            ModelKind::Gat => "gat",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Mlp => "MLP",
            ModelKind::Gcn => "GCN",
            ModelKind::Gat => "GAT",
        }
    }

    pub fn uses_graph(self) -> bool {
        self != ModelKind::Mlp
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub input_dim: usize,
    /// Hidden width per head.
    pub hidden_dim: usize,
    /// Attention heads in the hidden layer (GAT only; 1 otherwise).
    pub heads: usize,
    pub output_dim: usize,
    pub dropout_p: f64,
    /// Negative slope of the attention LeakyReLU (GAT only).
    pub leaky_relu_slope: f64,
}

impl ModelConfig {
    /// Two-layer architectures: 8 hidden units for MLP/GCN, 6 heads × 4 for GAT,
    /// dropout 0.5 after the hidden activation.
    pub fn standard(kind: ModelKind, input_dim: usize) -> Self {
        let (hidden_dim, heads) = match kind {
            ModelKind::Mlp | ModelKind::Gcn => (8, 1),
            ModelKind::Gat => (4, 6),
        };
        Self {
            kind,
            input_dim,
            hidden_dim,
            heads,
            output_dim: 1,
            dropout_p: 0.5,
            leaky_relu_slope: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 || self.heads == 0 || self.output_dim == 0 {
            return Err(Error::InvalidArgument(format!(
                "model dimensions must be positive: {self:?}"
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::InvalidArgument(format!(
                "dropout_p must be in [0, 1), got {}",
                self.dropout_p
            )));
        }
        if self.kind != ModelKind::Gat && self.heads != 1 {
            return Err(Error::InvalidArgument(format!("{} has no attention heads", self.kind)));
        }
        Ok(())
    }

    /// Width of the hidden representation fed to the output layer.
    pub fn hidden_width(&self) -> usize {
        self.hidden_dim * self.heads
    }

    /// Parameter shapes in storage (and initialization) order.
    pub fn layout(&self) -> Vec<(String, usize, usize)> {
        let (i, h, o) = (self.input_dim, self.hidden_dim, self.output_dim);
        match self.kind {
            ModelKind::Mlp | ModelKind::Gcn => vec![
                ("w1".into(), i, h),
                ("b1".into(), 1, h),
                ("w2".into(), h, o),
                ("b2".into(), 1, o),
            ],
            ModelKind::Gat => {
                let mut l = Vec::new();
                for k in 0..self.heads {
                    l.push((format!("w1_h{k}"), i, h));
                }
                for k in 0..self.heads {
                    l.push((format!("att1_h{k}"), 2 * h, 1));
                }
                l.push(("b1".into(), 1, self.hidden_width()));
                l.push(("w2".into(), self.hidden_width(), o));
                l.push(("att2".into(), 2 * o, 1));
                l.push(("b2".into(), 1, o));
                l
            }
        }
    }

    pub fn param_count(&self) -> usize {
        self.layout().iter().map(|(_, r, c)| r * c).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub params: Vec<Parameter>,
}

impl ModelParams {
    pub fn get(&self, name: &str) -> Option<&Parameter> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn scalar_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        self.params.iter_mut().for_each(Parameter::zero_grad);
    }

    pub(crate) fn value(&self, idx: usize) -> &Matrix {
        &self.params[idx].value
    }

    pub(crate) fn accumulate(&mut self, idx: usize, grad: &Matrix) -> Result<()> {
        self.params[idx].accumulate(grad)
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.config.input_dim {
            return Err(Error::Shape {
                op: "model input",
                left: x.shape(),
                right: (x.rows(), self.config.input_dim),
            });
        }
        Ok(())
    }
}

/// Seeded Glorot-uniform weights, zero biases.
///
/// Weights are drawn in [`ModelConfig::layout`] order, each matrix row-major,
/// from `U(-b, b)` with `b = sqrt(6 / (rows + cols))`. Biases consume no draws.
pub fn init_params(config: &ModelConfig, seed: u64) -> Result<ModelParams> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = config
        .layout()
        .into_iter()
        .map(|(name, rows, cols)| {
            let value = if name.starts_with('b') {
                Matrix::zeros(rows, cols)
            } else {
                let bound = (6.0 / (rows + cols) as f64).sqrt();
                let data = (0..rows * cols).map(|_| rng.random_range(-bound..=bound)).collect();
                Matrix::from_vec(rows, cols, data).expect("layout shape")
            };
            Parameter::new(name, value)
        })
        .collect();
    Ok(ModelParams {
        config: *config,
        params,
    })
}

#[derive(Clone, Debug)]
enum Cache {
    Mlp(mlp::Cache),
    Gcn(gcn::Cache),
    Gat(gat::Cache),
}

/// Output of a forward pass plus whatever the backward pass needs.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    pub output: Matrix,
    cache: Cache,
}

impl ForwardPass {
    /// Accumulates `d loss / d params` given `d loss / d output`.
    pub fn backward(&self, params: &mut ModelParams, grad_out: &Matrix) -> Result<()> {
        self.output.check_same_shape("backward", grad_out)?;
        match &self.cache {
            Cache::Mlp(c) => mlp::backward(c, params, grad_out),
            Cache::Gcn(c) => gcn::backward(c, params, grad_out),
            Cache::Gat(c) => gat::backward(c, params, grad_out),
        }
    }

    /// Attention matrices (hidden-layer heads, then the output layer) for GAT.
    pub fn attention(&self) -> Vec<&Matrix> {
        match &self.cache {
            Cache::Gat(c) => c.attention(),
            _ => Vec::new(),
        }
    }
}

/// Dispatches on the model kind; graph models require `graph`.
pub fn forward<R: Rng + ?Sized>(
    params: &ModelParams,
    x: &Matrix,
    graph: Option<&GraphOperators>,
    phase: &mut Phase<'_, R>,
) -> Result<ForwardPass> {
    match params.config.kind {
        ModelKind::Mlp => mlp_forward(params, x, phase),
        kind => {
            let g = graph.ok_or_else(|| Error::InvalidArgument(format!("{kind} requires a graph")))?;
            if kind == ModelKind::Gcn {
                gcn_forward(params, x, &g.adjacency, phase)
            } else {
                gat_forward(params, x, &g.attention_mask, phase)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_counts() {
        assert_eq!(
            ModelConfig::standard(ModelKind::Mlp, 5).param_count(),
            5 * 8 + 8 + 8 + 1
        );
        assert_eq!(ModelConfig::standard(ModelKind::Gcn, 5).param_count(), 57);
        // 6 heads of (5x4 weights + 8 attention), 24 bias, 24x1 output, 2 attention, 1 bias
        assert_eq!(
            ModelConfig::standard(ModelKind::Gat, 5).param_count(),
            6 * (5 * 4 + 8) + 24 + 24 + 2 + 1
        );
        for kind in ModelKind::ALL {
            let cfg = ModelConfig::standard(kind, 5);
            assert_eq!(init_params(&cfg, 0).unwrap().scalar_count(), cfg.param_count());
        }
    }

    #[test]
    fn init_is_seeded() {
        let cfg = ModelConfig::standard(ModelKind::Gat, 5);
        assert_eq!(init_params(&cfg, 42).unwrap(), init_params(&cfg, 42).unwrap());
        assert_ne!(init_params(&cfg, 42).unwrap(), init_params(&cfg, 43).unwrap());
    }

    #[test]
    fn init_respects_glorot_bound() {
        let p = init_params(&ModelConfig::standard(ModelKind::Mlp, 5), 9).unwrap();
        let bound = (6.0f64 / 13.0).sqrt();
        assert!((bound - 0.6794).abs() < 1e-4);
        let w1 = &p.get("w1").unwrap().value;
        assert!(w1.as_slice().iter().all(|v| v.abs() <= bound));
        assert!(p.get("b1").unwrap().value.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = ModelConfig::standard(ModelKind::Mlp, 5);
        cfg.dropout_p = 1.0;
        assert!(init_params(&cfg, 0).is_err());
        let mut cfg = ModelConfig::standard(ModelKind::Gcn, 5);
        cfg.heads = 2;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn graph_models_need_graph() {
        let p = init_params(&ModelConfig::standard(ModelKind::Gcn, 5), 0).unwrap();
        let mut phase: Phase<'_, ChaCha8Rng> = Phase::Eval;
        assert!(forward(&p, &Matrix::zeros(3, 5), None, &mut phase).is_err());
    }
}
