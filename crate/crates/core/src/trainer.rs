//! Full-batch training loop and evaluation metrics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::compute::{ops, AdamConfig, AdamState, Matrix, Phase};
use crate::dataset::{Example, WindowedDataset};
use crate::error::{Error, Result};
use crate::graph::GraphOperators;
use crate::models::{forward, ModelParams};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchMode {
    /// One optimizer step per epoch over every training window.
    #[default]
    FullBatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub batch_mode: BatchMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            epochs: 200,
            learning_rate: adam.learning_rate,
            weight_decay: adam.weight_decay,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            seed: 7,
            batch_mode: BatchMode::FullBatch,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            weight_decay: self.weight_decay,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be >= 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "invalid learning rate {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
}

/// Dropout stream for one example in one epoch. Keyed so that the draw does
/// not depend on processing order.
pub fn dropout_rng(seed: u64, epoch: usize, example: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((epoch as u64) << 32) | example as u64);
    rng
}

fn check_graph(params: &ModelParams, graph: Option<&GraphOperators>, nodes: usize) -> Result<()> {
    let needs = params.config.kind.uses_graph();
    match graph {
        None if needs => Err(Error::InvalidArgument(format!(
            "{} requires a graph",
            params.config.kind
        ))),
        Some(_) if !needs => Err(Error::InvalidArgument("mlp takes no graph".into())),
        Some(g) if g.node_count() != nodes => Err(Error::InvalidArgument(format!(
            "graph has {} nodes, examples have {nodes}",
            g.node_count()
        ))),
        _ => Ok(()),
    }
}

/// Mean squared error over a set of examples with dropout disabled.
pub fn eval_loss(params: &ModelParams, examples: &[Example], graph: Option<&GraphOperators>) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for ex in examples {
        let out = forward(params, &ex.x, graph, &mut Phase::<ChaCha8Rng>::Eval)?.output;
        for (p, y) in out.as_slice().iter().zip(ex.y.as_slice()) {
            total += (p - y).powi(2);
        }
        count += ex.y.len();
    }
    Ok(total / count as f64)
}

/// Trains for `config.epochs` full-batch Adam steps on the mean MSE over all
/// training windows, recording eval-mode train/test losses after each step.
pub fn train(
    mut params: ModelParams,
    dataset: &WindowedDataset,
    graph: Option<&GraphOperators>,
    config: &TrainConfig,
) -> Result<(ModelParams, Vec<EpochRecord>)> {
    config.validate()?;
    if dataset.train.is_empty() || dataset.test.is_empty() {
        return Err(Error::InvalidArgument("dataset has an empty segment".into()));
    }
    check_graph(&params, graph, dataset.train[0].x.rows())?;
    let mut adam = AdamState::new(config.adam(), &params.params);
    let batch = dataset.train.len() as f64;
    let mut records = Vec::with_capacity(config.epochs);

    params.zero_grad();
    for epoch in 1..=config.epochs {
        let mut batch_loss = 0.0;
        for (k, ex) in dataset.train.iter().enumerate() {
            let mut rng = dropout_rng(config.seed, epoch, k);
            let pass = forward(&params, &ex.x, graph, &mut Phase::Train(&mut rng))?;
            let (loss, grad) = ops::mse(&pass.output, &ex.y)?;
            batch_loss += loss / batch;
            pass.backward(&mut params, &grad.scale(1.0 / batch))?;
        }
        if !batch_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                detail: format!("training batch loss {batch_loss}"),
            });
        }
        adam.step(&mut params.params);

        let train_loss = eval_loss(&params, &dataset.train, graph)?;
        let test_loss = eval_loss(&params, &dataset.test, graph)?;
        if !(train_loss.is_finite() && test_loss.is_finite()) {
            return Err(Error::NonFiniteLoss {
                epoch,
                detail: format!("train {train_loss}, test {test_loss}"),
            });
        }
        records.push(EpochRecord {
            epoch,
            train_loss,
            test_loss,
        });
    }
    Ok((params, records))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    /// `se[k][n]` for example `k` and node `n`.
    pub se: Vec<Vec<f64>>,
    pub mse: f64,
    pub median_se: f64,
    /// `predictions[k][n]`, aligned with `label_times[k]`.
    pub predictions: Vec<Vec<f64>>,
    pub labels: Vec<Vec<f64>>,
    pub label_times: Vec<usize>,
}

impl EvalResult {
    pub fn flat_se(&self) -> Vec<f64> {
        self.se.iter().flatten().copied().collect()
    }

    /// Prediction minus label, flattened in the same order as [`flat_se`](Self::flat_se).
    pub fn flat_errors(&self) -> Vec<f64> {
        self.predictions
            .iter()
            .zip(&self.labels)
            .flat_map(|(p, y)| p.iter().zip(y).map(|(a, b)| a - b))
            .collect()
    }

    /// Builds metrics from raw predictions and labels.
    pub fn from_predictions(
        predictions: Vec<Vec<f64>>,
        labels: Vec<Vec<f64>>,
        label_times: Vec<usize>,
    ) -> Result<Self> {
        if predictions.is_empty() {
            return Err(Error::InvalidArgument("cannot evaluate an empty segment".into()));
        }
        let se: Vec<Vec<f64>> = predictions
            .iter()
            .zip(&labels)
            .map(|(p, y)| p.iter().zip(y).map(|(a, b)| (a - b).powi(2)).collect())
            .collect();
        let flat: Vec<f64> = se.iter().flatten().copied().collect();
        let mse = flat.iter().sum::<f64>() / flat.len() as f64;
        let median_se = crate::stats::median(&flat);
        Ok(Self {
            se,
            mse,
            median_se,
            predictions,
            labels,
            label_times,
        })
    }
}

/// Eval-mode predictions and squared errors over one segment.
pub fn evaluate(params: &ModelParams, segment: &[Example], graph: Option<&GraphOperators>) -> Result<EvalResult> {
    if segment.is_empty() {
        return Err(Error::InvalidArgument("cannot evaluate an empty segment".into()));
    }
    check_graph(params, graph, segment[0].x.rows())?;
    let mut predictions = Vec::with_capacity(segment.len());
    for ex in segment {
        let out: Matrix = forward(params, &ex.x, graph, &mut Phase::<ChaCha8Rng>::Eval)?.output;
        predictions.push(out.into_vec());
    }
    let labels = segment.iter().map(|e| e.y.as_slice().to_vec()).collect();
    let times = segment.iter().map(|e| e.t).collect();
    EvalResult::from_predictions(predictions, labels, times)
}
