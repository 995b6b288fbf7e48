#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use supplygnn::compute::{grad_check, ops, Matrix, Parameter, Phase};
use supplygnn::graph::{AdjacencyMode, DirectedGraph, EdgeType, GraphOperators, ProductNode};
use supplygnn::models::{forward, init_params, ModelConfig, ModelKind, ModelParams};

pub fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Random directed graph on `n` nodes with edge probability `p`.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> DirectedGraph {
    let nodes = (0..n).map(|i| ProductNode::bare(format!("P{i}"))).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    DirectedGraph::new(nodes, edges, EdgeType::Plant).unwrap()
}

/// Random parameters (biases included) for `kind` with window 5.
pub fn random_params(kind: ModelKind, seed: u64) -> ModelParams {
    let mut params = init_params(&ModelConfig::standard(kind, 5), seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb1a5);
    for p in &mut params.params {
        if p.name.starts_with('b') {
            p.value = normal_matrix(&mut rng, p.value.rows(), p.value.cols()).scale(0.3);
        }
    }
    params
}

/// Largest relative gradient discrepancy for an MSE loss on a random
/// 7-node graph, with dropout active under a fixed mask when `train` is set.
pub fn model_grad_check(kind: ModelKind, seed: u64, train: bool) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 7;
    let graph = random_graph(&mut rng, n, 0.3);
    let mode = if seed.is_multiple_of(2) {
        AdjacencyMode::Symmetrized
    } else {
        AdjacencyMode::DirectedIn
    };
    let ops_ = GraphOperators::new(&graph, mode).unwrap();
    let x = normal_matrix(&mut rng, n, 5);
    let y = normal_matrix(&mut rng, n, 1);
    let model = random_params(kind, seed);
    let config = model.config;
    let mut flat: Vec<Parameter> = model.params;

    let loss = |p: &mut [Parameter]| {
        let mut mp = ModelParams {
            config,
            params: p.to_vec(),
        };
        let mut drop_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31));
        let mut phase = if train {
            Phase::Train(&mut drop_rng)
        } else {
            Phase::Eval
        };
        let pass = forward(&mp, &x, Some(&ops_), &mut phase)?;
        let (l, g) = ops::mse(&pass.output, &y)?;
        pass.backward(&mut mp, &g)?;
        for (dst, src) in p.iter_mut().zip(&mp.params) {
            dst.grad = src.grad.clone();
        }
        Ok(l)
    };
    grad_check(&mut flat, loss, 1e-6).unwrap()
}
