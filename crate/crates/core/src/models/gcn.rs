use rand::Rng;

use super::ModelParams;
use crate::compute::ops::{self, Phase};
use crate::compute::Matrix;
use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;

const W1: usize = 0;
const B1: usize = 1;
const W2: usize = 2;
const B2: usize = 3;

#[derive(Clone, Debug)]
pub(super) struct Cache {
    adjacency: Matrix,
    agg_x: Matrix,
    pre: Matrix,
    scale: Option<Matrix>,
    agg_hidden: Matrix,
}

/// `H1 = relu(Â·X·W1 + b1)`, `out = Â·dropout(H1)·W2 + b2`.
pub fn gcn_forward<R: Rng + ?Sized>(
    params: &ModelParams,
    x: &Matrix,
    adjacency: &NormalizedAdjacency,
    phase: &mut Phase<'_, R>,
) -> Result<super::ForwardPass> {
    params.check_input(x)?;
    if adjacency.n != x.rows() {
        return Err(Error::Shape {
            op: "gcn adjacency",
            left: adjacency.weights.shape(),
            right: x.shape(),
        });
    }
    let a = &adjacency.weights;
    let agg_x = a.matmul(x)?;
    let pre = ops::add_row_bias(&agg_x.matmul(params.value(W1))?, params.value(B1))?;
    let hidden = ops::relu(&pre);
    let d = ops::dropout(&hidden, params.config.dropout_p, phase)?;
    let agg_hidden = a.matmul(&d.output)?;
    let output = ops::add_row_bias(&agg_hidden.matmul(params.value(W2))?, params.value(B2))?;
    Ok(super::ForwardPass {
        output,
        cache: super::Cache::Gcn(Cache {
            adjacency: a.clone(),
            agg_x,
            pre,
            scale: d.scale,
            agg_hidden,
        }),
    })
}

pub(super) fn backward(c: &Cache, params: &mut ModelParams, grad: &Matrix) -> Result<()> {
    let (g_lin, g_b2) = ops::add_row_bias_backward(grad);
    let (g_agg_hidden, g_w2) = ops::matmul_backward(&c.agg_hidden, params.value(W2), &g_lin)?;
    let g_dropped = c.adjacency.transpose().matmul(&g_agg_hidden)?;
    let g_hidden = ops::dropout_backward(c.scale.as_ref(), &g_dropped)?;
    let g_pre = ops::relu_backward(&c.pre, &g_hidden)?;
    let (g_lin1, g_b1) = ops::add_row_bias_backward(&g_pre);
    let (_, g_w1) = ops::matmul_backward(&c.agg_x, params.value(W1), &g_lin1)?;
    params.accumulate(W1, &g_w1)?;
    params.accumulate(B1, &g_b1)?;
    params.accumulate(W2, &g_w2)?;
    params.accumulate(B2, &g_b2)?;
    Ok(())
}
