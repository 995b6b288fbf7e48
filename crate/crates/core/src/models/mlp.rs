use rand::Rng;

use super::ModelParams;
use crate::compute::ops::{self, Phase};
use crate::compute::Matrix;
use crate::error::Result;

const W1: usize = 0;
const B1: usize = 1;
const W2: usize = 2;
const B2: usize = 3;

#[derive(Clone, Debug)]
pub(super) struct Cache {
    x: Matrix,
    pre: Matrix,
    dropped: Matrix,
    scale: Option<Matrix>,
}

/// `dropout(relu(X·W1 + b1))·W2 + b2`, applied to every node row independently.
pub fn mlp_forward<R: Rng + ?Sized>(
    params: &ModelParams,
    x: &Matrix,
    phase: &mut Phase<'_, R>,
) -> Result<super::ForwardPass> {
    params.check_input(x)?;
    let pre = ops::add_row_bias(&x.matmul(params.value(W1))?, params.value(B1))?;
    let hidden = ops::relu(&pre);
    let d = ops::dropout(&hidden, params.config.dropout_p, phase)?;
    let output = ops::add_row_bias(&d.output.matmul(params.value(W2))?, params.value(B2))?;
    Ok(super::ForwardPass {
        output,
        cache: super::Cache::Mlp(Cache {
            x: x.clone(),
            pre,
            dropped: d.output,
            scale: d.scale,
        }),
    })
}

pub(super) fn backward(c: &Cache, params: &mut ModelParams, grad: &Matrix) -> Result<()> {
    let (g_lin, g_b2) = ops::add_row_bias_backward(grad);
    let (g_dropped, g_w2) = ops::matmul_backward(&c.dropped, params.value(W2), &g_lin)?;
    let g_hidden = ops::dropout_backward(c.scale.as_ref(), &g_dropped)?;
    let g_pre = ops::relu_backward(&c.pre, &g_hidden)?;
    let (g_lin1, g_b1) = ops::add_row_bias_backward(&g_pre);
    let (_, g_w1) = ops::matmul_backward(&c.x, params.value(W1), &g_lin1)?;
    params.accumulate(W1, &g_w1)?;
    params.accumulate(B1, &g_b1)?;
    params.accumulate(W2, &g_w2)?;
    params.accumulate(B2, &g_b2)?;
    Ok(())
}
