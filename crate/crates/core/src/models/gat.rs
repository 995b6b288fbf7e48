//! Multi-head graph attention.
//!
//! For one head with weights `W` and attention vector `a = [a_dst ; a_src]`:
//! `z = H·W`, `e_ij = leaky_relu(a_dst·z_i + a_src·z_j)` over the neighborhood
//! of `i`, `α_i = softmax(e_i)`, `out_i = Σ_j α_ij z_j`.

use rand::Rng;

use super::ModelParams;
use crate::compute::ops::{self, Phase};
use crate::compute::{Mask, Matrix};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
struct HeadCache {
    input: Matrix,
    z: Matrix,
    logits: Matrix,
    alpha: Matrix,
}

#[derive(Clone, Debug)]
pub(super) struct Cache {
    heads: Vec<HeadCache>,
    pre: Matrix,
    scale: Option<Matrix>,
    out_head: HeadCache,
}

impl Cache {
    pub(super) fn attention(&self) -> Vec<&Matrix> {
        self.heads
            .iter()
            .chain(std::iter::once(&self.out_head))
            .map(|h| &h.alpha)
            .collect()
    }
}

struct Indices {
    w1: Vec<usize>,
    att1: Vec<usize>,
    b1: usize,
    w2: usize,
    att2: usize,
    b2: usize,
}

fn indices(heads: usize) -> Indices {
    Indices {
        w1: (0..heads).collect(),
        att1: (heads..2 * heads).collect(),
        b1: 2 * heads,
        w2: 2 * heads + 1,
        att2: 2 * heads + 2,
        b2: 2 * heads + 3,
    }
}

fn split_attention(a: &Matrix, width: usize) -> (Matrix, Matrix) {
    let dst = Matrix::column_vector(&a.as_slice()[..width]);
    let src = Matrix::column_vector(&a.as_slice()[width..]);
    (dst, src)
}

fn head_forward(input: &Matrix, w: &Matrix, a: &Matrix, mask: &Mask, slope: f64) -> Result<(Matrix, HeadCache)> {
    let z = input.matmul(w)?;
    let (a_dst, a_src) = split_attention(a, z.cols());
    let logits = ops::outer_sum(&z.matmul(&a_dst)?, &z.matmul(&a_src)?)?;
    let alpha = ops::masked_row_softmax(&ops::leaky_relu(&logits, slope), mask)?;
    let out = alpha.matmul(&z)?;
    Ok((
        out,
        HeadCache {
            input: input.clone(),
            z,
            logits,
            alpha,
        },
    ))
}

/// Returns `(grad_input, grad_w, grad_a)`.
fn head_backward(c: &HeadCache, w: &Matrix, a: &Matrix, grad: &Matrix, slope: f64) -> Result<(Matrix, Matrix, Matrix)> {
    let (a_dst, a_src) = split_attention(a, c.z.cols());
    let (g_alpha, mut g_z) = ops::matmul_backward(&c.alpha, &c.z, grad)?;
    let g_act = ops::masked_row_softmax_backward(&c.alpha, &g_alpha)?;
    let g_logits = ops::leaky_relu_backward(&c.logits, &g_act, slope)?;
    let (g_s, g_t) = ops::outer_sum_backward(&g_logits);
    let (g_z_dst, g_a_dst) = ops::matmul_backward(&c.z, &a_dst, &g_s)?;
    let (g_z_src, g_a_src) = ops::matmul_backward(&c.z, &a_src, &g_t)?;
    g_z.add_assign(&g_z_dst)?;
    g_z.add_assign(&g_z_src)?;
    let (g_input, g_w) = ops::matmul_backward(&c.input, w, &g_z)?;
    let mut g_a = g_a_dst.into_vec();
    g_a.extend(g_a_src.into_vec());
    Ok((g_input, g_w, Matrix::from_vec(a.rows(), 1, g_a)?))
}

/// Hidden layer: `heads` attention heads concatenated, bias, ReLU, dropout.
/// Output layer: one attention head without concatenation or activation.
///
/// `mask[i][j]` marks `j` in the neighborhood of `i`; every row needs a
/// self-loop.
pub fn gat_forward<R: Rng + ?Sized>(
    params: &ModelParams,
    x: &Matrix,
    mask: &Mask,
    phase: &mut Phase<'_, R>,
) -> Result<super::ForwardPass> {
    params.check_input(x)?;
    let n = x.rows();
    if mask.shape() != (n, n) {
        return Err(Error::Shape {
            op: "gat mask",
            left: mask.shape(),
            right: x.shape(),
        });
    }
    if let Some(i) = (0..n).find(|&i| !mask.get(i, i)) {
        return Err(Error::InvalidArgument(format!(
            "attention mask lacks self-loop at node {i}"
        )));
    }
    let cfg = params.config;
    let idx = indices(cfg.heads);
    let width = cfg.hidden_dim;

    let mut concat = Matrix::zeros(n, cfg.hidden_width());
    let mut heads = Vec::with_capacity(cfg.heads);
    for h in 0..cfg.heads {
        let (out, cache) = head_forward(
            x,
            params.value(idx.w1[h]),
            params.value(idx.att1[h]),
            mask,
            cfg.leaky_relu_slope,
        )?;
        for i in 0..n {
            concat.row_mut(i)[h * width..(h + 1) * width].copy_from_slice(out.row(i));
        }
        heads.push(cache);
    }
    let pre = ops::add_row_bias(&concat, params.value(idx.b1))?;
    let d = ops::dropout(&ops::relu(&pre), cfg.dropout_p, phase)?;
    let (out, out_head) = head_forward(
        &d.output,
        params.value(idx.w2),
        params.value(idx.att2),
        mask,
        cfg.leaky_relu_slope,
    )?;
    let output = ops::add_row_bias(&out, params.value(idx.b2))?;
    Ok(super::ForwardPass {
        output,
        cache: super::Cache::Gat(Cache {
            heads,
            pre,
            scale: d.scale,
            out_head,
        }),
    })
}

pub(super) fn backward(c: &Cache, params: &mut ModelParams, grad: &Matrix) -> Result<()> {
    let cfg = params.config;
    let idx = indices(cfg.heads);
    let slope = cfg.leaky_relu_slope;
    let width = cfg.hidden_dim;

    let (g_out, g_b2) = ops::add_row_bias_backward(grad);
    let (g_dropped, g_w2, g_att2) =
        head_backward(&c.out_head, params.value(idx.w2), params.value(idx.att2), &g_out, slope)?;
    let g_hidden = ops::dropout_backward(c.scale.as_ref(), &g_dropped)?;
    let g_pre = ops::relu_backward(&c.pre, &g_hidden)?;
    let (g_concat, g_b1) = ops::add_row_bias_backward(&g_pre);

    let mut head_grads = Vec::with_capacity(cfg.heads);
    for (h, hc) in c.heads.iter().enumerate() {
        let n = g_concat.rows();
        let mut g_head = Matrix::zeros(n, width);
        for i in 0..n {
            g_head
                .row_mut(i)
                .copy_from_slice(&g_concat.row(i)[h * width..(h + 1) * width]);
        }
        let (_, g_w, g_a) = head_backward(hc, params.value(idx.w1[h]), params.value(idx.att1[h]), &g_head, slope)?;
        head_grads.push((g_w, g_a));
    }
    for (h, (g_w, g_a)) in head_grads.iter().enumerate() {
        params.accumulate(idx.w1[h], g_w)?;
        params.accumulate(idx.att1[h], g_a)?;
    }
    params.accumulate(idx.b1, &g_b1)?;
    params.accumulate(idx.w2, &g_w2)?;
    params.accumulate(idx.att2, &g_att2)?;
    params.accumulate(idx.b2, &g_b2)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::models::{init_params, ModelConfig, ModelKind};

    fn eval() -> Phase<'static, ChaCha8Rng> {
        Phase::Eval
    }

    fn path_mask(n: usize) -> Mask {
        let mut m = Mask::new(n, n);
        for i in 0..n {
            m.set(i, i, true);
            if i + 1 < n {
                m.set(i, i + 1, true);
                m.set(i + 1, i, true);
            }
        }
        m
    }

    #[test]
    fn single_node_attention_is_one() {
        let p = init_params(&ModelConfig::standard(ModelKind::Gat, 5), 4).unwrap();
        let x = Matrix::from_vec(1, 5, vec![0.2, -0.1, 0.9, 1.4, -0.6]).unwrap();
        let pass = gat_forward(&p, &x, &Mask::full(1, 1), &mut eval()).unwrap();
        for a in pass.attention() {
            assert_eq!(a.as_slice(), &[1.0]);
        }
        // with unit attention the model is a chain of linear maps + relu
        let mut concat = Vec::new();
        for h in 0..6 {
            concat.extend(x.matmul(p.value(h)).unwrap().into_vec());
        }
        let hidden = Matrix::from_vec(1, 24, concat).unwrap().map(|v| v.max(0.0));
        let expect = hidden.matmul(p.value(13)).unwrap()[(0, 0)];
        assert!((pass.output[(0, 0)] - expect).abs() < 1e-14);
    }

    #[test]
    fn zero_attention_vectors_give_uniform_weights() {
        let mut p = init_params(&ModelConfig::standard(ModelKind::Gat, 5), 4).unwrap();
        for param in p.params.iter_mut().filter(|q| q.name.starts_with("att")) {
            param.value.fill(0.0);
        }
        let x = Matrix::from_rows(&[
            vec![0.1, 0.2, 0.3, 0.4, 0.5],
            vec![-1.0, 0.0, 1.0, 2.0, -2.0],
            vec![0.7, 0.7, -0.7, 0.1, 0.0],
        ])
        .unwrap();
        let mask = path_mask(3);
        let pass = gat_forward(&p, &x, &mask, &mut eval()).unwrap();
        for a in pass.attention() {
            for i in 0..3 {
                let k = mask.row_count(i) as f64;
                for j in 0..3 {
                    let expect = if mask.get(i, j) { 1.0 / k } else { 0.0 };
                    assert!((a[(i, j)] - expect).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn missing_self_loop_is_error() {
        let p = init_params(&ModelConfig::standard(ModelKind::Gat, 5), 4).unwrap();
        let mut mask = Mask::full(2, 2);
        mask.set(1, 1, false);
        assert!(gat_forward(&p, &Matrix::zeros(2, 5), &mask, &mut eval()).is_err());
    }
}
