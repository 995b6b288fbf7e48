//! Differentiable primitives.
//!
//! Each forward function has a matching `*_backward` that maps the upstream
//! gradient onto gradients for the forward inputs. Callers accumulate those
//! into [`Parameter`](super::Parameter) buffers.

use rand::Rng;

use super::matrix::{Mask, Matrix};
use crate::error::{Error, Result};

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.matmul(b)
}

/// Gradients of `a·b` with respect to `a` and `b`.
pub fn matmul_backward(a: &Matrix, b: &Matrix, grad: &Matrix) -> Result<(Matrix, Matrix)> {
    let ga = grad.matmul(&b.transpose())?;
    let gb = a.transpose().matmul(grad)?;
    Ok((ga, gb))
}

/// Adds the `1×cols` bias row to every row of `h`.
pub fn add_row_bias(h: &Matrix, bias: &Matrix) -> Result<Matrix> {
    if bias.rows() != 1 || bias.cols() != h.cols() {
        return Err(Error::Shape {
            op: "add_row_bias",
            left: h.shape(),
            right: bias.shape(),
        });
    }
    let mut out = h.clone();
    for r in 0..out.rows() {
        for (o, b) in out.row_mut(r).iter_mut().zip(bias.as_slice()) {
            *o += b;
        }
    }
    Ok(out)
}

/// Returns `(grad_h, grad_bias)`.
pub fn add_row_bias_backward(grad: &Matrix) -> (Matrix, Matrix) {
    let mut gb = Matrix::zeros(1, grad.cols());
    for r in 0..grad.rows() {
        for (g, v) in gb.as_mut_slice().iter_mut().zip(grad.row(r)) {
            *g += v;
        }
    }
    (grad.clone(), gb)
}

pub fn relu(h: &Matrix) -> Matrix {
    h.map(|v| v.max(0.0))
}

/// Passes the gradient through where the forward input was strictly positive.
pub fn relu_backward(input: &Matrix, grad: &Matrix) -> Result<Matrix> {
    input.check_same_shape("relu_backward", grad)?;
    let data = input
        .as_slice()
        .iter()
        .zip(grad.as_slice())
        .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
        .collect();
    Matrix::from_vec(input.rows(), input.cols(), data)
}

pub fn leaky_relu(h: &Matrix, slope: f64) -> Matrix {
    h.map(|v| if v > 0.0 { v } else { slope * v })
}

pub fn leaky_relu_backward(input: &Matrix, grad: &Matrix, slope: f64) -> Result<Matrix> {
    input.check_same_shape("leaky_relu_backward", grad)?;
    let data = input
        .as_slice()
        .iter()
        .zip(grad.as_slice())
        .map(|(&x, &g)| if x > 0.0 { g } else { slope * g })
        .collect();
    Matrix::from_vec(input.rows(), input.cols(), data)
}

/// Row-wise softmax restricted to `mask`; masked-out entries are exactly 0.
///
/// Every row must have at least one unmasked entry.
pub fn masked_row_softmax(logits: &Matrix, mask: &Mask) -> Result<Matrix> {
    if logits.shape() != mask.shape() {
        return Err(Error::Shape {
            op: "masked_row_softmax",
            left: logits.shape(),
            right: mask.shape(),
        });
    }
    let mut out = Matrix::zeros(logits.rows(), logits.cols());
    for r in 0..logits.rows() {
        let row = logits.row(r);
        let max = (0..row.len())
            .filter(|&c| mask.get(r, c))
            .map(|c| row[c])
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument(format!(
                "masked_row_softmax: row {r} has no unmasked entries"
            )));
        }
        let mut total = 0.0;
        for c in 0..row.len() {
            if mask.get(r, c) {
                let e = (row[c] - max).exp();
                out[(r, c)] = e;
                total += e;
            }
        }
        for v in out.row_mut(r) {
            *v /= total;
        }
    }
    Ok(out)
}

/// Backward of [`masked_row_softmax`] given its output `probs`.
pub fn masked_row_softmax_backward(probs: &Matrix, grad: &Matrix) -> Result<Matrix> {
    probs.check_same_shape("masked_row_softmax_backward", grad)?;
    let mut out = Matrix::zeros(probs.rows(), probs.cols());
    for r in 0..probs.rows() {
        let p = probs.row(r);
        let g = grad.row(r);
        let dot: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
        for (c, o) in out.row_mut(r).iter_mut().enumerate() {
            *o = p[c] * (g[c] - dot);
        }
    }
    Ok(out)
}

/// `out[i][j] = s[i] + t[j]` for column vectors `s` (n×1) and `t` (m×1).
pub fn outer_sum(s: &Matrix, t: &Matrix) -> Result<Matrix> {
    if s.cols() != 1 || t.cols() != 1 {
        return Err(Error::Shape {
            op: "outer_sum",
            left: s.shape(),
            right: t.shape(),
        });
    }
    let mut out = Matrix::zeros(s.rows(), t.rows());
    for i in 0..s.rows() {
        for j in 0..t.rows() {
            out[(i, j)] = s.as_slice()[i] + t.as_slice()[j];
        }
    }
    Ok(out)
}

/// Returns `(grad_s, grad_t)`: row sums and column sums of `grad`.
pub fn outer_sum_backward(grad: &Matrix) -> (Matrix, Matrix) {
    let mut gs = Matrix::zeros(grad.rows(), 1);
    let mut gt = Matrix::zeros(grad.cols(), 1);
    for i in 0..grad.rows() {
        for j in 0..grad.cols() {
            let g = grad[(i, j)];
            gs[(i, 0)] += g;
            gt[(j, 0)] += g;
        }
    }
    (gs, gt)
}

/// Whether stochastic layers sample (training) or pass through (evaluation).
pub enum Phase<'a, R: Rng + ?Sized> {
    Train(&'a mut R),
    Eval,
}

impl<R: Rng + ?Sized> Phase<'_, R> {
    pub fn is_training(&self) -> bool {
        matches!(self, Phase::Train(_))
    }
}

/// Result of an inverted-dropout forward pass.
#[derive(Clone, Debug)]
pub struct Dropout {
    pub output: Matrix,
    /// Per-entry multiplier (0 or 1/(1-p)); `None` when the layer was the identity.
    pub scale: Option<Matrix>,
}

pub fn dropout<R: Rng + ?Sized>(h: &Matrix, p: f64, phase: &mut Phase<'_, R>) -> Result<Dropout> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "dropout probability must be in [0, 1), got {p}"
        )));
    }
    match phase {
        Phase::Train(rng) if p > 0.0 => {
            let keep = 1.0 / (1.0 - p);
            let scale_data: Vec<f64> = (0..h.len())
                .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
                .collect();
            let scale = Matrix::from_vec(h.rows(), h.cols(), scale_data)?;
            let out = h.as_slice().iter().zip(scale.as_slice()).map(|(a, b)| a * b).collect();
            Ok(Dropout {
                output: Matrix::from_vec(h.rows(), h.cols(), out)?,
                scale: Some(scale),
            })
        }
        _ => Ok(Dropout {
            output: h.clone(),
            scale: None,
        }),
    }
}

pub fn dropout_backward(scale: Option<&Matrix>, grad: &Matrix) -> Result<Matrix> {
    match scale {
        None => Ok(grad.clone()),
        Some(s) => {
            s.check_same_shape("dropout_backward", grad)?;
            let data = s.as_slice().iter().zip(grad.as_slice()).map(|(a, b)| a * b).collect();
            Matrix::from_vec(grad.rows(), grad.cols(), data)
        }
    }
}

/// Mean squared error and its gradient with respect to `pred`.
pub fn mse(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    pred.check_same_shape("mse", target)?;
    if pred.is_empty() {
        return Err(Error::InvalidArgument("mse of empty matrices".into()));
    }
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(pred.len());
    for (p, t) in pred.as_slice().iter().zip(target.as_slice()) {
        let d = p - t;
        loss += d * d;
        grad.push(2.0 * d / n);
    }
    Ok((loss / n, Matrix::from_vec(pred.rows(), pred.cols(), grad)?))
}
