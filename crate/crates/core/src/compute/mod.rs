//! Dense matrices, differentiable primitives, gradient checking and Adam.

mod adam;
mod gradcheck;
mod matrix;
pub mod ops;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::grad_check;
pub use matrix::{Mask, Matrix};
pub use ops::Phase;

/// A trainable tensor and its gradient accumulator.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Matrix,
    pub grad: Matrix,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Matrix) -> Self {
        let grad = Matrix::zeros(value.rows(), value.cols());
        Self {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn accumulate(&mut self, grad: &Matrix) -> crate::Result<()> {
        self.grad.add_assign(grad)
    }
}
