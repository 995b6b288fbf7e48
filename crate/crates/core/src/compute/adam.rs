use serde::{Deserialize, Serialize};

use super::{Matrix, Parameter};

/// Adam hyperparameters. Weight decay is coupled: it is added to the gradient
/// before the moment updates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 5e-4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &[Parameter]) -> Self {
        let zeros = |p: &Parameter| Matrix::zeros(p.value.rows(), p.value.cols());
        Self {
            config,
            step: 0,
            m: params.iter().map(zeros).collect(),
            v: params.iter().map(zeros).collect(),
        }
    }

    pub fn first_moment(&self) -> &[Matrix] {
        &self.m
    }

    pub fn second_moment(&self) -> &[Matrix] {
        &self.v
    }

    /// Applies one update using the accumulated gradients, then zeroes them.
    ///
    /// Panics if `params` does not match the layout the state was built for.
    pub fn step(&mut self, params: &mut [Parameter]) {
        assert_eq!(params.len(), self.m.len(), "parameter list changed");
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            weight_decay,
        } = self.config;
        let t = self.step as i32;
        let bias1 = 1.0 - beta1.powi(t);
        let bias2 = 1.0 - beta2.powi(t);

        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            assert_eq!(p.value.shape(), m.shape(), "shape of `{}` changed", p.name);
            let values = p.value.as_mut_slice();
            let grads = p.grad.as_slice();
            for (((theta, &g0), m), v) in values.iter_mut().zip(grads).zip(m.as_mut_slice()).zip(v.as_mut_slice()) {
                let g = g0 + weight_decay * *theta;
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                *theta -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
            p.zero_grad();
        }
    }
}
