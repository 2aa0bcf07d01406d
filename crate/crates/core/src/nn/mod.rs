//! Minimal neural-network building blocks over `ndarray`.
//!
//! Layers keep their parameters immutable during forward evaluation and
//! return explicit caches, so concurrent read-only forward passes are safe.
//! Backward passes are hand-derived per layer; the deterministic parallel
//! matmul keeps results bit-identical across runs regardless of thread
//! count.

mod conv;
mod layers;
mod linalg;

pub use conv::{conv1d_forward, conv1d_input_grad, conv1d_weight_grad, SamePad1d};
pub use layers::{
    leaky_relu, leaky_relu_grad_mask, phase_shuffle, phase_shuffle_adjoint, relu, tanh_forward,
    Conv1d, ConvTranspose1d, Dense,
};
pub use linalg::matmul_par;

use ndarray::{Array1, Array2, Array3};

/// Gradients for a dense layer.
#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub w: Array2<f32>,
    pub b: Array1<f32>,
}

impl DenseGrads {
    pub fn zeros_like(layer: &Dense) -> Self {
        DenseGrads {
            w: Array2::zeros(layer.w.dim()),
            b: Array1::zeros(layer.b.dim()),
        }
    }

    pub fn add_scaled(&mut self, other: &DenseGrads, scale: f32) {
        self.w.scaled_add(scale, &other.w);
        self.b.scaled_add(scale, &other.b);
    }
}

/// Gradients for a convolution layer (either direction).
#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub w: Array3<f32>,
    pub b: Array1<f32>,
}

impl ConvGrads {
    pub fn zeros(w_dim: (usize, usize, usize), b_dim: usize) -> Self {
        ConvGrads {
            w: Array3::zeros(w_dim),
            b: Array1::zeros(b_dim),
        }
    }

    pub fn add_scaled(&mut self, other: &ConvGrads, scale: f32) {
        self.w.scaled_add(scale, &other.w);
        self.b.scaled_add(scale, &other.b);
    }
}

/// Adam optimizer over flat parameter slices.
///
/// Moment buffers are allocated lazily on the first step and keyed by
/// position, so callers must pass parameter/gradient pairs in a stable
/// order.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    t: u64,
    moments: Vec<(Vec<f32>, Vec<f32>)>,
}

impl Adam {
    pub fn new(lr: f32, beta1: f32, beta2: f32) -> Self {
        Adam {
            lr,
            beta1,
            beta2,
            eps: 1e-8,
            t: 0,
            moments: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// Applies one update to every (parameter, gradient) pair.
    pub fn step(&mut self, pairs: &mut [(&mut [f32], &[f32])]) {
        if self.moments.is_empty() {
            self.moments = pairs
                .iter()
                .map(|(p, _)| (vec![0.0; p.len()], vec![0.0; p.len()]))
                .collect();
        }
        assert_eq!(
            self.moments.len(),
            pairs.len(),
            "parameter set changed between optimizer steps"
        );
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for ((param, grad), (m, v)) in pairs.iter_mut().zip(self.moments.iter_mut()) {
            assert_eq!(param.len(), grad.len());
            for i in 0..param.len() {
                let g = grad[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = m[i] / b1t;
                let v_hat = v[i] / b2t;
                param[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}
