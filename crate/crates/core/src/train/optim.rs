//! Sparse Adagrad and Adam: only rows touched by a batch are updated.

use alloc::vec::Vec;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum OptimizerKind {
    #[default]
    Adagrad,
    Adam,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Adagrad => "adagrad",
            OptimizerKind::Adam => "adam",
        }
    }
}

const ADAGRAD_EPS: f64 = 1e-10;
const ADAM_B1: f64 = 0.9;
const ADAM_B2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Per-parameter state for one matrix.
pub(crate) struct OptimState {
    kind: OptimizerKind,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl OptimState {
    pub(crate) fn new(kind: OptimizerKind, len: usize) -> Self {
        let first = match kind {
            OptimizerKind::Adagrad => Vec::new(),
            OptimizerKind::Adam => alloc::vec![0.0; len],
        };
        Self {
            kind,
            first,
            second: alloc::vec![0.0; len],
        }
    }

    /// Applies one update to `params[range]` from `grad[range]` and zeroes
    /// the gradient. `step` is the 1-based global step (Adam bias correction).
    pub(crate) fn apply(
        &mut self,
        params: &mut [f64],
        grad: &mut [f64],
        start: usize,
        lr: f64,
        weight_decay: f64,
        step: u64,
    ) {
        let end = start + grad.len();
        let p = &mut params[start..end];
        match self.kind {
            OptimizerKind::Adagrad => {
                for ((w, g), acc) in p.iter_mut().zip(grad.iter_mut()).zip(&mut self.second[start..end]) {
                    *acc += *g * *g;
                    *w -= lr * *g / (libm::sqrt(*acc) + ADAGRAD_EPS);
                    *g = 0.0;
                }
            }
            OptimizerKind::Adam => {
                let bc1 = 1.0 - libm::pow(ADAM_B1, step as f64);
                let bc2 = 1.0 - libm::pow(ADAM_B2, step as f64);
                let m = &mut self.first[start..end];
                let v = &mut self.second[start..end];
                for (((w, g), m), v) in p.iter_mut().zip(grad.iter_mut()).zip(m).zip(v) {
                    *m = ADAM_B1 * *m + (1.0 - ADAM_B1) * *g;
                    *v = ADAM_B2 * *v + (1.0 - ADAM_B2) * *g * *g;
                    *w -= lr * (*m / bc1) / (libm::sqrt(*v / bc2) + ADAM_EPS);
                    *g = 0.0;
                }
            }
        }
        if weight_decay > 0.0 {
            let shrink = 1.0 - lr * weight_decay;
            for w in p {
                *w *= shrink;
            }
        }
    }
}
