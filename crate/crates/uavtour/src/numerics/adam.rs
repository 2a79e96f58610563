use serde::{Deserialize, Serialize};

use super::{NumericsError, Param, Result};

/// Adam optimizer state for an ordered set of parameters.
///
/// The parameter order is fixed at construction; callers must pass the same
/// parameters in the same order to every `step`. Moments are serialized so
/// training can resume deterministically from a checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step_count: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(learning_rate: f64, param_sizes: &[usize]) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step_count: 0,
            first_moment: param_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: param_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// One bias-corrected Adam update. Gradients are consumed (zeroed) so the
    /// next accumulation starts clean. Non-finite gradients abort the step
    /// before any parameter is touched.
    pub fn step(&mut self, params: &mut [&mut Param]) -> Result<()> {
        assert_eq!(
            params.len(),
            self.first_moment.len(),
            "optimizer was built for a different parameter set"
        );
        for p in params.iter() {
            if !p.grad.all_finite() {
                return Err(NumericsError::NonFiniteGradient);
            }
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (idx, p) in params.iter_mut().enumerate() {
            let m = &mut self.first_moment[idx];
            let v = &mut self.second_moment[idx];
            debug_assert_eq!(m.len(), p.value.numel());
            let grads = p.grad.data().to_vec();
            for (i, g) in grads.iter().enumerate() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p.value.data_mut()[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
            p.zero_grad();
        }
        Ok(())
    }
}
