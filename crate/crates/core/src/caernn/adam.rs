use super::Real;
use crate::error::{Error, Result};

/// Adam hyperparameters (learning rate is passed per step).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment accumulators and the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub step: u64,
}

impl<T: Real> AdamState<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
            step: 0,
        }
    }
}

impl Adam {
    /// One bias-corrected Adam update of every parameter.
    pub fn step<T: Real>(&self, params: &mut [T], grads: &[T], state: &mut AdamState<T>, lr: f64) -> Result<()> {
        if grads.len() != params.len() || state.m.len() != params.len() || state.v.len() != params.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} parameters, {} gradients, {}/{} moments",
                params.len(),
                grads.len(),
                state.m.len(),
                state.v.len()
            )));
        }
        state.step += 1;
        let t = state.step as i32;
        let c = T::from_f64;
        let (b1, b2, eps) = (c(self.beta1).unwrap(), c(self.beta2).unwrap(), c(self.epsilon).unwrap());
        let one = T::one();
        let bc1 = one - b1.powi(t);
        let bc2 = one - b2.powi(t);
        let lr = c(lr).unwrap();
        for (((w, &g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *w -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}
