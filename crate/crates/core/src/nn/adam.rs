//! Adam optimizer state kept separately from the network so that
//! checkpoints of weights and optimizer moments stay independent.

use super::network::{Network, ParamGrads};
use super::tensor::{Scalar, Tensor};
use super::NnError;

#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Steps taken so far; bias correction uses `t = step + 1`.
    step: u64,
    m: Vec<Vec<Tensor<T>>>,
    v: Vec<Vec<Tensor<T>>>,
}

impl<T: Scalar> AdamState<T> {
    /// State sized to match `net`, with the customary defaults
    /// beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
    pub fn new(net: &Network<T>, lr: f64) -> Self {
        let zeros = |net: &Network<T>| -> Vec<Vec<Tensor<T>>> {
            net.params()
                .iter()
                .map(|layer| layer.iter().map(|p| Tensor::zeros(&p.shape)).collect())
                .collect()
        };
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: zeros(net),
            v: zeros(net),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one Adam update in place. Gradients must be mean gradients
    /// over the batch (the caller divides by batch size).
    pub fn apply(&mut self, net: &mut Network<T>, grads: &ParamGrads<T>) -> Result<(), NnError> {
        if grads.len() != self.m.len() {
            return Err(NnError::State(
                "optimizer state does not match gradient layout".into(),
            ));
        }
        self.step += 1;
        let t = self.step as f64;
        let bc1 = 1.0 - self.beta1.powf(t);
        let bc2 = 1.0 - self.beta2.powf(t);
        let b1 = T::from_f64(self.beta1);
        let b2 = T::from_f64(self.beta2);
        let ob1 = T::from_f64(1.0 - self.beta1);
        let ob2 = T::from_f64(1.0 - self.beta2);
        let lr = T::from_f64(self.lr / bc1);
        let sqrt_bc2 = T::from_f64(bc2.sqrt());
        let eps = T::from_f64(self.eps);
        let mut params = net.params_mut();
        for (li, layer) in params.iter_mut().enumerate() {
            if grads[li].len() != layer.len() {
                return Err(NnError::State(format!(
                    "layer {li}: gradient count {} does not match parameter count {}",
                    grads[li].len(),
                    layer.len()
                )));
            }
            for (pi, p) in layer.iter_mut().enumerate() {
                let g = &grads[li][pi];
                if g.shape != p.shape {
                    return Err(NnError::State(format!(
                        "layer {li} param {pi}: gradient shape mismatch"
                    )));
                }
                let m = &mut self.m[li][pi].data;
                let v = &mut self.v[li][pi].data;
                for i in 0..p.data.len() {
                    let gi = g.data[i];
                    m[i] = b1 * m[i] + ob1 * gi;
                    v[i] = b2 * v[i] + ob2 * gi * gi;
                    // v-hat folded into the denominator via sqrt(bc2).
                    p.data[i] -= lr * m[i] / (v[i].sqrt() / sqrt_bc2 + eps);
                }
            }
        }
        Ok(())
    }
}
