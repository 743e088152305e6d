//! A feed-forward stack of layers with explicit forward caches and
//! reverse-mode backward.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layer::{Layer, LayerSpec};
use super::tensor::{Scalar, Tensor};
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Parameter gradients: `grads[layer][param]`, matching
/// [`Network::params`] order.
pub type ParamGrads<T> = Vec<Vec<Tensor<T>>>;

#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    pub(super) layers: Vec<Layer<T>>,
    pub(super) specs: Vec<LayerSpec>,
    pub(super) input_shape: Vec<usize>,
}

/// Everything the backward pass needs from one forward pass.
pub struct ForwardCache<T> {
    /// Input to each layer (post-dropout output of the previous layer).
    inputs: Vec<Tensor<T>>,
    /// Post-activation output of each layer (pre-dropout).
    outputs: Vec<Tensor<T>>,
    /// Inverted-dropout masks (scale included), where active.
    masks: Vec<Option<Vec<T>>>,
    batch: usize,
    /// Fingerprint tying a cache to the network that produced it.
    token: usize,
}

impl<T: Scalar> Network<T> {
    /// Builds and Glorot-initializes a network for a per-item input shape.
    pub fn new(input_shape: &[usize], specs: &[LayerSpec], init_seed: u64) -> Result<Self, NnError> {
        let mut rng = ChaCha8Rng::seed_from_u64(init_seed);
        let mut layers = Vec::with_capacity(specs.len());
        let mut shape = input_shape.to_vec();
        for (i, spec) in specs.iter().enumerate() {
            let (layer, out_shape) = Layer::build(spec, &shape, &mut rng, i)?;
            layers.push(layer);
            shape = out_shape;
        }
        Ok(Network {
            layers,
            specs: specs.to_vec(),
            input_shape: input_shape.to_vec(),
        })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    /// Per-item output shape.
    pub fn output_shape(&self) -> Vec<usize> {
        let mut shape = self.input_shape.clone();
        // Shapes were validated at build time; replay them.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for (i, spec) in self.specs.iter().enumerate() {
            let (_, out) = Layer::<T>::build(spec, &shape, &mut rng, i).expect("validated");
            shape = out;
        }
        shape
    }

    pub fn layer_specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn params(&self) -> Vec<Vec<&Tensor<T>>> {
        self.layers.iter().map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<Vec<&mut Tensor<T>>> {
        self.layers.iter_mut().map(|l| l.params_mut()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| l.params())
            .map(|t| t.len())
            .sum()
    }

    fn token(&self) -> usize {
        self as *const _ as usize ^ self.layers.len()
    }

    /// Forward pass over a batch. Input shape must be
    /// `[batch, input_shape...]` (or `[batch, features]` for flat inputs).
    pub fn forward(
        &self,
        input: &Tensor<T>,
        mode: Mode,
        seed: u64,
    ) -> Result<(Tensor<T>, ForwardCache<T>), NnError> {
        let batch = input.batch();
        let expected: usize = self.input_shape.iter().product();
        if input.features() != expected {
            return Err(NnError::Shape {
                layer: 0,
                message: format!(
                    "input has {} features per item, network expects {expected}",
                    input.features()
                ),
            });
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut masks = Vec::with_capacity(self.layers.len());
        let mut x = input.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            inputs.push(x.clone());
            let mut y = layer.forward_linear(&x, batch);
            layer.apply_activation(&mut y.data);
            outputs.push(y.clone());
            let rate = layer.dropout();
            let mask = if mode == Mode::Train && rate > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((i as u64 + 1) * 0x9e37_79b9));
                let keep = 1.0 - rate;
                let scale = T::from_f64(1.0 / keep);
                let m: Vec<T> = (0..y.len())
                    .map(|_| {
                        if rng.gen::<f64>() < keep {
                            scale
                        } else {
                            T::zero()
                        }
                    })
                    .collect();
                for (v, &mv) in y.data.iter_mut().zip(&m) {
                    *v = *v * mv;
                }
                Some(m)
            } else {
                None
            };
            masks.push(mask);
            x = y;
        }
        Ok((
            x,
            ForwardCache {
                inputs,
                outputs,
                masks,
                batch,
                token: self.token(),
            },
        ))
    }

    /// Reverse pass. Returns parameter gradients (summed over the batch)
    /// and the gradient with respect to the network input.
    pub fn backward(
        &self,
        cache: &ForwardCache<T>,
        output_grad: &Tensor<T>,
    ) -> Result<(ParamGrads<T>, Tensor<T>), NnError> {
        if cache.token != self.token() || cache.inputs.len() != self.layers.len() {
            return Err(NnError::State(
                "forward cache does not match this network".into(),
            ));
        }
        let mut grads: ParamGrads<T> = vec![Vec::new(); self.layers.len()];
        let mut g = output_grad.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            if let Some(mask) = &cache.masks[i] {
                for (gv, &mv) in g.data.iter_mut().zip(mask) {
                    *gv = *gv * mv;
                }
            }
            layer.backprop_activation(&cache.outputs[i].data, &mut g.data);
            let (dx, dparams) = layer.backward_linear(&cache.inputs[i], &g, cache.batch);
            grads[i] = dparams;
            g = dx;
        }
        Ok((grads, g))
    }

    /// Convenience eval-mode forward that discards the cache.
    pub fn infer(&self, input: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        Ok(self.forward(input, Mode::Eval, 0)?.0)
    }
}
