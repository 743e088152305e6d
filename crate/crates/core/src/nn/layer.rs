//! Layer definitions, initialization and per-layer forward/backward.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::conv::{conv_backward_input, conv_backward_weights, conv_forward, ConvGeom};
use super::tensor::{Scalar, Tensor};
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    None,
    LeakyRelu(f64),
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn apply<T: Scalar>(&self, v: &mut [T]) {
        match *self {
            Activation::None => {}
            Activation::LeakyRelu(alpha) => {
                let a = T::from_f64(alpha);
                for x in v {
                    if *x < T::zero() {
                        *x = *x * a;
                    }
                }
            }
            Activation::Tanh => {
                for x in v {
                    *x = x.tanh();
                }
            }
            Activation::Sigmoid => {
                for x in v {
                    *x = T::one() / (T::one() + (-*x).exp());
                }
            }
        }
    }

    /// Derivative expressed through the activation output.
    pub fn backprop<T: Scalar>(&self, output: &[T], grad: &mut [T]) {
        match *self {
            Activation::None => {}
            Activation::LeakyRelu(alpha) => {
                let a = T::from_f64(alpha);
                for (g, &y) in grad.iter_mut().zip(output) {
                    if y < T::zero() {
                        *g = *g * a;
                    }
                }
            }
            Activation::Tanh => {
                for (g, &y) in grad.iter_mut().zip(output) {
                    *g = *g * (T::one() - y * y);
                }
            }
            Activation::Sigmoid => {
                for (g, &y) in grad.iter_mut().zip(output) {
                    *g = *g * y * (T::one() - y);
                }
            }
        }
    }
}

/// Declarative layer description used to build a [`super::Network`].
#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    /// Fully connected: `out` units.
    Dense {
        out: usize,
        activation: Activation,
        dropout: f64,
    },
    /// 'same'-padded convolution.
    Conv {
        filters: usize,
        kernel: (usize, usize),
        stride: (usize, usize),
        activation: Activation,
        dropout: f64,
    },
    /// 'same'-padded transposed convolution (spatial size times stride).
    TConv {
        filters: usize,
        kernel: (usize, usize),
        stride: (usize, usize),
        activation: Activation,
        dropout: f64,
    },
    /// Reinterprets the per-item feature vector as [c, h, w].
    Reshape { shape: Vec<usize> },
    /// Collapses per-item dimensions to a flat feature vector.
    Flatten,
}

/// A built layer with its weights.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer<T> {
    Dense {
        w: Tensor<T>, // [in, out]
        b: Tensor<T>, // [out]
        activation: Activation,
        dropout: f64,
    },
    Conv {
        w: Tensor<T>, // [F, C*kh*kw]
        b: Tensor<T>, // [F]
        geom: ConvGeom,
        activation: Activation,
        dropout: f64,
    },
    TConv {
        // Weights of the underlying conv whose transpose this applies;
        // the conv maps [filters, h*sh, w*sw] -> [c_in, h, w].
        w: Tensor<T>, // [c_in, filters*kh*kw]
        b: Tensor<T>, // [filters]
        geom: ConvGeom,
        activation: Activation,
        dropout: f64,
    },
    Reshape {
        from: Vec<usize>,
        to: Vec<usize>,
    },
}

fn glorot<T: Scalar>(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize, n: usize) -> Vec<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n)
        .map(|_| T::from_f64(rng.gen_range(-limit..limit)))
        .collect()
}

impl<T: Scalar> Layer<T> {
    /// Builds a layer for a given per-item input shape; returns the layer
    /// and its per-item output shape.
    pub fn build(
        spec: &LayerSpec,
        input_shape: &[usize],
        rng: &mut ChaCha8Rng,
        index: usize,
    ) -> Result<(Self, Vec<usize>), NnError> {
        let shape_err = |m: String| NnError::Shape {
            layer: index,
            message: m,
        };
        match spec {
            LayerSpec::Dense {
                out,
                activation,
                dropout,
            } => {
                let inp: usize = input_shape.iter().product();
                let w = Tensor::from_vec(&[inp, *out], glorot(rng, inp, *out, inp * *out))
                    .map_err(|e| shape_err(e.to_string()))?;
                let b = Tensor::zeros(&[*out]);
                Ok((
                    Layer::Dense {
                        w,
                        b,
                        activation: *activation,
                        dropout: *dropout,
                    },
                    vec![*out],
                ))
            }
            LayerSpec::Conv {
                filters,
                kernel,
                stride,
                activation,
                dropout,
            } => {
                if kernel.0 == 0 || stride.0 == 0 || kernel.1 == 0 || stride.1 == 0 {
                    return Err(shape_err("kernel and stride must be >= 1".into()));
                }
                let [c, h, w_sp] = chw(input_shape).ok_or_else(|| {
                    shape_err(format!("conv needs a [c, h, w] input, got {input_shape:?}"))
                })?;
                let geom = ConvGeom {
                    c,
                    f: *filters,
                    kh: kernel.0,
                    kw: kernel.1,
                    sh: stride.0,
                    sw: stride.1,
                    h,
                    w: w_sp,
                };
                let fan_in = c * kernel.0 * kernel.1;
                let fan_out = filters * kernel.0 * kernel.1;
                let w = Tensor::from_vec(
                    &[*filters, fan_in],
                    glorot(rng, fan_in, fan_out, *filters * fan_in),
                )
                .map_err(|e| shape_err(e.to_string()))?;
                let b = Tensor::zeros(&[*filters]);
                let out_shape = vec![*filters, geom.out_h(), geom.out_w()];
                Ok((
                    Layer::Conv {
                        w,
                        b,
                        geom,
                        activation: *activation,
                        dropout: *dropout,
                    },
                    out_shape,
                ))
            }
            LayerSpec::TConv {
                filters,
                kernel,
                stride,
                activation,
                dropout,
            } => {
                if kernel.0 == 0 || stride.0 == 0 || kernel.1 == 0 || stride.1 == 0 {
                    return Err(shape_err("kernel and stride must be >= 1".into()));
                }
                let [c, h, w_sp] = chw(input_shape).ok_or_else(|| {
                    shape_err(format!(
                        "tconv needs a [c, h, w] input, got {input_shape:?}"
                    ))
                })?;
                // Underlying conv runs from the upsampled output back to
                // the input; its "input channels" are the tconv filters.
                let geom = ConvGeom {
                    c: *filters,
                    f: c,
                    kh: kernel.0,
                    kw: kernel.1,
                    sh: stride.0,
                    sw: stride.1,
                    h: h * stride.0,
                    w: w_sp * stride.1,
                };
                debug_assert_eq!(geom.out_h(), h);
                let fan_in = c * kernel.0 * kernel.1;
                let fan_out = filters * kernel.0 * kernel.1;
                let w = Tensor::from_vec(
                    &[c, filters * kernel.0 * kernel.1],
                    glorot(rng, fan_in, fan_out, c * filters * kernel.0 * kernel.1),
                )
                .map_err(|e| shape_err(e.to_string()))?;
                let b = Tensor::zeros(&[*filters]);
                let out_shape = vec![*filters, geom.h, geom.w];
                Ok((
                    Layer::TConv {
                        w,
                        b,
                        geom,
                        activation: *activation,
                        dropout: *dropout,
                    },
                    out_shape,
                ))
            }
            LayerSpec::Reshape { shape } => {
                let n_in: usize = input_shape.iter().product();
                let n_out: usize = shape.iter().product();
                if n_in != n_out {
                    return Err(shape_err(format!(
                        "cannot reshape {input_shape:?} ({n_in}) to {shape:?} ({n_out})"
                    )));
                }
                Ok((
                    Layer::Reshape {
                        from: input_shape.to_vec(),
                        to: shape.clone(),
                    },
                    shape.clone(),
                ))
            }
            LayerSpec::Flatten => {
                let n: usize = input_shape.iter().product();
                Ok((
                    Layer::Reshape {
                        from: input_shape.to_vec(),
                        to: vec![n],
                    },
                    vec![n],
                ))
            }
        }
    }

    pub fn activation(&self) -> Activation {
        match self {
            Layer::Dense { activation, .. }
            | Layer::Conv { activation, .. }
            | Layer::TConv { activation, .. } => *activation,
            Layer::Reshape { .. } => Activation::None,
        }
    }

    pub fn dropout(&self) -> f64 {
        match self {
            Layer::Dense { dropout, .. }
            | Layer::Conv { dropout, .. }
            | Layer::TConv { dropout, .. } => *dropout,
            Layer::Reshape { .. } => 0.0,
        }
    }

    /// Immutable views of this layer's parameter tensors.
    pub fn params(&self) -> Vec<&Tensor<T>> {
        match self {
            Layer::Dense { w, b, .. } | Layer::Conv { w, b, .. } | Layer::TConv { w, b, .. } => {
                vec![w, b]
            }
            Layer::Reshape { .. } => vec![],
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        match self {
            Layer::Dense { w, b, .. } | Layer::Conv { w, b, .. } | Layer::TConv { w, b, .. } => {
                vec![w, b]
            }
            Layer::Reshape { .. } => vec![],
        }
    }

    /// Linear part of the forward pass (activation and dropout are applied
    /// by the network driver). `batch` items.
    pub fn forward_linear(&self, x: &Tensor<T>, batch: usize) -> Tensor<T> {
        match self {
            Layer::Dense { w, b, .. } => {
                let (inp, out) = (w.shape[0], w.shape[1]);
                let mut y = Tensor::zeros(&[batch, out]);
                T::gemm(
                    batch,
                    inp,
                    out,
                    T::one(),
                    &x.data,
                    false,
                    &w.data,
                    false,
                    T::zero(),
                    &mut y.data,
                );
                for item in 0..batch {
                    for (yv, &bv) in y.data[item * out..(item + 1) * out].iter_mut().zip(&b.data) {
                        *yv += bv;
                    }
                }
                y
            }
            Layer::Conv { w, b, geom, .. } => {
                let mut y = Tensor::zeros(&[batch, geom.f, geom.out_h(), geom.out_w()]);
                conv_forward(geom, &x.data, &w.data, &b.data, &mut y.data);
                y
            }
            Layer::TConv { w, b, geom, .. } => {
                // Forward = transpose of the underlying conv.
                let mut y = Tensor::zeros(&[batch, geom.c, geom.h, geom.w]);
                conv_backward_input(geom, &x.data, &w.data, &mut y.data);
                let plane = geom.h * geom.w;
                for item in 0..batch {
                    for ch in 0..geom.c {
                        let off = (item * geom.c + ch) * plane;
                        for v in &mut y.data[off..off + plane] {
                            *v += b.data[ch];
                        }
                    }
                }
                y
            }
            Layer::Reshape { to, .. } => {
                let mut shape = vec![batch];
                shape.extend_from_slice(to);
                x.clone().reshaped(&shape).expect("validated at build")
            }
        }
    }

    /// Gradient of the linear part. Returns (input grad, param grads).
    pub fn backward_linear(
        &self,
        x: &Tensor<T>,
        dy: &Tensor<T>,
        batch: usize,
    ) -> (Tensor<T>, Vec<Tensor<T>>) {
        match self {
            Layer::Dense { w, .. } => {
                let (inp, out) = (w.shape[0], w.shape[1]);
                let mut dx = Tensor::zeros(&[batch, inp]);
                T::gemm(
                    batch,
                    out,
                    inp,
                    T::one(),
                    &dy.data,
                    false,
                    &w.data,
                    true,
                    T::zero(),
                    &mut dx.data,
                );
                let mut dw = Tensor::zeros(&[inp, out]);
                T::gemm(
                    inp,
                    batch,
                    out,
                    T::one(),
                    &x.data,
                    true,
                    &dy.data,
                    false,
                    T::zero(),
                    &mut dw.data,
                );
                let mut db = Tensor::zeros(&[out]);
                for item in 0..batch {
                    for (d, &g) in db.data.iter_mut().zip(&dy.data[item * out..(item + 1) * out]) {
                        *d += g;
                    }
                }
                (dx, vec![dw, db])
            }
            Layer::Conv { w, geom, .. } => {
                let mut dx = Tensor::zeros(&[batch, geom.c, geom.h, geom.w]);
                conv_backward_input(geom, &dy.data, &w.data, &mut dx.data);
                let mut dw = Tensor::zeros(&w.shape);
                let mut db = Tensor::zeros(&[geom.f]);
                conv_backward_weights(geom, &x.data, &dy.data, &mut dw.data, &mut db.data);
                (dx, vec![dw, db])
            }
            Layer::TConv { w, geom, .. } => {
                // Input grad = forward of the underlying conv (bias-free).
                let mut dx = Tensor::zeros(&[batch, geom.f, geom.out_h(), geom.out_w()]);
                let zero_bias = vec![T::zero(); geom.f];
                conv_forward(geom, &dy.data, &w.data, &zero_bias, &mut dx.data);
                // Weight grad: conv weight-grad with input := dy, dy := x.
                let mut dw = Tensor::zeros(&w.shape);
                let mut db_conv = vec![T::zero(); geom.f];
                conv_backward_weights(geom, &dy.data, &x.data, &mut dw.data, &mut db_conv);
                // Bias grad: sum of dy over each output channel plane.
                let mut db = Tensor::zeros(&[geom.c]);
                let plane = geom.h * geom.w;
                for item in 0..batch {
                    for ch in 0..geom.c {
                        let off = (item * geom.c + ch) * plane;
                        let mut s = T::zero();
                        for &v in &dy.data[off..off + plane] {
                            s += v;
                        }
                        db.data[ch] += s;
                    }
                }
                (dx, vec![dw, db])
            }
            Layer::Reshape { from, .. } => {
                let mut shape = vec![batch];
                shape.extend_from_slice(from);
                (
                    dy.clone().reshaped(&shape).expect("validated at build"),
                    vec![],
                )
            }
        }
    }

    pub(super) fn apply_activation(&self, v: &mut [T]) {
        self.activation().apply(v);
    }

    pub(super) fn backprop_activation(&self, output: &[T], grad: &mut [T]) {
        self.activation().backprop(output, grad);
    }
}

fn chw(shape: &[usize]) -> Option<[usize; 3]> {
    match shape {
        [c, h, w] => Some([*c, *h, *w]),
        _ => None,
    }
}
