use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{Cache, Conv2d, Dense, Layer, Recurrent};
use super::real::Real;
use super::spec::{LayerSpec, NetworkKind, NetworkSpec};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::prep::Fragment;

/// Whether dropout is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Which vector the classifier heads consume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadFeatures {
    /// The network output vector.
    #[default]
    Logits,
    /// Activations feeding the last dense layer.
    Penultimate,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs: usize,
    /// Mean training loss per epoch.
    pub loss_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetModel<T = f32> {
    pub spec: NetworkSpec,
    /// Fragment geometry `(rows, cols)` the model was built for.
    pub input_dims: (usize, usize),
    pub layers: Vec<Layer<T>>,
    pub meta: TrainingMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput<T = f32> {
    pub logits: Vec<T>,
    pub penultimate: Vec<T>,
}

impl<T: Copy> ForwardOutput<T> {
    pub fn features(&self, which: HeadFeatures) -> &[T] {
        match which {
            HeadFeatures::Logits => &self.logits,
            HeadFeatures::Penultimate => &self.penultimate,
        }
    }
}

/// Recorded forward pass.
#[derive(Debug, Clone)]
pub struct Trace<T> {
    pub output: ForwardOutput<T>,
    pub caches: Vec<Cache<T>>,
    pub mode: Mode,
}

/// Gradients aligned with [`NetModel::layers`] / [`Layer::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub params: Vec<Vec<Tensor<T>>>,
}

impl<T: Real> Gradients<T> {
    pub fn zeros_like(model: &NetModel<T>) -> Self {
        Gradients {
            params: model
                .layers
                .iter()
                .map(|l| l.params().into_iter().map(|p| Tensor::zeros(&p.shape)).collect())
                .collect(),
        }
    }

    pub fn scale(&mut self, s: T) {
        for t in self.params.iter_mut().flatten() {
            for v in &mut t.data {
                *v *= s;
            }
        }
    }

    pub fn clear(&mut self) {
        for t in self.params.iter_mut().flatten() {
            t.data.fill(T::zero());
        }
    }
}

/// `softmax(a)` with max subtraction.
pub fn softmax<T: Real>(a: &[T]) -> Vec<T> {
    let max = a.iter().copied().fold(T::neg_infinity(), T::max);
    let exp: Vec<T> = a.iter().map(|&v| (v - max).exp()).collect();
    let sum: T = exp.iter().copied().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy of `softmax(a)` against `target` and its gradient
/// `softmax(a) - onehot(target)`.
pub fn softmax_cross_entropy<T: Real>(a: &[T], target: usize) -> (T, Vec<T>) {
    let max = a.iter().copied().fold(T::neg_infinity(), T::max);
    let log_sum = a.iter().map(|&v| (v - max).exp()).sum::<T>().ln() + max;
    let loss = log_sum - a[target];
    let mut grad = softmax(a);
    grad[target] -= T::one();
    (loss, grad)
}

fn uniform<T: Real>(shape: &[usize], limit: f64, rng: &mut ChaCha8Rng) -> Tensor<T> {
    let n = shape.iter().product();
    let data = (0..n).map(|_| T::lit(rng.random_range(-limit..limit))).collect();
    Tensor::from_vec(shape, data)
}

fn input_shape(kind: NetworkKind, (rows, cols): (usize, usize)) -> Vec<usize> {
    match kind {
        NetworkKind::Cnn => vec![1, rows, cols],
        NetworkKind::Ann | NetworkKind::Rnn => vec![rows, cols],
    }
}

impl<T: Real> NetModel<T> {
    /// Instantiates `spec` for `rows × cols` fragments with seeded
    /// fan-in uniform weights and zero biases.
    pub fn new(spec: &NetworkSpec, input_dims: (usize, usize), seed: u64) -> Result<Self> {
        spec.validate()?;
        if input_dims.0 == 0 || input_dims.1 == 0 {
            return Err(Error::invalid("empty input geometry"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut shape = input_shape(spec.kind, input_dims);
        let mut layers = Vec::with_capacity(spec.layers.len());
        for (i, ls) in spec.layers.iter().enumerate() {
            let layer = match *ls {
                LayerSpec::Conv {
                    kernel,
                    stride,
                    filters,
                    padding,
                } => {
                    let fan_in = shape.first().copied().unwrap_or(1) * kernel.0 * kernel.1;
                    Layer::Conv2d(Conv2d {
                        kernel,
                        stride,
                        padding,
                        weight: uniform(&[filters, fan_in], (6.0 / fan_in as f64).sqrt(), &mut rng),
                        bias: Tensor::zeros(&[filters]),
                    })
                }
                LayerSpec::Dense { units } => {
                    let fan_in: usize = shape.iter().product();
                    Layer::Dense(Dense {
                        weight: uniform(&[units, fan_in], (6.0 / fan_in as f64).sqrt(), &mut rng),
                        bias: Tensor::zeros(&[units]),
                    })
                }
                LayerSpec::Recurrent { hidden } => {
                    let features = shape.get(1).copied().unwrap_or(0);
                    let limit = 1.0 / (hidden as f64).sqrt();
                    Layer::Recurrent(Recurrent {
                        w_h: uniform(&[hidden, hidden], limit, &mut rng),
                        w_x: uniform(&[hidden, features], (1.0 / features.max(1) as f64).sqrt(), &mut rng),
                        bias: Tensor::zeros(&[hidden]),
                    })
                }
                LayerSpec::Elu { alpha } => Layer::Elu { alpha: T::lit(alpha) },
                LayerSpec::Relu => Layer::Relu,
                LayerSpec::MaxPool { kernel, stride } => Layer::MaxPool { kernel, stride },
                LayerSpec::Dropout { rate } => Layer::Dropout { rate },
                LayerSpec::Vectorize => match spec.layers.get(i + 1) {
                    Some(LayerSpec::Recurrent { .. }) => Layer::Unroll,
                    _ => Layer::Flatten,
                },
            };
            shape = layer.output_shape(&shape)?;
            layers.push(layer);
        }
        Ok(NetModel {
            spec: spec.clone(),
            input_dims,
            layers,
            meta: TrainingMeta {
                seed,
                ..TrainingMeta::default()
            },
        })
    }

    pub fn input_shape(&self) -> Vec<usize> {
        input_shape(self.spec.kind, self.input_dims)
    }

    /// Output shape after every layer, starting with the input shape.
    pub fn shape_trace(&self) -> Result<Vec<Vec<usize>>> {
        let mut shape = self.input_shape();
        let mut trace = vec![shape.clone()];
        for layer in &self.layers {
            shape = layer.output_shape(&shape)?;
            trace.push(shape.clone());
        }
        Ok(trace)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().flat_map(|l| l.params()).map(|p| p.len()).sum()
    }

    /// Index of the last dense layer, whose input is the penultimate vector.
    fn classifier_index(&self) -> usize {
        self.layers
            .iter()
            .rposition(|l| matches!(l, Layer::Dense(_)))
            .expect("validated specs end in a dense layer")
    }

    pub fn input_tensor(&self, frag: &Fragment) -> Result<Tensor<T>> {
        if (frag.rows, frag.cols) != self.input_dims {
            return Err(Error::dims(
                format!("{}x{} fragment", self.input_dims.0, self.input_dims.1),
                format!("{}x{}", frag.rows, frag.cols),
            ));
        }
        let data = frag.data.iter().map(|&v| T::lit(v as f64)).collect();
        Ok(Tensor::from_vec(&self.input_shape(), data))
    }

    /// Forward pass recording caches. `dropout_seed` seeds the masks in
    /// train mode and is ignored in eval mode.
    pub fn trace(&self, x: &Tensor<T>, mode: Mode, dropout_seed: u64) -> Result<Trace<T>> {
        if x.shape != self.input_shape() {
            return Err(Error::dims(format!("{:?}", self.input_shape()), format!("{:?}", x.shape)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
        let split = self.classifier_index();
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut penultimate = Vec::new();
        let mut act = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            if i == split {
                penultimate = act.data.clone();
            }
            let r = match mode {
                Mode::Train => Some(&mut rng),
                Mode::Eval => None,
            };
            let (y, cache) = layer.forward(&act, r)?;
            caches.push(cache);
            act = y;
        }
        Ok(Trace {
            output: ForwardOutput {
                logits: act.data,
                penultimate,
            },
            caches,
            mode,
        })
    }

    pub fn forward(&self, x: &Tensor<T>, mode: Mode, dropout_seed: u64) -> Result<ForwardOutput<T>> {
        Ok(self.trace(x, mode, dropout_seed)?.output)
    }

    /// Eval-mode logits and penultimate activations for one fragment.
    pub fn forward_fragment(&self, frag: &Fragment) -> Result<ForwardOutput<T>> {
        self.forward(&self.input_tensor(frag)?, Mode::Eval, 0)
    }

    /// Back-propagates `d_logits`, accumulating into `grads`; returns the
    /// gradient w.r.t. the input.
    pub fn backward_from(&self, trace: &Trace<T>, d_logits: &[T], grads: &mut Gradients<T>) -> Result<Tensor<T>> {
        if trace.mode != Mode::Train {
            return Err(Error::EvalModeBackward);
        }
        if d_logits.len() != trace.output.logits.len() {
            return Err(Error::dims(trace.output.logits.len(), d_logits.len()));
        }
        let mut dy = Tensor::from_vec(&[d_logits.len()], d_logits.to_vec());
        for ((layer, cache), g) in self.layers.iter().zip(&trace.caches).zip(&mut grads.params).rev() {
            dy = layer.backward(cache, &dy, g);
        }
        Ok(dy)
    }

    /// Softmax cross-entropy loss against `target`; gradients are
    /// accumulated into `grads`.
    pub fn backward(&self, trace: &Trace<T>, target: usize, grads: &mut Gradients<T>) -> Result<T> {
        let classes = trace.output.logits.len();
        if target >= classes {
            return Err(Error::invalid(format!("target {target} outside {classes} classes")));
        }
        let (loss, d) = softmax_cross_entropy(&trace.output.logits, target);
        self.backward_from(trace, &d, grads)?;
        Ok(loss)
    }

    pub fn params(&self) -> impl Iterator<Item = &Tensor<T>> {
        self.layers.iter().flat_map(|l| l.params())
    }

    pub fn cast<U: Real>(&self) -> NetModel<U> {
        let layers = self
            .layers
            .iter()
            .map(|l| match l {
                Layer::Conv2d(c) => Layer::Conv2d(Conv2d {
                    kernel: c.kernel,
                    stride: c.stride,
                    padding: c.padding,
                    weight: c.weight.cast(),
                    bias: c.bias.cast(),
                }),
                Layer::Dense(d) => Layer::Dense(Dense {
                    weight: d.weight.cast(),
                    bias: d.bias.cast(),
                }),
                Layer::Recurrent(r) => Layer::Recurrent(Recurrent {
                    w_h: r.w_h.cast(),
                    w_x: r.w_x.cast(),
                    bias: r.bias.cast(),
                }),
                Layer::Elu { alpha } => Layer::Elu { alpha: U::lit(alpha.as_f64()) },
                Layer::Relu => Layer::Relu,
                Layer::MaxPool { kernel, stride } => Layer::MaxPool {
                    kernel: *kernel,
                    stride: *stride,
                },
                Layer::Dropout { rate } => Layer::Dropout { rate: *rate },
                Layer::Flatten => Layer::Flatten,
                Layer::Unroll => Layer::Unroll,
            })
            .collect();
        NetModel {
            spec: self.spec.clone(),
            input_dims: self.input_dims,
            layers,
            meta: self.meta.clone(),
        }
    }
}
