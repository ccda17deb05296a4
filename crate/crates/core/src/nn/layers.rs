//! Layer kernels with explicit forward caches and reverse-mode backward.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::real::{gemm, Real};
use super::spec::Padding;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// 2-D convolution over `[channels, rows, cols]` activations.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d<T> {
    pub kernel: (usize, usize),
    pub stride: usize,
    pub padding: Padding,
    /// `[out_channels, in_channels * kh * kw]`
    pub weight: Tensor<T>,
    /// `[out_channels]`
    pub bias: Tensor<T>,
}

/// Fully connected layer over the flattened input.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    /// `[units, inputs]`
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Elman cell `h' = tanh(W_h h + W_x x + b)` unrolled over `[steps, features]`;
/// emits the final hidden state.
#[derive(Debug, Clone, PartialEq)]
pub struct Recurrent<T> {
    /// `[hidden, hidden]`
    pub w_h: Tensor<T>,
    /// `[hidden, features]`
    pub w_x: Tensor<T>,
    pub bias: Tensor<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer<T> {
    Conv2d(Conv2d<T>),
    Dense(Dense<T>),
    Recurrent(Recurrent<T>),
    Elu { alpha: T },
    Relu,
    MaxPool { kernel: (usize, usize), stride: usize },
    Dropout { rate: f64 },
    /// Any shape → `[len]`.
    Flatten,
    /// `[channels, samples]` → `[samples, channels]` (one step per sample).
    Unroll,
}

/// Values saved by the forward pass for the backward pass.
#[derive(Debug, Clone)]
pub enum Cache<T> {
    Conv { cols: Vec<T>, in_shape: Vec<usize>, out_hw: (usize, usize), pad: (usize, usize) },
    Dense { input: Vec<T>, in_shape: Vec<usize> },
    Recurrent { input: Vec<T>, states: Vec<T>, steps: usize },
    Elu { input: Vec<T> },
    Relu { input: Vec<T> },
    MaxPool { argmax: Vec<usize>, in_shape: Vec<usize> },
    Dropout { mask: Option<Vec<T>> },
    Reshape { in_shape: Vec<usize> },
}

/// Output extent and leading pad along one axis.
pub fn conv_extent(input: usize, kernel: usize, stride: usize, padding: Padding) -> Option<(usize, usize)> {
    match padding {
        Padding::Same => {
            let out = input.div_ceil(stride);
            let total = ((out - 1) * stride + kernel).saturating_sub(input);
            Some((out, total / 2))
        }
        Padding::Valid => (input >= kernel).then(|| ((input - kernel) / stride + 1, 0)),
    }
}

/// Pooling extent: windows clipped at the border, at least one output.
pub fn pool_extent(input: usize, kernel: usize, stride: usize) -> usize {
    if input >= kernel {
        (input - kernel) / stride + 1
    } else {
        1
    }
}

pub fn elu<T: Real>(x: T, alpha: T) -> T {
    if x > T::zero() {
        x
    } else {
        alpha * (x.exp() - T::one())
    }
}

fn expect_rank(shape: &[usize], rank: usize, layer: &str) -> Result<()> {
    if shape.len() == rank {
        Ok(())
    } else {
        Err(Error::dims(format!("rank-{rank} input to {layer}"), format!("{shape:?}")))
    }
}

impl<T: Real> Layer<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Layer::Conv2d(_) => "conv",
            Layer::Dense(_) => "dense",
            Layer::Recurrent(_) => "recurrent",
            Layer::Elu { .. } => "elu",
            Layer::Relu => "relu",
            Layer::MaxPool { .. } => "maxpool",
            Layer::Dropout { .. } => "dropout",
            Layer::Flatten => "flatten",
            Layer::Unroll => "unroll",
        }
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        match self {
            Layer::Conv2d(c) => vec![&c.weight, &c.bias],
            Layer::Dense(d) => vec![&d.weight, &d.bias],
            Layer::Recurrent(r) => vec![&r.w_h, &r.w_x, &r.bias],
            _ => vec![],
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        match self {
            Layer::Conv2d(c) => vec![&mut c.weight, &mut c.bias],
            Layer::Dense(d) => vec![&mut d.weight, &mut d.bias],
            Layer::Recurrent(r) => vec![&mut r.w_h, &mut r.w_x, &mut r.bias],
            _ => vec![],
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match self {
            Layer::Conv2d(c) => {
                expect_rank(input, 3, "conv")?;
                let cin = c.weight.shape[1] / (c.kernel.0 * c.kernel.1);
                if input[0] != cin {
                    return Err(Error::dims(format!("{cin} input channels"), input[0]));
                }
                let (oh, _) = conv_extent(input[1], c.kernel.0, c.stride, c.padding)
                    .ok_or_else(|| Error::dims("rows >= kernel", input[1]))?;
                let (ow, _) = conv_extent(input[2], c.kernel.1, c.stride, c.padding)
                    .ok_or_else(|| Error::dims("cols >= kernel", input[2]))?;
                Ok(vec![c.weight.shape[0], oh, ow])
            }
            Layer::Dense(d) => {
                let n: usize = input.iter().product();
                if n != d.weight.shape[1] {
                    return Err(Error::dims(format!("{} dense inputs", d.weight.shape[1]), n));
                }
                Ok(vec![d.weight.shape[0]])
            }
            Layer::Recurrent(r) => {
                expect_rank(input, 2, "recurrent")?;
                if input[1] != r.w_x.shape[1] {
                    return Err(Error::dims(format!("{} features per step", r.w_x.shape[1]), input[1]));
                }
                Ok(vec![r.w_h.shape[0]])
            }
            Layer::MaxPool { kernel, stride } => {
                expect_rank(input, 3, "maxpool")?;
                Ok(vec![
                    input[0],
                    pool_extent(input[1], kernel.0, *stride),
                    pool_extent(input[2], kernel.1, *stride),
                ])
            }
            Layer::Flatten => Ok(vec![input.iter().product()]),
            Layer::Unroll => {
                expect_rank(input, 2, "unroll")?;
                Ok(vec![input[1], input[0]])
            }
            Layer::Elu { .. } | Layer::Relu | Layer::Dropout { .. } => Ok(input.to_vec()),
        }
    }

    /// `rng` is `Some` in train mode (dropout active) and `None` in eval mode.
    pub fn forward(&self, x: &Tensor<T>, rng: Option<&mut ChaCha8Rng>) -> Result<(Tensor<T>, Cache<T>)> {
        let out_shape = self.output_shape(&x.shape)?;
        match self {
            Layer::Conv2d(c) => Ok(conv_forward(c, x, &out_shape)),
            Layer::Dense(d) => {
                let (units, inputs) = (d.weight.shape[0], d.weight.shape[1]);
                let mut y = d.bias.data.clone();
                gemm(false, false, units, inputs, 1, &d.weight.data, &x.data, T::one(), &mut y);
                Ok((
                    Tensor::from_vec(&out_shape, y),
                    Cache::Dense {
                        input: x.data.clone(),
                        in_shape: x.shape.clone(),
                    },
                ))
            }
            Layer::Recurrent(r) => Ok(recurrent_forward(r, x)),
            Layer::Elu { alpha } => {
                let y = x.data.iter().map(|&v| elu(v, *alpha)).collect();
                Ok((Tensor::from_vec(&out_shape, y), Cache::Elu { input: x.data.clone() }))
            }
            Layer::Relu => {
                let y = x.data.iter().map(|&v| v.max(T::zero())).collect();
                Ok((Tensor::from_vec(&out_shape, y), Cache::Relu { input: x.data.clone() }))
            }
            Layer::MaxPool { kernel, stride } => Ok(pool_forward(x, *kernel, *stride, &out_shape)),
            Layer::Dropout { rate } => match rng {
                None => Ok((x.clone(), Cache::Dropout { mask: None })),
                Some(rng) => {
                    let keep = T::lit(1.0 / (1.0 - rate));
                    let mask: Vec<T> = (0..x.len())
                        .map(|_| if rng.random::<f64>() < *rate { T::zero() } else { keep })
                        .collect();
                    let y = x.data.iter().zip(&mask).map(|(&v, &m)| v * m).collect();
                    Ok((Tensor::from_vec(&out_shape, y), Cache::Dropout { mask: Some(mask) }))
                }
            },
            Layer::Flatten => Ok((
                x.clone().reshaped(&out_shape),
                Cache::Reshape { in_shape: x.shape.clone() },
            )),
            Layer::Unroll => {
                let (rows, cols) = (x.shape[0], x.shape[1]);
                let mut y = vec![T::zero(); x.len()];
                for r in 0..rows {
                    for c in 0..cols {
                        y[c * rows + r] = x.data[r * cols + c];
                    }
                }
                Ok((Tensor::from_vec(&out_shape, y), Cache::Reshape { in_shape: x.shape.clone() }))
            }
        }
    }

    /// Accumulates parameter gradients into `grads` (aligned with
    /// [`Layer::params`]) and returns the gradient w.r.t. the layer input.
    pub fn backward(&self, cache: &Cache<T>, dy: &Tensor<T>, grads: &mut [Tensor<T>]) -> Tensor<T> {
        match (self, cache) {
            (Layer::Conv2d(c), Cache::Conv { cols, in_shape, out_hw, pad }) => {
                conv_backward(c, cols, in_shape, *out_hw, *pad, dy, grads)
            }
            (Layer::Dense(d), Cache::Dense { input, in_shape }) => {
                let (units, inputs) = (d.weight.shape[0], d.weight.shape[1]);
                let (gw, rest) = grads.split_at_mut(1);
                gemm(false, false, units, 1, inputs, &dy.data, input, T::one(), &mut gw[0].data);
                for (g, &v) in rest[0].data.iter_mut().zip(&dy.data) {
                    *g += v;
                }
                let mut dx = vec![T::zero(); inputs];
                gemm(true, false, inputs, units, 1, &d.weight.data, &dy.data, T::zero(), &mut dx);
                Tensor::from_vec(in_shape, dx)
            }
            (Layer::Recurrent(r), Cache::Recurrent { input, states, steps }) => {
                recurrent_backward(r, input, states, *steps, dy, grads)
            }
            (Layer::Elu { alpha }, Cache::Elu { input }) => {
                let dx = input
                    .iter()
                    .zip(&dy.data)
                    .map(|(&x, &g)| if x > T::zero() { g } else { g * *alpha * x.exp() })
                    .collect();
                Tensor::from_vec(&dy.shape, dx)
            }
            (Layer::Relu, Cache::Relu { input }) => {
                let dx = input
                    .iter()
                    .zip(&dy.data)
                    .map(|(&x, &g)| if x > T::zero() { g } else { T::zero() })
                    .collect();
                Tensor::from_vec(&dy.shape, dx)
            }
            (Layer::MaxPool { .. }, Cache::MaxPool { argmax, in_shape }) => {
                let mut dx = Tensor::zeros(in_shape);
                for (&i, &g) in argmax.iter().zip(&dy.data) {
                    dx.data[i] += g;
                }
                dx
            }
            (Layer::Dropout { .. }, Cache::Dropout { mask }) => match mask {
                None => dy.clone(),
                Some(mask) => {
                    let dx = dy.data.iter().zip(mask).map(|(&g, &m)| g * m).collect();
                    Tensor::from_vec(&dy.shape, dx)
                }
            },
            (Layer::Flatten, Cache::Reshape { in_shape }) => dy.clone().reshaped(in_shape),
            (Layer::Unroll, Cache::Reshape { in_shape }) => {
                let (rows, cols) = (in_shape[0], in_shape[1]);
                let mut dx = vec![T::zero(); dy.len()];
                for r in 0..rows {
                    for c in 0..cols {
                        dx[r * cols + c] = dy.data[c * rows + r];
                    }
                }
                Tensor::from_vec(in_shape, dx)
            }
            (layer, _) => panic!("cache does not belong to a {} layer", layer.name()),
        }
    }
}

fn conv_forward<T: Real>(c: &Conv2d<T>, x: &Tensor<T>, out_shape: &[usize]) -> (Tensor<T>, Cache<T>) {
    let (cin, h, w) = (x.shape[0], x.shape[1], x.shape[2]);
    let (kh, kw) = c.kernel;
    let (cout, oh, ow) = (out_shape[0], out_shape[1], out_shape[2]);
    let (_, pad_top) = conv_extent(h, kh, c.stride, c.padding).expect("validated");
    let (_, pad_left) = conv_extent(w, kw, c.stride, c.padding).expect("validated");
    let positions = oh * ow;
    let patch = cin * kh * kw;

    let mut cols = vec![T::zero(); patch * positions];
    for ci in 0..cin {
        for ki in 0..kh {
            for kj in 0..kw {
                let row = &mut cols[((ci * kh + ki) * kw + kj) * positions..][..positions];
                for oi in 0..oh {
                    let ii = (oi * c.stride + ki) as isize - pad_top as isize;
                    if ii < 0 || ii >= h as isize {
                        continue;
                    }
                    let src = &x.data[(ci * h + ii as usize) * w..][..w];
                    for oj in 0..ow {
                        let jj = (oj * c.stride + kj) as isize - pad_left as isize;
                        if jj >= 0 && jj < w as isize {
                            row[oi * ow + oj] = src[jj as usize];
                        }
                    }
                }
            }
        }
    }

    let mut y = vec![T::zero(); cout * positions];
    for (o, chunk) in y.chunks_mut(positions).enumerate() {
        chunk.fill(c.bias.data[o]);
    }
    gemm(false, false, cout, patch, positions, &c.weight.data, &cols, T::one(), &mut y);
    (
        Tensor::from_vec(out_shape, y),
        Cache::Conv {
            cols,
            in_shape: x.shape.clone(),
            out_hw: (oh, ow),
            pad: (pad_top, pad_left),
        },
    )
}

fn conv_backward<T: Real>(
    c: &Conv2d<T>,
    cols: &[T],
    in_shape: &[usize],
    (oh, ow): (usize, usize),
    (pad_top, pad_left): (usize, usize),
    dy: &Tensor<T>,
    grads: &mut [Tensor<T>],
) -> Tensor<T> {
    let (cin, h, w) = (in_shape[0], in_shape[1], in_shape[2]);
    let (kh, kw) = c.kernel;
    let cout = c.weight.shape[0];
    let positions = oh * ow;
    let patch = cin * kh * kw;

    let (gw, gb) = grads.split_at_mut(1);
    gemm(false, true, cout, positions, patch, &dy.data, cols, T::one(), &mut gw[0].data);
    for (o, g) in gb[0].data.iter_mut().enumerate() {
        *g += dy.data[o * positions..(o + 1) * positions].iter().copied().sum::<T>();
    }

    let mut dcols = vec![T::zero(); patch * positions];
    gemm(true, false, patch, cout, positions, &c.weight.data, &dy.data, T::zero(), &mut dcols);
    let mut dx = Tensor::zeros(in_shape);
    for ci in 0..cin {
        for ki in 0..kh {
            for kj in 0..kw {
                let row = &dcols[((ci * kh + ki) * kw + kj) * positions..][..positions];
                for oi in 0..oh {
                    let ii = (oi * c.stride + ki) as isize - pad_top as isize;
                    if ii < 0 || ii >= h as isize {
                        continue;
                    }
                    let dst = &mut dx.data[(ci * h + ii as usize) * w..][..w];
                    for oj in 0..ow {
                        let jj = (oj * c.stride + kj) as isize - pad_left as isize;
                        if jj >= 0 && jj < w as isize {
                            dst[jj as usize] += row[oi * ow + oj];
                        }
                    }
                }
            }
        }
    }
    dx
}

fn pool_forward<T: Real>(
    x: &Tensor<T>,
    kernel: (usize, usize),
    stride: usize,
    out_shape: &[usize],
) -> (Tensor<T>, Cache<T>) {
    let (ch, h, w) = (x.shape[0], x.shape[1], x.shape[2]);
    let (oh, ow) = (out_shape[1], out_shape[2]);
    let mut y = Vec::with_capacity(ch * oh * ow);
    let mut argmax = Vec::with_capacity(ch * oh * ow);
    for c in 0..ch {
        for oi in 0..oh {
            let rows = oi * stride..(oi * stride + kernel.0).min(h);
            for oj in 0..ow {
                let cols = oj * stride..(oj * stride + kernel.1).min(w);
                let mut best = (c * h + rows.start) * w + cols.start;
                for i in rows.clone() {
                    for j in cols.clone() {
                        let idx = (c * h + i) * w + j;
                        if x.data[idx] > x.data[best] {
                            best = idx;
                        }
                    }
                }
                y.push(x.data[best]);
                argmax.push(best);
            }
        }
    }
    (
        Tensor::from_vec(out_shape, y),
        Cache::MaxPool {
            argmax,
            in_shape: x.shape.clone(),
        },
    )
}

fn recurrent_forward<T: Real>(r: &Recurrent<T>, x: &Tensor<T>) -> (Tensor<T>, Cache<T>) {
    let (steps, features) = (x.shape[0], x.shape[1]);
    let hidden = r.w_h.shape[0];
    let mut pre = vec![T::zero(); steps * hidden];
    gemm(false, true, steps, features, hidden, &x.data, &r.w_x.data, T::zero(), &mut pre);
    let mut states = vec![T::zero(); (steps + 1) * hidden];
    for t in 0..steps {
        let (done, next) = states.split_at_mut((t + 1) * hidden);
        let prev = &done[t * hidden..];
        let cur = &mut next[..hidden];
        for (i, v) in cur.iter_mut().enumerate() {
            *v = pre[t * hidden + i] + r.bias.data[i];
        }
        gemm(false, false, hidden, hidden, 1, &r.w_h.data, prev, T::one(), cur);
        for v in cur.iter_mut() {
            *v = v.tanh();
        }
    }
    let out = states[steps * hidden..].to_vec();
    (
        Tensor::from_vec(&[hidden], out),
        Cache::Recurrent {
            input: x.data.clone(),
            states,
            steps,
        },
    )
}

fn recurrent_backward<T: Real>(
    r: &Recurrent<T>,
    input: &[T],
    states: &[T],
    steps: usize,
    dy: &Tensor<T>,
    grads: &mut [Tensor<T>],
) -> Tensor<T> {
    let hidden = r.w_h.shape[0];
    let features = r.w_x.shape[1];
    let mut dpre = vec![T::zero(); steps * hidden];
    let mut dh = dy.data.clone();
    for t in (0..steps).rev() {
        let h = &states[(t + 1) * hidden..(t + 2) * hidden];
        let row = &mut dpre[t * hidden..(t + 1) * hidden];
        for i in 0..hidden {
            row[i] = dh[i] * (T::one() - h[i] * h[i]);
        }
        gemm(true, false, hidden, hidden, 1, &r.w_h.data, row, T::zero(), &mut dh);
    }
    let [g_wh, g_wx, g_b] = grads else {
        panic!("recurrent layer has three parameter tensors");
    };
    gemm(true, false, hidden, steps, hidden, &dpre, &states[..steps * hidden], T::one(), &mut g_wh.data);
    gemm(true, false, hidden, steps, features, &dpre, input, T::one(), &mut g_wx.data);
    for t in 0..steps {
        for (g, &v) in g_b.data.iter_mut().zip(&dpre[t * hidden..(t + 1) * hidden]) {
            *g += v;
        }
    }
    let mut dx = vec![T::zero(); steps * features];
    gemm(false, false, steps, hidden, features, &dpre, &r.w_x.data, T::zero(), &mut dx);
    Tensor::from_vec(&[steps, features], dx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elu_basics() {
        assert_eq!(elu(0.0f64, 1.0), 0.0);
        assert_eq!(elu(2.0f64, 0.5), 2.0);
        for alpha in [0.1, 1.0, 3.0] {
            let left = elu(-1e-9f64, alpha);
            assert!(left.abs() < 1e-8 * alpha.max(1.0));
        }
        assert!((elu(-1.0f64, 1.0) - ((-1.0f64).exp() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn extents() {
        assert_eq!(conv_extent(64, 3, 2, Padding::Same), Some((32, 0)));
        assert_eq!(conv_extent(25, 3, 1, Padding::Same), Some((25, 1)));
        assert_eq!(conv_extent(2, 3, 1, Padding::Valid), None);
        assert_eq!(pool_extent(25, 2, 2), 12);
        assert_eq!(pool_extent(1, 2, 2), 1);
    }

    #[test]
    fn pool_constant_and_max() {
        let layer: Layer<f64> = Layer::MaxPool { kernel: (2, 2), stride: 2 };
        let x = Tensor::from_vec(&[1, 4, 4], vec![3.0; 16]);
        let (y, _) = layer.forward(&x, None).unwrap();
        assert_eq!(y.shape, vec![1, 2, 2]);
        assert!(y.data.iter().all(|&v| v == 3.0));
        let x = Tensor::from_vec(&[1, 2, 3], vec![1.0, 5.0, 2.0, 4.0, 0.0, 9.0]);
        let (y, _) = layer.forward(&x, None).unwrap();
        assert_eq!(y.data, vec![5.0]);
    }

    #[test]
    fn dropout_eval_is_identity() {
        let layer: Layer<f32> = Layer::Dropout { rate: 0.25 };
        let x = Tensor::from_vec(&[5], vec![1.0, -2.0, 3.5, 0.0, 7.0]);
        let (y, _) = layer.forward(&x, None).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn conv_identity_kernel() {
        let mut weight = Tensor::zeros(&[1, 9]);
        weight.data[4] = 1.0;
        let layer = Layer::Conv2d(Conv2d {
            kernel: (3, 3),
            stride: 1,
            padding: Padding::Same,
            weight,
            bias: Tensor::from_vec(&[1], vec![0.5f64]),
        });
        let x = Tensor::from_vec(&[1, 2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let (y, _) = layer.forward(&x, None).unwrap();
        assert_eq!(y.data, vec![1.5, 2.5, 3.5, 4.5, 5.5, 6.5]);
    }

    #[test]
    fn recurrent_step_matches_formula() {
        let r = Recurrent {
            w_h: Tensor::from_vec(&[2, 2], vec![0.5, -0.25, 0.1, 0.3]),
            w_x: Tensor::from_vec(&[2, 1], vec![1.0, -1.0]),
            bias: Tensor::from_vec(&[2], vec![0.1, 0.2]),
        };
        let layer = Layer::Recurrent(r);
        let x = Tensor::from_vec(&[2, 1], vec![0.7f64, -0.4]);
        let (y, _) = layer.forward(&x, None).unwrap();
        let h1 = [(0.7f64 + 0.1).tanh(), (-0.7f64 + 0.2).tanh()];
        let h2 = [
            (0.5 * h1[0] - 0.25 * h1[1] - 0.4 + 0.1).tanh(),
            (0.1 * h1[0] + 0.3 * h1[1] + 0.4 + 0.2).tanh(),
        ];
        assert!((y.data[0] - h2[0]).abs() < 1e-15 && (y.data[1] - h2[1]).abs() < 1e-15);
    }
}
