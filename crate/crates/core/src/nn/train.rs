use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{Gradients, Mode, NetModel};
use super::real::Real;
use super::spec::NetworkSpec;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::prep::Fragment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: Optimizer::Adam,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch: 64,
            epochs: 20,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return Err(Error::Config("batch must be positive".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be finite and >= 0", self.lr)));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// First/second moment state for the optimizer.
#[derive(Debug, Clone)]
pub struct OptimizerState<T> {
    m: Gradients<T>,
    v: Gradients<T>,
    step: i32,
}

impl<T: Real> OptimizerState<T> {
    pub fn new(model: &NetModel<T>) -> Self {
        OptimizerState {
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
            step: 0,
        }
    }

    /// Applies one update with mean-batch gradients `g`.
    pub fn apply(&mut self, model: &mut NetModel<T>, g: &Gradients<T>, cfg: &TrainConfig) {
        self.step += 1;
        let lr = T::lit(cfg.lr);
        let (b1, b2) = (T::lit(cfg.beta1), T::lit(cfg.beta2));
        let c1 = T::one() - b1.powi(self.step);
        let c2 = T::one() - b2.powi(self.step);
        let eps = T::lit(cfg.epsilon);
        for (li, layer) in model.layers.iter_mut().enumerate() {
            for (pi, p) in layer.params_mut().into_iter().enumerate() {
                let grad = &g.params[li][pi].data;
                match cfg.optimizer {
                    Optimizer::Sgd => {
                        for (w, &d) in p.data.iter_mut().zip(grad) {
                            *w -= lr * d;
                        }
                    }
                    Optimizer::Adam => {
                        let m = &mut self.m.params[li][pi].data;
                        let v = &mut self.v.params[li][pi].data;
                        for i in 0..grad.len() {
                            m[i] = b1 * m[i] + (T::one() - b1) * grad[i];
                            v[i] = b2 * v[i] + (T::one() - b2) * grad[i] * grad[i];
                            let mh = m[i] / c1;
                            let vh = v[i] / c2;
                            p.data[i] -= lr * mh / (vh.sqrt() + eps);
                        }
                    }
                }
            }
        }
    }
}

/// Trains `spec` on fragments with the given class labels.
///
/// Every epoch shuffles the sample order, and every sample draws its own
/// dropout seed from the training generator, so the result depends only on
/// `(spec, data, labels, cfg)`.
pub fn train_network(
    spec: &NetworkSpec,
    fragments: &[Fragment],
    labels: &[usize],
    cfg: &TrainConfig,
) -> Result<NetModel<f32>> {
    cfg.validate()?;
    if fragments.len() != labels.len() {
        return Err(Error::dims(format!("{} labels", fragments.len()), labels.len()));
    }
    let first = fragments.first().ok_or_else(|| Error::invalid("empty training set"))?;
    let classes = spec.classes();
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::invalid(format!("label {bad} outside {classes} classes")));
    }
    for c in 0..classes {
        if !labels.contains(&c) {
            return Err(Error::MissingClass(c));
        }
    }
    let mut model = NetModel::<f32>::new(spec, (first.rows, first.cols), cfg.seed)?;
    let inputs = fragments
        .iter()
        .map(|f| model.input_tensor(f))
        .collect::<Result<Vec<Tensor<f32>>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7472_6169_6e00_0000);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut opt = OptimizerState::new(&model);
    let mut grads = Gradients::zeros_like(&model);
    let mut curve = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0f64;
        for batch in order.chunks(cfg.batch) {
            grads.clear();
            for &i in batch {
                let dropout_seed: u64 = rng.random();
                let trace = model.trace(&inputs[i], Mode::Train, dropout_seed)?;
                let loss = model.backward(&trace, labels[i], &mut grads)?;
                total += loss as f64;
            }
            if !total.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            grads.scale(1.0 / batch.len() as f32);
            opt.apply(&mut model, &grads, cfg);
        }
        let mean = total / inputs.len() as f64;
        if !mean.is_finite() || !model.params().all(Tensor::is_finite) {
            return Err(Error::Divergence { epoch });
        }
        curve.push(mean);
    }
    model.meta.epochs = cfg.epochs;
    model.meta.loss_curve = curve;
    Ok(model)
}
