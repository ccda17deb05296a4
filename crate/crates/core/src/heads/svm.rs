use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_classes, check_features, softmax_probs, ClassProbs, ProbSource};
use crate::error::{Error, Result};
use crate::nn::Reader;

pub const SVM_TAG: &[u8; 4] = b"MSVM";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-4,
            epochs: 100,
            lr: 0.01,
            seed: 0,
        }
    }
}

/// Linear multi-class SVM on standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    /// `classes × dim`, row-major.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub lambda: f64,
    pub classes: usize,
    pub dim: usize,
    /// Per-feature centering applied before scoring.
    pub mean: Vec<f64>,
    /// Per-feature scaling applied after centering.
    pub scale: Vec<f64>,
}

impl SvmModel {
    fn standardize(&self, x: &[f64], out: &mut [f64]) {
        for (((o, &v), m), s) in out.iter_mut().zip(x).zip(&self.mean).zip(&self.scale) {
            *o = (v - m) * s;
        }
    }

    fn raw_scores(&self, z: &[f64], out: &mut [f64]) {
        for c in 0..self.classes {
            let w = &self.weight[c * self.dim..(c + 1) * self.dim];
            out[c] = self.bias[c] + w.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::dims(format!("{} features", self.dim), x.len()));
        }
        let mut z = vec![0.0; self.dim];
        self.standardize(x, &mut z);
        let mut s = vec![0.0; self.classes];
        self.raw_scores(&z, &mut s);
        Ok(s)
    }

    /// Softmax of the scores; preserves the score argmax.
    pub fn probs(&self, x: &[f64]) -> Result<ClassProbs> {
        let mut p = softmax_probs(&self.scores(x)?)?;
        p.source = ProbSource::SvmCalibrated;
        Ok(p)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(super::argmax(&self.scores(x)?))
    }

    pub fn weight_norm(&self) -> f64 {
        self.weight.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for v in [self.classes, self.dim] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        out.extend_from_slice(&self.lambda.to_le_bytes());
        for arr in [&self.weight, &self.bias, &self.mean, &self.scale] {
            for v in arr.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let mut r = Reader::new(bytes, origin);
        let classes = r.u64()? as usize;
        let dim = r.u64()? as usize;
        let expected = classes
            .checked_mul(dim)
            .and_then(|n| n.checked_add(classes + 2 * dim + 1))
            .and_then(|n| n.checked_mul(8));
        if expected != Some(bytes.len() - 16) {
            return Err(Error::format(origin, "svm section has the wrong length"));
        }
        let mut take = |n: usize| -> Result<Vec<f64>> {
            (0..n)
                .map(|_| Ok(f64::from_le_bytes(r.take(8)?.try_into().unwrap())))
                .collect()
        };
        let lambda = take(1)?[0];
        Ok(SvmModel {
            weight: take(classes * dim)?,
            bias: take(classes)?,
            mean: take(dim)?,
            scale: take(dim)?,
            lambda,
            classes,
            dim,
        })
    }
}

/// Minimizes the Crammer-Singer multi-class hinge loss plus `lambda ||W||^2`
/// by seeded stochastic subgradient steps. The penalty is applied as an
/// exact proximal shrink after every step, so very large `lambda` drives the
/// weights to zero without overshooting. Biases are not penalized.
pub fn train_msvm(features: &[Vec<f64>], labels: &[usize], classes: usize, params: &SvmParams) -> Result<SvmModel> {
    let dim = check_features(features, labels)?;
    check_classes(labels, classes)?;
    if !(params.lambda >= 0.0 && params.lambda.is_finite()) || !(params.lr > 0.0 && params.lr.is_finite()) {
        return Err(Error::invalid("svm lambda must be >= 0 and lr > 0, both finite"));
    }
    let n = features.len() as f64;
    let mut mean = vec![0.0; dim];
    for x in features {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v / n;
        }
    }
    let mut scale = vec![0.0; dim];
    for x in features {
        for ((s, v), m) in scale.iter_mut().zip(x).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    for s in &mut scale {
        *s = if *s > 1e-24 { 1.0 / s.sqrt() } else { 1.0 };
    }
    let mut model = SvmModel {
        weight: vec![0.0; classes * dim],
        bias: vec![0.0; classes],
        lambda: params.lambda,
        classes,
        dim,
        mean,
        scale,
    };
    let z: Vec<Vec<f64>> = features
        .iter()
        .map(|x| {
            let mut z = vec![0.0; dim];
            model.standardize(x, &mut z);
            z
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..z.len()).collect();
    let mut scores = vec![0.0; classes];
    let mut step = 0usize;
    for epoch in 1..=params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            step += 1;
            let lr = params.lr / (1.0 + step as f64 * params.lr * params.lambda.min(1.0));
            model.raw_scores(&z[i], &mut scores);
            let y = labels[i];
            let mut rival = usize::MAX;
            let mut worst = f64::NEG_INFINITY;
            for (c, &s) in scores.iter().enumerate() {
                if c != y && s + 1.0 > worst {
                    worst = s + 1.0;
                    rival = c;
                }
            }
            if worst - scores[y] > 0.0 {
                for k in 0..dim {
                    model.weight[rival * dim + k] -= lr * z[i][k];
                    model.weight[y * dim + k] += lr * z[i][k];
                }
                model.bias[rival] -= lr;
                model.bias[y] += lr;
            }
            let shrink = 1.0 / (1.0 + 2.0 * lr * params.lambda);
            for w in &mut model.weight {
                *w *= shrink;
            }
        }
        if !model.weight.iter().chain(&model.bias).all(|v| v.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corners() -> (Vec<Vec<f64>>, Vec<usize>) {
        let centres = [[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]];
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (c, centre) in centres.iter().enumerate() {
            for j in 0..10 {
                let d = (j as f64 - 4.5) * 0.02;
                x.push(vec![centre[0] + d, centre[1] - d]);
                y.push(c);
            }
        }
        (x, y)
    }

    #[test]
    fn separable_corners() {
        let (x, y) = corners();
        let m = train_msvm(&x, &y, 3, &SvmParams::default()).unwrap();
        for (xi, &yi) in x.iter().zip(&y) {
            assert_eq!(m.predict(xi).unwrap(), yi);
            let p = m.probs(xi).unwrap();
            assert!(p.on_simplex());
            assert_eq!(p.argmax(), yi);
        }
    }

    #[test]
    fn huge_lambda_shrinks_weights() {
        let (x, y) = corners();
        let small = train_msvm(&x, &y, 3, &SvmParams::default()).unwrap();
        let big = train_msvm(&x, &y, 3, &SvmParams { lambda: 1e6, ..Default::default() }).unwrap();
        assert!(big.weight_norm() < 1e-3 * small.weight_norm());
        let s = big.scores(&x[0]).unwrap();
        for (a, b) in s.iter().zip(&big.bias) {
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn single_class_is_rejected_and_bytes_round_trip() {
        let (x, y) = corners();
        assert!(matches!(
            train_msvm(&x[..10], &y[..10], 3, &SvmParams::default()),
            Err(Error::MissingClass(1))
        ));
        let m = train_msvm(&x, &y, 3, &SvmParams { epochs: 3, ..Default::default() }).unwrap();
        assert_eq!(SvmModel::from_bytes(&m.to_bytes(), Path::new("s")).unwrap(), m);
    }
}
