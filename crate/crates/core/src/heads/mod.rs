//! Classifier heads over network features: softmax, linear multi-class SVM
//! and random forest. Every head emits a [`ClassProbs`] on the simplex.

mod forest;
mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::HeadFeatures;

pub use forest::{train_forest, ForestModel, ForestParams, Node, Tree, FOREST_TAG};
pub use svm::{train_msvm, SvmModel, SvmParams, SVM_TAG};

/// Tolerance for simplex membership checks.
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbSource {
    Softmax,
    Forest,
    SvmCalibrated,
}

/// Per-class probabilities for one fragment.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProbs {
    pub probs: Vec<f64>,
    pub source: ProbSource,
}

impl ClassProbs {
    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }

    pub fn on_simplex(&self) -> bool {
        on_simplex(&self.probs)
    }
}

pub fn on_simplex(p: &[f64]) -> bool {
    !p.is_empty() && p.iter().all(|&v| v >= 0.0 && v.is_finite()) && (p.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Softmax probabilities of a score vector.
pub fn softmax_probs(logits: &[f64]) -> Result<ClassProbs> {
    if logits.is_empty() {
        return Err(Error::invalid("empty logit vector"));
    }
    if let Some(i) = logits.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite logit at index {i}")));
    }
    Ok(ClassProbs {
        probs: crate::nn::softmax(logits),
        source: ProbSource::Softmax,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    Softmax,
    Msvm,
    Rf,
}

impl HeadKind {
    pub const ALL: [HeadKind; 3] = [HeadKind::Softmax, HeadKind::Msvm, HeadKind::Rf];

    pub fn as_str(self) -> &'static str {
        match self {
            HeadKind::Softmax => "softmax",
            HeadKind::Msvm => "msvm",
            HeadKind::Rf => "rf",
        }
    }

    /// Which network output this head reads. Softmax always reads the logits.
    pub fn feature_source(self, requested: HeadFeatures) -> HeadFeatures {
        match self {
            HeadKind::Softmax => HeadFeatures::Logits,
            _ => requested,
        }
    }
}

impl fmt::Display for HeadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HeadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "softmax" => Ok(HeadKind::Softmax),
            "msvm" | "svm" => Ok(HeadKind::Msvm),
            "rf" | "forest" => Ok(HeadKind::Rf),
            _ => Err(Error::invalid(format!("unknown head {s:?}"))),
        }
    }
}

/// A trained head.
#[derive(Debug, Clone, PartialEq)]
pub enum Head {
    Softmax,
    Svm(SvmModel),
    Forest(ForestModel),
}

impl Head {
    pub fn kind(&self) -> HeadKind {
        match self {
            Head::Softmax => HeadKind::Softmax,
            Head::Svm(_) => HeadKind::Msvm,
            Head::Forest(_) => HeadKind::Rf,
        }
    }

    pub fn probs(&self, features: &[f64]) -> Result<ClassProbs> {
        match self {
            Head::Softmax => softmax_probs(features),
            Head::Svm(m) => m.probs(features),
            Head::Forest(m) => m.probs(features),
        }
    }
}

pub(crate) fn check_classes(labels: &[usize], classes: usize) -> Result<()> {
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::invalid(format!("label {bad} outside {classes} classes")));
    }
    for c in 0..classes {
        if !labels.contains(&c) {
            return Err(Error::MissingClass(c));
        }
    }
    Ok(())
}

pub(crate) fn check_features(features: &[Vec<f64>], labels: &[usize]) -> Result<usize> {
    if features.len() != labels.len() {
        return Err(Error::dims(format!("{} labels", features.len()), labels.len()));
    }
    let dim = features.first().map(Vec::len).ok_or_else(|| Error::invalid("empty training set"))?;
    if let Some(f) = features.iter().find(|f| f.len() != dim) {
        return Err(Error::dims(dim, f.len()));
    }
    if features.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite training feature"));
    }
    Ok(dim)
}
