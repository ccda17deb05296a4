use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::prep::PrepConfig;
use crate::error::{Error, Result};
use crate::heads::{ForestParams, HeadKind, SvmParams};
use crate::nn::{HeadFeatures, NetworkKind, SpecOptions, TrainConfig};

/// A network family paired with a classifier head, e.g. `CNNV+RF`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Method {
    pub network: NetworkKind,
    pub head: HeadKind,
}

impl Method {
    /// All nine pairings, softmax rows first.
    pub fn all() -> Vec<Method> {
        HeadKind::ALL
            .iter()
            .flat_map(|&head| NetworkKind::ALL.iter().map(move |&network| Method { network, head }))
            .collect()
    }

    /// Table position: head first, then network.
    pub fn rank(&self) -> usize {
        let h = HeadKind::ALL.iter().position(|&h| h == self.head).unwrap();
        let n = NetworkKind::ALL.iter().position(|&n| n == self.network).unwrap();
        h * 3 + n
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}V", self.network)?;
        match self.head {
            HeadKind::Softmax => Ok(()),
            HeadKind::Msvm => f.write_str("+mSVM"),
            HeadKind::Rf => f.write_str("+RF"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (net, head) = match s.split_once('+') {
            Some((n, h)) => (n, h.parse()?),
            None => (s, HeadKind::Softmax),
        };
        Ok(Method {
            network: net.parse()?,
            head,
        })
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitScheme {
    /// Per subject: the first part of the recording trains, the rest tests.
    TemporalHalf,
    /// Whole subjects go to one side, chosen per class with the repetition seed.
    SubjectHoldout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub scheme: SplitScheme,
    pub train_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            scheme: SplitScheme::TemporalHalf,
            train_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    /// Number of built-in class profiles used, taken in id order.
    pub classes: usize,
    pub subjects_per_class: usize,
    pub channels: usize,
    pub sample_rate: u32,
    pub seconds: u32,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            classes: 3,
            subjects_per_class: 12,
            channels: 16,
            sample_rate: 250,
            seconds: 30,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSource {
    /// Directory of `.eeg` / `.meta.json` pairs, or a text file listing
    /// stream paths (relative to the file) one per line.
    Manifest(PathBuf),
    Synthetic(SyntheticConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkKind,
    /// Heads evaluated on the same trained network; one report row each.
    pub heads: Vec<HeadKind>,
    pub head_features: HeadFeatures,
    pub repetitions: usize,
    pub seed: u64,
    /// Fraction of training labels replaced by a different random class.
    pub label_noise: f64,
    /// Worker threads for repetitions; 0 defers to `EEGCLF_THREADS`, then
    /// to all cores.
    pub threads: usize,
    pub data: DataSource,
    pub split: SplitConfig,
    pub prep: PrepConfig,
    pub architecture: SpecOptions,
    pub train: TrainConfig,
    pub forest: ForestParams,
    pub svm: SvmParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            network: NetworkKind::Cnn,
            heads: vec![HeadKind::Rf],
            head_features: HeadFeatures::Logits,
            repetitions: 10,
            seed: 0,
            label_noise: 0.0,
            threads: 0,
            data: DataSource::Synthetic(SyntheticConfig::default()),
            split: SplitConfig::default(),
            prep: PrepConfig::default(),
            architecture: SpecOptions::default(),
            train: TrainConfig::default(),
            forest: ForestParams::default(),
            svm: SvmParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML file; a relative manifest path is resolved against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let DataSource::Manifest(m) = &mut cfg.data {
            if m.is_relative() {
                if let Some(dir) = path.parent() {
                    *m = dir.join(&*m);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn methods(&self) -> Vec<Method> {
        self.heads
            .iter()
            .map(|&head| Method {
                network: self.network,
                head,
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.heads.is_empty() {
            return bad("at least one head is required".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be >= 1".into());
        }
        let f = self.split.train_fraction;
        if !(f > 0.0 && f < 1.0) {
            return bad(format!("train_fraction {f} must lie in (0, 1)"));
        }
        if !(0.0..1.0).contains(&self.label_noise) {
            return bad(format!("label_noise {} must lie in [0, 1)", self.label_noise));
        }
        if let DataSource::Synthetic(s) = &self.data {
            if s.subjects_per_class == 0 || s.channels == 0 || s.sample_rate == 0 || s.seconds == 0 {
                return bad("synthetic dataset dimensions must be positive".into());
            }
            let available = crate::io::default_profiles().len();
            if s.classes == 0 || s.classes > available {
                return bad(format!("synthetic classes must lie in 1..={available}, got {}", s.classes));
            }
        }
        self.prep.validate()?;
        self.train.validate()
    }

    /// Worker count: explicit setting, then `EEGCLF_THREADS`, then all cores.
    pub fn resolved_threads(&self) -> usize {
        if self.threads > 0 {
            return self.threads;
        }
        std::env::var("EEGCLF_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}
