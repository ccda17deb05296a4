use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{DataSource, SplitConfig, SplitScheme, SyntheticConfig};
use crate::error::{Error, Result};
use crate::io::{default_profiles, read_stream, synth_stream, ClassId, EegStream};

/// Independent child seed for `(purpose, index)` under `master`.
pub fn derive_seed(master: u64, purpose: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(purpose);
    rng.set_word_pos(u128::from(index) * 2);
    rng.random()
}

pub fn synthetic_dataset(cfg: &SyntheticConfig) -> Result<Vec<EegStream>> {
    let mut out = Vec::new();
    let profiles = default_profiles();
    if cfg.classes == 0 || cfg.classes > profiles.len() {
        return Err(Error::invalid(format!("synthetic classes must lie in 1..={}", profiles.len())));
    }
    for profile in profiles.into_iter().take(cfg.classes) {
        let class = profile.class;
        for i in 0..cfg.subjects_per_class {
            let id = format!("{}-{:02}", class.name(), i + 1);
            let seed = derive_seed(cfg.seed, class.0 as u64, i as u64);
            out.push(synth_stream(&profile, &id, cfg.channels, cfg.sample_rate, cfg.seconds, seed)?);
        }
    }
    Ok(out)
}

/// Stream paths named by a manifest: every `*.meta.json` in a directory
/// (sorted), or the non-comment lines of a list file.
pub fn manifest_paths(manifest: &Path) -> Result<Vec<PathBuf>> {
    if manifest.is_dir() {
        let mut paths: Vec<PathBuf> = fs::read_dir(manifest)
            .map_err(|e| Error::io(manifest, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with(".meta.json"))
            .collect();
        paths.sort();
        return Ok(paths);
    }
    let text = fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| base.join(l))
        .collect())
}

pub fn load_dataset(source: &DataSource) -> Result<Vec<EegStream>> {
    let streams = match source {
        DataSource::Synthetic(cfg) => synthetic_dataset(cfg)?,
        DataSource::Manifest(path) => manifest_paths(path)?
            .iter()
            .map(read_stream)
            .collect::<Result<Vec<_>>>()?,
    };
    if streams.is_empty() {
        return Err(Error::Config("dataset contains no streams".into()));
    }
    let rate = streams[0].sample_rate();
    if let Some(s) = streams.iter().find(|s| s.sample_rate() != rate) {
        return Err(Error::RateMismatch {
            expected: rate,
            found: s.sample_rate(),
        });
    }
    Ok(streams)
}

/// Streams on each side of a split. Under the temporal scheme both sides
/// hold one (partial) stream per subject.
#[derive(Debug, Clone)]
pub struct SplitStreams {
    pub train: Vec<EegStream>,
    pub test: Vec<EegStream>,
}

/// Partitions recordings into training and test material.
///
/// `temporal-half` keeps the first `floor(fraction * n_fragments)` windows
/// of every subject for training and the remaining whole windows for
/// testing. `subject-holdout` assigns `floor(fraction * n)` subjects of
/// each class to training, chosen with `seed`.
pub fn split_subjects(streams: &[EegStream], split: &SplitConfig, window: usize, seed: u64) -> Result<SplitStreams> {
    let f = split.train_fraction;
    if !(f > 0.0 && f < 1.0) || window == 0 {
        return Err(Error::invalid(format!("train fraction {f} must lie in (0, 1)")));
    }
    match split.scheme {
        SplitScheme::TemporalHalf => {
            let mut train = Vec::with_capacity(streams.len());
            let mut test = Vec::with_capacity(streams.len());
            for s in streams {
                let frags = s.samples() / window;
                let n_train = (f * frags as f64).floor() as usize;
                if n_train == 0 || n_train >= frags {
                    return Err(Error::invalid(format!(
                        "subject {}: {frags} windows cannot be split at fraction {f}",
                        s.subject_id()
                    )));
                }
                train.push(s.slice_samples(0, n_train * window)?);
                test.push(s.slice_samples(n_train * window, frags * window)?);
            }
            Ok(SplitStreams { train, test })
        }
        SplitScheme::SubjectHoldout => {
            let classes: Vec<ClassId> = streams.iter().map(EegStream::class).collect();
            let is_train = holdout_assignment(&classes, f, seed)?;
            let (train, test): (Vec<_>, Vec<_>) = streams.iter().cloned().zip(is_train).partition(|(_, t)| *t);
            Ok(SplitStreams {
                train: train.into_iter().map(|(s, _)| s).collect(),
                test: test.into_iter().map(|(s, _)| s).collect(),
            })
        }
    }
}

/// Training membership per subject: `floor(fraction * n)` subjects of every
/// class, drawn with `seed`.
pub fn holdout_assignment(classes: &[ClassId], fraction: f64, seed: u64) -> Result<Vec<bool>> {
    let mut by_class: BTreeMap<ClassId, Vec<usize>> = BTreeMap::new();
    for (i, &c) in classes.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_train = vec![false; classes.len()];
    for (class, mut members) in by_class {
        let n_train = (fraction * members.len() as f64).floor() as usize;
        if n_train == 0 || n_train >= members.len() {
            return Err(Error::invalid(format!(
                "class {class}: {} subjects cannot be split at fraction {fraction}",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for &i in &members[..n_train] {
            is_train[i] = true;
        }
    }
    Ok(is_train)
}
