use std::collections::HashSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::bundle::ModelBundle;
use super::config::{ExperimentConfig, SplitScheme};
use super::data::{derive_seed, holdout_assignment, load_dataset, split_subjects};
use super::metrics::{Confusion, RepetitionMetrics};
use super::prep::Preprocessor;
use super::report::{write_run, MethodSummary};
use crate::error::{Error, Result};
use crate::heads::{train_forest, train_msvm, ClassProbs, Head, HeadKind};
use crate::io::EegStream;
use crate::nn::{train_network, ForwardOutput, HeadFeatures, NetModel, NetworkSpec, TrainConfig};
use crate::prep::Fragment;
use crate::voting::vote_stream;

const SEED_REPETITION: u64 = 0;
const SEED_NETWORK: u64 = 1;
const SEED_HEAD: u64 = 2;
const SEED_NOISE: u64 = 3;
const SEED_HOLDOUT: u64 = 4;
const SEED_PICK: u64 = 5;

/// Preprocessed material for the whole experiment.
#[derive(Debug, Clone)]
pub struct PreparedData {
    /// Per subject: the training part (temporal split) or the whole stream.
    pub train: Vec<Vec<Fragment>>,
    /// Per subject: the test part (temporal split) or the whole stream.
    pub test: Vec<Vec<Fragment>>,
    pub scheme: SplitScheme,
    pub preprocessor: Preprocessor,
    pub streams: Vec<EegStream>,
}

/// Training fragments plus one fragment list per test stream.
#[derive(Debug, Clone)]
pub struct RepetitionData<'a> {
    pub train: Vec<&'a Fragment>,
    pub test: Vec<&'a [Fragment]>,
}

pub fn prepare(cfg: &ExperimentConfig, streams: Vec<EegStream>) -> Result<PreparedData> {
    let first = streams.first().ok_or_else(|| Error::Config("dataset contains no streams".into()))?;
    let mut ids = HashSet::new();
    if let Some(dup) = streams.iter().find(|s| !ids.insert(s.subject_id())) {
        return Err(Error::Config(format!("duplicate subject id {:?}", dup.subject_id())));
    }
    let prep_cfg = cfg.prep.bound_to(first);
    let preprocessor = Preprocessor::new(&prep_cfg, first.sample_rate())?;
    let frags = |list: &[EegStream]| -> Result<Vec<Vec<Fragment>>> {
        list.par_iter().map(|s| preprocessor.fragments(s)).collect()
    };
    let (train, test) = match cfg.split.scheme {
        SplitScheme::TemporalHalf => {
            let split = split_subjects(&streams, &cfg.split, cfg.prep.window, 0)?;
            (frags(&split.train)?, frags(&split.test)?)
        }
        SplitScheme::SubjectHoldout => {
            let all = frags(&streams)?;
            (all.clone(), all)
        }
    };
    Ok(PreparedData {
        train,
        test,
        scheme: cfg.split.scheme,
        preprocessor,
        streams,
    })
}

impl PreparedData {
    pub fn repetition(&self, cfg: &ExperimentConfig, seed: u64) -> Result<RepetitionData<'_>> {
        let membership = match self.scheme {
            SplitScheme::TemporalHalf => vec![None; self.streams.len()],
            SplitScheme::SubjectHoldout => {
                let classes: Vec<_> = self.streams.iter().map(EegStream::class).collect();
                holdout_assignment(&classes, cfg.split.train_fraction, derive_seed(seed, SEED_HOLDOUT, 0))?
                    .into_iter()
                    .map(Some)
                    .collect()
            }
        };
        let mut data = RepetitionData {
            train: Vec::new(),
            test: Vec::new(),
        };
        for (i, m) in membership.into_iter().enumerate() {
            if m != Some(false) {
                data.train.extend(&self.train[i]);
            }
            if m != Some(true) {
                data.test.push(&self.test[i]);
            }
        }
        Ok(data)
    }
}

/// Replaces a `rate` fraction of labels with a different class.
pub fn corrupt_labels(labels: &mut [usize], classes: usize, rate: f64, seed: u64) {
    if rate <= 0.0 || classes < 2 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for l in labels.iter_mut() {
        let flip = rng.random::<f64>() < rate;
        let offset = rng.random_range(1..classes);
        if flip {
            *l = (*l + offset) % classes;
        }
    }
}

fn outputs(model: &NetModel<f32>, frags: &[&Fragment]) -> Result<Vec<ForwardOutput>> {
    frags.par_iter().map(|f| model.forward_fragment(f)).collect()
}

fn head_inputs(outs: &[ForwardOutput], kind: HeadKind, requested: HeadFeatures) -> Vec<Vec<f64>> {
    let which = kind.feature_source(requested);
    outs.iter()
        .map(|o| o.features(which).iter().map(|&v| v as f64).collect())
        .collect()
}

fn fit_head(kind: HeadKind, cfg: &ExperimentConfig, x: &[Vec<f64>], y: &[usize], classes: usize, seed: u64) -> Result<Head> {
    Ok(match kind {
        HeadKind::Softmax => Head::Softmax,
        HeadKind::Msvm => Head::Svm(train_msvm(x, y, classes, &crate::heads::SvmParams { seed, ..cfg.svm.clone() })?),
        HeadKind::Rf => Head::Forest(train_forest(
            x,
            y,
            classes,
            &crate::heads::ForestParams {
                seed,
                ..cfg.forest.clone()
            },
        )?),
    })
}

/// Trained network and one head per configured head kind.
pub struct TrainedModels {
    pub model: NetModel<f32>,
    pub heads: Vec<Head>,
}

pub fn train_models(cfg: &ExperimentConfig, train: &[&Fragment], rep_seed: u64, repetition: usize) -> Result<TrainedModels> {
    let spec = NetworkSpec::template(cfg.network, &cfg.architecture);
    let classes = spec.classes();
    let mut labels: Vec<usize> = train.iter().map(|f| f.class.index()).collect();
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::invalid(format!("class id {bad} outside {classes} classes")).at_stage(repetition, "split"));
    }
    corrupt_labels(&mut labels, classes, cfg.label_noise, derive_seed(rep_seed, SEED_NOISE, 0));
    let owned: Vec<Fragment> = train.iter().map(|&f| f.clone()).collect();
    let train_cfg = TrainConfig {
        seed: derive_seed(rep_seed, SEED_NETWORK, 0),
        ..cfg.train.clone()
    };
    let model = train_network(&spec, &owned, &labels, &train_cfg).map_err(|e| e.at_stage(repetition, "train"))?;
    let outs = outputs(&model, train).map_err(|e| e.at_stage(repetition, "features"))?;
    let heads = cfg
        .heads
        .iter()
        .enumerate()
        .map(|(h, &kind)| {
            let x = head_inputs(&outs, kind, cfg.head_features);
            fit_head(kind, cfg, &x, &labels, classes, derive_seed(rep_seed, SEED_HEAD, h as u64))
                .map_err(|e| e.at_stage(repetition, "head"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrainedModels { model, heads })
}

/// One repetition: train, then score every head on the test streams.
pub fn run_repetition(cfg: &ExperimentConfig, data: &PreparedData, repetition: usize) -> Result<Vec<RepetitionMetrics>> {
    let rep_seed = derive_seed(cfg.seed, SEED_REPETITION, repetition as u64);
    let split = data.repetition(cfg, rep_seed).map_err(|e| e.at_stage(repetition, "split"))?;
    let trained = train_models(cfg, &split.train, rep_seed, repetition)?;
    let classes = NetworkSpec::template(cfg.network, &cfg.architecture).classes();

    let mut pick_rng = ChaCha8Rng::seed_from_u64(derive_seed(rep_seed, SEED_PICK, 0));
    let picks: Vec<usize> = split.test.iter().map(|s| pick_rng.random_range(0..s.len().max(1))).collect();
    let test_outputs = split
        .test
        .iter()
        .map(|s| outputs(&trained.model, &s.iter().collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.at_stage(repetition, "evaluate"))?;

    let mut out = Vec::with_capacity(trained.heads.len());
    for head in &trained.heads {
        let kind = head.kind();
        let mut stream = Confusion::new(classes);
        let mut fragment = Confusion::new(classes);
        let mut single_hits = 0usize;
        for ((frags, outs), &pick) in split.test.iter().zip(&test_outputs).zip(&picks) {
            let truth = frags
                .first()
                .ok_or_else(|| Error::invalid("test stream without fragments").at_stage(repetition, "evaluate"))?
                .class
                .index();
            let probs = head_inputs(outs, kind, cfg.head_features)
                .iter()
                .map(|x| head.probs(x))
                .collect::<Result<Vec<ClassProbs>>>()
                .map_err(|e| e.at_stage(repetition, "evaluate"))?;
            for p in &probs {
                fragment.add(truth, p.argmax());
            }
            let verdict = vote_stream(&probs).map_err(|e| e.at_stage(repetition, "vote"))?;
            stream.add(truth, verdict.predicted_class);
            if probs[pick].argmax() == truth {
                single_hits += 1;
            }
        }
        out.push(RepetitionMetrics {
            repetition,
            stream,
            fragment,
            single_fragment_accuracy: single_hits as f64 / split.test.len().max(1) as f64,
        });
    }
    Ok(out)
}

/// Runs every repetition on prepared data. Repetitions execute in parallel
/// but are aggregated in index order.
pub fn run_prepared(cfg: &ExperimentConfig, data: &PreparedData) -> Result<Vec<MethodSummary>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.resolved_threads())
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<Vec<RepetitionMetrics>>> =
        pool.install(|| (0..cfg.repetitions).into_par_iter().map(|r| run_repetition(cfg, data, r)).collect());
    let mut per_method: Vec<Vec<RepetitionMetrics>> = vec![Vec::new(); cfg.heads.len()];
    for r in results {
        for (slot, m) in per_method.iter_mut().zip(r?) {
            slot.push(m);
        }
    }
    Ok(cfg
        .methods()
        .into_iter()
        .zip(per_method)
        .map(|(method, reps)| MethodSummary::from_repetitions(method, cfg.prep.domain, cfg.prep.band, cfg.seed, reps))
        .collect())
}

/// Loads the dataset, preprocesses it and runs all repetitions.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<MethodSummary>> {
    cfg.validate()?;
    let streams = load_dataset(&cfg.data).map_err(|e| e.at_stage(0, "load"))?;
    let data = prepare(cfg, streams).map_err(|e| e.at_stage(0, "preprocess"))?;
    run_prepared(cfg, &data)
}

/// [`run_experiment`] plus `run.json`, `report.csv` and `report.md` in `out`.
pub fn run_experiment_to(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<MethodSummary>> {
    let rows = run_experiment(cfg)?;
    write_run(out, &rows)?;
    Ok(rows)
}

/// Trains one network and the first configured head on repetition 0's
/// training material.
pub fn train_bundle(cfg: &ExperimentConfig) -> Result<ModelBundle> {
    cfg.validate()?;
    let streams = load_dataset(&cfg.data).map_err(|e| e.at_stage(0, "load"))?;
    let data = prepare(cfg, streams).map_err(|e| e.at_stage(0, "preprocess"))?;
    let rep_seed = derive_seed(cfg.seed, SEED_REPETITION, 0);
    let split = data.repetition(cfg, rep_seed).map_err(|e| e.at_stage(0, "split"))?;
    let single = ExperimentConfig {
        heads: cfg.heads[..1].to_vec(),
        ..cfg.clone()
    };
    let mut trained = train_models(&single, &split.train, rep_seed, 0)?;
    Ok(ModelBundle {
        model: trained.model,
        head: trained.heads.remove(0),
        prep: data.preprocessor.config().clone(),
        head_features: cfg.head_features,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_corruption_rate() {
        let mut labels = vec![0usize; 10_000];
        corrupt_labels(&mut labels, 3, 0.1, 4);
        let flipped = labels.iter().filter(|&&l| l != 0).count();
        assert!((900..1100).contains(&flipped), "{flipped}");
        assert!(labels.iter().all(|&l| l < 3));
        let mut clean = vec![1usize; 50];
        corrupt_labels(&mut clean, 3, 0.0, 4);
        assert!(clean.iter().all(|&l| l == 1));
    }
}
