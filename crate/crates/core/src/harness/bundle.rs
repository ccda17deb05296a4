use std::path::Path;

use serde::{Deserialize, Serialize};

use super::prep::{PrepConfig, Preprocessor};
use crate::error::{Error, Result};
use crate::heads::{ClassProbs, ForestModel, Head, HeadKind, SvmModel, FOREST_TAG, SVM_TAG};
use crate::io::EegStream;
use crate::nn::{self, HeadFeatures, ModelFile, NetModel};
use crate::prep::Fragment;
use crate::voting::{vote_stream, StreamVerdict};

pub const PREP_TAG: &[u8; 4] = b"PREP";

#[derive(Serialize, Deserialize)]
struct PrepSection {
    prep: PrepConfig,
    head: HeadKind,
    head_features: HeadFeatures,
}

/// A trained network, its head and the preprocessing it expects.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub model: NetModel<f32>,
    pub head: Head,
    pub prep: PrepConfig,
    pub head_features: HeadFeatures,
}

impl ModelBundle {
    pub fn features(&self, frag: &Fragment) -> Result<Vec<f64>> {
        let out = self.model.forward_fragment(frag)?;
        let which = self.head.kind().feature_source(self.head_features);
        Ok(out.features(which).iter().map(|&v| v as f64).collect())
    }

    pub fn fragment_probs(&self, frag: &Fragment) -> Result<ClassProbs> {
        self.head.probs(&self.features(frag)?)
    }

    pub fn to_file(&self) -> Result<ModelFile> {
        let prep = serde_json::to_vec(&PrepSection {
            prep: self.prep.clone(),
            head: self.head.kind(),
            head_features: self.head_features,
        })
        .map_err(|e| Error::invalid(e.to_string()))?;
        let mut sections = vec![(*PREP_TAG, prep)];
        match &self.head {
            Head::Softmax => {}
            Head::Svm(m) => sections.push((*SVM_TAG, m.to_bytes())),
            Head::Forest(m) => sections.push((*FOREST_TAG, m.to_bytes())),
        }
        Ok(ModelFile {
            model: self.model.clone(),
            sections,
        })
    }

    pub fn from_file(file: ModelFile, origin: &Path) -> Result<Self> {
        let prep = file
            .section(PREP_TAG)
            .ok_or_else(|| Error::format(origin, "missing preprocessing section"))?;
        let prep: PrepSection =
            serde_json::from_slice(prep).map_err(|e| Error::format(origin, format!("preprocessing: {e}")))?;
        let missing = |tag: &[u8; 4]| Error::format(origin, format!("missing {} section", String::from_utf8_lossy(tag)));
        let head = match prep.head {
            HeadKind::Softmax => Head::Softmax,
            HeadKind::Msvm => Head::Svm(SvmModel::from_bytes(
                file.section(SVM_TAG).ok_or_else(|| missing(SVM_TAG))?,
                origin,
            )?),
            HeadKind::Rf => Head::Forest(ForestModel::from_bytes(
                file.section(FOREST_TAG).ok_or_else(|| missing(FOREST_TAG))?,
                origin,
            )?),
        };
        Ok(ModelBundle {
            model: file.model,
            head,
            prep: prep.prep,
            head_features: prep.head_features,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        nn::save(&self.to_file()?, path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_file(nn::load(path)?, path)
    }
}

/// Preprocesses `stream` exactly as at training time, classifies every
/// fragment and votes. `config` is the caller's preprocessing setup; it
/// must agree with the bundle's.
pub fn evaluate_stream(bundle: &ModelBundle, stream: &EegStream, config: &PrepConfig) -> Result<StreamVerdict> {
    bundle.prep.check_compatible(config)?;
    let prep = Preprocessor::new(&bundle.prep, stream.sample_rate())?;
    let probs = prep
        .fragments(stream)?
        .iter()
        .map(|f| bundle.fragment_probs(f))
        .collect::<Result<Vec<_>>>()?;
    vote_stream(&probs)
}

/// [`evaluate_stream`] with the bundle's own preprocessing.
pub fn predict_stream(bundle: &ModelBundle, stream: &EegStream) -> Result<StreamVerdict> {
    evaluate_stream(bundle, stream, &bundle.prep)
}
