use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::EegStream;
use crate::prep::{
    apply_fir, broadband_filter, design_band_fir, design_band_fir_auto, fragment_stream, normalize_fragment,
    to_frequency_domain, BandName, BandSpec, Domain, FirFilter, Fragment, FragmentationParams,
};

/// Everything that turns a raw stream into network-ready fragments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepConfig {
    /// Window length `q` in samples.
    pub window: usize,
    pub band: BandName,
    pub domain: Domain,
    pub broadband_low: f64,
    pub broadband_high: f64,
    /// FIR length for rhythm bands; `None` picks the shortest design that
    /// meets the response mask.
    pub fir_taps: Option<usize>,
    /// Expected stream geometry; `None` accepts whatever the data has.
    pub sample_rate: Option<u32>,
    pub channels: Option<usize>,
}

impl Default for PrepConfig {
    fn default() -> Self {
        let bb = BandSpec::canonical(BandName::Broadband);
        PrepConfig {
            window: 100,
            band: BandName::Broadband,
            domain: Domain::Time,
            broadband_low: bb.low,
            broadband_high: bb.high,
            fir_taps: None,
            sample_rate: None,
            channels: None,
        }
    }
}

impl PrepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Config("window must be positive".into()));
        }
        if !(self.broadband_low >= 0.0 && self.broadband_low < self.broadband_high) {
            return Err(Error::Config(format!(
                "broadband edges {}..{} Hz are not increasing",
                self.broadband_low, self.broadband_high
            )));
        }
        Ok(())
    }

    /// Pins the geometry to that of `stream`.
    pub fn bound_to(&self, stream: &EegStream) -> PrepConfig {
        PrepConfig {
            sample_rate: Some(stream.sample_rate()),
            channels: Some(stream.channels()),
            ..self.clone()
        }
    }

    /// Errors when a model prepared with `self` would see different inputs
    /// under `other`.
    pub fn check_compatible(&self, other: &PrepConfig) -> Result<()> {
        let mut diffs = Vec::new();
        if self.window != other.window {
            diffs.push(format!("window {} vs {}", self.window, other.window));
        }
        if self.band != other.band {
            diffs.push(format!("band {} vs {}", self.band, other.band));
        }
        if self.domain != other.domain {
            diffs.push(format!("domain {} vs {}", self.domain, other.domain));
        }
        if (self.broadband_low, self.broadband_high) != (other.broadband_low, other.broadband_high) {
            diffs.push("broadband edges differ".into());
        }
        if self.fir_taps != other.fir_taps {
            diffs.push(format!("fir_taps {:?} vs {:?}", self.fir_taps, other.fir_taps));
        }
        if let (Some(a), Some(b)) = (self.sample_rate, other.sample_rate) {
            if a != b {
                return Err(Error::RateMismatch { expected: a, found: b });
            }
        }
        if let (Some(a), Some(b)) = (self.channels, other.channels) {
            if a != b {
                diffs.push(format!("channels {a} vs {b}"));
            }
        }
        if diffs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("preprocessing mismatch: {}", diffs.join(", "))))
        }
    }
}

/// A [`PrepConfig`] with its filters designed for one sample rate.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    config: PrepConfig,
    sample_rate: u32,
    fir: Option<FirFilter>,
}

impl Preprocessor {
    pub fn new(config: &PrepConfig, sample_rate: u32) -> Result<Self> {
        config.validate()?;
        if let Some(expected) = config.sample_rate {
            if expected != sample_rate {
                return Err(Error::RateMismatch {
                    expected,
                    found: sample_rate,
                });
            }
        }
        let fir = match config.band {
            BandName::Broadband => None,
            band => {
                let spec = BandSpec::canonical(band);
                Some(match config.fir_taps {
                    Some(taps) => design_band_fir(&spec, sample_rate, taps)?,
                    None => design_band_fir_auto(&spec, sample_rate)?,
                })
            }
        };
        Ok(Preprocessor {
            config: config.clone(),
            sample_rate,
            fir,
        })
    }

    pub fn config(&self) -> &PrepConfig {
        &self.config
    }

    pub fn fir(&self) -> Option<&FirFilter> {
        self.fir.as_ref()
    }

    /// Filtered stream, before windowing.
    pub fn filter(&self, stream: &EegStream) -> Result<EegStream> {
        if stream.sample_rate() != self.sample_rate {
            return Err(Error::RateMismatch {
                expected: self.sample_rate,
                found: stream.sample_rate(),
            });
        }
        if let Some(ch) = self.config.channels {
            if ch != stream.channels() {
                return Err(Error::dims(format!("{ch} channels"), stream.channels()));
            }
        }
        let filtered = broadband_filter(stream, self.config.broadband_low, self.config.broadband_high)?;
        match &self.fir {
            Some(fir) => apply_fir(&filtered, fir),
            None => Ok(filtered),
        }
    }

    /// Filter, cut into windows, transform to the configured domain and
    /// normalize each window.
    pub fn fragments(&self, stream: &EegStream) -> Result<Vec<Fragment>> {
        let filtered = self.filter(stream)?;
        let frags = fragment_stream(&filtered, &FragmentationParams::new(self.config.window))?;
        frags
            .iter()
            .map(|f| {
                let f = match self.config.domain {
                    Domain::Time => f.clone(),
                    Domain::Frequency => to_frequency_domain(f)?,
                };
                normalize_fragment(&f)
            })
            .collect()
    }
}
