use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::stream::{ClassId, EegStream};
use crate::error::{Error, Result};
use crate::prep::{BandName, BandSpec};

/// Spectral signature of one class of synthetic subjects.
///
/// Each weighted band contributes `weight` units of power spread evenly
/// over its frequency bins, on top of a `1/f^beta` background carrying one
/// unit of power. Channels share a common source with weight `correlation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassProfile {
    pub class: ClassId,
    pub band_weights: BTreeMap<BandName, f64>,
    pub noise_exponent: f64,
    pub correlation: f64,
}

impl ClassProfile {
    pub fn new(class: ClassId, weights: &[(BandName, f64)], noise_exponent: f64, correlation: f64) -> Self {
        ClassProfile {
            class,
            band_weights: weights.iter().copied().collect(),
            noise_exponent,
            correlation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.band_weights.values().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("band weights must be finite and non-negative"));
        }
        if !self.band_weights.values().any(|w| *w > 0.0) {
            return Err(Error::invalid("profile needs at least one positive band weight"));
        }
        if self.band_weights.contains_key(&BandName::Broadband) {
            return Err(Error::invalid("profiles weight the classic bands, not broadband"));
        }
        if !(0.0..1.0).contains(&self.correlation) {
            return Err(Error::invalid(format!(
                "channel correlation {} outside [0, 1)",
                self.correlation
            )));
        }
        if !self.noise_exponent.is_finite() || self.noise_exponent < 0.0 {
            return Err(Error::invalid("noise exponent must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Three mutually distinct profiles for FES, HC and CHR, dominated by
/// theta, alpha and beta activity respectively.
pub fn default_profiles() -> Vec<ClassProfile> {
    use BandName::*;
    vec![
        ClassProfile::new(
            ClassId::FES,
            &[(Delta, 2.0), (Theta, 6.0), (Alpha, 1.0), (Beta, 0.5), (Gamma, 0.2)],
            1.5,
            0.4,
        ),
        ClassProfile::new(
            ClassId::HC,
            &[(Delta, 1.0), (Theta, 1.0), (Alpha, 8.0), (Beta, 1.0), (Gamma, 0.2)],
            1.0,
            0.3,
        ),
        ClassProfile::new(
            ClassId::CHR,
            &[(Delta, 1.0), (Theta, 1.5), (Alpha, 1.5), (Beta, 5.0), (Gamma, 1.0)],
            1.0,
            0.5,
        ),
    ]
}

/// Generates a `channels × (K·T)` stream from `profile`. Pure in its arguments.
pub fn synth_stream(
    profile: &ClassProfile,
    subject_id: &str,
    channels: usize,
    sample_rate: u32,
    seconds: u32,
    seed: u64,
) -> Result<EegStream> {
    profile.validate()?;
    if channels == 0 || sample_rate == 0 || seconds == 0 {
        return Err(Error::invalid("channels, sample rate and duration must be positive"));
    }
    let n = sample_rate as usize * seconds as usize;
    let power = power_spectrum(profile, n, sample_rate)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(n);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        for (k, &p) in power.iter().enumerate() {
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            if p > 0.0 {
                // x[t] = a cos + b sin with var(a) = var(b) = p.
                let s = p.sqrt() / 2.0;
                spec[k] = Complex64::new(a * s, -b * s);
                spec[n - k] = spec[k].conj();
            }
        }
        ifft.process(&mut spec);
        spec.into_iter().map(|c| c.re).collect()
    };

    let common = draw(&mut rng);
    let own_gain = (1.0 - profile.correlation).sqrt();
    let common_gain = profile.correlation.sqrt();
    let mut data = Vec::with_capacity(channels * n);
    for _ in 0..channels {
        let own = draw(&mut rng);
        data.extend(
            own.iter()
                .zip(&common)
                .map(|(o, c)| (own_gain * o + common_gain * c) as f32),
        );
    }
    EegStream::new(subject_id, profile.class, sample_rate, channels, data)
}

/// The 1/f background starts here (the lowest rhythm band edge), so slow
/// drifts do not dominate short windows.
pub const BACKGROUND_FLOOR_HZ: f64 = 0.5;

/// Expected per-bin power for bins `0..=n/2`; DC and Nyquist are left empty.
fn power_spectrum(profile: &ClassProfile, n: usize, sample_rate: u32) -> Result<Vec<f64>> {
    let half = n / 2;
    let df = sample_rate as f64 / n as f64;
    let bins: Vec<usize> = (1..half).collect();
    if bins.is_empty() {
        return Err(Error::invalid("stream too short for spectral synthesis"));
    }
    let mut power = vec![0.0; half + 1];

    let floor = if bins.iter().any(|&k| k as f64 * df >= BACKGROUND_FLOOR_HZ) {
        BACKGROUND_FLOOR_HZ
    } else {
        0.0
    };
    let background: Vec<f64> = bins
        .iter()
        .map(|&k| {
            let f = k as f64 * df;
            if f >= floor {
                f.powf(-profile.noise_exponent)
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = background.iter().sum();
    for (&k, b) in bins.iter().zip(&background) {
        power[k] = b / total;
    }

    for (&band, &weight) in &profile.band_weights {
        if weight == 0.0 {
            continue;
        }
        let spec = BandSpec::canonical(band);
        let members: Vec<usize> = bins
            .iter()
            .copied()
            .filter(|&k| spec.contains(k as f64 * df))
            .collect();
        if members.is_empty() {
            return Err(Error::invalid(format!(
                "{band} band has no frequency bins at {sample_rate} Hz over {n} samples"
            )));
        }
        let per_bin = weight / members.len() as f64;
        for k in members {
            power[k] += per_bin;
        }
    }
    Ok(power)
}
