use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::io::EegStream;

/// Butterworth order applied at each band edge. Four poles give 24 dB/octave
/// per pass; the forward-backward pass squares the magnitude response.
pub const EDGE_ORDER: usize = 4;

/// Direct-form II transposed biquad, `a0` normalized to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn lowpass(cutoff: f64, q: f64, sample_rate: f64) -> Biquad {
        let w0 = 2.0 * PI * cutoff / sample_rate;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * q);
        // 1 - cos(w0) without cancellation at tiny w0.
        let one_minus_cos = 2.0 * (w0 / 2.0).sin().powi(2);
        let a0 = 1.0 + alpha;
        Biquad {
            b: [one_minus_cos / 2.0 / a0, one_minus_cos / a0, one_minus_cos / 2.0 / a0],
            a: [-2.0 * cos / a0, (1.0 - alpha) / a0],
        }
    }

    fn highpass(cutoff: f64, q: f64, sample_rate: f64) -> Biquad {
        let w0 = 2.0 * PI * cutoff / sample_rate;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * q);
        let one_plus_cos = 1.0 + cos;
        let a0 = 1.0 + alpha;
        Biquad {
            b: [one_plus_cos / 2.0 / a0, -one_plus_cos / a0, one_plus_cos / 2.0 / a0],
            a: [-2.0 * cos / a0, (1.0 - alpha) / a0],
        }
    }

    /// Largest pole magnitude.
    pub fn pole_radius(&self) -> f64 {
        let [a1, a2] = self.a;
        let disc = a1 * a1 - 4.0 * a2;
        if disc < 0.0 {
            a2.sqrt()
        } else {
            let s = disc.sqrt();
            ((-a1 + s) / 2.0).abs().max(((-a1 - s) / 2.0).abs())
        }
    }

    fn is_stable(&self) -> bool {
        let [a1, a2] = self.a;
        a2.abs() < 1.0 && a1.abs() < 1.0 + a2
    }

    /// DC gain `H(1)`.
    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// State that holds the output steady for a constant input `u`.
    fn steady_state(&self, u: f64) -> [f64; 2] {
        let y = self.dc_gain() * u;
        let z2 = self.b[2] * u - self.a[1] * y;
        let z1 = self.b[1] * u - self.a[0] * y + z2;
        [z1, z2]
    }
}

/// Cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
}

impl SosFilter {
    /// Butterworth band-pass: `EDGE_ORDER` poles high-pass at `low`
    /// (omitted when `low == 0`) and `EDGE_ORDER` poles low-pass at `high`.
    pub fn butterworth_bandpass(low: f64, high: f64, sample_rate: u32) -> Result<SosFilter> {
        let fs = sample_rate as f64;
        if !(low.is_finite() && high.is_finite()) || low < 0.0 || low >= high || high >= fs / 2.0 {
            return Err(Error::invalid(format!(
                "band {low}-{high} Hz invalid at {sample_rate} Hz (need 0 <= low < high < {})",
                fs / 2.0
            )));
        }
        let qs: Vec<f64> = (1..=EDGE_ORDER / 2)
            .map(|k| 1.0 / (2.0 * ((2 * k - 1) as f64 * PI / (2 * EDGE_ORDER) as f64).sin()))
            .collect();
        let mut sections = Vec::new();
        if low > 0.0 {
            sections.extend(qs.iter().map(|&q| Biquad::highpass(low, q, fs)));
        }
        sections.extend(qs.iter().map(|&q| Biquad::lowpass(high, q, fs)));
        if let Some(bad) = sections.iter().find(|s| !s.is_stable()) {
            return Err(Error::UnstableFilter(format!(
                "section with a = {:?} (pole radius {}) for {low}-{high} Hz at {sample_rate} Hz",
                bad.a,
                bad.pole_radius()
            )));
        }
        Ok(SosFilter { sections })
    }

    /// Total number of poles.
    pub fn order(&self) -> usize {
        2 * self.sections.len()
    }

    pub fn max_pole_radius(&self) -> f64 {
        self.sections.iter().map(Biquad::pole_radius).fold(0.0, f64::max)
    }

    /// Magnitude response at `freq` Hz.
    pub fn magnitude(&self, freq: f64, sample_rate: f64) -> f64 {
        let w = 2.0 * PI * freq / sample_rate;
        let z1 = (-w).sin_cos();
        let z1 = (z1.1, z1.0); // e^{-jw}
        let z2 = (z1.0 * z1.0 - z1.1 * z1.1, 2.0 * z1.0 * z1.1);
        self.sections
            .iter()
            .map(|s| {
                let num = (s.b[0] + s.b[1] * z1.0 + s.b[2] * z2.0, s.b[1] * z1.1 + s.b[2] * z2.1);
                let den = (1.0 + s.a[0] * z1.0 + s.a[1] * z2.0, s.a[0] * z1.1 + s.a[1] * z2.1);
                (num.0.hypot(num.1)) / (den.0.hypot(den.1))
            })
            .product()
    }

    /// One causal pass starting from the steady state for `x[0]`.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            let Some(&first) = y.first() else { break };
            let [mut z1, mut z2] = s.steady_state(first);
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b[0] * input + z1;
                z1 = s.b[1] * input - s.a[0] * out + z2;
                z2 = s.b[2] * input - s.a[1] * out;
                *v = out;
            }
        }
        y
    }

    /// Forward-backward (zero-phase) filtering with odd-reflection padding.
    ///
    /// The pad is as long as the slowest pole needs to decay by 1e-9,
    /// capped at `x.len() - 1`.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return self.filter(x);
        }
        let r = self.max_pole_radius();
        let wanted = if r > 0.0 && r < 1.0 {
            ((1e-9f64).ln() / r.ln()).ceil() as usize
        } else {
            3 * self.order()
        };
        let pad = wanted.max(3 * self.order()).min(n - 1);

        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let mut y = self.filter(&ext);
        y.reverse();
        let mut y = self.filter(&y);
        y.reverse();
        y.drain(..pad);
        y.truncate(n);
        y
    }
}

/// Zero-phase band-pass of every channel between `low` and `high` Hz.
pub fn broadband_filter(stream: &EegStream, low: f64, high: f64) -> Result<EegStream> {
    let sos = SosFilter::butterworth_bandpass(low, high, stream.sample_rate())?;
    let mut out = Vec::with_capacity(stream.data().len());
    for c in 0..stream.channels() {
        let x: Vec<f64> = stream.channel(c).iter().map(|&v| v as f64).collect();
        out.extend(sos.filtfilt(&x).into_iter().map(|v| v as f32));
    }
    stream.with_data(out)
}
