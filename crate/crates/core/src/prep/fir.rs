use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::bands::BandSpec;
use crate::error::{Error, Result};
use crate::io::EegStream;

/// Smallest tap count accepted by [`design_band_fir`].
pub const MIN_TAPS: usize = 31;
/// Upper bound used by [`design_band_fir_auto`].
pub const MAX_TAPS: usize = 16_001;

/// Acceptance mask for band designs: passband within ±`passband_ripple_db`
/// (and at most that peak-to-peak), stopbands below `-stopband_atten_db`
/// outside `low / stop_edge_factor` and `high * stop_edge_factor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseMask {
    pub passband_ripple_db: f64,
    pub stopband_atten_db: f64,
    pub stop_edge_factor: f64,
}

impl Default for ResponseMask {
    fn default() -> Self {
        ResponseMask {
            passband_ripple_db: 1.0,
            stopband_atten_db: 30.0,
            stop_edge_factor: 1.5,
        }
    }
}

impl ResponseMask {
    /// `(lower stop edge, upper stop edge)`; `None` when the stopband is empty.
    pub fn stop_edges(&self, band: &BandSpec, sample_rate: u32) -> (Option<f64>, Option<f64>) {
        let nyquist = sample_rate as f64 / 2.0;
        let lower = (band.low > 0.0).then(|| band.low / self.stop_edge_factor);
        let upper = Some(band.high * self.stop_edge_factor).filter(|&f| f < nyquist);
        (lower, upper)
    }
}

/// Measured response of a design against its mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseReport {
    pub passband_min_db: f64,
    pub passband_max_db: f64,
    /// Highest stopband gain (dB); `-inf` if there is no stopband.
    pub stopband_max_db: f64,
}

impl ResponseReport {
    pub fn ripple_db(&self) -> f64 {
        self.passband_max_db - self.passband_min_db
    }

    pub fn meets(&self, mask: &ResponseMask) -> bool {
        self.ripple_db() <= mask.passband_ripple_db
            && self.passband_min_db >= -mask.passband_ripple_db
            && self.passband_max_db <= mask.passband_ripple_db
            && self.stopband_max_db <= -mask.stopband_atten_db
    }
}

/// Linear-phase (type I) band-pass FIR filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    taps: Vec<f64>,
    band: BandSpec,
    sample_rate: u32,
}

impl FirFilter {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn band(&self) -> BandSpec {
        self.band
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn group_delay(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    /// Zero-phase amplitude `A(f)`; `|H(f)| = |A(f)|`.
    pub fn amplitude(&self, freq: f64) -> f64 {
        let w = 2.0 * PI * freq / self.sample_rate as f64;
        let mid = self.group_delay();
        let mut acc = self.taps[mid];
        for n in 1..=mid {
            acc += 2.0 * self.taps[mid - n] * (n as f64 * w).cos();
        }
        acc
    }

    pub fn gain_db(&self, freq: f64) -> f64 {
        20.0 * self.amplitude(freq).abs().max(1e-300).log10()
    }

    /// Evaluates the design on a dense grid against `mask`.
    pub fn measure(&self, mask: &ResponseMask) -> ResponseReport {
        let fs = self.sample_rate as f64;
        let step = (fs / (16.0 * self.taps.len() as f64)).min((self.band.high - self.band.low) / 64.0);
        let grid = |a: f64, b: f64| {
            let count = ((b - a) / step).ceil().max(1.0) as usize;
            (0..=count).map(move |i| a + (b - a) * i as f64 / count as f64)
        };
        let (mut pmin, mut pmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for f in grid(self.band.low, self.band.high) {
            let g = self.gain_db(f);
            pmin = pmin.min(g);
            pmax = pmax.max(g);
        }
        let mut smax = f64::NEG_INFINITY;
        let (lower, upper) = mask.stop_edges(&self.band, self.sample_rate);
        if let Some(edge) = lower {
            smax = grid(0.0, edge).map(|f| self.gain_db(f)).fold(smax, f64::max);
        }
        if let Some(edge) = upper {
            smax = grid(edge, fs / 2.0).map(|f| self.gain_db(f)).fold(smax, f64::max);
        }
        ResponseReport {
            passband_min_db: pmin,
            passband_max_db: pmax,
            stopband_max_db: smax,
        }
    }
}

/// Default tap count: `K/2` rounded up to odd, raised to what the narrowest
/// transition band of the default mask needs.
pub fn default_fir_taps(band: &BandSpec, sample_rate: u32) -> usize {
    let mask = ResponseMask::default();
    let (lower, upper) = mask.stop_edges(band, sample_rate);
    let mut transition = f64::INFINITY;
    if let Some(edge) = lower {
        transition = transition.min(band.low - edge);
    }
    if let Some(edge) = upper {
        transition = transition.min(edge - band.high);
    }
    let half = odd((sample_rate as usize).div_ceil(2));
    let needed = if transition.is_finite() {
        odd((2.0 * sample_rate as f64 / transition).ceil() as usize)
    } else {
        0
    };
    half.max(needed).max(MIN_TAPS)
}

fn odd(n: usize) -> usize {
    if n.is_multiple_of(2) {
        n + 1
    } else {
        n
    }
}

/// Weighted least-squares band-pass design with `taps` coefficients.
///
/// Passband `[low, high]` has weight 1 and target 1; the stopbands of the
/// default [`ResponseMask`] have weight 10 and target 0; the transition bands
/// follow a linear ramp with weight 0.1. Fails with [`Error::FilterSpecUnmet`]
/// when the result misses the mask.
pub fn design_band_fir(band: &BandSpec, sample_rate: u32, taps: usize) -> Result<FirFilter> {
    design_with_mask(band, sample_rate, taps, &ResponseMask::default())
}

pub fn design_with_mask(
    band: &BandSpec,
    sample_rate: u32,
    taps: usize,
    mask: &ResponseMask,
) -> Result<FirFilter> {
    band.validate(sample_rate)?;
    if taps.is_multiple_of(2) || taps < MIN_TAPS {
        return Err(Error::invalid(format!("tap count {taps} must be odd and >= {MIN_TAPS}")));
    }
    const STOP_WEIGHT: f64 = 10.0;
    const TRANSITION_WEIGHT: f64 = 0.1;
    let fs = sample_rate as f64;
    let to_w = |f: f64| 2.0 * PI * f / fs;
    let (lower, upper) = mask.stop_edges(band, sample_rate);

    // (start, end, weight, desired at start, desired at end) in radians/sample.
    // Transition bands follow a linear ramp at low weight; left free, long
    // designs develop large gain there.
    let (pass_lo, pass_hi) = (to_w(band.low), to_w(band.high));
    let mut regions = vec![(pass_lo, pass_hi, 1.0, 1.0, 1.0)];
    if let Some(edge) = lower {
        regions.push((0.0, to_w(edge), STOP_WEIGHT, 0.0, 0.0));
        regions.push((to_w(edge), pass_lo, TRANSITION_WEIGHT, 0.0, 1.0));
    }
    if let Some(edge) = upper {
        regions.push((pass_hi, to_w(edge), TRANSITION_WEIGHT, 1.0, 0.0));
        regions.push((to_w(edge), PI, STOP_WEIGHT, 0.0, 0.0));
    }

    // A(w) = sum_n c_n cos(n w); minimise sum_r W_r ∫ (A - D_r)^2.
    let order = (taps - 1) / 2;
    let len = order + 1;
    let mut cos_integral = vec![0.0; 2 * order + 1];
    let mut gram = DMatrix::<f64>::zeros(len, len);
    let mut rhs = DVector::<f64>::zeros(len);
    for &(a, b, weight, d_a, d_b) in &regions {
        if b <= a {
            continue;
        }
        for (j, slot) in cos_integral.iter_mut().enumerate() {
            *slot = if j == 0 {
                b - a
            } else {
                ((j as f64 * b).sin() - (j as f64 * a).sin()) / j as f64
            };
        }
        let slope = (d_b - d_a) / (b - a);
        for n in 0..len {
            for k in n..len {
                let v = weight * 0.5 * (cos_integral[k - n] + cos_integral[n + k]);
                gram[(n, k)] += v;
                if k != n {
                    gram[(k, n)] += v;
                }
            }
            // ∫ (w - a) cos(n w) dw over [a, b].
            let ramp = if n == 0 {
                (b - a).powi(2) / 2.0
            } else {
                let nf = n as f64;
                (b - a) * (nf * b).sin() / nf + ((nf * b).cos() - (nf * a).cos()) / (nf * nf)
            };
            rhs[n] += weight * (d_a * cos_integral[n] + slope * ramp);
        }
    }
    let coeffs = gram
        .cholesky()
        .ok_or_else(|| Error::FilterSpecUnmet("least-squares system is not positive definite".into()))?
        .solve(&rhs);

    let mut h = vec![0.0; taps];
    h[order] = coeffs[0];
    for n in 1..=order {
        h[order - n] = coeffs[n] / 2.0;
        h[order + n] = coeffs[n] / 2.0;
    }
    let filter = FirFilter {
        taps: h,
        band: *band,
        sample_rate,
    };
    let report = filter.measure(mask);
    if !report.meets(mask) {
        return Err(Error::FilterSpecUnmet(format!(
            "{} band at {} Hz with {} taps: passband {:.2}..{:.2} dB, stopband peak {:.1} dB \
             (need ±{} dB and <= -{} dB)",
            band.name,
            sample_rate,
            taps,
            report.passband_min_db,
            report.passband_max_db,
            report.stopband_max_db,
            mask.passband_ripple_db,
            mask.stopband_atten_db
        )));
    }
    Ok(filter)
}

/// Designs with [`default_fir_taps`], growing the tap count by 25% until the
/// mask is met or [`MAX_TAPS`] is exceeded.
pub fn design_band_fir_auto(band: &BandSpec, sample_rate: u32) -> Result<FirFilter> {
    let mut taps = default_fir_taps(band, sample_rate);
    loop {
        match design_band_fir(band, sample_rate, taps) {
            Err(Error::FilterSpecUnmet(_)) if taps < MAX_TAPS => {
                taps = odd((taps as f64 * 1.25) as usize).min(MAX_TAPS);
            }
            other => return other,
        }
    }
}

/// Filters every channel with `filter`, compensating the group delay so the
/// output is aligned with the input. Edges are zero-padded.
pub fn apply_fir(stream: &EegStream, filter: &FirFilter) -> Result<EegStream> {
    if filter.sample_rate != stream.sample_rate() {
        return Err(Error::RateMismatch {
            expected: filter.sample_rate,
            found: stream.sample_rate(),
        });
    }
    let mut out = Vec::with_capacity(stream.data().len());
    for c in 0..stream.channels() {
        let x: Vec<f64> = stream.channel(c).iter().map(|&v| v as f64).collect();
        out.extend(centered_convolution(&x, &filter.taps).into_iter().map(|v| v as f32));
    }
    stream.with_data(out)
}

/// `y[n] = sum_j h[j] x[n + mid - j]` for `n in 0..x.len()`.
pub(crate) fn centered_convolution(x: &[f64], h: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mid = (h.len() - 1) / 2;
    if n * h.len() <= 1 << 21 {
        return (0..n)
            .map(|i| {
                let lo = (i + mid + 1).saturating_sub(n);
                let hi = (i + mid).min(h.len() - 1);
                (lo..=hi).map(|j| h[j] * x[i + mid - j]).sum()
            })
            .collect();
    }
    let len = n + h.len() - 1;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut xs: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    xs.resize(len, Complex64::new(0.0, 0.0));
    let mut hs: Vec<Complex64> = h.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    hs.resize(len, Complex64::new(0.0, 0.0));
    fwd.process(&mut xs);
    fwd.process(&mut hs);
    for (a, b) in xs.iter_mut().zip(&hs) {
        *a *= b;
    }
    inv.process(&mut xs);
    xs[mid..mid + n].iter().map(|c| c.re / len as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prep::BandName;

    fn dft_naive(x: &[f64], h: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mid = (h.len() - 1) / 2;
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for (j, hv) in h.iter().enumerate() {
                    let k = i as isize + mid as isize - j as isize;
                    if k >= 0 && (k as usize) < n {
                        acc += hv * x[k as usize];
                    }
                }
                acc
            })
            .collect()
    }

    #[test]
    fn fft_and_direct_paths_agree() {
        let x: Vec<f64> = (0..3000).map(|i| ((i * 7919) % 101) as f64 - 50.0).collect();
        let h: Vec<f64> = (0..801).map(|i| ((i * 31) % 17) as f64 / 17.0).collect();
        let fast = centered_convolution(&x, &h);
        let slow = dft_naive(&x, &h);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn rejects_bad_tap_counts() {
        let band = BandSpec::canonical(BandName::Alpha);
        assert!(design_band_fir(&band, 250, 250).is_err());
        assert!(design_band_fir(&band, 250, 29).is_err());
    }

    #[test]
    fn tap_budget_too_small_is_reported() {
        let band = BandSpec::canonical(BandName::Delta);
        match design_band_fir(&band, 250, 125) {
            Err(Error::FilterSpecUnmet(msg)) => assert!(msg.contains("delta")),
            other => panic!("expected unmet spec, got {other:?}"),
        }
    }

    #[test]
    fn default_taps_cover_half_rate() {
        let band = BandSpec::canonical(BandName::Beta);
        let taps = default_fir_taps(&band, 250);
        assert!(taps >= 125 && taps % 2 == 1);
    }

    #[test]
    fn no_gain_bump_between_bands() {
        for rate in [250, 1000] {
            for name in BandName::CLASSIC {
                let fir = design_band_fir_auto(&BandSpec::canonical(name), rate).unwrap();
                let nyq = rate as f64 / 2.0;
                let peak = (0..=2000)
                    .map(|i| fir.gain_db(i as f64 * nyq / 2000.0))
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(peak <= 1.0, "{name} at {rate} Hz peaks at {peak:.2} dB");
            }
        }
    }
}
