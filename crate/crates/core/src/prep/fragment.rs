use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{ClassId, EegStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Time,
    Frequency,
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Domain::Time => "time",
            Domain::Frequency => "frequency",
        })
    }
}

impl std::str::FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "time" => Ok(Domain::Time),
            "frequency" | "freq" => Ok(Domain::Frequency),
            other => Err(Error::invalid(format!("unknown domain {other:?}"))),
        }
    }
}

/// One `rows × cols` window of a stream (`cols = q` in the time domain).
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub data: Vec<f32>,
    pub rows: usize,
    pub cols: usize,
    pub subject_id: String,
    pub class: ClassId,
    /// 1-based second of the stream in which the window starts.
    pub second_index: usize,
    /// 1-based position of the window within that second.
    pub window_index: usize,
    pub domain: Domain,
}

impl Fragment {
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn with_data(&self, data: Vec<f32>, cols: usize, domain: Domain) -> Fragment {
        debug_assert_eq!(data.len(), self.rows * cols);
        Fragment {
            data,
            cols,
            domain,
            subject_id: self.subject_id.clone(),
            ..*self
        }
    }

    pub fn max_abs(&self) -> f32 {
        self.data.iter().fold(0.0f32, |m, v| m.max(v.abs()))
    }
}

/// Window geometry. `step == window` (the default) partitions the stream;
/// a smaller step yields overlapping windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FragmentationParams {
    pub window: usize,
    pub step: usize,
}

impl FragmentationParams {
    pub fn new(window: usize) -> Self {
        FragmentationParams { window, step: window }
    }

    /// Windows per second `r = K / q`, when integral.
    pub fn windows_per_second(&self, sample_rate: u32) -> Option<usize> {
        let k = sample_rate as usize;
        (self.window > 0 && k.is_multiple_of(self.window)).then(|| k / self.window)
    }

    /// Number of fragments cut from `samples` samples.
    pub fn fragment_count(&self, samples: usize) -> usize {
        if self.window == 0 || self.step == 0 || samples < self.window {
            0
        } else {
            (samples - self.window) / self.step + 1
        }
    }

    fn validate(&self, samples: usize) -> Result<()> {
        if self.window == 0 || self.step == 0 {
            return Err(Error::invalid("window and step must be positive"));
        }
        if self.step > self.window {
            return Err(Error::invalid("step larger than window would skip samples"));
        }
        if self.step == self.window && !samples.is_multiple_of(self.window) {
            return Err(Error::invalid(format!(
                "stream of {samples} samples is not divisible into windows of {}",
                self.window
            )));
        }
        if samples < self.window {
            return Err(Error::invalid("stream shorter than one window"));
        }
        Ok(())
    }
}

/// Cuts `stream` into consecutive windows ordered by (second, window).
///
/// Second index `t` is the 1-based second containing a window's first
/// sample; `k` counts windows starting within that second. When `K` is a
/// multiple of `q` this is exactly `t in 1..=T`, `k in 1..=K/q`.
pub fn fragment_stream(stream: &EegStream, params: &FragmentationParams) -> Result<Vec<Fragment>> {
    params.validate(stream.samples())?;
    let rate = stream.sample_rate() as usize;
    let count = params.fragment_count(stream.samples());
    let (m, q) = (stream.channels(), params.window);
    let mut out = Vec::with_capacity(count);
    let mut second = 0;
    let mut k = 0;
    for j in 0..count {
        let start = j * params.step;
        let t = start / rate + 1;
        if t != second {
            second = t;
            k = 0;
        }
        k += 1;
        let mut data = Vec::with_capacity(m * q);
        for c in 0..m {
            data.extend_from_slice(&stream.channel(c)[start..start + q]);
        }
        out.push(Fragment {
            data,
            rows: m,
            cols: q,
            subject_id: stream.subject_id().to_string(),
            class: stream.class(),
            second_index: t,
            window_index: k,
            domain: Domain::Time,
        });
    }
    Ok(out)
}

/// Below this magnitude a fragment is treated as all-zero and left as is.
pub const NORMALIZE_EPS: f32 = 1e-12;

/// Divides by the largest absolute entry, so the result has max |x| = 1.
///
/// A literal division by the signed maximum breaks for all-negative data, so
/// the absolute maximum is used instead.
pub fn normalize_fragment(frag: &Fragment) -> Result<Fragment> {
    if let Some(i) = frag.data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            channel: i / frag.cols,
            sample: i % frag.cols,
        });
    }
    let peak = frag.max_abs();
    if peak <= NORMALIZE_EPS {
        return Ok(frag.clone());
    }
    let data = frag.data.iter().map(|v| v / peak).collect();
    Ok(frag.with_data(data, frag.cols, frag.domain))
}
