use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Small integer class label. The registry maps 0, 1, 2 to FES, HC, CHR;
/// any other id is rendered numerically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u8);

impl ClassId {
    pub const FES: ClassId = ClassId(0);
    pub const HC: ClassId = ClassId(1);
    pub const CHR: ClassId = ClassId(2);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn name(self) -> String {
        match self.0 {
            0 => "FES".to_string(),
            1 => "HC".to_string(),
            2 => "CHR".to_string(),
            n => format!("class{n}"),
        }
    }

    pub fn from_name(name: &str) -> Option<ClassId> {
        match name.to_ascii_uppercase().as_str() {
            "FES" => Some(ClassId::FES),
            "HC" => Some(ClassId::HC),
            "CHR" => Some(ClassId::CHR),
            other => other.parse::<u8>().ok().map(ClassId),
        }
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// One subject's recording: `channels × samples` amplitudes, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EegStream {
    subject_id: String,
    class: ClassId,
    sample_rate: u32,
    channels: usize,
    samples: usize,
    data: Vec<f32>,
}

impl EegStream {
    /// Builds a validated stream. `data` is channel-major (`data[c * samples + n]`).
    pub fn new(
        subject_id: impl Into<String>,
        class: ClassId,
        sample_rate: u32,
        channels: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        if channels == 0 {
            return Err(Error::invalid("stream must have at least one channel"));
        }
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if data.is_empty() || !data.len().is_multiple_of(channels) {
            return Err(Error::dims(
                format!("{channels} x N values with N >= 1"),
                format!("{} values", data.len()),
            ));
        }
        let samples = data.len() / channels;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                channel: i / samples,
                sample: i % samples,
            });
        }
        Ok(EegStream {
            subject_id: subject_id.into(),
            class,
            sample_rate,
            channels,
            samples,
            data,
        })
    }

    /// Builds a stream from per-channel rows.
    pub fn from_rows(
        subject_id: impl Into<String>,
        class: ClassId,
        sample_rate: u32,
        rows: Vec<Vec<f32>>,
    ) -> Result<Self> {
        let channels = rows.len();
        let samples = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != samples) {
            return Err(Error::dims(
                format!("{samples} samples per channel"),
                format!("{} samples in channel {bad}", rows[bad].len()),
            ));
        }
        Self::new(subject_id, class, sample_rate, channels, rows.concat())
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn class(&self) -> ClassId {
        self.class
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Duration in seconds (`N / K`).
    pub fn duration(&self) -> f64 {
        self.samples as f64 / self.sample_rate as f64
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        &self.data[c * self.samples..(c + 1) * self.samples]
    }

    pub fn get(&self, channel: usize, sample: usize) -> f32 {
        self.data[channel * self.samples + sample]
    }

    /// Same metadata, new payload of identical shape.
    pub fn with_data(&self, data: Vec<f32>) -> Result<Self> {
        if data.len() != self.data.len() {
            return Err(Error::dims(self.data.len(), data.len()));
        }
        Self::new(
            self.subject_id.clone(),
            self.class,
            self.sample_rate,
            self.channels,
            data,
        )
    }

    /// Sub-stream covering samples `start..end` on every channel.
    pub fn slice_samples(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.samples {
            return Err(Error::invalid(format!(
                "sample range {start}..{end} outside 0..{}",
                self.samples
            )));
        }
        let mut data = Vec::with_capacity(self.channels * (end - start));
        for c in 0..self.channels {
            data.extend_from_slice(&self.channel(c)[start..end]);
        }
        Self::new(
            self.subject_id.clone(),
            self.class,
            self.sample_rate,
            self.channels,
            data,
        )
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(EegStream::new("s", ClassId::HC, 100, 0, vec![]).is_err());
        assert!(EegStream::new("s", ClassId::HC, 100, 2, vec![1.0; 3]).is_err());
        assert!(EegStream::new("s", ClassId::HC, 0, 1, vec![1.0]).is_err());
        assert!(EegStream::from_rows("s", ClassId::HC, 100, vec![vec![1.0], vec![]]).is_err());
    }

    #[test]
    fn reports_non_finite_location() {
        let err = EegStream::new("s", ClassId::HC, 100, 2, vec![0.0, 1.0, 2.0, f32::NAN]).unwrap_err();
        match err {
            Error::NonFinite { channel, sample } => assert_eq!((channel, sample), (1, 1)),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn channel_major_indexing() {
        let s = EegStream::from_rows(
            "s",
            ClassId::FES,
            4,
            vec![vec![1.0, 2.0, 3.0, 4.0], vec![5.0, 6.0, 7.0, 8.0]],
        )
        .unwrap();
        assert_eq!(s.get(1, 2), 7.0);
        assert_eq!(s.channel(0), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.slice_samples(1, 3).unwrap().channel(1), &[6.0, 7.0]);
    }

    #[test]
    fn class_registry() {
        assert_eq!(ClassId::from_name("chr"), Some(ClassId::CHR));
        assert_eq!(ClassId::from_name("7"), Some(ClassId(7)));
        assert_eq!(ClassId(1).to_string(), "HC");
    }
}
