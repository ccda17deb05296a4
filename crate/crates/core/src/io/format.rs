use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::stream::{ClassId, EegStream};
use crate::error::{Error, Result};

const DTYPE: &str = "f32le";
const LAYOUT: &str = "channel-major";

/// Contents of `<name>.meta.json`. Unknown keys are ignored on read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub subject_id: String,
    pub class_label: ClassId,
    pub channels: usize,
    pub sample_rate: u32,
    pub samples: usize,
    pub dtype: String,
    pub layout: String,
}

/// Resolves `(payload, sidecar)` paths for `name`, `name.eeg` or `name.meta.json`.
pub fn stream_paths(path: &Path) -> (PathBuf, PathBuf) {
    let s = path.to_string_lossy();
    let base = s
        .strip_suffix(".meta.json")
        .or_else(|| s.strip_suffix(".eeg"))
        .unwrap_or(&s)
        .to_string();
    (
        PathBuf::from(format!("{base}.eeg")),
        PathBuf::from(format!("{base}.meta.json")),
    )
}

pub fn read_stream(path: impl AsRef<Path>) -> Result<EegStream> {
    let (payload_path, meta_path) = stream_paths(path.as_ref());
    let meta_text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: Sidecar =
        serde_json::from_str(&meta_text).map_err(|e| Error::format(&meta_path, e.to_string()))?;
    if meta.dtype != DTYPE {
        return Err(Error::format(&meta_path, format!("unsupported dtype {:?}", meta.dtype)));
    }
    if meta.layout != LAYOUT {
        return Err(Error::format(&meta_path, format!("unsupported layout {:?}", meta.layout)));
    }
    let bytes = fs::read(&payload_path).map_err(|e| Error::io(&payload_path, e))?;
    let expected = meta.channels * meta.samples * 4;
    if bytes.len() != expected {
        return Err(Error::dims(
            format!(
                "{} bytes ({} channels x {} samples x 4)",
                expected, meta.channels, meta.samples
            ),
            format!("{} bytes in {}", bytes.len(), payload_path.display()),
        ));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    EegStream::new(meta.subject_id, meta.class_label, meta.sample_rate, meta.channels, data)
}

pub fn write_stream(stream: &EegStream, path: impl AsRef<Path>) -> Result<()> {
    let (payload_path, meta_path) = stream_paths(path.as_ref());
    let meta = Sidecar {
        subject_id: stream.subject_id().to_string(),
        class_label: stream.class(),
        channels: stream.channels(),
        sample_rate: stream.sample_rate(),
        samples: stream.samples(),
        dtype: DTYPE.to_string(),
        layout: LAYOUT.to_string(),
    };
    let mut bytes = Vec::with_capacity(stream.data().len() * 4);
    for v in stream.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&payload_path, bytes).map_err(|e| Error::io(&payload_path, e))?;
    let mut text = serde_json::to_string_pretty(&meta).expect("sidecar serializes");
    text.push('\n');
    fs::write(&meta_path, text).map_err(|e| Error::io(&meta_path, e))
}

/// Reads a small hand-written fixture: one row per channel, comma separated.
/// Blank lines and lines starting with `#` are skipped.
pub fn read_csv(
    path: impl AsRef<Path>,
    subject_id: &str,
    class: ClassId,
    sample_rate: u32,
) -> Result<EegStream> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f32>().map_err(|e| {
                    Error::format(path, format!("line {}: {tok:?}: {e}", lineno + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    EegStream::from_rows(subject_id, class, sample_rate, rows)
}
