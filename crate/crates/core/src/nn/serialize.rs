//! Binary model container.
//!
//! ```text
//! "EEGM" | u32 version | u32 n | n bytes JSON descriptor
//! u32 tensor count | per tensor: u32 ndim, ndim × u32 dims, f32 LE values
//! sections until EOF: 4-byte tag | u64 length | payload
//! ```
//! All integers are little-endian.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::layers::Layer;
use super::model::{NetModel, TrainingMeta};
use super::spec::NetworkSpec;
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EEGM";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Descriptor {
    spec: NetworkSpec,
    input_dims: (usize, usize),
    meta: TrainingMeta,
}

/// A model plus tagged extra payloads (classifier heads, preprocessing).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: NetModel<f32>,
    pub sections: Vec<([u8; 4], Vec<u8>)>,
}

impl ModelFile {
    pub fn section(&self, tag: &[u8; 4]) -> Option<&[u8]> {
        self.sections.iter().find(|(t, _)| t == tag).map(|(_, p)| p.as_slice())
    }
}

fn put_tensor(out: &mut Vec<u8>, t: &Tensor<f32>) {
    out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
    for &d in &t.shape {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in &t.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Cursor over a byte buffer with descriptive failures.
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    what: &'a Path,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8], what: &'a Path) -> Self {
        Reader { buf, pos: 0, what }
    }

    pub(crate) fn done(&self) -> bool {
        self.pos == self.buf.len()
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::format(self.what, format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn tensor(&mut self) -> Result<Tensor<f32>> {
        let ndim = self.u32()? as usize;
        if ndim > 8 {
            return Err(Error::format(self.what, format!("tensor rank {ndim} too large")));
        }
        let shape = (0..ndim).map(|_| self.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let n = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        let n = n
            .filter(|&n| n.checked_mul(4).is_some_and(|b| b <= self.buf.len() - self.pos))
            .ok_or_else(|| Error::format(self.what, "tensor larger than file"))?;
        let data = self
            .take(4 * n)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Tensor::from_vec(&shape, data))
    }
}

pub fn encode(file: &ModelFile) -> Result<Vec<u8>> {
    let model = &file.model;
    let descriptor = serde_json::to_vec(&Descriptor {
        spec: model.spec.clone(),
        input_dims: model.input_dims,
        meta: model.meta.clone(),
    })
    .map_err(|e| Error::invalid(format!("descriptor encoding: {e}")))?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(descriptor.len() as u32).to_le_bytes());
    out.extend_from_slice(&descriptor);
    let params: Vec<&Tensor<f32>> = model.params().collect();
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for t in params {
        put_tensor(&mut out, t);
    }
    for (tag, payload) in &file.sections {
        out.extend_from_slice(tag);
        out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        out.extend_from_slice(payload);
    }
    Ok(out)
}

pub fn decode(bytes: &[u8], origin: &Path) -> Result<ModelFile> {
    let mut r = Reader::new(bytes, origin);
    if r.take(4)? != MAGIC {
        return Err(Error::format(origin, "not a model file (bad magic)"));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::format(origin, format!("unsupported format version {version}")));
    }
    let n = r.u32()? as usize;
    let descriptor: Descriptor = serde_json::from_slice(r.take(n)?)
        .map_err(|e| Error::format(origin, format!("descriptor: {e}")))?;
    let mut model = NetModel::<f32>::new(&descriptor.spec, descriptor.input_dims, 0)?;
    model.meta = descriptor.meta;
    let count = r.u32()? as usize;
    let expected: usize = model.layers.iter().map(|l| l.params().len()).sum();
    if count != expected {
        return Err(Error::format(origin, format!("expected {expected} tensors, found {count}")));
    }
    for p in model.layers.iter_mut().flat_map(Layer::params_mut) {
        let t = r.tensor()?;
        if t.shape != p.shape {
            return Err(Error::format(
                origin,
                format!("tensor shape {:?} does not match {:?}", t.shape, p.shape),
            ));
        }
        *p = t;
    }
    let mut sections = Vec::new();
    while !r.done() {
        let tag: [u8; 4] = r.take(4)?.try_into().unwrap();
        let len = usize::try_from(r.u64()?).map_err(|_| Error::format(origin, "section too large"))?;
        sections.push((tag, r.take(len)?.to_vec()));
    }
    Ok(ModelFile { model, sections })
}

pub fn save(file: &ModelFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(file)?;
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<ModelFile> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::spec::{NetworkKind, SpecOptions};

    #[test]
    fn round_trip_is_bit_exact() {
        for kind in NetworkKind::ALL {
            let spec = NetworkSpec::template(kind, &SpecOptions::default());
            let mut model = NetModel::<f32>::new(&spec, (4, 12), 9).unwrap();
            model.meta.loss_curve = vec![1.0986122886681098, 0.1 + 0.2, 1e-300];
            model.meta.epochs = 3;
            let file = ModelFile {
                model,
                sections: vec![(*b"TEST", vec![1, 2, 3]), (*b"NONE", vec![])],
            };
            let bytes = encode(&file).unwrap();
            let back = decode(&bytes, Path::new("mem")).unwrap();
            assert_eq!(back, file);
            assert_eq!(encode(&back).unwrap(), bytes);
            assert_eq!(back.section(b"TEST"), Some(&[1u8, 2, 3][..]));
        }
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let model = NetModel::<f32>::new(&NetworkSpec::rnn(), (2, 3), 0).unwrap();
        let bytes = encode(&ModelFile { model, sections: vec![] }).unwrap();
        assert!(decode(&bytes[..bytes.len() - 1], Path::new("m")).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad, Path::new("m")), Err(Error::Format { .. })));
    }
}
