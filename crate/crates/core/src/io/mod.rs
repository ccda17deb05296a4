//! Stream data model, on-disk formats and the synthetic stream generator.

mod format;
mod stream;
mod synth;

pub use format::{read_csv, read_stream, stream_paths, write_stream, Sidecar};
pub use stream::{ClassId, EegStream};
pub use synth::{default_profiles, synth_stream, ClassProfile};
