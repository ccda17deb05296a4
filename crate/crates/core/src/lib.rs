//! # eegclf
//!
//! Multi-channel EEG stream classification, end to end:
//!
//! ```text
//! EegStream (m × N, K Hz)
//!   │
//!   ├─ prep::broadband_filter   zero-phase Butterworth band-pass (24 dB/oct per pass)
//!   ├─ prep::apply_fir          optional least-squares FIR band (delta … gamma)
//!   ├─ prep::fragment_stream    non-overlapping m × q windows, indexed (second, window)
//!   ├─ prep::to_frequency_domain  optional one-sided amplitude spectrum
//!   └─ prep::normalize_fragment divide by max |x|
//!        │
//!        ├─ nn::NetModel        ANN / RNN / CNN feature extractor (logits + penultimate)
//!        ├─ heads               softmax, Crammer-Singer linear SVM, random forest
//!        └─ voting::vote_stream mean fragment probabilities → argmax per stream
//! ```
//!
//! The [`harness`] module wires these stages into a repeatable train/test
//! protocol with seeded repetitions and CSV / markdown reports. Every stage is
//! usable on its own; see the crate's `examples/` directory for one runnable
//! program per capability.

pub mod error;
pub mod harness;
pub mod heads;
pub mod io;
pub mod nn;
pub mod prep;
pub mod voting;

pub use error::{Error, Result};
pub use io::{ClassId, ClassProfile, EegStream};
pub use prep::{BandName, BandSpec, Domain, Fragment, FragmentationParams};
