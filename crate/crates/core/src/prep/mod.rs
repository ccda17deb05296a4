//! Preprocessing: zero-phase broadband filtering, least-squares FIR band
//! decomposition, windowing, local normalization and amplitude spectra.

mod bands;
mod fir;
mod fragment;
mod iir;
mod spectrum;

pub use bands::{BandName, BandSpec};
pub use fir::{
    apply_fir, default_fir_taps, design_band_fir, design_band_fir_auto, design_with_mask, FirFilter,
    ResponseMask, ResponseReport, MAX_TAPS, MIN_TAPS,
};
pub use fragment::{fragment_stream, normalize_fragment, Domain, Fragment, FragmentationParams, NORMALIZE_EPS};
pub use iir::{broadband_filter, Biquad, SosFilter, EDGE_ORDER};
pub use spectrum::{spectral_energy, to_frequency_domain};

/// Edge samples to discard before analysing zero-phase filter output: the
/// time the slowest pole needs to decay by 1e-3, and at least three times
/// the filter order.
pub fn edge_trim(filter: &SosFilter) -> usize {
    let r = filter.max_pole_radius();
    let decay = if r > 0.0 && r < 1.0 { ((1e-3f64).ln() / r.ln()).ceil() as usize } else { 0 };
    decay.max(3 * filter.order())
}
