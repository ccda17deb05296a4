//! Cut a stream into indexed fragments, normalize them and take amplitude
//! spectra.

use eegclf::io::{default_profiles, synth_stream};
use eegclf::prep::{fragment_stream, normalize_fragment, to_frequency_domain};
use eegclf::FragmentationParams;

fn main() -> eegclf::Result<()> {
    let rate = 250;
    let stream = synth_stream(&default_profiles()[0], "FES-demo", 4, rate, 4, 11)?;
    let params = FragmentationParams::new(125);
    println!(
        "{} samples, window {} -> {} fragments, {:?} windows per second",
        stream.samples(),
        params.window,
        params.fragment_count(stream.samples()),
        params.windows_per_second(rate)
    );

    for frag in fragment_stream(&stream, &params)?.iter().take(4) {
        let norm = normalize_fragment(frag)?;
        let spec = to_frequency_domain(frag)?;
        let peak_bin = (0..spec.cols)
            .max_by(|&a, &b| spec.get(0, a).total_cmp(&spec.get(0, b)))
            .unwrap();
        println!(
            "second {} window {}: {}x{}, max|x| {:.3} -> {:.3}, spectrum {}x{} peaking at {:.1} Hz",
            frag.second_index,
            frag.window_index,
            frag.rows,
            frag.cols,
            frag.max_abs(),
            norm.max_abs(),
            spec.rows,
            spec.cols,
            peak_bin as f64 * rate as f64 / frag.cols as f64
        );
    }
    Ok(())
}
