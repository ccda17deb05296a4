//! Least-squares FIR designs for the five rhythm bands, checked against the
//! default response mask, then applied to a synthetic stream.

use eegclf::io::{default_profiles, synth_stream};
use eegclf::prep::{apply_fir, design_band_fir_auto, spectral_energy, ResponseMask};
use eegclf::{BandName, BandSpec};

fn main() -> eegclf::Result<()> {
    let rate = 250;
    let mask = ResponseMask::default();
    let stream = synth_stream(&default_profiles()[1], "HC-demo", 4, rate, 20, 3)?;
    let total: f64 = stream.channel(0).iter().map(|v| (*v as f64).powi(2)).sum();

    println!("band      taps  ripple dB  stop max dB  peak dB  meets  energy share");
    for name in BandName::CLASSIC {
        let band = BandSpec::canonical(name);
        let fir = design_band_fir_auto(&band, rate)?;
        let report = fir.measure(&mask);
        let out = apply_fir(&stream, &fir)?;
        let energy: f64 = out.channel(0).iter().map(|v| (*v as f64).powi(2)).sum();
        let peak = (0..=1250).map(|i| fir.gain_db(i as f64 * 0.1)).fold(f64::NEG_INFINITY, f64::max);
        println!(
            "{:<8} {:>5}  {:>9.3}  {:>11.1}  {:>7.2}  {:>5}  {:>6.3}",
            name.to_string(),
            fir.taps().len(),
            report.ripple_db(),
            report.stopband_max_db,
            peak,
            report.meets(&mask),
            energy / total
        );
    }

    // Parseval check on a single windowed spectrum.
    let x: Vec<f64> = stream.channel(0)[..100].iter().map(|&v| v as f64).collect();
    let amps = eegclf::prep::to_frequency_domain(&eegclf::prep::fragment_stream(
        &stream.slice_samples(0, 100)?,
        &eegclf::FragmentationParams::new(100),
    )?[0])?;
    let row: Vec<f64> = amps.row(0).iter().map(|&v| v as f64).collect();
    println!(
        "time energy {:.4}, spectral energy {:.4}",
        x.iter().map(|v| v * v).sum::<f64>(),
        spectral_energy(&row, 100)
    );
    Ok(())
}
