//! Generate class-conditional streams, write them to disk and read one back.
//!
//! ```text
//! cargo run --release --example synth_streams -- /tmp/eeg-synth
//! ```

use eegclf::io::{default_profiles, read_stream, synth_stream, write_stream};

fn main() -> eegclf::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "synth-out".into());
    std::fs::create_dir_all(&out).map_err(|e| eegclf::Error::Io { path: out.clone().into(), source: e })?;

    for (c, profile) in default_profiles().iter().enumerate() {
        for i in 0..2 {
            let id = format!("{}-{:02}", profile.class.name(), i + 1);
            let stream = synth_stream(profile, &id, 8, 250, 10, (c * 100 + i) as u64)?;
            let path = std::path::Path::new(&out).join(&id);
            write_stream(&stream, &path)?;

            let back = read_stream(&path)?;
            assert_eq!(back, stream);
            let rms = (back.channel(0).iter().map(|v| (*v as f64).powi(2)).sum::<f64>()
                / back.samples() as f64)
                .sqrt();
            println!(
                "{id}: class {} {} ch x {} samples ({:.0} s), ch0 rms {rms:.3}",
                back.class(),
                back.channels(),
                back.samples(),
                back.duration()
            );
        }
    }
    Ok(())
}
