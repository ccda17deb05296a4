//! Train a network with a forest head, save the bundle and classify fresh
//! streams from the saved file.

use eegclf::harness::{predict_stream, train_bundle, DataSource, ExperimentConfig, ModelBundle, SyntheticConfig};
use eegclf::io::{default_profiles, synth_stream};
use eegclf::Domain;

fn main() -> eegclf::Result<()> {
    let mut cfg = ExperimentConfig {
        data: DataSource::Synthetic(SyntheticConfig {
            subjects_per_class: 6,
            channels: 8,
            seconds: 20,
            ..SyntheticConfig::default()
        }),
        ..ExperimentConfig::default()
    };
    cfg.prep.domain = Domain::Frequency;
    cfg.train.epochs = 10;
    cfg.train.batch = 16;

    let bundle = train_bundle(&cfg)?;
    let path = std::env::temp_dir().join("eegclf-demo.eegm");
    bundle.save(&path)?;
    let loaded = ModelBundle::load(&path)?;
    assert_eq!(loaded, bundle);
    println!("saved {} ({} bytes)", path.display(), std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0));

    for (i, profile) in default_profiles().iter().enumerate() {
        let stream = synth_stream(profile, "unseen", 8, 250, 10, 900 + i as u64)?;
        let v = predict_stream(&loaded, &stream)?;
        println!(
            "true {} -> predicted {} from {} fragments, probs {:.3?}",
            profile.class,
            eegclf::ClassId(v.predicted_class as u8),
            v.fragment_count,
            v.mean_probs
        );
    }
    Ok(())
}
