//! Train the CNN on fragments from a handful of synthetic subjects and report
//! held-out fragment accuracy.

use eegclf::harness::{synthetic_dataset, PrepConfig, Preprocessor, SyntheticConfig};
use eegclf::heads::argmax;
use eegclf::nn::{train_network, NetworkKind, NetworkSpec, SpecOptions, TrainConfig};
use eegclf::Domain;

fn main() -> eegclf::Result<()> {
    let streams = synthetic_dataset(&SyntheticConfig {
        subjects_per_class: 6,
        channels: 8,
        seconds: 20,
        ..SyntheticConfig::default()
    })?;
    let prep = Preprocessor::new(
        &PrepConfig {
            domain: Domain::Frequency,
            ..PrepConfig::default()
        },
        250,
    )?;

    let (mut train, mut test) = (Vec::new(), Vec::new());
    for s in &streams {
        let frags = prep.fragments(s)?;
        let half = frags.len() / 2;
        train.extend_from_slice(&frags[..half]);
        test.extend_from_slice(&frags[half..]);
    }
    let labels: Vec<usize> = train.iter().map(|f| f.class.index()).collect();

    let spec = NetworkSpec::template(NetworkKind::Cnn, &SpecOptions::default());
    let cfg = TrainConfig { epochs: 12, batch: 16, seed: 5, ..TrainConfig::default() };
    let t = std::time::Instant::now();
    let model = train_network(&spec, &train, &labels, &cfg)?;
    println!("trained on {} fragments in {:.1?}", train.len(), t.elapsed());
    for (epoch, loss) in model.meta.loss_curve.iter().enumerate() {
        println!("  epoch {:>2}  loss {loss:.4}", epoch + 1);
    }

    let mut hits = 0;
    for f in &test {
        if argmax(&model.forward_fragment(f)?.logits) == f.class.index() {
            hits += 1;
        }
    }
    println!("held-out fragment accuracy {:.3} ({hits}/{})", hits as f64 / test.len() as f64, test.len());
    Ok(())
}
