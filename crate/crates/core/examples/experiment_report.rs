//! Run a small seeded experiment with three heads on one network and write
//! the CSV, markdown and JSON reports.
//!
//! ```text
//! cargo run --release --example experiment_report -- runs/demo
//! ```

use eegclf::harness::{render_markdown, run_experiment_to, DataSource, ExperimentConfig, SyntheticConfig};
use eegclf::heads::HeadKind;
use eegclf::Domain;

fn main() -> eegclf::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "runs/demo".into());
    let mut cfg = ExperimentConfig {
        heads: vec![HeadKind::Softmax, HeadKind::Msvm, HeadKind::Rf],
        repetitions: 3,
        seed: 42,
        data: DataSource::Synthetic(SyntheticConfig {
            subjects_per_class: 6,
            channels: 8,
            seconds: 12,
            ..SyntheticConfig::default()
        }),
        ..ExperimentConfig::default()
    };
    cfg.prep.domain = Domain::Frequency;
    cfg.train.epochs = 6;
    println!("config:\n{}", cfg.to_toml());

    let rows = run_experiment_to(&cfg, std::path::Path::new(&out))?;
    print!("{}", render_markdown(&rows));
    for r in &rows {
        println!(
            "{:<10} stream {:.3}  fragment {:.3}  single fragment {:.3}",
            r.method.to_string(),
            r.stream_acc_mean,
            r.fragment_acc_mean,
            r.single_fragment_acc_mean
        );
    }
    println!("reports written to {out}");
    Ok(())
}
