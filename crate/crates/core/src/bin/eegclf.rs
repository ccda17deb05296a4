use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use eegclf::harness::{
    collect_runs, predict_stream, render_csv, render_markdown, run_experiment_to, synthetic_dataset, train_bundle,
    ExperimentConfig, ModelBundle, PrepConfig, Preprocessor, SyntheticConfig,
};
use eegclf::io::{read_stream, write_stream};
use eegclf::{BandName, Domain, Error};

#[derive(Parser)]
#[command(name = "eegclf", version, about = "Multi-channel EEG stream classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic class-conditional streams as .eeg/.meta.json pairs.
    Synth {
        #[arg(long, default_value_t = 3)]
        classes: usize,
        #[arg(long, default_value_t = 12)]
        subjects: usize,
        #[arg(long, default_value_t = 16)]
        channels: usize,
        #[arg(long, default_value_t = 250)]
        rate: u32,
        #[arg(long, default_value_t = 30)]
        seconds: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Filter one stream, report its fragments and optionally save the filtered signal.
    Preprocess {
        #[arg(long)]
        stream: PathBuf,
        /// Take preprocessing settings from an experiment config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        band: Option<BandName>,
        #[arg(long)]
        domain: Option<Domain>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a network and its first head, and save the bundle.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "model.eegm")]
        out: PathBuf,
    },
    /// Run all repetitions and write run.json, report.csv and report.md.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "runs/latest")]
        out: PathBuf,
    },
    /// Classify one stream with a saved bundle.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        stream: PathBuf,
    },
    /// Merge the run.json files under a directory into one report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Md,
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(command: Command) -> Result<(), (&'static str, Error)> {
    match command {
        Command::Synth { classes, subjects, channels, rate, seconds, seed, out } => {
            let cfg = SyntheticConfig {
                classes,
                subjects_per_class: subjects,
                channels,
                sample_rate: rate,
                seconds,
                seed,
            };
            let streams = synthetic_dataset(&cfg).map_err(|e| ("synth", e))?;
            std::fs::create_dir_all(&out).map_err(|e| ("write", Error::Io { path: out.clone(), source: e }))?;
            for s in &streams {
                write_stream(s, out.join(s.subject_id())).map_err(|e| ("write", e))?;
            }
            println!("wrote {} streams to {}", streams.len(), out.display());
        }
        Command::Preprocess { stream, config, band, domain, window, out } => {
            let mut prep = match config {
                Some(p) => load_config(&p, None).map_err(|e| ("config", e))?.prep,
                None => PrepConfig::default(),
            };
            prep.band = band.unwrap_or(prep.band);
            prep.domain = domain.unwrap_or(prep.domain);
            prep.window = window.unwrap_or(prep.window);
            prep.validate().map_err(|e| ("config", e))?;
            let s = read_stream(&stream).map_err(|e| ("load", e))?;
            let pre = Preprocessor::new(&prep, s.sample_rate()).map_err(|e| ("preprocess", e))?;
            let frags = pre.fragments(&s).map_err(|e| ("preprocess", e))?;
            let (rows, cols) = frags.first().map_or((0, 0), |f| (f.rows, f.cols));
            println!(
                "subject={} band={} domain={} fragments={} shape={rows}x{cols}",
                s.subject_id(),
                prep.band,
                prep.domain,
                frags.len()
            );
            if let Some(out) = out {
                let filtered = pre.filter(&s).map_err(|e| ("preprocess", e))?;
                write_stream(&filtered, &out).map_err(|e| ("write", e))?;
            }
        }
        Command::Train { config, seed, out } => {
            let cfg = load_config(&config, seed).map_err(|e| ("config", e))?;
            let bundle = train_bundle(&cfg).map_err(|e| ("train", e))?;
            bundle.save(&out).map_err(|e| ("write", e))?;
            println!("saved {} model to {}", cfg.methods()[0], out.display());
        }
        Command::Evaluate { config, seed, out } => {
            let cfg = load_config(&config, seed).map_err(|e| ("config", e))?;
            let rows = run_experiment_to(&cfg, &out).map_err(|e| ("evaluate", e))?;
            print!("{}", render_csv(&rows));
        }
        Command::Predict { model, stream } => {
            let bundle = ModelBundle::load(&model).map_err(|e| ("load", e))?;
            let s = read_stream(&stream).map_err(|e| ("load", e))?;
            let v = predict_stream(&bundle, &s).map_err(|e| ("predict", e))?;
            let probs: Vec<String> = v.mean_probs.iter().map(|p| format!("{p:.6}")).collect();
            println!("class={} probs={} fragments={}", v.predicted_class, probs.join(","), v.fragment_count);
        }
        Command::Report { input, format } => {
            let rows = collect_runs(&input).map_err(|e| ("report", e))?;
            if rows.is_empty() {
                return Err(("report", Error::Config(format!("no run.json under {}", input.display()))));
            }
            match format {
                Format::Csv => print!("{}", render_csv(&rows)),
                Format::Md => print!("{}", render_markdown(&rows)),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err((stage, err)) => {
            eprintln!("eegclf: {stage}: {err}");
            ExitCode::FAILURE
        }
    }
}
