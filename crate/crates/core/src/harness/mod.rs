//! Experiment orchestration: dataset loading, train/test splits, seeded
//! repetitions, model bundles and report files.

mod bundle;
mod config;
mod data;
mod experiment;
mod metrics;
mod prep;
mod report;

pub use bundle::{evaluate_stream, predict_stream, ModelBundle, PREP_TAG};
pub use config::{DataSource, ExperimentConfig, Method, SplitConfig, SplitScheme, SyntheticConfig};
pub use data::{derive_seed, holdout_assignment, load_dataset, manifest_paths, split_subjects, synthetic_dataset, SplitStreams};
pub use experiment::{
    corrupt_labels, prepare, run_experiment, run_experiment_to, run_prepared, run_repetition, train_bundle,
    train_models, PreparedData, RepetitionData, TrainedModels,
};
pub use metrics::{mean_std, Confusion, RepetitionMetrics};
pub use prep::{PrepConfig, Preprocessor};
pub use report::{
    collect_runs, render_csv, render_markdown, render_table, write_run, ClassSummary, MethodSummary, TableLine,
    CSV_HEADER, RUN_FILE,
};
