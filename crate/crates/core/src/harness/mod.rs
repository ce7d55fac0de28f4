//! Binary-channel experiments: configuration, orchestration and the files
//! a run leaves behind.

mod config;
mod experiments;
mod output;
mod report;

pub use config::{
    AmplifierConfig, AnalysisConfig, EnsembleConfig, ExperimentConfig, InputState, OutputConfig,
};
pub use experiments::{
    compare_at_matched_gain, fig3_config, histogram_variance, run_and_emit, run_experiment,
    run_fig2_validation, Fig2Config, Fig2Validation, Job, MatchedGainComparison, Outcome,
};
pub use output::{
    emit_outputs, histogram_text, output_files, parse_histogram, sha256_hex, Manifest,
    RunArtifacts, MANIFEST_FILE, REPORT_FILE,
};
pub use report::{binary_noise_figure, to_db, ChannelReport};
