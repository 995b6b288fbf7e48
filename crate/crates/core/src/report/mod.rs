//! Pipeline configuration, stage orchestration and report artifacts.

pub mod config;
pub mod layout;
pub mod pipeline;
pub mod stages;
pub mod svg;

pub use config::PipelineConfig;
pub use pipeline::{
    prepare, prepare_from, run_qa, run_qa_in_memory, run_synth, train_model, ModelRun, Prepared, QaSummary,
};
pub use stages::{stage_qa, stage_report, stage_run, stage_stats, stage_synth, stage_train, RunReport, Stage};
