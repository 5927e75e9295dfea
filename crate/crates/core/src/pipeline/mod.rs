//! End-to-end runs: configuration, threshold tuning, prediction, the full
//! train/tune/predict/score pipeline and the synthetic corpus generator.

mod config;
mod predict;
mod run;
mod synth;
mod tune;

pub use config::{Method, PipelineConfig, ThresholdGrid};
pub use predict::{
    cluster_decisions, gold_clusterings, pair_outcomes, predict_corpus, predict_document,
    predict_pairs, DocPrediction, Scorer,
};
pub use run::{
    evaluate, fit, load_run_data, load_splits, run_pipeline, run_with_data, train_transform,
    Fitted, RegressorSummary, RunData, RunOutput, TransformSummary,
};
pub use synth::{synth, SynthConfig, SynthData};
pub use tune::{select_threshold, tune_threshold, ThresholdPoint, ThresholdTuning};
