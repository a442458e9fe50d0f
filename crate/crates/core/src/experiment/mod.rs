//! Experiment orchestration: configuration, the three run stages, reports,
//! heatmap export, significance testing and seed sweeps.

pub mod config;
pub mod heatmap;
pub mod report;
pub mod runner;
pub mod stats;
pub mod sweep;

pub use config::{ExperimentConfig, OracleConfig, OutputConfig, Phase1Config, Phase2Config, RoomSpec, ValidationConfig};
pub use heatmap::{export_heatmap, GridDocument, Layer, BEHAVIOR_PALETTE};
pub use report::{Phase1Log, Phase2Log, RoomRegion, RunReport, UpdateEvent, ValidationAttempt, ValidationLog, VoteEvent};
pub use runner::{
    modal_choice, replay, roster, run_experiment, run_phase1, run_phase2, run_phase2_with, run_training,
    run_validation, seeded_stream,
};
pub use stats::{binomial_tail, binomial_tail_normal_approx};
pub use sweep::{evaluate_seed, SeedOutcome, SweepSummary};
