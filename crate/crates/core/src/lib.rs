//! Context-aware behavior prioritization for a social robot.
//!
//! A small self-organizing map clusters the robot's physical surroundings
//! from time-of-drive measurements. Each map cell keeps a pairwise vote
//! tally over four behavior intensities, so the robot learns which
//! intensity suits each kind of room.
//!
//! ```
//! use affecta_core::experiment::{run_experiment, ExperimentConfig};
//!
//! let (map, report) = run_experiment(&ExperimentConfig::default().with_seed(7)).unwrap();
//! assert_eq!(report.phase2.unwrap().votes.len(), 72);
//! assert_eq!(map.len(), 100);
//! ```

pub mod behavior;
pub mod context_map;
pub mod environment;
pub mod error;
pub mod experiment;
pub mod oracle;
pub mod service;

pub use behavior::{
    apply_feedback, default_behaviors, epsilon, fitness, select_pair, top_behavior, Behavior, BehaviorId,
    BehaviorPair, BehaviorStats, BehaviorTable, EpsilonSchedule, PairMode, BEHAVIOR_COUNT,
};
pub use context_map::{
    best_matching_unit, grid_step_distance, neighborhood_weight, update_map, weighted_distance, AttributeWeights,
    Cell, ContextMap, ContextVector, GridPos, MapDocument, MapParams,
};
pub use environment::{gather_context_sample, gather_sample, sample_measurement, ContextSample, RobotParams, Room};
pub use error::{Error, Result};
pub use experiment::{binomial_tail, ExperimentConfig, RunReport};
pub use oracle::{preferred_intensity, OracleParams, Panel, Participant, PreferenceOracle};
