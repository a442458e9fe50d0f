use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::behavior::{BehaviorId, PairMode, BEHAVIOR_COUNT};
use crate::context_map::GridPos;
use crate::error::{Error, Result};
use crate::experiment::config::ExperimentConfig;

/// One phase-1 sample and the map update it triggered.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdateEvent {
    pub step: usize,
    pub room: String,
    pub attrs: Vec<f64>,
    pub drive_times: Vec<f64>,
    pub attempts: usize,
    pub bmu: GridPos,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoomBmu {
    pub room: String,
    pub bmu: GridPos,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Phase1Log {
    pub updates: Vec<UpdateEvent>,
    /// BMU of each room's last update.
    pub final_bmus: Vec<RoomBmu>,
}

/// One phase-2 interaction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoteEvent {
    pub t: usize,
    pub room: String,
    pub participant: usize,
    pub attrs: Vec<f64>,
    pub bmu: GridPos,
    pub epsilon: f64,
    pub mode: PairMode,
    pub first: BehaviorId,
    pub second: BehaviorId,
    pub winner: BehaviorId,
}

impl VoteEvent {
    pub fn loser(&self) -> BehaviorId {
        if self.winner == self.first {
            self.second
        } else {
            self.first
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellVisits {
    pub pos: GridPos,
    pub count: usize,
}

/// The part of the map a room's phase-2 samples landed on.
///
/// `fitness` pools the behavior tables of every visited cell, weighted by
/// the number of visits; `top` is the top behavior of that pooled table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoomRegion {
    pub room: String,
    pub visits: Vec<CellVisits>,
    /// BMU of the mean of the room's samples.
    pub final_bmu: GridPos,
    pub final_bmu_top: BehaviorId,
    pub fitness: [f64; BEHAVIOR_COUNT],
    pub top: BehaviorId,
    /// Raw per-room vote shares (positive / presented), 0.5 when never presented.
    pub vote_share: [f64; BEHAVIOR_COUNT],
    pub votes: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Phase2Log {
    pub votes: Vec<VoteEvent>,
    pub regions: Vec<RoomRegion>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationAttempt {
    pub attrs: Vec<f64>,
    pub bmu: GridPos,
    pub choice: BehaviorId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationLog {
    pub room: String,
    pub attempts: Vec<ValidationAttempt>,
    pub choice: BehaviorId,
}

/// Everything a run did, in enough detail to replay and audit it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub config: ExperimentConfig,
    pub phase1: Option<Phase1Log>,
    pub phase2: Option<Phase2Log>,
    pub validation: Option<ValidationLog>,
    /// Digest of the map after the last phase that modified it.
    pub map_digest: String,
}

impl RunReport {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            seed: cfg.seed,
            config: cfg.clone(),
            phase1: None,
            phase2: None,
            validation: None,
            map_digest: String::new(),
        }
    }

    /// Combines the phases of `later` into `self`; `later` wins on overlap.
    pub fn merge(mut self, later: RunReport) -> Self {
        if later.phase1.is_some() {
            self.phase1 = later.phase1;
        }
        if later.phase2.is_some() {
            self.phase2 = later.phase2;
        }
        if later.validation.is_some() {
            self.validation = later.validation;
        }
        if !later.map_digest.is_empty() {
            self.map_digest = later.map_digest;
        }
        self
    }

    pub fn region(&self, room: &str) -> Option<&RoomRegion> {
        self.phase2.as_ref()?.regions.iter().find(|r| r.room == room)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Decode(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
