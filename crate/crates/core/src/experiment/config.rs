use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::behavior::EpsilonSchedule;
use crate::context_map::MapParams;
use crate::environment::{Room, RobotParams};
use crate::error::{Error, Result};
use crate::oracle::OracleParams;

/// Width and length of a named room, in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomSpec {
    pub width: f64,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Phase1Config {
    /// Visit order; updates alternate round-robin over this list.
    pub rooms: Vec<String>,
    pub updates_per_room: usize,
    pub measurements_per_update: usize,
}

impl Default for Phase1Config {
    fn default() -> Self {
        Self { rooms: default_training_rooms(), updates_per_room: 16, measurements_per_update: 3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Phase2Config {
    pub rooms: Vec<String>,
    pub interactions_total: usize,
    pub participants: usize,
    pub measurements_per_interaction: usize,
    pub epsilon: EpsilonSchedule,
}

impl Default for Phase2Config {
    fn default() -> Self {
        Self {
            rooms: default_training_rooms(),
            interactions_total: 72,
            participants: 6,
            measurements_per_interaction: 3,
            epsilon: EpsilonSchedule::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationConfig {
    pub room: String,
    pub attempts: usize,
    pub measurements_per_attempt: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self { room: "validation".into(), attempts: 3, measurements_per_attempt: 3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub temperature: f64,
    pub bias_sigma: f64,
    /// Seed of the participant roster; derived from the run seed when absent.
    pub roster_seed: Option<u64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        let p = OracleParams::default();
        Self { temperature: p.temperature, bias_sigma: p.bias_sigma, roster_seed: None }
    }
}

impl OracleConfig {
    pub fn params(&self) -> OracleParams {
        OracleParams { temperature: self.temperature, bias_sigma: self.bias_sigma }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<String>,
}

/// Complete description of an experiment run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub map: MapParams,
    pub rooms: BTreeMap<String, RoomSpec>,
    pub phase1: Phase1Config,
    pub phase2: Phase2Config,
    pub validation: ValidationConfig,
    pub oracle: OracleConfig,
    pub robot: RobotParams,
    pub output: OutputConfig,
}

fn default_training_rooms() -> Vec<String> {
    vec!["living".into(), "bedroom".into()]
}

impl Default for ExperimentConfig {
    /// Two training rooms (6x5 m and 2x3 m) and a 4x4 m validation room.
    fn default() -> Self {
        let rooms = BTreeMap::from([
            ("living".to_string(), RoomSpec { width: 6.0, length: 5.0 }),
            ("bedroom".to_string(), RoomSpec { width: 2.0, length: 3.0 }),
            ("validation".to_string(), RoomSpec { width: 4.0, length: 4.0 }),
        ]);
        Self {
            seed: 0,
            map: MapParams::default(),
            rooms,
            phase1: Phase1Config::default(),
            phase2: Phase2Config::default(),
            validation: ValidationConfig::default(),
            oracle: OracleConfig::default(),
            robot: RobotParams::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn room(&self, label: &str) -> Result<Room> {
        let spec = self
            .rooms
            .get(label)
            .ok_or_else(|| Error::Config(format!("unknown room `{label}`")))?;
        Room::new(spec.width, spec.length, label)
    }

    pub fn validate(&self) -> Result<()> {
        self.map.build(0)?;
        for label in self.rooms.keys() {
            self.room(label)?;
        }
        for label in self.phase1.rooms.iter().chain(&self.phase2.rooms) {
            self.room(label)?;
        }
        self.room(&self.validation.room)?;
        if self.phase2.rooms.is_empty() && self.phase2.interactions_total > 0 {
            return Err(Error::Config("phase 2 needs at least one room".into()));
        }
        let counts = [
            ("phase1.measurements_per_update", self.phase1.measurements_per_update),
            ("phase2.participants", self.phase2.participants),
            ("phase2.measurements_per_interaction", self.phase2.measurements_per_interaction),
            ("validation.attempts", self.validation.attempts),
            ("validation.measurements_per_attempt", self.validation.measurements_per_attempt),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        self.phase2.epsilon.validate()?;
        self.oracle.params().validate()?;
        self.robot.validate()?;
        Ok(())
    }
}
