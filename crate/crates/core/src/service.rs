//! Interactive training sessions in which a person casts the votes.
//!
//! This module holds the protocol and session state; the HTTP transport lives
//! in the CLI crate. Payload field names match `schema/api.schema.json`.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::Mutex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::behavior::{
    apply_feedback, default_behaviors, epsilon, select_pair, top_behavior, Behavior, BehaviorId, BehaviorPair,
    EpsilonSchedule, PairMode, BEHAVIOR_COUNT,
};
use crate::context_map::{ContextMap, GridPos, MapParams};
use crate::environment::{gather_sample, RobotParams, Room};
use crate::error::Error;
use crate::experiment::heatmap::{GridDocument, Layer};

/// JSON Schema of every request and response body.
pub const API_SCHEMA: &str = include_str!("../schema/api.schema.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadRequest,
    NotFound,
    Conflict,
    Internal,
}

impl ErrorCode {
    pub fn http_status(self) -> u16 {
        match self {
            ErrorCode::BadRequest => 400,
            ErrorCode::NotFound => 404,
            ErrorCode::Conflict => 409,
            ErrorCode::Internal => 500,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::BadRequest, message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Conflict, message)
    }

    fn not_found(id: &str) -> Self {
        Self::new(ErrorCode::NotFound, format!("no session `{id}`"))
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}: {}", self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) => ErrorCode::Internal,
            _ => ErrorCode::BadRequest,
        };
        Self::new(code, e.to_string())
    }
}

pub type ApiResult<T> = std::result::Result<T, ApiError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomRequest {
    pub width: f64,
    pub length: f64,
    #[serde(default)]
    pub label: Option<String>,
}

/// Body of `POST /session`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartRequest {
    pub room: RoomRequest,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Path of a persisted map document to resume from.
    #[serde(default)]
    pub load: Option<String>,
    #[serde(default)]
    pub map: Option<MapParams>,
    #[serde(default)]
    pub epsilon: Option<EpsilonSchedule>,
    #[serde(default)]
    pub robot: Option<RobotParams>,
    #[serde(default)]
    pub measurements: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    pub width: usize,
    pub height: usize,
    pub attr_count: usize,
    pub learning_rate: f64,
    pub radius: u32,
    pub digest: String,
}

impl MapSummary {
    fn of(map: &ContextMap) -> Self {
        Self {
            width: map.width(),
            height: map.height(),
            attr_count: map.attr_count(),
            learning_rate: map.base_learning_rate(),
            radius: map.neighborhood_radius(),
            digest: map.digest(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionDescriptor {
    pub id: String,
    pub room: Room,
    pub seed: u64,
    pub t: u64,
    pub pending: Option<BehaviorPair>,
    pub epsilon: EpsilonSchedule,
    pub robot: RobotParams,
    pub measurements: usize,
    pub loaded_from: Option<String>,
    pub map: MapSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureResponse {
    pub attrs: Vec<f64>,
    pub drive_times: Vec<f64>,
    pub attempts: usize,
    pub bmu: GridPos,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairResponse {
    pub a: Behavior,
    pub b: Behavior,
    pub mode: PairMode,
    pub epsilon: f64,
    pub t: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoteRequest {
    pub winner: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoteResponse {
    pub bmu: GridPos,
    pub fitness: [f64; BEHAVIOR_COUNT],
    pub top: BehaviorId,
    pub t: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewsResponse {
    pub id: String,
    pub room: Room,
    pub t: u64,
    pub epsilon: f64,
    pub bmu: Option<GridPos>,
    pub pending: Option<BehaviorPair>,
    /// Fitness of the four behaviors at the current BMU.
    pub fitness: Option<[f64; BEHAVIOR_COUNT]>,
    pub measures: u64,
    pub attribute: GridDocument,
    pub behavior: GridDocument,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaveRequest {
    pub path: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaveResponse {
    pub path: String,
    pub digest: String,
}

/// One participant's training loop.
#[derive(Clone, Debug)]
pub struct Session {
    pub id: String,
    pub room: Room,
    pub seed: u64,
    pub map: ContextMap,
    pub t: u64,
    pub measures: u64,
    pub bmu: Option<GridPos>,
    pub pending: Option<BehaviorPair>,
    pub schedule: EpsilonSchedule,
    pub robot: RobotParams,
    pub measurements: usize,
    pub loaded_from: Option<String>,
    rng: ChaCha8Rng,
}

pub const DEFAULT_MEASUREMENTS: usize = 3;

impl Session {
    /// Fresh or loaded map, generator seeded from `seed` (default 0).
    pub fn start(id: String, req: &StartRequest) -> ApiResult<Self> {
        let label = req.room.label.clone().unwrap_or_else(|| "room".into());
        let room = Room::new(req.room.width, req.room.length, label)?;
        let schedule = req.epsilon.unwrap_or_default();
        schedule.validate()?;
        let robot = req.robot.unwrap_or_default();
        robot.validate()?;
        let measurements = req.measurements.unwrap_or(DEFAULT_MEASUREMENTS);
        if measurements == 0 {
            return Err(ApiError::bad_request("measurements must be positive"));
        }
        let seed = req.seed.unwrap_or(0);
        let map = match &req.load {
            Some(path) => {
                if req.map.is_some() {
                    return Err(ApiError::bad_request("`map` and `load` are mutually exclusive"));
                }
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ApiError::bad_request(format!("cannot read {path}: {e}")))?;
                ContextMap::decode(&text)?
            }
            None => req.map.clone().unwrap_or_default().build(seed)?,
        };
        if map.attr_count() != 1 {
            return Err(ApiError::bad_request("sessions measure one attribute; the map must have attr_count = 1"));
        }
        Ok(Self {
            id,
            room,
            seed,
            map,
            t: 0,
            measures: 0,
            bmu: None,
            pending: None,
            schedule,
            robot,
            measurements,
            loaded_from: req.load.clone(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn descriptor(&self) -> SessionDescriptor {
        SessionDescriptor {
            id: self.id.clone(),
            room: self.room.clone(),
            seed: self.seed,
            t: self.t,
            pending: self.pending,
            epsilon: self.schedule,
            robot: self.robot,
            measurements: self.measurements,
            loaded_from: self.loaded_from.clone(),
            map: MapSummary::of(&self.map),
        }
    }

    /// Gathers one context sample and trains the map on it.
    pub fn measure(&mut self) -> ApiResult<MeasureResponse> {
        if self.pending.is_some() {
            return Err(ApiError::conflict("a behavior pair is awaiting a vote"));
        }
        let mut rng = self.rng.clone();
        let sample = gather_sample(&self.room, &self.robot, &mut rng, self.measurements)?;
        let bmu = self.map.update(&sample.vector)?;
        self.rng = rng;
        self.bmu = Some(bmu);
        self.measures += 1;
        Ok(MeasureResponse {
            attrs: sample.vector.into_inner(),
            drive_times: sample.drive_times,
            attempts: sample.attempts,
            bmu,
        })
    }

    pub fn pair(&mut self) -> ApiResult<PairResponse> {
        let bmu = self.bmu.ok_or_else(|| ApiError::conflict("measure before requesting a pair"))?;
        if self.pending.is_some() {
            return Err(ApiError::conflict("a behavior pair is already awaiting a vote"));
        }
        let eps = epsilon(&self.schedule, self.t);
        let table = self.map.cell(bmu).expect("BMU lies on the grid").behaviors;
        let pair = select_pair(&table, eps, &mut self.rng)?;
        self.pending = Some(pair);
        let behaviors = default_behaviors();
        Ok(PairResponse {
            a: behaviors[pair.first.index()].clone(),
            b: behaviors[pair.second.index()].clone(),
            mode: pair.mode,
            epsilon: eps,
            t: self.t,
        })
    }

    pub fn vote(&mut self, req: &VoteRequest) -> ApiResult<VoteResponse> {
        let pair = self.pending.ok_or_else(|| ApiError::conflict("no behavior pair is awaiting a vote"))?;
        let winner = BehaviorId::new(req.winner)?;
        let loser = pair
            .other(winner)
            .ok_or_else(|| ApiError::bad_request(format!("behavior {winner} is not in the pending pair")))?;
        let bmu = self.bmu.expect("a pending pair implies a BMU");
        apply_feedback(&mut self.map, bmu, winner, loser)?;
        self.pending = None;
        self.t += 1;
        let table = &self.map.cell(bmu).expect("on grid").behaviors;
        Ok(VoteResponse { bmu, fitness: table.fitness_values(), top: top_behavior(table), t: self.t })
    }

    pub fn views(&self) -> ApiResult<ViewsResponse> {
        Ok(ViewsResponse {
            id: self.id.clone(),
            room: self.room.clone(),
            t: self.t,
            epsilon: epsilon(&self.schedule, self.t),
            bmu: self.bmu,
            pending: self.pending,
            fitness: self.bmu.map(|p| self.map.cell(p).expect("on grid").behaviors.fitness_values()),
            measures: self.measures,
            attribute: GridDocument::from_map(&self.map, Layer::Attribute { index: 0 })?,
            behavior: GridDocument::from_map(&self.map, Layer::TopBehavior)?,
        })
    }

    pub fn save(&self, req: &SaveRequest) -> ApiResult<SaveResponse> {
        let path = PathBuf::from(&req.path);
        if req.path.is_empty() {
            return Err(ApiError::bad_request("empty save path"));
        }
        std::fs::write(&path, self.map.encode())
            .map_err(|e| ApiError::bad_request(format!("cannot write {}: {e}", req.path)))?;
        Ok(SaveResponse { path: req.path.clone(), digest: self.map.digest() })
    }
}

/// All live sessions. Each session has its own lock, so requests against one
/// session run serially while different sessions proceed concurrently.
#[derive(Debug, Default)]
pub struct SessionStore {
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

impl SessionStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        self.sessions.lock().get(id).cloned().ok_or_else(|| ApiError::not_found(id))
    }

    pub fn start(&self, req: &StartRequest) -> ApiResult<SessionDescriptor> {
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed) + 1);
        let session = Session::start(id.clone(), req)?;
        let descriptor = session.descriptor();
        self.sessions.lock().insert(id, Arc::new(Mutex::new(session)));
        Ok(descriptor)
    }

    pub fn measure(&self, id: &str) -> ApiResult<MeasureResponse> {
        self.get(id)?.lock().measure()
    }

    pub fn pair(&self, id: &str) -> ApiResult<PairResponse> {
        self.get(id)?.lock().pair()
    }

    pub fn vote(&self, id: &str, req: &VoteRequest) -> ApiResult<VoteResponse> {
        self.get(id)?.lock().vote(req)
    }

    pub fn views(&self, id: &str) -> ApiResult<ViewsResponse> {
        self.get(id)?.lock().views()
    }

    pub fn save(&self, id: &str, req: &SaveRequest) -> ApiResult<SaveResponse> {
        self.get(id)?.lock().save(req)
    }
}
