//! Per-seed outcome checks used by the seed-sweep harness.

use serde::{Deserialize, Serialize};

use crate::behavior::{BehaviorId, BEHAVIOR_COUNT};
use crate::context_map::{grid_step_distance, ContextMap, GridPos};
use crate::environment::{gather_sample, Room};
use crate::error::{Error, Result};
use crate::experiment::config::ExperimentConfig;
use crate::experiment::runner::{run_phase1, run_phase2, run_validation, seeded_stream, PROBE_STREAM};
use crate::oracle::preferred_intensity;

/// Fresh samples of the largest and smallest exploration rooms against the
/// phase-1 map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionCheck {
    pub large_room: String,
    pub small_room: String,
    pub large_bmu: GridPos,
    pub small_bmu: GridPos,
    pub steps: u32,
    pub large_attr: f64,
    pub small_attr: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoomPriority {
    pub room: String,
    pub expected_top: BehaviorId,
    pub expected_lowest: BehaviorId,
    pub top: BehaviorId,
    pub fitness: [f64; BEHAVIOR_COUNT],
    pub top_ok: bool,
    pub ordering_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorityCheck {
    pub rooms: Vec<RoomPriority>,
    pub tops_ok: bool,
    pub ordering_ok: bool,
}

impl PriorityCheck {
    pub fn pass(&self) -> bool {
        self.tops_ok && self.ordering_ok
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationCheck {
    pub room: String,
    pub choice: BehaviorId,
    pub accepted: Vec<BehaviorId>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub region: Option<RegionCheck>,
    pub priority: PriorityCheck,
    pub validation: ValidationCheck,
}

/// Intensity nearest the room's ideal.
pub fn expected_top(room: &Room) -> BehaviorId {
    BehaviorId::new(preferred_intensity(room).round() as u8).expect("ideal lies in 0..=3")
}

/// Intensity farthest from the room's ideal.
pub fn expected_lowest(room: &Room) -> BehaviorId {
    let ideal = preferred_intensity(room);
    BehaviorId::ALL
        .into_iter()
        .max_by(|a, b| {
            let da = (a.intensity() as f64 - ideal).abs();
            let db = (b.intensity() as f64 - ideal).abs();
            da.total_cmp(&db)
        })
        .expect("non-empty")
}

/// Intensities bracketing the room's ideal.
pub fn bracketing(room: &Room) -> Vec<BehaviorId> {
    let ideal = preferred_intensity(room);
    let mut ids = vec![ideal.floor() as u8, ideal.ceil() as u8];
    ids.dedup();
    ids.into_iter().map(|i| BehaviorId::new(i).expect("ideal lies in 0..=3")).collect()
}

/// `expected_top` strictly highest and `expected_lowest` strictly lowest.
pub fn ordering_matches(fitness: &[f64; BEHAVIOR_COUNT], top: BehaviorId, lowest: BehaviorId) -> bool {
    (0..BEHAVIOR_COUNT).all(|i| {
        (i == top.index() || fitness[i] < fitness[top.index()]) && (i == lowest.index() || fitness[i] > fitness[lowest.index()])
    })
}

pub fn region_check(cfg: &ExperimentConfig, map: &ContextMap) -> Result<Option<RegionCheck>> {
    let mut rooms = cfg.phase1.rooms.iter().map(|l| cfg.room(l)).collect::<Result<Vec<_>>>()?;
    rooms.sort_by(|a, b| b.area().total_cmp(&a.area()));
    rooms.dedup_by(|a, b| a.label == b.label);
    let (Some(large), Some(small)) = (rooms.first(), rooms.last()) else {
        return Ok(None);
    };
    if large.area() == small.area() {
        return Ok(None);
    }
    let mut rng = seeded_stream(cfg.seed, PROBE_STREAM);
    let n = cfg.phase1.measurements_per_update;
    let a = gather_sample(large, &cfg.robot, &mut rng, n)?;
    let b = gather_sample(small, &cfg.robot, &mut rng, n)?;
    let large_bmu = map.best_matching_unit(&a.vector)?;
    let small_bmu = map.best_matching_unit(&b.vector)?;
    let attr = |p: GridPos| map.cell(p).expect("on grid").vector.as_slice()[0];
    let (large_attr, small_attr) = (attr(large_bmu), attr(small_bmu));
    let steps = grid_step_distance(large_bmu, small_bmu);
    Ok(Some(RegionCheck {
        large_room: large.label.clone(),
        small_room: small.label.clone(),
        large_bmu,
        small_bmu,
        steps,
        large_attr,
        small_attr,
        pass: large_bmu != small_bmu && steps >= 2 && large_attr > small_attr,
    }))
}

/// Runs all three stages for `cfg.seed` and scores them.
pub fn evaluate_seed(cfg: &ExperimentConfig) -> Result<SeedOutcome> {
    let (map, _) = run_phase1(cfg)?;
    let region = region_check(cfg, &map)?;
    let (map, report) = run_phase2(cfg, map)?;
    let mut rooms = Vec::new();
    for r in &report.phase2.as_ref().expect("phase 2 ran").regions {
        let room = cfg.room(&r.room)?;
        let (expected_top, expected_lowest) = (expected_top(&room), expected_lowest(&room));
        rooms.push(RoomPriority {
            room: r.room.clone(),
            expected_top,
            expected_lowest,
            top: r.top,
            fitness: r.fitness,
            top_ok: r.top == expected_top,
            ordering_ok: ordering_matches(&r.fitness, expected_top, expected_lowest),
        });
    }
    if rooms.is_empty() {
        return Err(Error::Config("phase 2 produced no room regions".into()));
    }
    let priority = PriorityCheck {
        tops_ok: rooms.iter().all(|r| r.top_ok),
        ordering_ok: rooms.iter().all(|r| r.ordering_ok),
        rooms,
    };
    let (choice, _) = run_validation(cfg, &map)?;
    let accepted = bracketing(&cfg.room(&cfg.validation.room)?);
    let validation = ValidationCheck {
        room: cfg.validation.room.clone(),
        pass: accepted.contains(&choice),
        choice,
        accepted,
    };
    Ok(SeedOutcome { seed: cfg.seed, region, priority, validation })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub runs: usize,
    pub region_pass: usize,
    pub tops_pass: usize,
    /// Runs whose tops and full ordering both match.
    pub priority_pass: usize,
    /// Runs with correct tops but a mismatched ordering.
    pub ordering_misses: usize,
    /// Validation passes among `priority_pass` runs.
    pub validation_pass_given_priority: usize,
    pub validation_pass: usize,
}

impl SweepSummary {
    pub fn from_outcomes(outcomes: &[SeedOutcome]) -> Self {
        let mut s = SweepSummary { runs: outcomes.len(), ..Default::default() };
        for o in outcomes {
            s.region_pass += o.region.as_ref().is_some_and(|r| r.pass) as usize;
            s.tops_pass += o.priority.tops_ok as usize;
            s.ordering_misses += (o.priority.tops_ok && !o.priority.ordering_ok) as usize;
            if o.priority.pass() {
                s.priority_pass += 1;
                s.validation_pass_given_priority += o.validation.pass as usize;
            }
            s.validation_pass += o.validation.pass as usize;
        }
        s
    }

    pub fn rate(count: usize, runs: usize) -> f64 {
        if runs == 0 {
            0.0
        } else {
            count as f64 / runs as f64
        }
    }
}
