//! The three stages of an experiment: context exploration, behavior
//! prioritization and validation in an unseen room.
//!
//! Every stage draws from its own ChaCha stream of the run seed, so a stage
//! can be re-run in isolation and the whole pipeline is bit-reproducible.

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::behavior::{apply_feedback, default_behaviors, epsilon, select_pair, top_behavior, BehaviorId, BehaviorTable, BEHAVIOR_COUNT};
use crate::context_map::{ContextMap, ContextVector, GridPos};
use crate::environment::{gather_sample, Room};
use crate::error::{Error, Result};
use crate::experiment::config::ExperimentConfig;
use crate::experiment::report::*;
use crate::oracle::{Panel, PreferenceOracle};

pub(crate) const PHASE1_STREAM: u64 = 1;
pub(crate) const PHASE2_STREAM: u64 = 2;
pub(crate) const VALIDATION_STREAM: u64 = 3;
pub(crate) const ROSTER_STREAM: u64 = 4;
pub(crate) const PROBE_STREAM: u64 = 5;

/// Generator for one named stream of a run seed.
pub fn seeded_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn rooms(cfg: &ExperimentConfig, labels: &[String]) -> Result<Vec<Room>> {
    labels.iter().map(|l| cfg.room(l)).collect()
}

/// Explores the phase-1 rooms round-robin, updating a freshly seeded map
/// once per context sample.
pub fn run_phase1(cfg: &ExperimentConfig) -> Result<(ContextMap, RunReport)> {
    cfg.validate()?;
    let mut map = cfg.map.build(cfg.seed)?;
    let rooms = rooms(cfg, &cfg.phase1.rooms)?;
    let mut rng = seeded_stream(cfg.seed, PHASE1_STREAM);
    let mut log = Phase1Log::default();
    for _ in 0..cfg.phase1.updates_per_room {
        for room in &rooms {
            let sample = gather_sample(room, &cfg.robot, &mut rng, cfg.phase1.measurements_per_update)?;
            let bmu = map.update(&sample.vector)?;
            log.updates.push(UpdateEvent {
                step: log.updates.len(),
                room: room.label.clone(),
                attrs: sample.vector.into_inner(),
                drive_times: sample.drive_times,
                attempts: sample.attempts,
                bmu,
            });
        }
    }
    for room in &rooms {
        if let Some(last) = log.updates.iter().rev().find(|u| u.room == room.label) {
            log.final_bmus.push(RoomBmu { room: room.label.clone(), bmu: last.bmu });
        }
    }
    let mut report = RunReport::new(cfg);
    report.phase1 = Some(log);
    report.map_digest = map.digest();
    Ok((map, report))
}

/// The simulated participant roster for this run.
pub fn roster(cfg: &ExperimentConfig) -> Result<Panel> {
    let seed = cfg
        .oracle
        .roster_seed
        .unwrap_or_else(|| seeded_stream(cfg.seed, ROSTER_STREAM).next_u64());
    Panel::generate(cfg.phase2.participants, &cfg.oracle.params(), seed)
}

/// Behavior prioritization with the configured simulated roster.
pub fn run_phase2(cfg: &ExperimentConfig, map: ContextMap) -> Result<(ContextMap, RunReport)> {
    let panel = roster(cfg)?;
    run_phase2_with(cfg, map, &panel)
}

/// Behavior prioritization with an arbitrary vote source.
///
/// Rooms alternate per interaction and participants rotate round-robin. The
/// map's vectors are not modified; only behavior tallies change.
pub fn run_phase2_with(
    cfg: &ExperimentConfig,
    mut map: ContextMap,
    oracle: &dyn PreferenceOracle,
) -> Result<(ContextMap, RunReport)> {
    cfg.validate()?;
    let rooms = rooms(cfg, &cfg.phase2.rooms)?;
    let behaviors = default_behaviors();
    let mut rng = seeded_stream(cfg.seed, PHASE2_STREAM);
    let mut votes = Vec::with_capacity(cfg.phase2.interactions_total);
    for t in 0..cfg.phase2.interactions_total {
        let room = &rooms[t % rooms.len()];
        let participant = t % cfg.phase2.participants;
        let sample = gather_sample(room, &cfg.robot, &mut rng, cfg.phase2.measurements_per_interaction)?;
        let bmu = map.best_matching_unit(&sample.vector)?;
        let eps = epsilon(&cfg.phase2.epsilon, t as u64);
        let table = map.cell(bmu).expect("BMU lies on the grid").behaviors;
        let pair = select_pair(&table, eps, &mut rng)?;
        let winner = oracle.choose(
            participant,
            room,
            &behaviors[pair.first.index()],
            &behaviors[pair.second.index()],
            &mut rng,
        )?;
        let loser = pair
            .other(winner)
            .ok_or_else(|| Error::InvalidArgument(format!("oracle picked {winner}, which was not offered")))?;
        apply_feedback(&mut map, bmu, winner, loser)?;
        votes.push(VoteEvent {
            t,
            room: room.label.clone(),
            participant,
            attrs: sample.vector.into_inner(),
            bmu,
            epsilon: eps,
            mode: pair.mode,
            first: pair.first,
            second: pair.second,
            winner,
        });
    }
    let mut labels: Vec<&String> = Vec::new();
    for l in &cfg.phase2.rooms {
        if !labels.contains(&l) {
            labels.push(l);
        }
    }
    let regions = labels
        .into_iter()
        .filter_map(|l| summarize_region(&map, &votes, l).transpose())
        .collect::<Result<Vec<_>>>()?;
    let mut report = RunReport::new(cfg);
    report.phase2 = Some(Phase2Log { votes, regions });
    report.map_digest = map.digest();
    Ok((map, report))
}

/// Pools the behavior tables a room's votes landed on.
pub fn summarize_region(map: &ContextMap, votes: &[VoteEvent], room: &str) -> Result<Option<RoomRegion>> {
    let own: Vec<&VoteEvent> = votes.iter().filter(|v| v.room == room).collect();
    if own.is_empty() {
        return Ok(None);
    }
    let mut visits: BTreeMap<GridPos, usize> = BTreeMap::new();
    for v in &own {
        *visits.entry(v.bmu).or_default() += 1;
    }
    let mut pooled = BehaviorTable::default();
    for (pos, count) in &visits {
        let cell = map.cell(*pos).ok_or_else(|| Error::InvalidArgument(format!("{pos} off the grid")))?;
        pooled.accumulate(&cell.behaviors.scaled(*count as f64));
    }
    let dims = own[0].attrs.len();
    let mean: Vec<f64> = (0..dims)
        .map(|i| own.iter().map(|v| v.attrs[i]).sum::<f64>() / own.len() as f64)
        .collect();
    let final_bmu = map.best_matching_unit(&ContextVector::new(mean)?)?;
    let mut wins = [0usize; BEHAVIOR_COUNT];
    let mut shown = [0usize; BEHAVIOR_COUNT];
    for v in &own {
        wins[v.winner.index()] += 1;
        shown[v.first.index()] += 1;
        shown[v.second.index()] += 1;
    }
    let vote_share = std::array::from_fn(|i| if shown[i] == 0 { 0.5 } else { wins[i] as f64 / shown[i] as f64 });
    Ok(Some(RoomRegion {
        room: room.to_string(),
        visits: visits.into_iter().map(|(pos, count)| CellVisits { pos, count }).collect(),
        final_bmu,
        final_bmu_top: top_behavior(&map.cell(final_bmu).expect("on grid").behaviors),
        fitness: pooled.fitness_values(),
        top: pooled.top(),
        vote_share,
        votes: own.len(),
    }))
}

/// Most frequent choice; ties go to the lowest id.
pub fn modal_choice(choices: &[BehaviorId]) -> Option<BehaviorId> {
    let mut counts = [0usize; BEHAVIOR_COUNT];
    for c in choices {
        counts[c.index()] += 1;
    }
    let best = *counts.iter().max()?;
    if best == 0 {
        return None;
    }
    BehaviorId::ALL.into_iter().find(|id| counts[id.index()] == best)
}

/// Picks a behavior for the validation room from the trained map.
///
/// Each attempt averages `measurements_per_attempt` successful drives into
/// one context vector and reads the top behavior at its BMU; the answer is
/// the modal choice across attempts.
pub fn run_validation(cfg: &ExperimentConfig, map: &ContextMap) -> Result<(BehaviorId, RunReport)> {
    cfg.validate()?;
    let room = cfg.room(&cfg.validation.room)?;
    let mut rng = seeded_stream(cfg.seed, VALIDATION_STREAM);
    let mut attempts = Vec::with_capacity(cfg.validation.attempts);
    for _ in 0..cfg.validation.attempts {
        let sample = gather_sample(&room, &cfg.robot, &mut rng, cfg.validation.measurements_per_attempt)?;
        let bmu = map.best_matching_unit(&sample.vector)?;
        let choice = top_behavior(&map.cell(bmu).expect("BMU lies on the grid").behaviors);
        attempts.push(ValidationAttempt { attrs: sample.vector.into_inner(), bmu, choice });
    }
    let choices: Vec<BehaviorId> = attempts.iter().map(|a| a.choice).collect();
    let choice = modal_choice(&choices).expect("at least one validation attempt");
    let mut report = RunReport::new(cfg);
    report.validation = Some(ValidationLog { room: room.label, attempts, choice });
    report.map_digest = map.digest();
    Ok((choice, report))
}

/// Phase 1 followed by phase 2.
pub fn run_training(cfg: &ExperimentConfig) -> Result<(ContextMap, RunReport)> {
    let (map, r1) = run_phase1(cfg)?;
    let (map, r2) = run_phase2(cfg, map)?;
    Ok((map, r1.merge(r2)))
}

/// Both training phases and the validation experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(ContextMap, RunReport)> {
    let (map, report) = run_training(cfg)?;
    let (_, r3) = run_validation(cfg, &map)?;
    Ok((map, report.merge(r3)))
}

/// Re-executes the phases recorded in `report` from its embedded config and
/// checks that the regenerated report is identical. Returns the rebuilt map.
pub fn replay(report: &RunReport) -> Result<ContextMap> {
    if report.phase1.is_none() {
        return Err(Error::InvalidArgument("only reports that start with exploration can be replayed".into()));
    }
    if report.seed != report.config.seed {
        return Err(Error::Decode("report seed differs from its config seed".into()));
    }
    let cfg = &report.config;
    let (mut map, mut regenerated) = run_phase1(cfg)?;
    if report.phase2.is_some() {
        let (m, r) = run_phase2(cfg, map)?;
        map = m;
        regenerated = regenerated.merge(r);
    }
    if report.validation.is_some() {
        let (_, r) = run_validation(cfg, &map)?;
        regenerated = regenerated.merge(r);
    }
    if &regenerated != report {
        let what = if regenerated.map_digest != report.map_digest { "map digest" } else { "event log" };
        return Err(Error::Decode(format!("replay diverged from the recorded run ({what} differs)")));
    }
    Ok(map)
}
