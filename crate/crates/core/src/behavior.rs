//! Intensity-leveled behaviors, per-cell vote tallies, epsilon-greedy pair
//! selection and neighborhood-weighted vote propagation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::context_map::{neighborhood_weight, ContextMap, GridPos};
use crate::error::{Error, Result};

pub const BEHAVIOR_COUNT: usize = 4;

/// Identifier of one of the four behaviors; equal to its intensity level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct BehaviorId(u8);

impl BehaviorId {
    pub const ALL: [BehaviorId; BEHAVIOR_COUNT] =
        [BehaviorId(0), BehaviorId(1), BehaviorId(2), BehaviorId(3)];

    pub fn new(id: u8) -> Result<Self> {
        if (id as usize) < BEHAVIOR_COUNT {
            Ok(Self(id))
        } else {
            Err(Error::InvalidArgument(format!("behavior id {id} outside 0..=3")))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn intensity(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for BehaviorId {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        Self::new(v)
    }
}

impl From<BehaviorId> for u8 {
    fn from(id: BehaviorId) -> u8 {
        id.0
    }
}

impl std::fmt::Display for BehaviorId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An abstract behavior descriptor: movement and gesture amplitude scale
/// with the intensity level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Behavior {
    pub id: BehaviorId,
    pub movement_amplitude: f64,
    pub gesture_amplitude: f64,
    pub has_movement: bool,
    pub label: String,
}

/// The four canonical behaviors with amplitudes 0, 1/3, 2/3 and 1.
pub fn default_behaviors() -> Vec<Behavior> {
    const LABELS: [&str; BEHAVIOR_COUNT] = ["still", "gentle", "lively", "exuberant"];
    BehaviorId::ALL
        .iter()
        .map(|&id| {
            let amplitude = id.intensity() as f64 / 3.0;
            Behavior {
                id,
                movement_amplitude: amplitude,
                gesture_amplitude: amplitude,
                has_movement: id.intensity() > 0,
                label: LABELS[id.index()].to_string(),
            }
        })
        .collect()
}

/// Weighted positive and total votes for one behavior in one cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BehaviorStats {
    pub weighted_positive: f64,
    pub weighted_total: f64,
}

impl BehaviorStats {
    pub fn new(weighted_positive: f64, weighted_total: f64) -> Result<Self> {
        let ok = weighted_positive.is_finite()
            && weighted_total.is_finite()
            && weighted_positive >= 0.0
            && weighted_positive <= weighted_total;
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "invalid tallies positive={weighted_positive} total={weighted_total}"
            )));
        }
        Ok(Self { weighted_positive, weighted_total })
    }

    /// Adds one vote of the given weight.
    pub fn record(&mut self, weight: f64, won: bool) {
        if won {
            self.weighted_positive += weight;
        }
        self.weighted_total += weight;
    }

    pub fn fitness(&self) -> f64 {
        fitness(self)
    }
}

/// Share of positive votes; 0.5 for a behavior that has never been voted on.
pub fn fitness(s: &BehaviorStats) -> f64 {
    if s.weighted_total <= 0.0 {
        0.5
    } else {
        (s.weighted_positive / s.weighted_total).clamp(0.0, 1.0)
    }
}

/// Vote tallies for all four behaviors of one cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BehaviorTable {
    stats: [BehaviorStats; BEHAVIOR_COUNT],
}

impl BehaviorTable {
    pub fn stats(&self, id: BehaviorId) -> &BehaviorStats {
        &self.stats[id.index()]
    }

    pub fn stats_mut(&mut self, id: BehaviorId) -> &mut BehaviorStats {
        &mut self.stats[id.index()]
    }

    pub fn fitness_values(&self) -> [f64; BEHAVIOR_COUNT] {
        self.stats.map(|s| fitness(&s))
    }

    pub fn top(&self) -> BehaviorId {
        top_behavior(self)
    }

    /// Sum of `weighted_total` over all behaviors.
    pub fn total_weight(&self) -> f64 {
        self.stats.iter().map(|s| s.weighted_total).sum()
    }

    /// Adds another table's tallies into this one.
    pub fn accumulate(&mut self, other: &BehaviorTable) {
        for (a, b) in self.stats.iter_mut().zip(&other.stats) {
            a.weighted_positive += b.weighted_positive;
            a.weighted_total += b.weighted_total;
        }
    }

    /// Multiplies every tally by `factor`.
    pub fn scaled(&self, factor: f64) -> BehaviorTable {
        BehaviorTable {
            stats: self.stats.map(|s| BehaviorStats {
                weighted_positive: s.weighted_positive * factor,
                weighted_total: s.weighted_total * factor,
            }),
        }
    }
}

/// The behavior with the highest fitness; ties go to the lowest id.
pub fn top_behavior(t: &BehaviorTable) -> BehaviorId {
    let f = t.fitness_values();
    let mut best = 0;
    for i in 1..BEHAVIOR_COUNT {
        if f[i] > f[best] {
            best = i;
        }
    }
    BehaviorId::ALL[best]
}

/// Geometric exploration-rate decay with a floor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub initial: f64,
    pub decay: f64,
    pub floor: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self { initial: 0.8, decay: 0.97, floor: 0.1 }
    }
}

impl EpsilonSchedule {
    pub fn new(initial: f64, decay: f64, floor: f64) -> Result<Self> {
        let s = Self { initial, decay, floor };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::Config(format!("epsilon decay {} outside (0, 1]", self.decay)));
        }
        if !(0.0 <= self.floor && self.floor <= self.initial && self.initial <= 1.0) {
            return Err(Error::Config(format!(
                "epsilon requires 0 <= floor ({}) <= initial ({}) <= 1",
                self.floor, self.initial
            )));
        }
        Ok(())
    }

    pub fn at(&self, t: u64) -> f64 {
        epsilon(self, t)
    }
}

/// `max(floor, initial * decay^t)`.
pub fn epsilon(schedule: &EpsilonSchedule, t: u64) -> f64 {
    let t = i32::try_from(t).unwrap_or(i32::MAX);
    (schedule.initial * schedule.decay.powi(t)).max(schedule.floor)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairMode {
    Explore,
    Verify,
}

/// Two distinct behaviors presented for a vote.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorPair {
    pub first: BehaviorId,
    pub second: BehaviorId,
    pub mode: PairMode,
}

impl BehaviorPair {
    pub fn contains(&self, id: BehaviorId) -> bool {
        self.first == id || self.second == id
    }

    /// The member of the pair that is not `winner`.
    pub fn other(&self, winner: BehaviorId) -> Option<BehaviorId> {
        if winner == self.first {
            Some(self.second)
        } else if winner == self.second {
            Some(self.first)
        } else {
            None
        }
    }
}

/// Epsilon-greedy pair selection.
///
/// With probability `eps` two distinct behaviors are drawn uniformly
/// (explore); otherwise the table's current top behavior is paired with a
/// uniformly drawn challenger (verify).
pub fn select_pair<R: Rng + ?Sized>(table: &BehaviorTable, eps: f64, rng: &mut R) -> Result<BehaviorPair> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!("epsilon {eps} outside [0, 1]")));
    }
    let explore = rng.random::<f64>() < eps;
    let (first, mode) = if explore {
        (BehaviorId::ALL[rng.random_range(0..BEHAVIOR_COUNT)], PairMode::Explore)
    } else {
        (top_behavior(table), PairMode::Verify)
    };
    let offset = 1 + rng.random_range(0..BEHAVIOR_COUNT - 1);
    let second = BehaviorId::ALL[(first.index() + offset) % BEHAVIOR_COUNT];
    Ok(BehaviorPair { first, second, mode })
}

/// Credits a pairwise vote to every cell in the BMU neighborhood, weighted by
/// `0.5^d`: the winner gains `(w, w)` and the loser `(0, w)`.
pub fn apply_feedback(map: &mut ContextMap, bmu: GridPos, winner: BehaviorId, loser: BehaviorId) -> Result<()> {
    if winner == loser {
        return Err(Error::InvalidArgument(format!("winner and loser are both behavior {winner}")));
    }
    if !map.contains(bmu) {
        return Err(Error::InvalidArgument(format!("BMU {bmu} outside the grid")));
    }
    let targets: Vec<(usize, u32)> = map.neighborhood(bmu).collect();
    for (i, d) in targets {
        let w = neighborhood_weight(d);
        let pos = map.pos_of(i);
        let table = &mut map.cell_mut(pos).expect("neighborhood stays in bounds").behaviors;
        table.stats_mut(winner).record(w, true);
        table.stats_mut(loser).record(w, false);
    }
    Ok(())
}
