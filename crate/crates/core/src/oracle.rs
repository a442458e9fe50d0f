//! Simulated participants that vote between two presented behaviors.
//!
//! Each participant prefers an ideal intensity that grows linearly with the
//! room's floor area, shifted by a personal bias. A vote is a softmax draw
//! over the negated distances of the two candidates from that ideal.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::behavior::{Behavior, BehaviorId, BEHAVIOR_COUNT};
use crate::environment::Room;
use crate::error::{Error, Result};

/// Softmax temperature fitted to the reported per-room vote fractions
/// (see `tests/calibration.rs`).
pub const DEFAULT_TEMPERATURE: f64 = 1.15;
pub const DEFAULT_BIAS_SIGMA: f64 = 0.3;

/// Ideal intensity for a room: `clamp(0.5 + area / 20, 0, 3)`.
pub fn preferred_intensity(room: &Room) -> f64 {
    (0.5 + room.area() / 20.0).clamp(0.0, 3.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleParams {
    pub temperature: f64,
    pub bias_sigma: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self { temperature: DEFAULT_TEMPERATURE, bias_sigma: DEFAULT_BIAS_SIGMA }
    }
}

impl OracleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::Config(format!("temperature {} must be positive", self.temperature)));
        }
        if !(self.bias_sigma.is_finite() && self.bias_sigma >= 0.0) {
            return Err(Error::Config(format!("bias sigma {} must be non-negative", self.bias_sigma)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub bias: f64,
    pub temperature: f64,
    pub seed: u64,
}

impl Participant {
    pub fn new(bias: f64, temperature: f64, seed: u64) -> Result<Self> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::InvalidArgument(format!("temperature {temperature} must be positive")));
        }
        Ok(Self { bias, temperature, seed })
    }

    /// Draws the personal bias from `N(0, bias_sigma)` with a generator seeded by `seed`.
    pub fn from_seed(seed: u64, params: &OracleParams) -> Result<Self> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bias = Normal::new(0.0, params.bias_sigma).expect("validated sigma").sample(&mut rng);
        Self::new(bias, params.temperature, seed)
    }

    pub fn ideal_intensity(&self, room: &Room) -> f64 {
        preferred_intensity(room) + self.bias
    }

    /// Probability that `a` beats `b`.
    pub fn win_probability(&self, room: &Room, a: BehaviorId, b: BehaviorId) -> f64 {
        pairwise_win_probability(self.ideal_intensity(room), self.temperature, a, b)
    }
}

/// `P(a beats b)` for ideal intensity `ideal` at temperature `temperature`.
pub fn pairwise_win_probability(ideal: f64, temperature: f64, a: BehaviorId, b: BehaviorId) -> f64 {
    let da = (a.intensity() as f64 - ideal).abs();
    let db = (b.intensity() as f64 - ideal).abs();
    1.0 / (1.0 + ((da - db) / temperature).exp())
}

/// Samples the participant's pick between `a` and `b`.
pub fn choose<R: Rng + ?Sized>(
    p: &Participant,
    room: &Room,
    a: &Behavior,
    b: &Behavior,
    rng: &mut R,
) -> Result<BehaviorId> {
    if a.id == b.id {
        return Err(Error::InvalidArgument(format!("cannot compare behavior {} with itself", a.id)));
    }
    let pa = p.win_probability(room, a.id, b.id);
    Ok(if rng.random::<f64>() < pa { a.id } else { b.id })
}

/// Anything that can cast a pairwise vote on behalf of participant `participant`.
pub trait PreferenceOracle {
    fn choose(
        &self,
        participant: usize,
        room: &Room,
        a: &Behavior,
        b: &Behavior,
        rng: &mut dyn RngCore,
    ) -> Result<BehaviorId>;
}

/// A fixed roster of simulated participants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub participants: Vec<Participant>,
}

impl Panel {
    /// `count` participants seeded `roster_seed, roster_seed + 1, ...`.
    pub fn generate(count: usize, params: &OracleParams, roster_seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::Config("the participant roster must not be empty".into()));
        }
        let participants = (0..count as u64)
            .map(|i| Participant::from_seed(roster_seed.wrapping_add(i), params))
            .collect::<Result<_>>()?;
        Ok(Self { participants })
    }

    pub fn len(&self) -> usize {
        self.participants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.participants.is_empty()
    }
}

impl PreferenceOracle for Panel {
    fn choose(
        &self,
        participant: usize,
        room: &Room,
        a: &Behavior,
        b: &Behavior,
        rng: &mut dyn RngCore,
    ) -> Result<BehaviorId> {
        let p = self
            .participants
            .get(participant % self.participants.len().max(1))
            .ok_or_else(|| Error::InvalidArgument("empty participant roster".into()))?;
        choose(p, room, a, b, rng)
    }
}

/// Votes for a fixed behavior whenever it is on offer, otherwise for the
/// higher intensity.
#[derive(Clone, Copy, Debug)]
pub struct FixedPreference(pub BehaviorId);

impl PreferenceOracle for FixedPreference {
    fn choose(&self, _: usize, _: &Room, a: &Behavior, b: &Behavior, _: &mut dyn RngCore) -> Result<BehaviorId> {
        if a.id == b.id {
            return Err(Error::InvalidArgument("identical candidates".into()));
        }
        Ok(if a.id == self.0 || b.id == self.0 { self.0 } else { a.id.max(b.id) })
    }
}

/// Long-run win fraction of each behavior in `room` over `draws` uniformly
/// drawn pairs, each judged by a freshly drawn participant.
pub fn population_win_fractions<R: Rng + ?Sized>(
    room: &Room,
    params: &OracleParams,
    draws: usize,
    rng: &mut R,
) -> Result<[f64; BEHAVIOR_COUNT]> {
    params.validate()?;
    let bias = Normal::new(0.0, params.bias_sigma).expect("validated sigma");
    let base = preferred_intensity(room);
    let mut wins = [0usize; BEHAVIOR_COUNT];
    let mut shown = [0usize; BEHAVIOR_COUNT];
    for _ in 0..draws {
        let a = rng.random_range(0..BEHAVIOR_COUNT);
        let b = (a + 1 + rng.random_range(0..BEHAVIOR_COUNT - 1)) % BEHAVIOR_COUNT;
        let ideal = base + bias.sample(rng);
        let pa = pairwise_win_probability(ideal, params.temperature, BehaviorId::ALL[a], BehaviorId::ALL[b]);
        let winner = if rng.random::<f64>() < pa { a } else { b };
        wins[winner] += 1;
        shown[a] += 1;
        shown[b] += 1;
    }
    let mut out = [0.0; BEHAVIOR_COUNT];
    for i in 0..BEHAVIOR_COUNT {
        out[i] = if shown[i] == 0 { 0.0 } else { wins[i] as f64 / shown[i] as f64 };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::default_behaviors;
    use approx::assert_abs_diff_eq;

    fn room(w: f64, l: f64) -> Room {
        Room::new(w, l, "").unwrap()
    }

    fn id(v: u8) -> BehaviorId {
        BehaviorId::new(v).unwrap()
    }

    #[test]
    fn preferred_intensity_examples() {
        assert_abs_diff_eq!(preferred_intensity(&room(6.0, 5.0)), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(preferred_intensity(&room(2.0, 3.0)), 0.8, epsilon = 1e-12);
        assert_eq!(preferred_intensity(&room(2.0, 3.0)).round(), 1.0);
        assert_abs_diff_eq!(preferred_intensity(&room(4.0, 4.0)), 1.3, epsilon = 1e-12);
        assert_eq!(preferred_intensity(&room(20.0, 20.0)), 3.0);
    }

    #[test]
    fn equidistant_candidates_are_a_coin_flip() {
        let p = Participant::new(0.0, 0.7, 0).unwrap();
        assert_abs_diff_eq!(p.win_probability(&room(6.0, 5.0), id(1), id(3)), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn probabilities_are_complementary() {
        let p = Participant::new(0.17, 0.9, 0).unwrap();
        let r = room(3.5, 4.0);
        for a in BehaviorId::ALL {
            for b in BehaviorId::ALL {
                let s = p.win_probability(&r, a, b) + p.win_probability(&r, b, a);
                assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cold_participant_always_picks_closer_intensity() {
        let p = Participant::new(0.0, 1e-3, 0).unwrap();
        let b = default_behaviors();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            assert_eq!(choose(&p, &room(6.0, 5.0), &b[1], &b[2], &mut rng).unwrap(), id(2));
            assert_eq!(choose(&p, &room(2.0, 3.0), &b[3], &b[1], &mut rng).unwrap(), id(1));
        }
        assert!(choose(&p, &room(2.0, 3.0), &b[1], &b[1], &mut rng).is_err());
    }

    #[test]
    fn roster_is_seeded() {
        let params = OracleParams::default();
        let a = Panel::generate(6, &params, 99).unwrap();
        assert_eq!(a, Panel::generate(6, &params, 99).unwrap());
        assert_ne!(a, Panel::generate(6, &params, 100).unwrap());
        assert!(Panel::generate(0, &params, 1).is_err());
        let zero = OracleParams { bias_sigma: 0.0, ..params };
        assert!(Panel::generate(3, &zero, 5).unwrap().participants.iter().all(|p| p.bias == 0.0));
    }

    #[test]
    fn fixed_preference_stub() {
        let b = default_behaviors();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let stub = FixedPreference(id(3));
        assert_eq!(stub.choose(0, &room(2.0, 3.0), &b[0], &b[3], &mut rng).unwrap(), id(3));
        assert_eq!(stub.choose(0, &room(2.0, 3.0), &b[0], &b[2], &mut rng).unwrap(), id(2));
    }
}
