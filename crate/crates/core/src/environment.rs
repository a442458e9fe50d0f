//! Rectangular rooms and the time-of-drive measurement process.
//!
//! A measurement spawns the robot uniformly inside the room with a uniform
//! heading and drives straight until the first wall. Drives shorter than
//! `min_drive` count as failures and are discarded. Successful drive times
//! carry additive Gaussian noise, are capped at `t_max` and floored at 0.01 s.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::context_map::ContextVector;
use crate::error::{Error, Result};

/// Attempts allowed per context sample before the room is declared degenerate.
pub const MAX_ATTEMPTS: usize = 1000;

const MIN_DRIVE_TIME: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Room {
    pub width: f64,
    pub length: f64,
    #[serde(default)]
    pub label: String,
}

impl Room {
    pub fn new(width: f64, length: f64, label: impl Into<String>) -> Result<Self> {
        let room = Self { width, length, label: label.into() };
        room.validate()?;
        Ok(room)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.width) || !ok(self.length) {
            return Err(Error::Config(format!(
                "room `{}` needs positive dimensions, got {}x{}",
                self.label, self.width, self.length
            )));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.width * self.length
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobotParams {
    /// Meters per second.
    pub speed: f64,
    /// Drive-time cap in seconds; also the normalization denominator.
    pub t_max: f64,
    /// Shortest drive, in meters, that counts as a successful measurement.
    pub min_drive: f64,
    /// Standard deviation of the timing noise in seconds.
    pub noise_sigma: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self { speed: 0.5, t_max: 10.0, min_drive: 2.0, noise_sigma: 0.5 }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !pos(self.speed) || !pos(self.t_max) || !nonneg(self.min_drive) || !nonneg(self.noise_sigma) {
            return Err(Error::Config(format!("invalid robot parameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    pub success: bool,
    /// Seconds; zero for failed attempts.
    pub drive_time: f64,
}

impl MeasurementOutcome {
    const FAILED: Self = Self { success: false, drive_time: 0.0 };
}

/// Distance from `(x, y)` to the first wall along `heading` (radians).
pub fn distance_to_wall(room: &Room, x: f64, y: f64, heading: f64) -> f64 {
    let (dy, dx) = heading.sin_cos();
    let mut d = f64::INFINITY;
    if dx > 1e-12 {
        d = d.min((room.width - x) / dx);
    } else if dx < -1e-12 {
        d = d.min(-x / dx);
    }
    if dy > 1e-12 {
        d = d.min((room.length - y) / dy);
    } else if dy < -1e-12 {
        d = d.min(-y / dy);
    }
    d.max(0.0)
}

/// Drive outcome from a known pose given one noise draw.
pub fn drive_from(room: &Room, rp: &RobotParams, x: f64, y: f64, heading: f64, noise: f64) -> MeasurementOutcome {
    let d = distance_to_wall(room, x, y, heading);
    if d < rp.min_drive {
        return MeasurementOutcome::FAILED;
    }
    let t = (d / rp.speed + noise).min(rp.t_max).max(MIN_DRIVE_TIME);
    MeasurementOutcome { success: true, drive_time: t }
}

/// One random drive in `room`.
pub fn sample_measurement<R: Rng + ?Sized>(room: &Room, rp: &RobotParams, rng: &mut R) -> MeasurementOutcome {
    let x = rng.random::<f64>() * room.width;
    let y = rng.random::<f64>() * room.length;
    let heading = rng.random::<f64>() * TAU;
    if distance_to_wall(room, x, y, heading) < rp.min_drive {
        return MeasurementOutcome::FAILED;
    }
    let noise = Normal::new(0.0, rp.noise_sigma).expect("validated noise sigma").sample(rng);
    drive_from(room, rp, x, y, heading, noise)
}

/// A context vector plus the measurements that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextSample {
    pub vector: ContextVector,
    pub drive_times: Vec<f64>,
    pub attempts: usize,
}

/// Drives until `n_success` measurements succeed and averages them into a
/// one-attribute context vector normalized by `t_max`.
pub fn gather_sample<R: Rng + ?Sized>(
    room: &Room,
    rp: &RobotParams,
    rng: &mut R,
    n_success: usize,
) -> Result<ContextSample> {
    if n_success == 0 {
        return Err(Error::InvalidArgument("at least one successful measurement is required".into()));
    }
    room.validate()?;
    rp.validate()?;
    let mut drive_times = Vec::with_capacity(n_success);
    let mut attempts = 0;
    while drive_times.len() < n_success {
        if attempts == MAX_ATTEMPTS {
            return Err(Error::DegenerateRoom { room: room.label.clone(), attempts });
        }
        attempts += 1;
        let m = sample_measurement(room, rp, rng);
        if m.success {
            drive_times.push(m.drive_time);
        }
    }
    let mean = drive_times.iter().sum::<f64>() / drive_times.len() as f64;
    let vector = ContextVector::new(vec![(mean / rp.t_max).clamp(0.0, 1.0)])?;
    Ok(ContextSample { vector, drive_times, attempts })
}

pub fn gather_context_sample<R: Rng + ?Sized>(
    room: &Room,
    rp: &RobotParams,
    rng: &mut R,
    n_success: usize,
) -> Result<ContextVector> {
    gather_sample(room, rp, rng, n_success).map(|s| s.vector)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn living() -> Room {
        Room::new(6.0, 5.0, "living room").unwrap()
    }

    #[test]
    fn ray_geometry_example() {
        let rp = RobotParams { speed: 0.5, noise_sigma: 0.0, t_max: 20.0, min_drive: 0.25 };
        assert_abs_diff_eq!(distance_to_wall(&living(), 3.0, 2.5, 0.0), 3.0, epsilon = 1e-12);
        let m = drive_from(&living(), &rp, 3.0, 2.5, 0.0, 0.0);
        assert!(m.success);
        assert_abs_diff_eq!(m.drive_time, 6.0, epsilon = 1e-12);
        // diagonal to the (6, 5) corner from (3, 2.5): hits x=6 and y=5 together
        let h = (2.5f64).atan2(3.0);
        assert_abs_diff_eq!(distance_to_wall(&living(), 3.0, 2.5, h), (9.0f64 + 6.25).sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(distance_to_wall(&living(), 1.0, 1.0, std::f64::consts::PI), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(distance_to_wall(&living(), 1.0, 1.0, -std::f64::consts::FRAC_PI_2), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn short_drive_fails() {
        let rp = RobotParams { min_drive: 0.25, ..RobotParams::default() };
        let m = drive_from(&living(), &rp, 5.9, 2.0, 0.0, 0.0);
        assert_eq!(m, MeasurementOutcome { success: false, drive_time: 0.0 });
    }

    #[test]
    fn drive_time_is_capped_and_floored() {
        let rp = RobotParams { speed: 0.1, t_max: 20.0, min_drive: 0.0, noise_sigma: 0.0 };
        assert_eq!(drive_from(&living(), &rp, 0.0, 2.5, 0.0, 0.0).drive_time, 20.0);
        assert_eq!(drive_from(&living(), &rp, 5.99, 2.5, 0.0, -5.0).drive_time, 0.01);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rp = RobotParams::default();
        for _ in 0..2000 {
            let m = sample_measurement(&living(), &rp, &mut rng);
            if m.success {
                assert!(m.drive_time > 0.0 && m.drive_time <= rp.t_max);
            } else {
                assert_eq!(m.drive_time, 0.0);
            }
        }
    }

    #[test]
    fn sample_uses_exactly_n_successes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = gather_sample(&living(), &RobotParams::default(), &mut rng, 3).unwrap();
        assert_eq!(s.drive_times.len(), 3);
        assert!(s.attempts >= 3);
        let mean = s.drive_times.iter().sum::<f64>() / 3.0;
        assert_abs_diff_eq!(s.vector.as_slice()[0], mean / 10.0, epsilon = 1e-15);
        let v = s.vector.as_slice()[0];
        assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            gather_sample(&living(), &RobotParams::default(), &mut rng, 3).unwrap()
        };
        assert_eq!(run(17), run(17));
    }

    #[test]
    fn degenerate_room_is_reported() {
        let tiny = Room::new(0.5, 0.5, "closet").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = gather_context_sample(&tiny, &RobotParams::default(), &mut rng, 3).unwrap_err();
        assert_eq!(err, Error::DegenerateRoom { room: "closet".into(), attempts: MAX_ATTEMPTS });
        assert!(gather_context_sample(&living(), &RobotParams::default(), &mut rng, 0).is_err());
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(Room::new(0.0, 3.0, "").is_err());
        assert!(Room::new(2.0, f64::NAN, "").is_err());
        let rp = RobotParams { speed: 0.0, ..RobotParams::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(gather_context_sample(&living(), &rp, &mut rng, 3).is_err());
    }
}
