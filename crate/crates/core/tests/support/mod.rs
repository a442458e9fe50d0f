//! Property checks shared by the property suite and the acceptance report.
#![allow(dead_code)]

use affecta_core::behavior::{apply_feedback, epsilon, BehaviorStats, EpsilonSchedule};
use affecta_core::context_map::{grid_step_distance, AttributeWeights, ContextMap, ContextVector, GridPos, MapParams};
use affecta_core::experiment::{export_heatmap, run_experiment, ExperimentConfig, Layer};
use affecta_core::BehaviorId;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

pub type Check = fn() -> Result<(), String>;

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

#[derive(Clone, Debug)]
pub struct MapCase {
    pub width: usize,
    pub height: usize,
    pub weights: Vec<f64>,
    pub seed: u64,
    pub rate: f64,
    pub radius: u32,
}

impl MapCase {
    pub fn build(&self) -> ContextMap {
        ContextMap::new(self.width, self.height, self.weights.len(), AttributeWeights::new(self.weights.clone()).unwrap(), self.seed)
            .unwrap()
            .with_learning_rate(self.rate)
            .unwrap()
            .with_radius(self.radius)
    }
}

pub fn map_case() -> impl Strategy<Value = MapCase> {
    (1usize..=12, 1usize..=12, 1usize..=4, any::<u64>(), 0.0f64..=1.0, 0u32..=5)
        .prop_flat_map(|(w, h, n, seed, rate, radius)| {
            (
                Just((w, h, seed, rate, radius)),
                prop::collection::vec(0.0f64..=3.0, n).prop_filter("one positive weight", |v| v.iter().any(|&x| x > 0.0)),
            )
        })
        .prop_map(|((width, height, seed, rate, radius), weights)| MapCase { width, height, weights, seed, rate, radius })
}

pub fn input(n: usize) -> impl Strategy<Value = ContextVector> {
    prop::collection::vec(0.0f64..=1.0, n).prop_map(|v| ContextVector::new(v).unwrap())
}

fn case_and_input() -> impl Strategy<Value = (MapCase, ContextVector)> {
    map_case().prop_flat_map(|c| {
        let n = c.weights.len();
        (Just(c), input(n))
    })
}

/// Exhaustive argmin of the weighted squared distance, first index on ties.
pub fn brute_force_bmu(map: &ContextMap, x: &[f64], w: &[f64]) -> GridPos {
    let mut best = (f64::INFINITY, 0usize);
    for (i, cell) in map.cells().iter().enumerate() {
        let d: f64 = cell.vector.as_slice().iter().zip(x).zip(w).map(|((a, b), w)| w * (a - b) * (a - b)).sum();
        if d < best.0 {
            best = (d, i);
        }
    }
    GridPos::new(best.1 % map.width(), best.1 / map.width())
}

pub fn bmu_brute_force() -> Result<(), String> {
    runner(1000)
        .run(&case_and_input(), |(case, x)| {
            let map = case.build();
            let got = map.best_matching_unit(&x).unwrap();
            prop_assert_eq!(got, brute_force_bmu(&map, x.as_slice(), &case.weights));
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Scaling every weight by the same positive factor leaves the BMU alone.
pub fn bmu_scale_invariance() -> Result<(), String> {
    runner(300)
        .run(&(case_and_input(), 0.01f64..100.0), |((case, x), k)| {
            let a = case.build();
            let scaled = MapCase { weights: case.weights.iter().map(|w| w * k).collect(), ..case.clone() }.build();
            let da = a.distances(&x).unwrap();
            let ba = a.best_matching_unit(&x).unwrap();
            let bs = scaled.best_matching_unit(&x).unwrap();
            // float rounding may reorder near-ties
            let i = a.index_of(ba);
            let j = a.index_of(bs);
            prop_assert!(ba == bs || (da[i] - da[j]).abs() <= 1e-12 * (1.0 + da[i]));
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn update_contraction() -> Result<(), String> {
    runner(500)
        .run(&case_and_input(), |(case, x)| {
            let before = case.build();
            let mut after = before.clone();
            let bmu = after.update(&x).unwrap();
            for (i, (b, a)) in before.cells().iter().zip(after.cells()).enumerate() {
                let d = grid_step_distance(before.pos_of(i), bmu);
                for ((cb, ca), xi) in b.vector.as_slice().iter().zip(a.vector.as_slice()).zip(x.as_slice()) {
                    prop_assert!((0.0..=1.0).contains(ca));
                    prop_assert!((ca - xi).abs() <= (cb - xi).abs() + 1e-15);
                    if d > case.radius {
                        prop_assert_eq!(ca, cb);
                    }
                }
                prop_assert_eq!(&a.behaviors, &b.behaviors);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Each neighborhood ring moves exactly half as far, relative to its gap,
/// as the ring inside it.
pub fn halving_decay() -> Result<(), String> {
    runner(500)
        .run(&case_and_input(), |(case, x)| {
            let before = case.build();
            let mut after = before.clone();
            let bmu = after.update(&x).unwrap();
            for (i, (b, a)) in before.cells().iter().zip(after.cells()).enumerate() {
                let d = grid_step_distance(before.pos_of(i), bmu);
                if d > case.radius {
                    continue;
                }
                let rate = case.rate / 2f64.powi(d as i32);
                for ((cb, ca), xi) in b.vector.as_slice().iter().zip(a.vector.as_slice()).zip(x.as_slice()) {
                    let expected = cb + rate * (xi - cb);
                    prop_assert!((ca - expected).abs() <= 1e-15, "d={} rate={} got {} want {}", d, rate, ca, expected);
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn vote_case() -> impl Strategy<Value = (MapCase, usize, u8, u8)> {
    map_case().prop_flat_map(|c| {
        let cells = c.width * c.height;
        (Just(c), 0..cells, 0u8..4, 1u8..4).prop_map(|(c, i, w, off)| (c, i, w, (w + off) % 4))
    })
}

pub fn vote_conservation() -> Result<(), String> {
    runner(500)
        .run(&vote_case(), |(case, i, w, l)| {
            let mut map = case.build();
            let bmu = map.pos_of(i);
            let before = map.clone();
            let (win, lose) = (BehaviorId::new(w).unwrap(), BehaviorId::new(l).unwrap());
            apply_feedback(&mut map, bmu, win, lose).unwrap();
            let mut added = 0.0;
            let mut expected = 0.0;
            for (j, (b, a)) in before.cells().iter().zip(map.cells()).enumerate() {
                let d = grid_step_distance(map.pos_of(j), bmu);
                let weight = if d <= case.radius { 0.5f64.powi(d as i32) } else { 0.0 };
                expected += 2.0 * weight;
                for id in BehaviorId::ALL {
                    let (sb, sa) = (b.behaviors.stats(id), a.behaviors.stats(id));
                    let dp = sa.weighted_positive - sb.weighted_positive;
                    let dt = sa.weighted_total - sb.weighted_total;
                    added += dt;
                    let (want_p, want_t) = if id == win {
                        (weight, weight)
                    } else if id == lose {
                        (0.0, weight)
                    } else {
                        (0.0, 0.0)
                    };
                    prop_assert_eq!(dp, want_p);
                    prop_assert_eq!(dt, want_t);
                }
                prop_assert_eq!(&a.vector, &b.vector);
            }
            prop_assert!((added - expected).abs() < 1e-12);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn fitness_bounds() -> Result<(), String> {
    let votes = prop::collection::vec((0usize..400, 0u8..4, 1u8..4), 0..60);
    runner(200)
        .run(&(map_case(), votes), |(case, votes)| {
            let mut map = case.build();
            let n = map.len();
            for (i, w, off) in votes {
                let pos = map.pos_of(i % n);
                apply_feedback(&mut map, pos, BehaviorId::new(w).unwrap(), BehaviorId::new((w + off) % 4).unwrap())
                    .unwrap();
            }
            for cell in map.cells() {
                for id in BehaviorId::ALL {
                    let s: &BehaviorStats = cell.behaviors.stats(id);
                    prop_assert!(s.weighted_positive <= s.weighted_total);
                    prop_assert!(s.weighted_positive >= 0.0);
                    prop_assert!((0.0..=1.0).contains(&s.fitness()));
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn epsilon_monotone() -> Result<(), String> {
    let schedule = (0.0f64..=1.0, 0.0f64..=1.0, 0.01f64..=1.0).prop_map(|(a, b, decay)| {
        let (floor, initial) = if a <= b { (a, b) } else { (b, a) };
        EpsilonSchedule::new(initial, decay, floor).unwrap()
    });
    runner(1000)
        .run(&(schedule, 0u64..10_000), |(s, t)| {
            let (now, next) = (epsilon(&s, t), epsilon(&s, t + 1));
            prop_assert!(next <= now);
            prop_assert!(s.floor <= next && now <= s.initial);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn persistence_round_trip() -> Result<(), String> {
    let ops = prop::collection::vec((prop::collection::vec(0.0f64..=1.0, 4), 0u8..4, 1u8..4), 0..20);
    runner(200)
        .run(&(map_case(), ops), |(case, ops)| {
            let mut map = case.build();
            let n = map.attr_count();
            for (x, w, off) in ops {
                let x = ContextVector::new(x[..n].to_vec()).unwrap();
                let bmu = map.update(&x).unwrap();
                apply_feedback(&mut map, bmu, BehaviorId::new(w).unwrap(), BehaviorId::new((w + off) % 4).unwrap())
                    .unwrap();
            }
            let text = map.encode();
            let back = ContextMap::decode(&text).unwrap();
            prop_assert_eq!(&back, &map);
            prop_assert_eq!(back.encode(), text);
            prop_assert_eq!(back.digest(), map.digest());
            for (a, b) in back.cells().iter().zip(map.cells()) {
                for (x, y) in a.vector.as_slice().iter().zip(b.vector.as_slice()) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn pipeline_determinism() -> Result<(), String> {
    runner(12)
        .run(&any::<u64>(), |seed| {
            let cfg = ExperimentConfig::default().with_seed(seed);
            let (m1, r1) = run_experiment(&cfg).unwrap();
            let (m2, r2) = run_experiment(&cfg).unwrap();
            prop_assert_eq!(&m1, &m2);
            prop_assert_eq!(r1.to_json(), r2.to_json());
            for layer in [Layer::Attribute { index: 0 }, Layer::TopBehavior] {
                let (d1, p1) = export_heatmap(&m1, layer).unwrap();
                let (d2, p2) = export_heatmap(&m2, layer).unwrap();
                prop_assert_eq!(d1.to_json(), d2.to_json());
                prop_assert_eq!(p1, p2);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub const SUITE: [(&str, Check); 8] = [
    ("bmu equals brute force", bmu_brute_force),
    ("update contraction", update_contraction),
    ("halving decay", halving_decay),
    ("vote conservation", vote_conservation),
    ("fitness bounds", fitness_bounds),
    ("epsilon monotone", epsilon_monotone),
    ("persistence round trip", persistence_round_trip),
    ("pipeline determinism", pipeline_determinism),
];

pub fn default_map() -> ContextMap {
    MapParams::default().build(0).unwrap()
}

/// Drives `sessions` random scripts through the session service and the
/// same steps directly through the library, then compares the maps.
pub fn scripted_sessions_match(sessions: u64) -> Result<(), String> {
    use affecta_core::behavior::{default_behaviors, select_pair};
    use affecta_core::environment::{gather_sample, RobotParams, Room};
    use affecta_core::experiment::GridDocument;
    use affecta_core::service::{RoomRequest, SessionStore, StartRequest, VoteRequest};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    let store = SessionStore::new();
    for k in 0..sessions {
        let mut script = ChaCha8Rng::seed_from_u64(1000 + k);
        let seed = script.random::<u64>();
        let (w, l) = (script.random_range(2.5..8.0), script.random_range(2.5..8.0));
        let id = store
            .start(&StartRequest {
                room: RoomRequest { width: w, length: l, label: None },
                seed: Some(seed),
                load: None,
                map: None,
                epsilon: None,
                robot: None,
                measurements: None,
            })
            .map_err(|e| e.to_string())?
            .id;

        let room = Room::new(w, l, "room").unwrap();
        let robot = RobotParams::default();
        let schedule = EpsilonSchedule::default();
        let mut map = MapParams::default().build(seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bmu = None;
        let behaviors = default_behaviors();

        for t in 0..script.random_range(1..25u64) {
            for _ in 0..script.random_range(1..3) {
                let served = store.measure(&id).map_err(|e| e.to_string())?;
                let sample = gather_sample(&room, &robot, &mut rng, 3).map_err(|e| e.to_string())?;
                let b = map.update(&sample.vector).unwrap();
                if served.bmu != b || served.attrs != sample.vector.as_slice() {
                    return Err(format!("session {k}: measure diverged"));
                }
                bmu = Some(b);
            }
            let served = store.pair(&id).map_err(|e| e.to_string())?;
            let b = bmu.unwrap();
            let pair = select_pair(&map.cell(b).unwrap().behaviors, epsilon(&schedule, t), &mut rng).unwrap();
            if (served.a.id, served.b.id, served.mode) != (pair.first, pair.second, pair.mode)
                || served.a != behaviors[pair.first.index()]
            {
                return Err(format!("session {k}: pair diverged"));
            }
            let winner = if script.random::<bool>() { pair.first } else { pair.second };
            store.vote(&id, &VoteRequest { winner: winner.into() }).map_err(|e| e.to_string())?;
            apply_feedback(&mut map, b, winner, pair.other(winner).unwrap()).unwrap();
        }
        let session = store.get(&id).map_err(|e| e.to_string())?;
        let session = session.lock();
        if session.map != map {
            return Err(format!("session {k}: maps differ"));
        }
        let views = session.views().map_err(|e| e.to_string())?;
        let direct = GridDocument::from_map(&map, Layer::TopBehavior).unwrap();
        if serde_json::to_string(&views.behavior).unwrap() != direct.to_json() {
            return Err(format!("session {k}: behavior grid differs"));
        }
    }
    Ok(())
}
