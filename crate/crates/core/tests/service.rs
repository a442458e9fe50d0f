mod support;

use affecta_core::context_map::grid_step_distance;
use affecta_core::experiment::{GridDocument, Layer};
use affecta_core::service::{ErrorCode, RoomRequest, SessionStore, StartRequest, VoteRequest};
use affecta_core::BehaviorId;

fn start(store: &SessionStore, seed: u64) -> String {
    store
        .start(&StartRequest {
            room: RoomRequest { width: 6.0, length: 5.0, label: Some("living".into()) },
            seed: Some(seed),
            load: None,
            map: None,
            epsilon: None,
            robot: None,
            measurements: None,
        })
        .unwrap()
        .id
}

#[test]
fn scripted_sessions_match_library_calls() {
    support::scripted_sessions_match(10).unwrap();
}

#[test]
fn one_vote_changes_only_the_bmu_neighborhood() {
    let store = SessionStore::new();
    let id = start(&store, 3);
    store.measure(&id).unwrap();
    let before = store.get(&id).unwrap().lock().map.clone();
    let pair = store.pair(&id).unwrap();
    let vote = store.vote(&id, &VoteRequest { winner: pair.b.id.into() }).unwrap();
    let after = store.get(&id).unwrap().lock().map.clone();
    for i in 0..after.len() {
        let pos = after.pos_of(i);
        let changed = before.cells()[i].behaviors.fitness_values() != after.cells()[i].behaviors.fitness_values();
        assert_eq!(changed, grid_step_distance(pos, vote.bmu) <= after.neighborhood_radius(), "{pos}");
    }
}

#[test]
fn views_match_direct_export() {
    let store = SessionStore::new();
    let id = start(&store, 5);
    store.measure(&id).unwrap();
    let views = store.views(&id).unwrap();
    let map = store.get(&id).unwrap().lock().map.clone();
    for (doc, layer) in [(&views.attribute, Layer::Attribute { index: 0 }), (&views.behavior, Layer::TopBehavior)] {
        assert_eq!(doc.to_json(), GridDocument::from_map(&map, layer).unwrap().to_json());
    }
}

#[test]
fn rejected_requests_leave_state_unchanged() {
    let store = SessionStore::new();
    let id = start(&store, 9);
    store.measure(&id).unwrap();
    let pair = store.pair(&id).unwrap();
    let snapshot = store.views(&id).unwrap();
    let outsider = BehaviorId::ALL.into_iter().find(|b| *b != pair.a.id && *b != pair.b.id).unwrap();
    for (result, code) in [
        (store.vote(&id, &VoteRequest { winner: outsider.into() }).map(|_| ()), ErrorCode::BadRequest),
        (store.pair(&id).map(|_| ()), ErrorCode::Conflict),
        (store.measure(&id).map(|_| ()), ErrorCode::Conflict),
    ] {
        assert_eq!(result.unwrap_err().code, code);
        assert_eq!(store.views(&id).unwrap(), snapshot);
    }
}

#[test]
fn sessions_are_independent() {
    let store = SessionStore::new();
    let (a, b) = (start(&store, 1), start(&store, 1));
    assert_ne!(a, b);
    store.measure(&a).unwrap();
    assert_eq!(store.views(&b).unwrap().measures, 0);
    assert_eq!(store.views(&a).unwrap().measures, 1);
}
