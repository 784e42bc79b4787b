use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    name_pool, CharacterId, EntityKind, EnvironmentTag, EventSpec, LocationGraph, LocationId,
    RoleBinding, Storyboard, SuiteParams,
};
use crate::seed::{rng, Seed, Stream};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BuilderError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// What the pattern is built to produce. Metadata only; datasets take their
/// ground truth from the belief tracker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedLocations {
    pub first_common: LocationId,
    pub believed: LocationId,
    pub actual_final: LocationId,
}

/// Pinned timesteps of the experiment pattern for one (order, d).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatternTimes {
    pub meeting: u32,
    pub observed_move: u32,
    /// Second crossing of S2 and T (second order only).
    pub rejoin: Option<u32>,
    pub unobserved_move: u32,
}

impl PatternTimes {
    pub fn new(order: u8, mislead_distance: u32) -> Self {
        let d = mislead_distance;
        if order == 2 {
            Self {
                meeting: 10,
                observed_move: 11,
                rejoin: Some(12 + d),
                unobserved_move: 13 + d,
            }
        } else {
            Self {
                meeting: 10,
                observed_move: 11,
                rejoin: None,
                unobserved_move: 12 + d,
            }
        }
    }

    pub fn pinned(&self) -> Vec<u32> {
        let mut out = vec![self.meeting, self.observed_move];
        out.extend(self.rejoin);
        out.push(self.unobserved_move);
        out
    }
}

fn check_params(params: &SuiteParams, order: u8) -> Result<(), BuilderError> {
    let bad = |msg: String| Err(BuilderError::InvalidParams(msg));
    if params.order != order {
        return bad(format!("expected order {order}, got {}", params.order));
    }
    let min_chars = order as usize + 1;
    if params.num_characters < min_chars {
        return bad(format!(
            "order {order} needs at least {min_chars} characters, got {}",
            params.num_characters
        ));
    }
    if params.num_characters > name_pool().len() {
        return bad(format!(
            "{} characters requested, name pool holds {}",
            params.num_characters,
            name_pool().len()
        ));
    }
    if params.num_locations > params.environment.max_locations() {
        return bad(format!(
            "{} supports at most {} locations",
            params.environment,
            params.environment.max_locations()
        ));
    }
    let vertices = params.environment.vertices(params.num_locations);
    let candidates = params.environment.pattern_candidates(&vertices);
    let needed = order as usize + 2;
    if candidates.len() < needed {
        return bad(format!(
            "order {order} needs {needed} distinct pattern locations, {} available",
            candidates.len()
        ));
    }
    let end = PatternTimes::new(order, params.mislead_distance).unobserved_move;
    if end > params.horizon {
        return bad(format!(
            "pattern ends at t={end} but horizon is {} (mislead distance {})",
            params.horizon, params.mislead_distance
        ));
    }
    Ok(())
}

struct Draw {
    characters: Vec<CharacterId>,
    roles: Vec<CharacterId>,
    locations: Vec<LocationId>,
    graph: LocationGraph,
}

/// Shared draw order: names (Names stream), then roles, then pattern
/// locations (Board stream). `roles` and `locs` are counts.
fn draw(params: &SuiteParams, seed: Seed, roles: usize, locs: usize) -> Draw {
    let pool = name_pool();
    let mut names = rng(seed, Stream::Names);
    let characters: Vec<CharacterId> = sample(&mut names, pool.len(), params.num_characters)
        .into_iter()
        .map(|i| pool[i].clone())
        .collect();

    let mut board_rng = rng(seed, Stream::Board);
    let roles = sample(&mut board_rng, characters.len(), roles)
        .into_iter()
        .map(|i| characters[i].clone())
        .collect();

    let env = params.environment;
    let vertices = env.vertices(params.num_locations);
    let candidates = env.pattern_candidates(&vertices);
    let start = env.start_vertex();
    let mut locations: Vec<LocationId> = Vec::with_capacity(locs);
    for k in 0..locs {
        let pool: Vec<&LocationId> = candidates
            .iter()
            .filter(|l| !locations.contains(l) && (k > 0 || **l != start))
            .collect();
        locations.push(pick(&mut board_rng, &pool).clone());
    }
    Draw {
        characters,
        roles,
        locations,
        graph: LocationGraph::complete(vertices, start),
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &[&'a T]) -> &'a T {
    items[rng.gen_range(0..items.len())]
}

fn board(params: &SuiteParams, draw: Draw, event_specs: Vec<EventSpec>) -> Storyboard {
    Storyboard {
        characters: draw.characters,
        actions: params.environment.actions(EntityKind::Animate),
        graph: draw.graph,
        event_specs,
        horizon: params.horizon,
        environment: params.environment,
        entity_kind: EntityKind::Animate,
    }
}

fn window(protected: &[CharacterId], t_start: u32, t_end: u32) -> Option<EventSpec> {
    (t_start <= t_end).then(|| EventSpec::ExclusiveRandom {
        protected: protected.to_vec(),
        t_start,
        t_end,
    })
}

/// The first-order mislead pattern: S1 and T meet at L1, S1 watches T leave
/// for L2, both hold still for `d` steps, then T slips away to L3 unseen.
pub fn first_order_board(
    params: &SuiteParams,
    seed: Seed,
) -> Result<(Storyboard, RoleBinding, ExpectedLocations), BuilderError> {
    check_params(params, 1)?;
    let d = params.mislead_distance;
    let n = params.horizon;
    let draw = draw(params, seed, 2, 3);
    let (s1, t) = (draw.roles[0].clone(), draw.roles[1].clone());
    let [l1, l2, l3] = [0, 1, 2].map(|i| draw.locations[i].clone());
    let pair = [s1.clone(), t.clone()];

    let mut specs = vec![
        EventSpec::CrossPaths {
            characters: pair.to_vec(),
            location: l1.clone(),
            t: 10,
        },
        EventSpec::MoveAt {
            character: t.clone(),
            location: l2.clone(),
            t: 11,
        },
    ];
    specs.extend(window(&pair, 12, 11 + d));
    specs.push(EventSpec::MoveAt {
        character: t.clone(),
        location: l3.clone(),
        t: 12 + d,
    });
    specs.extend(window(&pair, 13 + d, n));

    let expected = ExpectedLocations {
        first_common: l1,
        believed: l2,
        actual_final: l3,
    };
    Ok((board(params, draw, specs), RoleBinding::first_order(s1, t), expected))
}

/// The second-order pattern: S1, S2 and T meet at L1 and jointly watch T
/// leave for L2. After `d` steps S2 and T meet again at L3 out of S1's
/// sight, then T moves on to L4.
pub fn second_order_board(
    params: &SuiteParams,
    seed: Seed,
) -> Result<(Storyboard, RoleBinding, ExpectedLocations), BuilderError> {
    check_params(params, 2)?;
    let d = params.mislead_distance;
    let n = params.horizon;
    let draw = draw(params, seed, 3, 4);
    let [s1, s2, t] = [0, 1, 2].map(|i| draw.roles[i].clone());
    let [l1, l2, l3, l4] = [0, 1, 2, 3].map(|i| draw.locations[i].clone());
    let trio = [s1.clone(), s2.clone(), t.clone()];

    let mut specs = vec![
        EventSpec::CrossPaths {
            characters: trio.to_vec(),
            location: l1.clone(),
            t: 10,
        },
        EventSpec::MoveAt {
            character: t.clone(),
            location: l2.clone(),
            t: 11,
        },
    ];
    // S2 and T need the two slots before the rejoin, so the window stops
    // one step short of 12+d-1.
    specs.extend(window(&trio, 12, 10 + d));
    specs.push(EventSpec::CrossPaths {
        characters: vec![s2.clone(), t.clone()],
        location: l3,
        t: 12 + d,
    });
    specs.push(EventSpec::MoveAt {
        character: t.clone(),
        location: l4.clone(),
        t: 13 + d,
    });
    specs.extend(window(&trio, 14 + d, n));

    let expected = ExpectedLocations {
        first_common: l1,
        believed: l2,
        actual_final: l4,
    };
    Ok((
        board(params, draw, specs),
        RoleBinding::second_order(s1, s2, t),
        expected,
    ))
}

/// The classic five-event false-belief story with Sally and Anne.
pub fn sally_anne_board() -> (Storyboard, RoleBinding) {
    sally_anne_board_named("Sally".into(), "Anne".into())
}

/// Five fully pinned events over the hallway and two rooms: both enter
/// room_1, the target moves to room_2 in view, the observer steps out, and
/// the target returns to room_1 unseen.
pub fn sally_anne_board_named(observer: CharacterId, target: CharacterId) -> (Storyboard, RoleBinding) {
    let env = EnvironmentTag::HallwaysDoors;
    let mv = |c: &CharacterId, l: &str, t: u32| EventSpec::MoveAt {
        character: c.clone(),
        location: l.into(),
        t,
    };
    let specs = vec![
        mv(&observer, "room_1", 1),
        mv(&target, "room_1", 2),
        mv(&target, "room_2", 3),
        mv(&observer, "the_hallway", 4),
        mv(&target, "room_1", 5),
    ];
    let board = Storyboard {
        characters: vec![observer.clone(), target.clone()],
        actions: env.actions(EntityKind::Animate),
        graph: LocationGraph::complete(env.vertices(3), env.start_vertex()),
        event_specs: specs,
        horizon: 5,
        environment: env,
        entity_kind: EntityKind::Animate,
    };
    (board, RoleBinding::first_order(observer, target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::storyboard::validate_storyboard;

    #[test]
    fn first_order_pins_table_times() {
        let p = SuiteParams::mislead(1, 30);
        let (b, roles, exp) = first_order_board(&p, 7).unwrap();
        assert_eq!(b.pinned_times(), vec![10, 11, 42]);
        assert_eq!(b.characters.len(), 8);
        assert!(b.graph.is_complete());
        assert!(validate_storyboard(&b).is_valid());
        assert!(roles.is_valid_for(&b));
        assert_ne!(exp.first_common, exp.believed);
        assert_ne!(exp.believed, exp.actual_final);
        assert_ne!(exp.first_common, b.graph.start);
        assert_eq!(first_order_board(&p, 7).unwrap().0, b);
    }

    #[test]
    fn first_order_boundaries() {
        let (b, ..) = first_order_board(&SuiteParams::mislead(1, 0).with_horizon(13), 1).unwrap();
        assert_eq!(b.pinned_times(), vec![10, 11, 12]);
        assert!(validate_storyboard(&b).is_valid());
        assert!(matches!(
            first_order_board(&SuiteParams::mislead(1, 1).with_horizon(12), 1),
            Err(BuilderError::InvalidParams(_))
        ));
    }

    #[test]
    fn second_order_boundaries() {
        let (b, roles, _) =
            second_order_board(&SuiteParams::mislead(2, 0).with_horizon(14), 3).unwrap();
        assert!(validate_storyboard(&b).is_valid());
        assert!(roles.s2.is_some());
        assert!(b.event_specs.iter().any(|s| matches!(
            s,
            EventSpec::CrossPaths { characters, t: 12, .. } if characters.len() == 2
        )));
        assert!(second_order_board(&SuiteParams::mislead(2, 90), 3).is_err());
        assert!(second_order_board(&SuiteParams::mislead(1, 30), 3).is_err());
    }

    #[test]
    fn conference_locations_avoid_the_idle_vertex() {
        let p = SuiteParams::mislead(2, 30).with_environment(EnvironmentTag::ConferenceCall);
        for seed in 0..50 {
            let (_, _, exp) = second_order_board(&p, seed).unwrap();
            for l in [&exp.first_common, &exp.believed, &exp.actual_final] {
                assert_ne!(l.as_str(), "no_call");
            }
        }
    }

    #[test]
    fn sally_anne_shape() {
        let (b, roles) = sally_anne_board();
        assert_eq!(b.horizon, 5);
        assert_eq!(b.characters.len(), 2);
        assert_eq!(b.graph.vertices.len(), 3);
        assert!(validate_storyboard(&b).is_valid());
        assert!(roles.is_valid_for(&b));
    }
}
