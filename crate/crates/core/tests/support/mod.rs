//! Shared test helpers: random small stories and a from-scratch belief
//! re-derivation that never looks at the tracker's tables.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tomsim::simulator::{simulate, Event, Story};
use tomsim::storyboard::{
    CharacterId, EntityKind, EnvironmentTag, LocationGraph, LocationId, Storyboard,
};

/// A board with no constraints at all.
pub fn free_board(chars: usize, locs: usize, horizon: u32, env: EnvironmentTag) -> Storyboard {
    let names = ["Alice", "Bob", "Carla", "Dmitri", "Eve"];
    Storyboard {
        characters: names[..chars].iter().map(|n| CharacterId::from(*n)).collect(),
        actions: env.actions(EntityKind::Animate),
        graph: LocationGraph::complete(env.vertices(locs), env.start_vertex()),
        event_specs: Vec::new(),
        horizon,
        environment: env,
        entity_kind: EntityKind::Animate,
    }
}

/// A random walk: each step one random character moves to a random other
/// vertex. Odd seeds go through the simulator instead.
pub fn random_story(seed: u64) -> Story {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chars = rng.gen_range(2..=5);
    let locs = rng.gen_range(2..=4);
    let horizon = rng.gen_range(1..=20);
    let env = *EnvironmentTag::ALL.choose(&mut rng).unwrap();
    let board = free_board(chars, locs, horizon, env);
    if seed % 2 == 1 {
        return simulate(&board, seed).expect("free boards always simulate");
    }
    let mut pos = vec![board.graph.start.clone(); chars];
    let events = (1..=horizon)
        .map(|t| {
            let c = rng.gen_range(0..chars);
            let options: Vec<&LocationId> = board.graph.vertices.iter().filter(|v| **v != pos[c]).collect();
            let to = (*options.choose(&mut rng).unwrap()).clone();
            pos[c] = to.clone();
            Event {
                t,
                actor: board.characters[c].clone(),
                action: env.action_for(EntityKind::Animate, &to),
                location: to,
            }
        })
        .collect();
    Story::new(board, seed, events).unwrap()
}

/// Beliefs recomputed by replaying the story from the start for every
/// single query, applying the observation rules literally.
pub struct Brute<'a> {
    story: &'a Story,
}

impl<'a> Brute<'a> {
    pub fn new(story: &'a Story) -> Self {
        Self { story }
    }

    fn ix(&self, c: &CharacterId) -> usize {
        self.story.board().character_index(c).unwrap()
    }

    /// Calls `visit(actor, from, to, positions_before)` for events 1..=t.
    fn replay(&self, t: u32, mut visit: impl FnMut(usize, &LocationId, &LocationId, &[LocationId])) {
        let board = self.story.board();
        let mut pos = vec![board.graph.start.clone(); board.characters.len()];
        for e in self.story.events().iter().take(t as usize) {
            let c = self.ix(&e.actor);
            let from = pos[c].clone();
            visit(c, &from, &e.location, &pos);
            pos[c] = e.location.clone();
        }
    }

    pub fn truth(&self, t: u32, c: &CharacterId) -> LocationId {
        let ci = self.ix(c);
        let mut at = self.story.board().graph.start.clone();
        self.replay(t, |a, _, to, _| {
            if a == ci {
                at = to.clone();
            }
        });
        at
    }

    pub fn b1(&self, t: u32, o: &CharacterId, s: &CharacterId) -> LocationId {
        let (o, s) = (self.ix(o), self.ix(s));
        let mut belief = self.story.board().graph.start.clone();
        self.replay(t, |c, from, to, pos| {
            let departed = |x: usize| pos[x] == *from;
            let arrived = |x: usize| x == c || pos[x] == *to;
            // Watching the mover leave, or being together once it arrives.
            if (s == c && departed(o)) || (arrived(o) && arrived(s)) {
                belief = to.clone();
            }
        });
        belief
    }

    pub fn b2(&self, t: u32, o: &CharacterId, w: &CharacterId, s: &CharacterId) -> LocationId {
        let (o, w, s) = (self.ix(o), self.ix(w), self.ix(s));
        let mut belief = self.story.board().graph.start.clone();
        self.replay(t, |c, from, to, pos| {
            let departed = |x: usize| pos[x] == *from;
            let arrived = |x: usize| x == c || pos[x] == *to;
            if (s == c && departed(o) && departed(w)) || (arrived(o) && arrived(w) && arrived(s)) {
                belief = to.clone();
            }
        });
        belief
    }
}
