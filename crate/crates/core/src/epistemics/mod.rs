//! Truth, first-order and second-order location beliefs over a story.
//!
//! Everyone starts at the start vertex in full view of everyone else. When
//! `c` moves from `from` to `to`, with `W_dep` the occupants of `from`
//! (including `c`) and `W_arr` the occupants of `to` plus `c`:
//!
//! * `truth[c] = to`
//! * every `o` in `W_dep` learns `b1[o, c] = to`
//! * every `o, s` in `W_arr` get `b1[o, s] = to`
//! * every `o, w` in `W_dep` get `b2[o, w, c] = to`
//! * every `o, w, s` in `W_arr` get `b2[o, w, s] = to`
//!
//! Every other entry keeps its value. An arriving character reveals that it
//! is present, not where it came from.

mod question;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use question::{MissingRole, Question, QuestionKind};

use crate::simulator::Story;
use crate::storyboard::{CharacterId, LocationId};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Belief {
    Known(LocationId),
    Unknown,
}

impl Belief {
    pub fn known(&self) -> Option<&LocationId> {
        match self {
            Belief::Known(l) => Some(l),
            Belief::Unknown => None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrackError {
    #[error("event at t={t}: `{actor}` is not where the story says it departs from")]
    InconsistentStory { t: u32, actor: CharacterId },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error("`{0}` is not a character of this story")]
    UnknownCharacter(CharacterId),
    #[error("the belief is unknown")]
    UnknownBelief,
    #[error("the characters never come together after the start")]
    NoCoLocation,
    #[error("the target never moves after the meeting")]
    NoSubsequentMove,
    #[error("question roles must be distinct characters")]
    RolesNotDistinct,
    #[error(transparent)]
    MissingRole(#[from] MissingRole),
}

const UNKNOWN: u16 = u16::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Entry {
    B1(usize),
    B2(usize),
}

#[derive(Debug, Clone, Copy)]
struct Change {
    entry: Entry,
    old: u16,
}

/// Belief state at every timestep of a story. Stores the final tables and a
/// per-timestep log of changed entries, so any earlier state can be
/// recovered without keeping a full copy per step.
#[derive(Debug, Clone)]
pub struct BeliefTimeline {
    characters: Vec<CharacterId>,
    locations: Vec<LocationId>,
    /// `truth[t][c]`
    truth: Vec<Vec<u16>>,
    b1: Vec<u16>,
    b2: Vec<u16>,
    /// `changes[t]` lists entries whose value changed at timestep `t`.
    changes: Vec<Vec<Change>>,
}

/// Replays `story` and records every belief.
pub fn track(story: &Story) -> Result<BeliefTimeline, TrackError> {
    let board = story.board();
    let characters = board.characters.clone();
    let locations = board.graph.vertices.clone();
    let nc = characters.len();
    let loc_ix = |l: &LocationId| {
        locations
            .iter()
            .position(|x| x == l)
            .expect("story locations are vertices") as u16
    };
    let start = loc_ix(&board.graph.start);

    let mut truth_now = vec![start; nc];
    let mut truth = vec![truth_now.clone()];
    let mut b1 = vec![start; nc * nc];
    let mut b2 = vec![start; nc * nc * nc];
    let mut changes = vec![Vec::new()];

    for e in story.events() {
        let c = board.character_index(&e.actor).expect("story actors are characters");
        let (from, to) = (truth_now[c], loc_ix(&e.location));
        let t = e.t;
        if story.position(t.saturating_sub(1), &e.actor).map(|l| loc_ix(l)) != Some(from) {
            return Err(TrackError::InconsistentStory {
                t,
                actor: e.actor.clone(),
            });
        }
        let w_dep: Vec<usize> = (0..nc).filter(|&o| truth_now[o] == from).collect();
        let mut w_arr: Vec<usize> = (0..nc).filter(|&o| truth_now[o] == to && o != c).collect();
        w_arr.push(c);

        let mut log = Vec::new();
        let mut set = |table: &mut Vec<u16>, i: usize, entry: Entry| {
            if table[i] != to {
                log.push(Change { entry, old: table[i] });
                table[i] = to;
            }
        };
        truth_now[c] = to;
        for &o in &w_dep {
            set(&mut b1, o * nc + c, Entry::B1(o * nc + c));
        }
        for &o in &w_arr {
            for &s in &w_arr {
                set(&mut b1, o * nc + s, Entry::B1(o * nc + s));
            }
        }
        for &o in &w_dep {
            for &w in &w_dep {
                let i = (o * nc + w) * nc + c;
                set(&mut b2, i, Entry::B2(i));
            }
        }
        for &o in &w_arr {
            for &w in &w_arr {
                for &s in &w_arr {
                    let i = (o * nc + w) * nc + s;
                    set(&mut b2, i, Entry::B2(i));
                }
            }
        }
        truth.push(truth_now.clone());
        changes.push(log);
    }
    Ok(BeliefTimeline {
        characters,
        locations,
        truth,
        b1,
        b2,
        changes,
    })
}

impl BeliefTimeline {
    pub fn horizon(&self) -> u32 {
        self.truth.len() as u32 - 1
    }

    pub fn characters(&self) -> &[CharacterId] {
        &self.characters
    }

    fn ix(&self, c: &CharacterId) -> Result<usize, QueryError> {
        self.characters
            .iter()
            .position(|x| x == c)
            .ok_or_else(|| QueryError::UnknownCharacter(c.clone()))
    }

    fn decode(&self, v: u16) -> Belief {
        if v == UNKNOWN {
            Belief::Unknown
        } else {
            Belief::Known(self.locations[v as usize].clone())
        }
    }

    /// Value of `entry` at the end of timestep `t`: the pre-change value of
    /// its first change after `t`, or the final value if it never changes
    /// again.
    fn value_at(&self, entry: Entry, t: u32, final_value: u16) -> u16 {
        for changes in self.changes.iter().skip(t as usize + 1) {
            if let Some(ch) = changes.iter().find(|ch| ch.entry == entry) {
                return ch.old;
            }
        }
        final_value
    }

    pub fn truth(&self, t: u32, c: &CharacterId) -> Result<&LocationId, QueryError> {
        let ci = self.ix(c)?;
        Ok(&self.locations[self.truth[t as usize][ci] as usize])
    }

    /// Where `o` believes `s` is at the end of `t`.
    pub fn b1(&self, t: u32, o: &CharacterId, s: &CharacterId) -> Result<Belief, QueryError> {
        let nc = self.characters.len();
        let i = self.ix(o)? * nc + self.ix(s)?;
        Ok(self.decode(self.value_at(Entry::B1(i), t, self.b1[i])))
    }

    /// Where `o` believes `w` believes `s` is at the end of `t`.
    pub fn b2(
        &self,
        t: u32,
        o: &CharacterId,
        w: &CharacterId,
        s: &CharacterId,
    ) -> Result<Belief, QueryError> {
        let nc = self.characters.len();
        let i = (self.ix(o)? * nc + self.ix(w)?) * nc + self.ix(s)?;
        Ok(self.decode(self.value_at(Entry::B2(i), t, self.b2[i])))
    }

    /// Number of belief entries changed at timestep `t`.
    pub fn changes_at(&self, t: u32) -> usize {
        self.changes.get(t as usize).map_or(0, Vec::len)
    }

    pub fn tom1(&self, s1: &CharacterId, target: &CharacterId) -> Result<LocationId, QueryError> {
        distinct(&[s1, target])?;
        match self.b1(self.horizon(), s1, target)? {
            Belief::Known(l) => Ok(l),
            Belief::Unknown => Err(QueryError::UnknownBelief),
        }
    }

    pub fn tom2(
        &self,
        s1: &CharacterId,
        s2: &CharacterId,
        target: &CharacterId,
    ) -> Result<LocationId, QueryError> {
        distinct(&[s1, s2, target])?;
        match self.b2(self.horizon(), s1, s2, target)? {
            Belief::Known(l) => Ok(l),
            Belief::Unknown => Err(QueryError::UnknownBelief),
        }
    }

    /// Diagnostic dump: the full t=0 state, then one row per changed entry,
    /// as `t,relation,observer,mediator,subject,value`.
    pub fn dump(&self) -> String {
        let nc = self.characters.len();
        let name = |i: usize| self.characters[i].as_str();
        let value = |v: u16| match self.decode(v) {
            Belief::Known(l) => l.to_string(),
            Belief::Unknown => "?".to_owned(),
        };
        let row = |out: &mut String, t: usize, entry: Entry, v: u16| {
            let _ = match entry {
                Entry::B1(i) => writeln!(out, "{t},b1,{},,{},{}", name(i / nc), name(i % nc), value(v)),
                Entry::B2(i) => writeln!(
                    out,
                    "{t},b2,{},{},{},{}",
                    name(i / (nc * nc)),
                    name(i / nc % nc),
                    name(i % nc),
                    value(v)
                ),
            };
        };
        let mut out = String::from("t,relation,observer,mediator,subject,value\n");
        for i in 0..nc * nc {
            row(&mut out, 0, Entry::B1(i), self.value_at(Entry::B1(i), 0, self.b1[i]));
        }
        for i in 0..nc * nc * nc {
            row(&mut out, 0, Entry::B2(i), self.value_at(Entry::B2(i), 0, self.b2[i]));
        }
        for (t, changes) in self.changes.iter().enumerate().skip(1) {
            for ch in changes {
                let (final_value, entry) = match ch.entry {
                    Entry::B1(i) => (self.b1[i], ch.entry),
                    Entry::B2(i) => (self.b2[i], ch.entry),
                };
                row(&mut out, t, entry, self.value_at(entry, t as u32, final_value));
            }
        }
        out
    }
}

fn distinct(cs: &[&CharacterId]) -> Result<(), QueryError> {
    for (i, a) in cs.iter().enumerate() {
        if cs[i + 1..].contains(a) {
            return Err(QueryError::RolesNotDistinct);
        }
    }
    Ok(())
}

/// Where `s1` believes `target` is at the end of the story.
pub fn tom1_answer(story: &Story, s1: &CharacterId, target: &CharacterId) -> Result<LocationId, QueryError> {
    track(story)?.tom1(s1, target)
}

/// Where `s1` believes `s2` believes `target` is at the end of the story.
pub fn tom2_answer(
    story: &Story,
    s1: &CharacterId,
    s2: &CharacterId,
    target: &CharacterId,
) -> Result<LocationId, QueryError> {
    track(story)?.tom2(s1, s2, target)
}

/// First timestep t ≥ 1 at which all of `chars` become co-located (they are
/// together at t but were not at t − 1), with the meeting place.
pub fn first_meeting(story: &Story, chars: &[CharacterId]) -> Result<Option<(u32, LocationId)>, QueryError> {
    let board = story.board();
    let ixs = chars
        .iter()
        .map(|c| board.character_index(c).ok_or_else(|| QueryError::UnknownCharacter(c.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let together = |t: u32| {
        let row = story.positions_at(t);
        let first = &row[ixs[0]];
        ixs.iter().all(|&i| &row[i] == first).then(|| first.clone())
    };
    for t in 1..=story.len() {
        if let Some(l) = together(t) {
            if together(t - 1).is_none() {
                return Ok(Some((t, l)));
            }
        }
    }
    Ok(None)
}

/// Location of the first co-location of all `chars` after the start.
pub fn first_common_location(story: &Story, chars: &[CharacterId]) -> Option<LocationId> {
    first_meeting(story, chars).ok().flatten().map(|(_, l)| l)
}

/// Where `target` went right after it was first together with all
/// `observers`.
pub fn wm_answer(story: &Story, observers: &[CharacterId], target: &CharacterId) -> Result<LocationId, QueryError> {
    if observers.contains(target) {
        return Err(QueryError::RolesNotDistinct);
    }
    let mut group = observers.to_vec();
    group.push(target.clone());
    let (t, _) = first_meeting(story, &group)?.ok_or(QueryError::NoCoLocation)?;
    story.events()[t as usize..]
        .iter()
        .find(|e| &e.actor == target)
        .map(|e| e.location.clone())
        .ok_or(QueryError::NoSubsequentMove)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{simulate, Event};
    use crate::storyboard::{
        first_order_board, sally_anne_board, second_order_board, ActionId, EntityKind,
        EnvironmentTag, LocationGraph, Storyboard, SuiteParams,
    };

    fn open_board(names: &[&str], horizon: u32) -> Storyboard {
        let env = EnvironmentTag::HallwaysDoors;
        Storyboard {
            characters: names.iter().map(|n| CharacterId::from(*n)).collect(),
            actions: vec![ActionId::from("enters")],
            graph: LocationGraph::complete(env.vertices(6), env.start_vertex()),
            event_specs: vec![],
            horizon,
            environment: env,
            entity_kind: EntityKind::Animate,
        }
    }

    fn story(names: &[&str], moves: &[(&str, &str)]) -> Story {
        let board = open_board(names, moves.len() as u32);
        let events = moves
            .iter()
            .enumerate()
            .map(|(i, (c, l))| Event {
                t: i as u32 + 1,
                actor: (*c).into(),
                action: "enters".into(),
                location: (*l).into(),
            })
            .collect();
        Story::new(board, 0, events).unwrap()
    }

    fn c(s: &str) -> CharacterId {
        s.into()
    }

    #[test]
    fn departure_from_shared_start_is_seen() {
        let s = story(&["Alice", "Bob"], &[("Alice", "room_1")]);
        let tl = track(&s).unwrap();
        assert_eq!(tl.b1(1, &c("Bob"), &c("Alice")).unwrap(), Belief::Known("room_1".into()));
        assert_eq!(tl.b1(0, &c("Bob"), &c("Alice")).unwrap(), Belief::Known("the_hallway".into()));
    }

    #[test]
    fn empty_story_is_common_knowledge_of_the_hallway() {
        let s = story(&["Alice", "Bob", "Cara"], &[]);
        let tl = track(&s).unwrap();
        assert_eq!(tl.tom1(&c("Alice"), &c("Bob")).unwrap().as_str(), "the_hallway");
        assert_eq!(tl.tom2(&c("Alice"), &c("Bob"), &c("Cara")).unwrap().as_str(), "the_hallway");
        assert_eq!(first_common_location(&s, &[c("Alice"), c("Bob")]), None);
    }

    #[test]
    fn unseen_moves_leave_beliefs_stale() {
        let s = story(
            &["Alice", "Bob"],
            &[("Alice", "room_1"), ("Bob", "room_2"), ("Bob", "room_3")],
        );
        let tl = track(&s).unwrap();
        assert_eq!(tl.tom1(&c("Alice"), &c("Bob")).unwrap().as_str(), "the_hallway");
        assert_eq!(tl.tom1(&c("Bob"), &c("Alice")).unwrap().as_str(), "room_1");
        // only Bob's self-knowledge entries change
        assert_eq!(tl.changes_at(3), 2);
    }

    #[test]
    fn sally_anne_answer_is_pre_switch_location() {
        let (board, roles) = sally_anne_board();
        let s = simulate(&board, 0).unwrap();
        let ans = tom1_answer(&s, &roles.s1, &roles.target).unwrap();
        assert_eq!(ans.as_str(), "room_2");
        assert_ne!(s.position(5, &roles.target).unwrap(), &ans);
        assert_eq!(first_common_location(&s, &roles.all()).unwrap().as_str(), "room_1");
    }

    #[test]
    fn first_order_pattern_answers() {
        let p = SuiteParams::mislead(1, 25);
        for seed in 0..10 {
            let (b, r, exp) = first_order_board(&p, seed).unwrap();
            let s = simulate(&b, seed).unwrap();
            assert_eq!(tom1_answer(&s, &r.s1, &r.target).unwrap(), exp.believed);
            assert_eq!(wm_answer(&s, &[r.s1.clone()], &r.target).unwrap(), exp.believed);
            assert_eq!(first_common_location(&s, &r.all()).unwrap(), exp.first_common);
        }
    }

    #[test]
    fn second_order_pattern_answers() {
        let p = SuiteParams::mislead(2, 30);
        for seed in 0..10 {
            let (b, r, exp) = second_order_board(&p, seed).unwrap();
            let s = simulate(&b, seed).unwrap();
            let s2 = r.s2.clone().unwrap();
            let ans = tom2_answer(&s, &r.s1, &s2, &r.target).unwrap();
            assert_eq!(ans, exp.believed);
            assert_eq!(wm_answer(&s, &r.observers(), &r.target).unwrap(), ans);
        }
    }

    #[test]
    fn wm_errors() {
        let s = story(&["Alice", "Bob"], &[("Alice", "room_1"), ("Bob", "room_1")]);
        assert_eq!(wm_answer(&s, &[c("Alice")], &c("Bob")), Err(QueryError::NoSubsequentMove));
        let s = story(&["Alice", "Bob"], &[("Alice", "room_1"), ("Bob", "room_2")]);
        assert_eq!(wm_answer(&s, &[c("Alice")], &c("Bob")), Err(QueryError::NoCoLocation));
    }

    #[test]
    fn crossing_en_route_is_the_first_common_location() {
        let s = story(
            &["Bob", "Anne"],
            &[("Bob", "room_4"), ("Anne", "room_4"), ("Anne", "room_3"), ("Bob", "room_3")],
        );
        assert_eq!(first_common_location(&s, &[c("Bob"), c("Anne")]).unwrap().as_str(), "room_4");
    }

    #[test]
    fn dump_lists_initial_state_and_changes() {
        let s = story(&["Alice", "Bob"], &[("Alice", "room_1")]);
        let tl = track(&s).unwrap();
        let dump = tl.dump();
        assert!(dump.contains("0,b1,Bob,,Alice,the_hallway"));
        assert!(dump.contains("1,b1,Bob,,Alice,room_1"));
        assert!(dump.contains("1,b2,Bob,Alice,Alice,room_1"));
    }
}
