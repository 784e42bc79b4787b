//! Concrete stories: one move per timestep, generated from a storyboard and a
//! seed, plus an independent checker that a story honors its storyboard.

mod check;
mod plan;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use check::{check_constraints, compress_unfillable_windows, ViolationCode, ViolationItem, ViolationList};
pub use plan::{simulate, SimulateError};

use crate::seed::Seed;
use crate::storyboard::{ActionId, CharacterId, LocationId, Storyboard};

/// One event φ(c, l): `actor` performs `action` and ends up at `location`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub t: u32,
    pub actor: CharacterId,
    pub action: ActionId,
    pub location: LocationId,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} {} {}", self.t, self.actor, self.action, self.location)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StoryError {
    #[error("event at t={t} names unknown character `{actor}`")]
    UnknownCharacter { t: u32, actor: CharacterId },
    #[error("event at t={t} names unknown location `{location}`")]
    UnknownLocation { t: u32, location: LocationId },
}

#[derive(Deserialize)]
struct StoryRepr {
    board: Storyboard,
    seed: Seed,
    events: Vec<Event>,
}

/// A story with its derived position table. Positions are the fold of the
/// events over everyone starting at the board's start vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "StoryRepr")]
pub struct Story {
    board: Storyboard,
    seed: Seed,
    events: Vec<Event>,
    #[serde(skip)]
    positions: Vec<Vec<LocationId>>,
}

impl TryFrom<StoryRepr> for Story {
    type Error = StoryError;

    fn try_from(r: StoryRepr) -> Result<Self, Self::Error> {
        Story::new(r.board, r.seed, r.events)
    }
}

impl Story {
    pub fn new(board: Storyboard, seed: Seed, events: Vec<Event>) -> Result<Self, StoryError> {
        let positions = fold_positions(&board, &events)?;
        Ok(Self {
            board,
            seed,
            events,
            positions,
        })
    }

    pub fn board(&self) -> &Storyboard {
        &self.board
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Number of events (the last timestep).
    pub fn len(&self) -> u32 {
        self.events.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Where `c` is at the end of timestep `t` (0 = before any event).
    pub fn position(&self, t: u32, c: &CharacterId) -> Option<&LocationId> {
        let ci = self.board.character_index(c)?;
        self.positions.get(t as usize).map(|row| &row[ci])
    }

    /// Everyone's location at the end of `t`, in board character order.
    pub fn positions_at(&self, t: u32) -> &[LocationId] {
        &self.positions[t as usize]
    }

    /// Returns a copy with `events` replaced (positions recomputed).
    pub fn with_events(&self, events: Vec<Event>) -> Result<Story, StoryError> {
        Story::new(self.board.clone(), self.seed, events)
    }

    /// The same story told about different characters.
    pub fn map_characters(&self, rename: impl Fn(&CharacterId) -> CharacterId) -> Story {
        let board = self.board.map_characters(&rename);
        let events = self
            .events
            .iter()
            .map(|e| Event {
                actor: rename(&e.actor),
                ..e.clone()
            })
            .collect();
        Story::new(board, self.seed, events).expect("renaming preserves references")
    }
}

fn fold_positions(board: &Storyboard, events: &[Event]) -> Result<Vec<Vec<LocationId>>, StoryError> {
    let mut row = vec![board.graph.start.clone(); board.characters.len()];
    let mut out = Vec::with_capacity(events.len() + 1);
    out.push(row.clone());
    for e in events {
        let ci = board
            .character_index(&e.actor)
            .ok_or_else(|| StoryError::UnknownCharacter {
                t: e.t,
                actor: e.actor.clone(),
            })?;
        if !board.graph.contains(&e.location) {
            return Err(StoryError::UnknownLocation {
                t: e.t,
                location: e.location.clone(),
            });
        }
        row[ci] = e.location.clone();
        out.push(row.clone());
    }
    Ok(out)
}
