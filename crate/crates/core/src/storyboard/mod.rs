//! The storyboard: cast, action vocabulary, location graph, pinned event
//! specs and horizon that every generated story must honor.

mod builders;
mod environment;
mod file;
mod graph;
mod pools;
mod validate;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use builders::{
    first_order_board, second_order_board, sally_anne_board, sally_anne_board_named,
    BuilderError, ExpectedLocations, PatternTimes,
};
pub use environment::{EntityKind, EnvironmentTag, UnknownTag};
pub use file::{load_board, parse_board, write_board, board_to_string, BoardFileError};
pub use graph::{GraphIndex, LocationGraph};
pub use pools::{entity_pool, name_pool};
pub use validate::{validate_storyboard, ValidationCode, ValidationReport, Violation};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

string_id!(
    /// A character (or, for inanimate stories, an object) name.
    CharacterId
);
string_id!(
    /// An opaque location token such as `the_hallway` or `room_3`.
    LocationId
);
string_id!(ActionId);

/// A pinned or windowed constraint on the story. Timesteps are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventSpec {
    /// `character` moves into `location` exactly at timestep `t`.
    MoveAt {
        character: CharacterId,
        location: LocationId,
        t: u32,
    },
    /// All `characters` are at `location` at the end of timestep `t`.
    CrossPaths {
        characters: Vec<CharacterId>,
        location: LocationId,
        t: u32,
    },
    /// Random filler in `t_start..=t_end` never moves a protected character.
    ExclusiveRandom {
        protected: Vec<CharacterId>,
        t_start: u32,
        t_end: u32,
    },
}

impl EventSpec {
    /// The timestep a deterministic spec pins; windows pin nothing.
    pub fn pinned_time(&self) -> Option<u32> {
        match self {
            EventSpec::MoveAt { t, .. } | EventSpec::CrossPaths { t, .. } => Some(*t),
            EventSpec::ExclusiveRandom { .. } => None,
        }
    }

    pub fn characters(&self) -> Vec<&CharacterId> {
        match self {
            EventSpec::MoveAt { character, .. } => vec![character],
            EventSpec::CrossPaths { characters, .. } => characters.iter().collect(),
            EventSpec::ExclusiveRandom { protected, .. } => protected.iter().collect(),
        }
    }

    pub fn location(&self) -> Option<&LocationId> {
        match self {
            EventSpec::MoveAt { location, .. } | EventSpec::CrossPaths { location, .. } => {
                Some(location)
            }
            EventSpec::ExclusiveRandom { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Storyboard {
    pub characters: Vec<CharacterId>,
    pub actions: Vec<ActionId>,
    pub graph: LocationGraph,
    pub event_specs: Vec<EventSpec>,
    pub horizon: u32,
    pub environment: EnvironmentTag,
    pub entity_kind: EntityKind,
}

impl Storyboard {
    pub fn character_index(&self, c: &CharacterId) -> Option<usize> {
        self.characters.iter().position(|x| x == c)
    }

    /// Is `c` inside an exclusive-random window covering `t`?
    pub fn is_protected(&self, c: &CharacterId, t: u32) -> bool {
        self.event_specs.iter().any(|spec| match spec {
            EventSpec::ExclusiveRandom {
                protected,
                t_start,
                t_end,
            } => (*t_start..=*t_end).contains(&t) && protected.contains(c),
            _ => false,
        })
    }

    /// Pinned timesteps of deterministic specs, in ascending order.
    pub fn pinned_times(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.event_specs.iter().filter_map(|s| s.pinned_time()).collect();
        set.into_iter().collect()
    }

    /// Renames every character through `rename`, keeping all structure.
    pub fn map_characters(&self, rename: impl Fn(&CharacterId) -> CharacterId) -> Storyboard {
        let map_all = |cs: &[CharacterId]| cs.iter().map(&rename).collect::<Vec<_>>();
        let event_specs = self
            .event_specs
            .iter()
            .map(|spec| match spec {
                EventSpec::MoveAt { character, location, t } => EventSpec::MoveAt {
                    character: rename(character),
                    location: location.clone(),
                    t: *t,
                },
                EventSpec::CrossPaths { characters, location, t } => EventSpec::CrossPaths {
                    characters: map_all(characters),
                    location: location.clone(),
                    t: *t,
                },
                EventSpec::ExclusiveRandom { protected, t_start, t_end } => {
                    EventSpec::ExclusiveRandom {
                        protected: map_all(protected),
                        t_start: *t_start,
                        t_end: *t_end,
                    }
                }
            })
            .collect();
        Storyboard {
            characters: map_all(&self.characters),
            event_specs,
            ..self.clone()
        }
    }
}

/// Binds the role symbols S1, S2 and T to concrete characters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleBinding {
    pub s1: CharacterId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s2: Option<CharacterId>,
    pub target: CharacterId,
}

impl RoleBinding {
    pub fn first_order(s1: impl Into<CharacterId>, target: impl Into<CharacterId>) -> Self {
        Self {
            s1: s1.into(),
            s2: None,
            target: target.into(),
        }
    }

    pub fn second_order(
        s1: impl Into<CharacterId>,
        s2: impl Into<CharacterId>,
        target: impl Into<CharacterId>,
    ) -> Self {
        Self {
            s1: s1.into(),
            s2: Some(s2.into()),
            target: target.into(),
        }
    }

    /// S1, then S2 if bound.
    pub fn observers(&self) -> Vec<CharacterId> {
        std::iter::once(self.s1.clone()).chain(self.s2.clone()).collect()
    }

    /// Observers followed by the target.
    pub fn all(&self) -> Vec<CharacterId> {
        let mut v = self.observers();
        v.push(self.target.clone());
        v
    }

    /// Every bound character is distinct and belongs to `board`.
    pub fn is_valid_for(&self, board: &Storyboard) -> bool {
        let all = self.all();
        let distinct: BTreeSet<&CharacterId> = all.iter().collect();
        distinct.len() == all.len() && all.iter().all(|c| board.characters.contains(c))
    }
}

/// Parameters of one cell of a mislead-distance or character-count sweep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteParams {
    pub order: u8,
    pub mislead_distance: u32,
    pub num_characters: usize,
    pub num_locations: usize,
    pub horizon: u32,
    pub environment: EnvironmentTag,
}

impl SuiteParams {
    /// The mislead-distance configuration: 8 characters, 6 fully connected
    /// locations, 100 events.
    pub fn mislead(order: u8, mislead_distance: u32) -> Self {
        Self {
            order,
            mislead_distance,
            num_characters: 8,
            num_locations: 6,
            horizon: 100,
            environment: EnvironmentTag::HallwaysDoors,
        }
    }

    pub fn with_horizon(mut self, horizon: u32) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_characters(mut self, n: usize) -> Self {
        self.num_characters = n;
        self
    }

    pub fn with_environment(mut self, env: EnvironmentTag) -> Self {
        self.environment = env;
        self
    }

    /// Last timestep used by the pinned pattern for this order.
    pub fn pattern_end(&self) -> u32 {
        match self.order {
            2 => 13 + self.mislead_distance,
            _ => 12 + self.mislead_distance,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn role_binding_validity() {
        let board = sally_anne_board().0;
        assert!(RoleBinding::first_order("Sally", "Anne").is_valid_for(&board));
        assert!(!RoleBinding::first_order("Sally", "Sally").is_valid_for(&board));
        assert!(!RoleBinding::first_order("Sally", "Bob").is_valid_for(&board));
    }

    #[test]
    fn map_characters_renames_specs() {
        let board = sally_anne_board().0;
        let renamed = board.map_characters(|c| CharacterId::new(c.as_str().to_uppercase()));
        assert_eq!(renamed.characters[0].as_str(), "SALLY");
        assert!(renamed
            .event_specs
            .iter()
            .all(|s| s.characters().iter().all(|c| c.as_str() == c.as_str().to_uppercase())));
        assert!(validate_storyboard(&renamed).is_valid());
    }
}
