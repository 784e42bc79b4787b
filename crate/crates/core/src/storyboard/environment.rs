use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ActionId, LocationId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvironmentTag {
    HallwaysDoors,
    HolesField,
    ConferenceCall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Animate,
    Inanimate,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown {kind} `{value}`")]
pub struct UnknownTag {
    pub kind: &'static str,
    pub value: String,
}

const CALLEES: &[&str] = &[
    "city_hall",
    "bank",
    "doctors_office",
    "post_office",
    "library",
    "pharmacy",
    "school",
    "dentist",
    "hotel",
    "pizza_place",
    "train_station",
    "museum",
    "bakery",
    "gym",
    "airport",
];

impl EnvironmentTag {
    pub const ALL: [EnvironmentTag; 3] = [
        EnvironmentTag::HallwaysDoors,
        EnvironmentTag::HolesField,
        EnvironmentTag::ConferenceCall,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EnvironmentTag::HallwaysDoors => "hallways_doors",
            EnvironmentTag::HolesField => "holes_field",
            EnvironmentTag::ConferenceCall => "conference_call",
        }
    }

    pub fn start_vertex(self) -> LocationId {
        LocationId::from(match self {
            EnvironmentTag::HallwaysDoors => "the_hallway",
            EnvironmentTag::HolesField => "the_field",
            EnvironmentTag::ConferenceCall => "no_call",
        })
    }

    /// Largest vertex count this environment can name.
    pub fn max_locations(self) -> usize {
        match self {
            EnvironmentTag::ConferenceCall => CALLEES.len() + 1,
            _ => usize::MAX,
        }
    }

    /// The start vertex followed by `num_locations - 1` further vertices.
    pub fn vertices(self, num_locations: usize) -> Vec<LocationId> {
        let mut out = vec![self.start_vertex()];
        for k in 1..num_locations {
            let id = match self {
                EnvironmentTag::HallwaysDoors => format!("room_{k}"),
                EnvironmentTag::HolesField => format!("hole_{k}"),
                EnvironmentTag::ConferenceCall => match CALLEES.get(k - 1) {
                    Some(c) => (*c).to_owned(),
                    None => break,
                },
            };
            out.push(LocationId::new(id));
        }
        out
    }

    /// Vertices that may carry a pattern location (and hence an answer).
    pub fn pattern_candidates(self, vertices: &[LocationId]) -> Vec<LocationId> {
        match self {
            EnvironmentTag::ConferenceCall => {
                let start = self.start_vertex();
                vertices.iter().filter(|v| **v != start).cloned().collect()
            }
            _ => vertices.to_vec(),
        }
    }

    /// The action verb used for a move into `dest`.
    pub fn action_for(self, kind: EntityKind, dest: &LocationId) -> ActionId {
        if kind == EntityKind::Inanimate {
            return ActionId::from("moved");
        }
        let verb = match self {
            EnvironmentTag::HallwaysDoors => "enters",
            EnvironmentTag::HolesField if *dest == self.start_vertex() => "jump_out",
            EnvironmentTag::HolesField => "jump_in",
            EnvironmentTag::ConferenceCall if *dest == self.start_vertex() => "hangs_up",
            EnvironmentTag::ConferenceCall => "joins",
        };
        ActionId::from(verb)
    }

    /// The action vocabulary φ for this environment.
    pub fn actions(self, kind: EntityKind) -> Vec<ActionId> {
        if kind == EntityKind::Inanimate {
            return vec![ActionId::from("moved")];
        }
        let verbs: &[&str] = match self {
            EnvironmentTag::HallwaysDoors => &["enters"],
            EnvironmentTag::HolesField => &["jump_in", "jump_out"],
            EnvironmentTag::ConferenceCall => &["joins", "hangs_up"],
        };
        verbs.iter().map(|v| ActionId::from(*v)).collect()
    }
}

impl fmt::Display for EnvironmentTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvironmentTag {
    type Err = UnknownTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EnvironmentTag::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| UnknownTag {
                kind: "environment",
                value: s.to_owned(),
            })
    }
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Animate => "animate",
            EntityKind::Inanimate => "inanimate",
        }
    }
}

impl FromStr for EntityKind {
    type Err = UnknownTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "animate" => Ok(EntityKind::Animate),
            "inanimate" => Ok(EntityKind::Inanimate),
            _ => Err(UnknownTag {
                kind: "entity_kind",
                value: s.to_owned(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_layouts() {
        let v = EnvironmentTag::HallwaysDoors.vertices(6);
        let names: Vec<&str> = v.iter().map(|l| l.as_str()).collect();
        assert_eq!(names, ["the_hallway", "room_1", "room_2", "room_3", "room_4", "room_5"]);
        assert_eq!(EnvironmentTag::HolesField.vertices(3)[2].as_str(), "hole_2");
        assert_eq!(EnvironmentTag::ConferenceCall.vertices(2)[1].as_str(), "city_hall");
        assert_eq!(EnvironmentTag::ConferenceCall.vertices(100).len(), CALLEES.len() + 1);
    }

    #[test]
    fn tags_round_trip() {
        for env in EnvironmentTag::ALL {
            assert_eq!(env.as_str().parse::<EnvironmentTag>().unwrap(), env);
        }
        assert!("space_station".parse::<EnvironmentTag>().is_err());
    }

    #[test]
    fn actions_depend_on_destination() {
        let f = EnvironmentTag::HolesField;
        assert_eq!(f.action_for(EntityKind::Animate, &"hole_1".into()).as_str(), "jump_in");
        assert_eq!(f.action_for(EntityKind::Animate, &"the_field".into()).as_str(), "jump_out");
        assert_eq!(f.action_for(EntityKind::Inanimate, &"hole_1".into()).as_str(), "moved");
    }
}
