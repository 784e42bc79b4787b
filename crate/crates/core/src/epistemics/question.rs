use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{track, wm_answer, QueryError};
use crate::simulator::Story;
use crate::storyboard::{CharacterId, LocationId, RoleBinding, UnknownTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    Tom1,
    Tom2,
    WmHuman,
    WmInanimate,
}

impl QuestionKind {
    pub const ALL: [QuestionKind; 4] = [
        QuestionKind::Tom1,
        QuestionKind::Tom2,
        QuestionKind::WmHuman,
        QuestionKind::WmInanimate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionKind::Tom1 => "tom1",
            QuestionKind::Tom2 => "tom2",
            QuestionKind::WmHuman => "wm_human",
            QuestionKind::WmInanimate => "wm_inanimate",
        }
    }

    pub fn is_world_modeling(self) -> bool {
        matches!(self, QuestionKind::WmHuman | QuestionKind::WmInanimate)
    }
}

impl fmt::Display for QuestionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuestionKind {
    type Err = UnknownTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.to_ascii_lowercase().replace('-', "_");
        let s = match s.as_str() {
            "wm" => "wm_human",
            other => other,
        };
        QuestionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| UnknownTag {
                kind: "question kind",
                value: s.to_owned(),
            })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{kind} questions need a second observer (s2)")]
pub struct MissingRole {
    pub kind: QuestionKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub kind: QuestionKind,
    pub roles: RoleBinding,
}

impl Question {
    pub fn new(kind: QuestionKind, roles: RoleBinding) -> Result<Self, MissingRole> {
        let q = Self { kind, roles };
        q.check_roles()?;
        Ok(q)
    }

    pub fn check_roles(&self) -> Result<(), MissingRole> {
        let needs_s2 = matches!(self.kind, QuestionKind::Tom2 | QuestionKind::WmInanimate);
        if needs_s2 && self.roles.s2.is_none() {
            return Err(MissingRole { kind: self.kind });
        }
        Ok(())
    }

    /// S2, which the role check guarantees for kinds that need it.
    pub fn s2(&self) -> Result<&CharacterId, MissingRole> {
        self.roles.s2.as_ref().ok_or(MissingRole { kind: self.kind })
    }

    /// The exact answer according to the belief tracker.
    pub fn answer(&self, story: &Story) -> Result<LocationId, QueryError> {
        self.check_roles()?;
        let r = &self.roles;
        match self.kind {
            QuestionKind::Tom1 => track(story)?.tom1(&r.s1, &r.target),
            QuestionKind::Tom2 => track(story)?.tom2(&r.s1, self.s2()?, &r.target),
            QuestionKind::WmHuman | QuestionKind::WmInanimate => {
                wm_answer(story, &r.observers(), &r.target)
            }
        }
    }
}
