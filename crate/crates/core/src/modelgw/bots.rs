use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eval::{FinishReason, ModelResponse};
use crate::render::answer_surface;
use crate::storyboard::UnknownTag;
use crate::suites::QARecord;

pub const REFUSAL_TEXT: &str = "There is not enough information.";
pub const TRUNCATED_TEXT: &str = "Let me trace the story one step at a time. At the start everybody is together, and after that the first person to";

/// Deterministic responders standing in for a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BotKind {
    /// Answers the ground truth.
    Oracle,
    /// Answers where the target really ends up.
    LastLocation,
    /// Answers where the question's characters first met.
    FirstCommonLocation,
    Refusal,
    /// A chain of thought cut off by the token cap.
    Truncator,
}

impl BotKind {
    pub const ALL: [BotKind; 5] = [
        BotKind::Oracle,
        BotKind::LastLocation,
        BotKind::FirstCommonLocation,
        BotKind::Refusal,
        BotKind::Truncator,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BotKind::Oracle => "oracle",
            BotKind::LastLocation => "last_location",
            BotKind::FirstCommonLocation => "first_common_location",
            BotKind::Refusal => "refusal",
            BotKind::Truncator => "truncator",
        }
    }

    /// The name responses are tagged with.
    pub fn model_name(self) -> String {
        format!("bot:{}", self.as_str())
    }

    pub fn respond(self, record: &QARecord) -> ModelResponse {
        let (text, finish) = match self {
            BotKind::Oracle => (record.ground_truth.clone(), FinishReason::Completed),
            BotKind::LastLocation => (final_location(record), FinishReason::Completed),
            BotKind::FirstCommonLocation => (
                record.distractors.first_common_location.clone().unwrap_or_default(),
                FinishReason::Completed,
            ),
            BotKind::Refusal => (REFUSAL_TEXT.to_owned(), FinishReason::Completed),
            BotKind::Truncator => (TRUNCATED_TEXT.to_owned(), FinishReason::LengthCapped),
        };
        ModelResponse {
            model: Some(self.model_name()),
            ..ModelResponse::new(record.id.clone(), text, finish)
        }
    }
}

/// Replays the record's events to find where the target ends up.
fn final_location(record: &QARecord) -> String {
    let env = record.environment;
    let target = &record.question.roles.target;
    let last = record
        .events
        .iter()
        .rev()
        .find(|e| e.actor == *target)
        .map(|e| e.location.clone())
        .unwrap_or_else(|| env.start_vertex());
    answer_surface(env, &last)
}

impl fmt::Display for BotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BotKind {
    type Err = UnknownTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        let norm = if norm == "first_common" { "first_common_location".to_owned() } else { norm };
        BotKind::ALL
            .into_iter()
            .find(|b| b.as_str() == norm)
            .ok_or_else(|| UnknownTag {
                kind: "bot",
                value: s.to_owned(),
            })
    }
}
