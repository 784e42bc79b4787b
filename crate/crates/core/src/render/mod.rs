//! Natural-language rendering of events, questions and prompts.

mod paraphrase;
mod prompts;

use thiserror::Error;

pub use paraphrase::{
    paraphrase_story, Identity, ParaphraseError, ParaphraseOptions, ParaphrasedLine,
    ParaphrasedStory, Replay, TextTransformer, TransformError,
};
pub use prompts::{build_prompt, prompt_template, PromptTemplate, DEFAULT_TEMPLATE, TEMPLATE_IDS};

use crate::epistemics::{MissingRole, Question, QuestionKind};
use crate::simulator::{Event, Story};
use crate::storyboard::{ActionId, CharacterId, EntityKind, EnvironmentTag, LocationId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RenderError {
    #[error("`{location}` is not a {environment} location")]
    UnknownLocation {
        environment: EnvironmentTag,
        location: LocationId,
    },
    #[error("cannot parse event sentence `{0}`")]
    Unparseable(String),
    #[error(transparent)]
    MissingRole(#[from] MissingRole),
    #[error("unknown prompt template {0} (expected 1..=12)")]
    UnknownTemplate(u32),
}

fn hole_number(l: &LocationId) -> Option<&str> {
    l.as_str()
        .strip_prefix("hole_")
        .filter(|k| !k.is_empty() && k.bytes().all(|b| b.is_ascii_digit()))
}

fn callee_words(l: &LocationId) -> String {
    l.as_str().replace('_', " ")
}

/// How a location is written when it is the answer to a question.
pub fn answer_surface(env: EnvironmentTag, l: &LocationId) -> String {
    let start = *l == env.start_vertex();
    match env {
        EnvironmentTag::HallwaysDoors => l.to_string(),
        EnvironmentTag::HolesField if start => "the field".to_owned(),
        EnvironmentTag::HolesField => match hole_number(l) {
            Some(k) => format!("hole {k}"),
            None => l.to_string(),
        },
        EnvironmentTag::ConferenceCall if start => "no one".to_owned(),
        EnvironmentTag::ConferenceCall => format!("the {}", callee_words(l)),
    }
}

/// Answer surface forms of every location of a story's graph.
pub fn answer_surfaces(env: EnvironmentTag, locations: &[LocationId]) -> Vec<String> {
    locations.iter().map(|l| answer_surface(env, l)).collect()
}

/// How a character is named inside a sentence. Objects take an article.
pub fn entity_name(kind: EntityKind, c: &CharacterId) -> String {
    match kind {
        EntityKind::Animate => c.to_string(),
        EntityKind::Inanimate => format!("the {c}"),
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn check_location(env: EnvironmentTag, l: &LocationId) -> Result<(), RenderError> {
    let ok = match env {
        EnvironmentTag::HallwaysDoors => true,
        EnvironmentTag::HolesField => *l == env.start_vertex() || hole_number(l).is_some(),
        EnvironmentTag::ConferenceCall => !l.as_str().contains(' '),
    };
    if ok {
        Ok(())
    } else {
        Err(RenderError::UnknownLocation {
            environment: env,
            location: l.clone(),
        })
    }
}

/// One sentence per event.
pub fn render_event(event: &Event, env: EnvironmentTag, kind: EntityKind) -> Result<String, RenderError> {
    let l = &event.location;
    check_location(env, l)?;
    let start = *l == env.start_vertex();
    let a = &event.actor;
    if kind == EntityKind::Inanimate {
        let place = match env {
            EnvironmentTag::ConferenceCall if start => return Ok(format!("The {a} is taken off the call.")),
            EnvironmentTag::ConferenceCall => format!("a call with the {}", callee_words(l)),
            _ => answer_surface(env, l),
        };
        return Ok(format!("The {a} is moved to {place}."));
    }
    Ok(match env {
        EnvironmentTag::HallwaysDoors => format!("{a} enters {l}."),
        EnvironmentTag::HolesField if start => format!("{a} jumps back out into the field."),
        EnvironmentTag::HolesField => format!("{a} jumps into hole {}.", hole_number(l).unwrap_or_default()),
        EnvironmentTag::ConferenceCall if start => format!("{a} hangs up."),
        EnvironmentTag::ConferenceCall => format!("{a} joins a call with the {}.", callee_words(l)),
    })
}

/// Inverts [`render_event`]: recovers actor, action and location.
pub fn parse_event(
    sentence: &str,
    env: EnvironmentTag,
    kind: EntityKind,
) -> Result<(CharacterId, ActionId, LocationId), RenderError> {
    let fail = || RenderError::Unparseable(sentence.to_owned());
    let body = sentence.strip_suffix('.').ok_or_else(fail)?;
    let start = env.start_vertex();

    let (actor, location) = if kind == EntityKind::Inanimate {
        let rest = body.strip_prefix("The ").ok_or_else(fail)?;
        if let Some(actor) = rest.strip_suffix(" is taken off the call") {
            (actor, start.clone())
        } else {
            let (actor, place) = rest.split_once(" is moved to ").ok_or_else(fail)?;
            let location = match env {
                EnvironmentTag::HallwaysDoors => LocationId::from(place),
                EnvironmentTag::HolesField if place == "the field" => start.clone(),
                EnvironmentTag::HolesField => {
                    let k = place.strip_prefix("hole ").ok_or_else(fail)?;
                    LocationId::new(format!("hole_{k}"))
                }
                EnvironmentTag::ConferenceCall => {
                    let callee = place.strip_prefix("a call with the ").ok_or_else(fail)?;
                    LocationId::new(callee.replace(' ', "_"))
                }
            };
            (actor, location)
        }
    } else {
        let (actor, rest) = body.split_once(' ').ok_or_else(fail)?;
        let location = match env {
            EnvironmentTag::HallwaysDoors => LocationId::from(rest.strip_prefix("enters ").ok_or_else(fail)?),
            EnvironmentTag::HolesField if rest == "jumps back out into the field" => start.clone(),
            EnvironmentTag::HolesField => {
                let k = rest.strip_prefix("jumps into hole ").ok_or_else(fail)?;
                LocationId::new(format!("hole_{k}"))
            }
            EnvironmentTag::ConferenceCall if rest == "hangs up" => start.clone(),
            EnvironmentTag::ConferenceCall => {
                let callee = rest.strip_prefix("joins a call with the ").ok_or_else(fail)?;
                LocationId::new(callee.replace(' ', "_"))
            }
        };
        (actor, location)
    };
    if actor.is_empty() || actor.contains(' ') {
        return Err(fail());
    }
    let location_ok = check_location(env, &location).is_ok();
    if !location_ok {
        return Err(fail());
    }
    let action = env.action_for(kind, &location);
    Ok((CharacterId::from(actor), action, location))
}

/// The story as text, one sentence per line.
pub fn render_story(story: &Story) -> Result<String, RenderError> {
    let board = story.board();
    let lines = story
        .events()
        .iter()
        .map(|e| render_event(e, board.environment, board.entity_kind))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(lines.join("\n"))
}

/// Tokens that must survive a paraphrase of `event`: the actor's name and
/// the location's name as written in the template sentence.
pub fn guard_tokens(event: &Event, env: EnvironmentTag) -> Vec<String> {
    let mut out = vec![event.actor.to_string()];
    let l = &event.location;
    let start = *l == env.start_vertex();
    match env {
        EnvironmentTag::HallwaysDoors if start => out.push("hallway".to_owned()),
        EnvironmentTag::HallwaysDoors => out.push(l.to_string()),
        EnvironmentTag::HolesField if start => out.push("field".to_owned()),
        EnvironmentTag::HolesField => out.push(answer_surface(env, l)),
        EnvironmentTag::ConferenceCall if start => {}
        EnvironmentTag::ConferenceCall => out.push(callee_words(l)),
    }
    out
}

/// The question text for `q` in `env`.
pub fn render_question(q: &Question, env: EnvironmentTag, kind: EntityKind) -> Result<String, RenderError> {
    q.check_roles()?;
    let name = |c: &CharacterId| entity_name(kind, c);
    let s1 = name(&q.roles.s1);
    let t = name(&q.roles.target);
    let phone = env == EnvironmentTag::ConferenceCall;
    Ok(match q.kind {
        QuestionKind::Tom1 if phone => format!("Who does {s1} think {t} is on the phone with?"),
        QuestionKind::Tom1 => format!("Where does {s1} think {t} is?"),
        QuestionKind::Tom2 => {
            let s2 = name(q.s2()?);
            if phone {
                format!("Who does {s1} think {s2} thinks {t} is on the phone with?")
            } else {
                format!("Where does {s1} think {s2} thinks {t} is?")
            }
        }
        QuestionKind::WmHuman | QuestionKind::WmInanimate => {
            let who = match &q.roles.s2 {
                Some(s2) => format!("{s1} and {} were", name(s2)),
                None => format!("{s1} was"),
            };
            let place = match env {
                EnvironmentTag::HallwaysDoors => "in the same room as",
                EnvironmentTag::HolesField => "in the same place as",
                EnvironmentTag::ConferenceCall => "on the same call as",
            };
            let tail = match (q.kind, phone) {
                (QuestionKind::WmHuman, true) => format!("who did {t} call next?"),
                (QuestionKind::WmHuman, false) => format!("where did {t} go?"),
                (_, true) => format!("which call was {t} moved to?"),
                (_, false) => format!("where was {t} moved to?"),
            };
            capitalize(&format!("When {who} {place} {t}, {tail}"))
        }
    })
}
