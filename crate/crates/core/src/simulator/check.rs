use std::fmt;

use serde::{Deserialize, Serialize};

use super::Story;
use crate::storyboard::{EventSpec, Storyboard};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    LengthMismatch,
    TimestepMismatch,
    UnknownCharacter,
    UnknownLocation,
    IllegalMove,
    StationaryMove,
    WrongAction,
    PinnedUnmet,
    CrossPathsUnmet,
    ProtectedMoved,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::LengthMismatch => "LENGTH_MISMATCH",
            ViolationCode::TimestepMismatch => "TIMESTEP_MISMATCH",
            ViolationCode::UnknownCharacter => "UNKNOWN_CHARACTER",
            ViolationCode::UnknownLocation => "UNKNOWN_LOCATION",
            ViolationCode::IllegalMove => "ILLEGAL_MOVE",
            ViolationCode::StationaryMove => "STATIONARY_MOVE",
            ViolationCode::WrongAction => "WRONG_ACTION",
            ViolationCode::PinnedUnmet => "PINNED_UNMET",
            ViolationCode::CrossPathsUnmet => "CROSS_PATHS_UNMET",
            ViolationCode::ProtectedMoved => "PROTECTED_MOVED",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationItem {
    pub code: ViolationCode,
    pub timestep: u32,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationList {
    pub items: Vec<ViolationItem>,
}

impl ViolationList {
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn codes(&self) -> Vec<(ViolationCode, u32)> {
        self.items.iter().map(|v| (v.code, v.timestep)).collect()
    }

    fn push(&mut self, code: ViolationCode, timestep: u32, detail: String) {
        self.items.push(ViolationItem {
            code,
            timestep,
            detail,
        });
    }
}

impl fmt::Display for ViolationList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.items.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{} at t={}: {}", v.code, v.timestep, v.detail)?;
        }
        Ok(())
    }
}

/// Checks `story` against `sb` from scratch. The story's own board is not
/// consulted, so a story can be checked against any board.
pub fn check_constraints(story: &Story, sb: &Storyboard) -> ViolationList {
    use ViolationCode::*;
    let mut out = ViolationList::default();
    let events = story.events();
    if events.len() != sb.horizon as usize {
        out.push(
            LengthMismatch,
            events.len().min(sb.horizon as usize) as u32 + 1,
            format!("{} events, horizon {}", events.len(), sb.horizon),
        );
    }

    // replay on our own position table
    let mut pos = vec![sb.graph.start.clone(); sb.characters.len()];
    let mut table = vec![pos.clone()];
    let mut movers: Vec<Option<usize>> = vec![None];
    for (i, e) in events.iter().enumerate() {
        let t = i as u32 + 1;
        if e.t != t {
            out.push(TimestepMismatch, t, format!("event labelled t={}", e.t));
        }
        let Some(ci) = sb.character_index(&e.actor) else {
            out.push(UnknownCharacter, t, format!("`{}`", e.actor));
            table.push(pos.clone());
            movers.push(None);
            continue;
        };
        if !sb.graph.contains(&e.location) {
            out.push(UnknownLocation, t, format!("`{}`", e.location));
        } else if pos[ci] == e.location {
            out.push(StationaryMove, t, format!("`{}` already at `{}`", e.actor, e.location));
        } else if !sb.graph.has_edge(&pos[ci], &e.location) {
            out.push(
                IllegalMove,
                t,
                format!("no edge `{}` -> `{}`", pos[ci], e.location),
            );
        }
        let expected = sb.environment.action_for(sb.entity_kind, &e.location);
        if e.action != expected {
            out.push(WrongAction, t, format!("`{}`, expected `{}`", e.action, expected));
        }
        pos[ci] = e.location.clone();
        table.push(pos.clone());
        movers.push(Some(ci));
    }

    for spec in &sb.event_specs {
        match spec {
            EventSpec::MoveAt {
                character,
                location,
                t,
            } => {
                let ok = events
                    .get(*t as usize - 1)
                    .is_some_and(|e| &e.actor == character && &e.location == location);
                if !ok {
                    out.push(
                        PinnedUnmet,
                        *t,
                        format!("expected `{character}` to move to `{location}`"),
                    );
                }
            }
            EventSpec::CrossPaths {
                characters,
                location,
                t,
            } => {
                let row = table.get(*t as usize);
                let absent: Vec<String> = characters
                    .iter()
                    .filter(|c| {
                        let ci = sb.character_index(c);
                        !matches!((row, ci), (Some(row), Some(ci)) if &row[ci] == location)
                    })
                    .map(ToString::to_string)
                    .collect();
                if !absent.is_empty() {
                    out.push(
                        CrossPathsUnmet,
                        *t,
                        format!("not at `{location}`: {}", absent.join(", ")),
                    );
                }
            }
            EventSpec::ExclusiveRandom {
                protected,
                t_start,
                t_end,
            } => {
                let hit = (*t_start..=*t_end).find_map(|t| {
                    let ci = (*movers.get(t as usize)?)?;
                    protected
                        .contains(&sb.characters[ci])
                        .then(|| (t, sb.characters[ci].clone()))
                });
                if let Some((t, c)) = hit {
                    out.push(ProtectedMoved, t, format!("`{c}` moved inside its window"));
                }
            }
        }
    }
    out.items.sort_by_key(|v| v.timestep);
    out
}

/// Drops exclusive windows that protect every character (no filler could
/// ever run there), pulling later timesteps back and shortening the
/// horizon accordingly.
pub fn compress_unfillable_windows(sb: &Storyboard) -> Storyboard {
    let full: Vec<(u32, u32)> = sb
        .event_specs
        .iter()
        .filter_map(|spec| match spec {
            EventSpec::ExclusiveRandom {
                protected,
                t_start,
                t_end,
            } if sb.characters.iter().all(|c| protected.contains(c)) => Some((*t_start, *t_end)),
            _ => None,
        })
        .collect();
    let removed_before = |t: u32| -> u32 {
        full.iter()
            .map(|&(a, b)| if t > b { b - a + 1 } else { 0 })
            .sum()
    };
    let event_specs = sb
        .event_specs
        .iter()
        .filter_map(|spec| match spec {
            EventSpec::MoveAt {
                character,
                location,
                t,
            } => Some(EventSpec::MoveAt {
                character: character.clone(),
                location: location.clone(),
                t: t - removed_before(*t),
            }),
            EventSpec::CrossPaths {
                characters,
                location,
                t,
            } => Some(EventSpec::CrossPaths {
                characters: characters.clone(),
                location: location.clone(),
                t: t - removed_before(*t),
            }),
            EventSpec::ExclusiveRandom {
                protected,
                t_start,
                t_end,
            } => (!full.contains(&(*t_start, *t_end))).then(|| EventSpec::ExclusiveRandom {
                protected: protected.clone(),
                t_start: t_start - removed_before(*t_start),
                t_end: t_end - removed_before(*t_end),
            }),
        })
        .collect();
    Storyboard {
        event_specs,
        horizon: sb.horizon - removed_before(sb.horizon + 1),
        ..sb.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{simulate, Event};
    use crate::storyboard::{first_order_board, validate_storyboard, SuiteParams};

    #[test]
    fn generated_stories_are_clean() {
        let (b, ..) = first_order_board(&SuiteParams::mislead(1, 20), 5).unwrap();
        let story = simulate(&b, 5).unwrap();
        assert!(check_constraints(&story, &b).is_empty());
    }

    #[test]
    fn protected_move_is_reported_at_its_timestep() {
        let (b, roles, _) = first_order_board(&SuiteParams::mislead(1, 20), 5).unwrap();
        let story = simulate(&b, 5).unwrap();
        let mut events = story.events().to_vec();
        // t=15 is inside the 12..=31 window; swap in a move of T elsewhere
        let here = story.position(14, &roles.target).unwrap().clone();
        let dest = b.graph.vertices.iter().find(|v| **v != here).unwrap().clone();
        events[14] = Event {
            t: 15,
            actor: roles.target.clone(),
            action: b.environment.action_for(b.entity_kind, &dest),
            location: dest,
        };
        let v = check_constraints(&story.with_events(events).unwrap(), &b);
        assert!(v.codes().contains(&(ViolationCode::ProtectedMoved, 15)));
    }

    #[test]
    fn short_story_has_length_mismatch() {
        let (b, ..) = first_order_board(&SuiteParams::mislead(1, 20), 5).unwrap();
        let story = simulate(&b, 5).unwrap();
        let cut = story.with_events(story.events()[..50].to_vec()).unwrap();
        let v = check_constraints(&cut, &b);
        assert_eq!(v.items[0].code, ViolationCode::LengthMismatch);
    }

    #[test]
    fn two_character_board_compresses_to_the_pattern() {
        let p = SuiteParams::mislead(1, 30).with_characters(2);
        let (b, ..) = first_order_board(&p, 2).unwrap();
        let c = compress_unfillable_windows(&b);
        assert_eq!(c.horizon, 12);
        assert_eq!(c.pinned_times(), vec![10, 11, 12]);
        assert!(validate_storyboard(&c).is_valid());
        let story = simulate(&c, 2).unwrap();
        assert!(check_constraints(&story, &c).is_empty());
        // nothing to drop when others can fill
        let (b8, ..) = first_order_board(&SuiteParams::mislead(1, 30), 2).unwrap();
        assert_eq!(compress_unfillable_windows(&b8), b8);
    }
}
