//! Board files: a TOML document with top-level keys `characters`, `actions`,
//! `horizon`, `environment`, `entity_kind`, a `[graph]` table
//! (`vertices`, `edges`, `start`) and an `[[events]]` array whose entries
//! carry a `kind` of `move_at`, `cross_paths` or `exclusive_random`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    validate_storyboard, ActionId, CharacterId, EntityKind, EnvironmentTag, EventSpec,
    LocationGraph, Storyboard, ValidationReport,
};

#[derive(Debug, Error)]
pub enum BoardFileError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{}", parse_message(*.line, .field.as_deref(), .message))]
    Parse {
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },
    #[error("board is invalid:\n{0}")]
    Validation(ValidationReport),
}

fn parse_message(line: Option<usize>, field: Option<&str>, message: &str) -> String {
    let mut out = String::from("parse error");
    if let Some(line) = line {
        out.push_str(&format!(" at line {line}"));
    }
    if let Some(field) = field {
        out.push_str(&format!(" in field `{field}`"));
    }
    out.push_str(": ");
    out.push_str(message);
    out
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoardDoc {
    characters: Vec<CharacterId>,
    actions: Vec<ActionId>,
    horizon: u32,
    environment: EnvironmentTag,
    entity_kind: EntityKind,
    graph: LocationGraph,
    #[serde(default)]
    events: Vec<EventSpec>,
}

pub fn board_to_string(sb: &Storyboard) -> String {
    let doc = BoardDoc {
        characters: sb.characters.clone(),
        actions: sb.actions.clone(),
        horizon: sb.horizon,
        environment: sb.environment,
        entity_kind: sb.entity_kind,
        graph: sb.graph.clone(),
        events: sb.event_specs.clone(),
    };
    toml::to_string(&doc).expect("board documents always serialize")
}

pub fn write_board(sb: &Storyboard, path: impl AsRef<Path>) -> Result<(), BoardFileError> {
    fs::write(path, board_to_string(sb))?;
    Ok(())
}

/// Parses a board document without validating it.
pub fn parse_board(text: &str) -> Result<Storyboard, BoardFileError> {
    let doc: BoardDoc = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|span| text[..span.start].matches('\n').count() + 1);
        let field = line.and_then(|l| key_on_line(text, l));
        BoardFileError::Parse {
            line,
            field,
            message: e.message().to_owned(),
        }
    })?;
    Ok(Storyboard {
        characters: doc.characters,
        actions: doc.actions,
        graph: doc.graph,
        event_specs: doc.events,
        horizon: doc.horizon,
        environment: doc.environment,
        entity_kind: doc.entity_kind,
    })
}

fn key_on_line(text: &str, line: usize) -> Option<String> {
    let raw = text.lines().nth(line - 1)?;
    let (key, _) = raw.split_once('=')?;
    let key = key.trim();
    (!key.is_empty()).then(|| key.to_owned())
}

/// Reads, parses and validates a board file.
pub fn load_board(path: impl AsRef<Path>) -> Result<Storyboard, BoardFileError> {
    let text = fs::read_to_string(path)?;
    let board = parse_board(&text)?;
    let report = validate_storyboard(&board);
    if report.is_valid() {
        Ok(board)
    } else {
        Err(BoardFileError::Validation(report))
    }
}
