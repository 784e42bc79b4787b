//! Experiment datasets: the mislead-distance sweeps, the ToM / world-modeling
//! triad, the character-count sweep and the Sally-Anne replica.
//!
//! A dataset file is JSON Lines: a manifest object on the first line, then
//! one [`QARecord`] per line.

mod check;
mod generate;
mod io;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use check::{structural_checks, validate_record, RecordReport};
pub use generate::{
    add_paraphrased, gen_character_suite, gen_mislead_suite, gen_sally_anne, gen_tom_wm_triad,
    rebuild_board, rebuild_story, CharacterConfig, MisleadConfig, SallyAnneConfig, TriadConfig,
};
pub use io::{dataset_to_string, parse_dataset, read_dataset, write_dataset};

use crate::epistemics::{Question, QuestionKind};
use crate::render::{build_prompt, RenderError};
use crate::seed::Seed;
use crate::simulator::Event;
use crate::storyboard::{EnvironmentTag, UnknownTag};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("manifest mismatch: {0}")]
    ManifestMismatch(String),
    #[error("generation failed for {id}: {message}")]
    Generation { id: String, message: String },
    #[error(transparent)]
    Render(#[from] RenderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Mislead,
    Triad,
    Characters,
    SallyAnne,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Mislead, Suite::Triad, Suite::Characters, Suite::SallyAnne];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Mislead => "mislead",
            Suite::Triad => "triad",
            Suite::Characters => "characters",
            Suite::SallyAnne => "sally_anne",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = UnknownTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        Suite::ALL
            .into_iter()
            .find(|x| x.as_str() == norm)
            .ok_or_else(|| UnknownTag {
                kind: "suite",
                value: s.to_owned(),
            })
    }
}

/// Wrong answers worth telling apart when scoring.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Distractors {
    /// Where the question's characters first came together after the start.
    pub first_common_location: Option<String>,
    /// Where the target really is at the end of the story.
    pub true_final_location: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QARecord {
    pub id: String,
    pub environment: EnvironmentTag,
    pub question: Question,
    pub order: u8,
    pub mislead_distance: u32,
    pub seed: Seed,
    pub num_characters: usize,
    pub num_locations: usize,
    pub horizon: u32,
    pub events: Vec<Event>,
    pub story_text: String,
    pub question_text: String,
    pub prompt_template_id: u32,
    pub ground_truth: String,
    pub distractors: Distractors,
    pub paraphrased: bool,
    #[serde(default)]
    pub meta: BTreeMap<String, Value>,
}

impl QARecord {
    pub fn prompt(&self) -> Result<String, RenderError> {
        build_prompt(self.prompt_template_id, &self.story_text, &self.question_text)
    }

    pub fn suite(&self) -> Option<Suite> {
        self.meta.get("suite")?.as_str()?.parse().ok()
    }

    pub fn cell(&self) -> GridCell {
        GridCell {
            kind: self.question.kind,
            order: self.order,
            mislead_distance: self.mislead_distance,
            num_characters: self.num_characters,
            environment: self.environment,
            paraphrased: self.paraphrased,
        }
    }

    /// A field by name, for grouping: record fields first, then `meta`.
    pub fn field(&self, name: &str) -> Option<String> {
        Some(match name {
            "id" => self.id.clone(),
            "kind" | "question_kind" => self.question.kind.to_string(),
            "environment" => self.environment.to_string(),
            "order" => self.order.to_string(),
            "mislead_distance" => self.mislead_distance.to_string(),
            "num_characters" | "character_count" => self.num_characters.to_string(),
            "num_locations" => self.num_locations.to_string(),
            "horizon" => self.horizon.to_string(),
            "prompt_template_id" => self.prompt_template_id.to_string(),
            "paraphrased" => self.paraphrased.to_string(),
            other => match self.meta.get(other)? {
                Value::String(s) => s.clone(),
                v => v.to_string(),
            },
        })
    }
}

/// One point of a dataset's parameter grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridCell {
    pub kind: QuestionKind,
    pub order: u8,
    pub mislead_distance: u32,
    pub num_characters: usize,
    pub environment: EnvironmentTag,
    pub paraphrased: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub suite: Suite,
    pub base_seed: Seed,
    pub engine_version: String,
    pub trials: usize,
    pub grid: Vec<GridCell>,
    pub record_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub manifest: Manifest,
    pub records: Vec<QARecord>,
}

impl Dataset {
    pub fn get(&self, id: &str) -> Option<&QARecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Checks that the manifest describes the records exactly.
    pub fn check_manifest(&self) -> Result<(), SuiteError> {
        let m = &self.manifest;
        let bad = |msg: String| Err(SuiteError::ManifestMismatch(msg));
        if m.record_count != self.records.len() {
            return bad(format!(
                "manifest lists {} records, found {}",
                m.record_count,
                self.records.len()
            ));
        }
        let mut ids = std::collections::HashSet::new();
        let mut per_cell: BTreeMap<&GridCell, usize> = m.grid.iter().map(|c| (c, 0)).collect();
        if per_cell.len() != m.grid.len() {
            return bad("grid lists a cell twice".into());
        }
        for r in &self.records {
            if !ids.insert(r.id.as_str()) {
                return bad(format!("duplicate record id `{}`", r.id));
            }
            let cell = r.cell();
            match per_cell.get_mut(&cell) {
                Some(n) => *n += 1,
                None => return bad(format!("record `{}` falls outside the grid", r.id)),
            }
        }
        if let Some((cell, n)) = per_cell.iter().find(|(_, &n)| n != m.trials) {
            return bad(format!("grid cell {cell:?} has {n} records, expected {}", m.trials));
        }
        Ok(())
    }
}
