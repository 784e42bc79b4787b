//! Scoring model responses: answer extraction, the error taxonomy and
//! accuracy tables with confidence intervals.

mod aggregate;
mod extract;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use aggregate::{
    aggregate, normal_interval, report_to_string, wilson_interval, write_report, AggregateRow, Interval,
    LabelCounts, Z95,
};
pub use extract::{extract_answer, Mention, RefusalList};

use crate::render::answer_surfaces;
use crate::suites::{Dataset, QARecord};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("response for `{0}` does not match any record")]
    RecordMismatch(String),
    #[error("more than one response for `{0}`")]
    DuplicateResponse(String),
    #[error("unknown group-by field `{0}`")]
    UnknownField(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Completed,
    LengthCapped,
    TransportError,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResponse {
    pub record_id: String,
    pub raw_text: String,
    pub finish_reason: FinishReason,
    pub latency_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Usage>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, Value>,
}

impl ModelResponse {
    pub fn new(record_id: impl Into<String>, raw_text: impl Into<String>, finish_reason: FinishReason) -> Self {
        Self {
            record_id: record_id.into(),
            raw_text: raw_text.into(),
            finish_reason,
            latency_ms: 0,
            model: None,
            usage: None,
            meta: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Correct,
    FirstCommonLocation,
    PromptRefusal,
    InsufficientContext,
    OtherWrongLocation,
}

impl Label {
    pub const ALL: [Label; 5] = [
        Label::Correct,
        Label::FirstCommonLocation,
        Label::PromptRefusal,
        Label::InsufficientContext,
        Label::OtherWrongLocation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Correct => "correct",
            Label::FirstCommonLocation => "first_common_location",
            Label::PromptRefusal => "prompt_refusal",
            Label::InsufficientContext => "insufficient_context",
            Label::OtherWrongLocation => "other_wrong_location",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoredResult {
    pub record_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub extracted: Option<String>,
    pub label: Label,
    /// A refusal phrase appeared next to an extractable location.
    #[serde(default)]
    pub hedged: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ScoreOptions {
    pub mention: Mention,
    pub refusals: RefusalList,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scored {
    /// Ordered by record id.
    pub results: Vec<ScoredResult>,
    /// Records that received no response, in dataset order.
    pub missing: Vec<String>,
}

/// Every answer a record's story could have.
pub fn known_locations(record: &QARecord) -> Vec<String> {
    let env = record.environment;
    let mut out = answer_surfaces(env, &env.vertices(record.num_locations));
    for extra in [
        Some(&record.ground_truth),
        record.distractors.first_common_location.as_ref(),
        Some(&record.distractors.true_final_location),
    ]
    .into_iter()
    .flatten()
    {
        if !out.contains(extra) {
            out.push(extra.clone());
        }
    }
    out
}

/// Labels one response.
pub fn classify(record: &QARecord, resp: &ModelResponse, opts: &ScoreOptions) -> Result<ScoredResult, EvalError> {
    if record.id != resp.record_id {
        return Err(EvalError::RecordMismatch(resp.record_id.clone()));
    }
    let extracted = extract_answer(&resp.raw_text, &known_locations(record), opts.mention);
    let refused = opts.refusals.matches(&resp.raw_text);
    let label = match &extracted {
        None if resp.finish_reason == FinishReason::LengthCapped => Label::InsufficientContext,
        None => Label::PromptRefusal,
        Some(_) if refused => Label::PromptRefusal,
        Some(x) if *x == record.ground_truth => Label::Correct,
        Some(x) if Some(x) == record.distractors.first_common_location.as_ref() => Label::FirstCommonLocation,
        Some(_) => Label::OtherWrongLocation,
    };
    Ok(ScoredResult {
        record_id: resp.record_id.clone(),
        model: resp.model.clone(),
        hedged: refused && extracted.is_some(),
        extracted,
        label,
    })
}

/// Scores every response against its record.
pub fn score_dataset(ds: &Dataset, responses: &[ModelResponse], opts: &ScoreOptions) -> Result<Scored, EvalError> {
    let by_id: HashMap<&str, &QARecord> = ds.records.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut seen = HashSet::new();
    for resp in responses {
        if !by_id.contains_key(resp.record_id.as_str()) {
            return Err(EvalError::RecordMismatch(resp.record_id.clone()));
        }
        if !seen.insert(resp.record_id.as_str()) {
            return Err(EvalError::DuplicateResponse(resp.record_id.clone()));
        }
    }
    let mut results = responses
        .par_iter()
        .map(|resp| classify(by_id[resp.record_id.as_str()], resp, opts))
        .collect::<Result<Vec<_>, _>>()?;
    results.sort_by(|a, b| a.record_id.cmp(&b.record_id));
    let missing = ds
        .records
        .iter()
        .filter(|r| !seen.contains(r.id.as_str()))
        .map(|r| r.id.clone())
        .collect();
    Ok(Scored { results, missing })
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>, EvalError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| EvalError::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|x| serde_json::to_string(x).expect("serializes") + "\n")
        .collect()
}

pub fn parse_responses(text: &str) -> Result<Vec<ModelResponse>, EvalError> {
    read_jsonl(text)
}

pub fn read_responses(path: &Path) -> Result<Vec<ModelResponse>, EvalError> {
    parse_responses(&fs::read_to_string(path)?)
}

pub fn responses_to_string(responses: &[ModelResponse]) -> String {
    to_jsonl(responses)
}

pub fn write_responses(responses: &[ModelResponse], path: &Path) -> Result<(), EvalError> {
    fs::write(path, responses_to_string(responses))?;
    Ok(())
}

/// Appends one response as a line and flushes it to disk.
pub fn append_response(file: &mut fs::File, resp: &ModelResponse) -> Result<(), EvalError> {
    let mut line = serde_json::to_string(resp).expect("serializes");
    line.push('\n');
    file.write_all(line.as_bytes())?;
    file.flush()?;
    Ok(())
}

pub fn read_scored(path: &Path) -> Result<Vec<ScoredResult>, EvalError> {
    read_jsonl(&fs::read_to_string(path)?)
}

pub fn scored_to_string(results: &[ScoredResult]) -> String {
    to_jsonl(results)
}

pub fn write_scored(results: &[ScoredResult], path: &Path) -> Result<(), EvalError> {
    fs::write(path, scored_to_string(results))?;
    Ok(())
}
