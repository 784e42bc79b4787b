use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{guard_tokens, render_event, RenderError};
use crate::simulator::Story;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TransformError {
    /// The transformer cannot be used at all (missing backend or key).
    #[error("transformer unavailable: {0}")]
    Unavailable(String),
    /// This attempt failed; another attempt may succeed.
    #[error("transform failed: {0}")]
    Failed(String),
}

/// Rewrites one sentence. `attempt` counts from 0 for each sentence.
pub trait TextTransformer: Send + Sync {
    fn transform(&self, sentence: &str, temperature: f64, attempt: u32) -> Result<String, TransformError>;
}

/// Returns every sentence unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl TextTransformer for Identity {
    fn transform(&self, sentence: &str, _temperature: f64, _attempt: u32) -> Result<String, TransformError> {
        Ok(sentence.to_owned())
    }
}

/// Canned outputs keyed by source sentence; attempt `k` gets the `k`-th
/// output (the last one repeats). Unknown sentences pass through.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Replay {
    pub outputs: HashMap<String, Vec<String>>,
}

impl Replay {
    pub fn new(outputs: HashMap<String, Vec<String>>) -> Self {
        Self { outputs }
    }
}

impl TextTransformer for Replay {
    fn transform(&self, sentence: &str, _temperature: f64, attempt: u32) -> Result<String, TransformError> {
        Ok(match self.outputs.get(sentence) {
            Some(outs) if !outs.is_empty() => outs[(attempt as usize).min(outs.len() - 1)].clone(),
            _ => sentence.to_owned(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParaphraseOptions {
    pub temperature: f64,
    pub max_attempts: u32,
    /// Keep the template sentence when every attempt fails the guard.
    pub fallback: bool,
    pub max_in_flight: usize,
}

impl Default for ParaphraseOptions {
    fn default() -> Self {
        Self {
            temperature: 1.3,
            max_attempts: 3,
            fallback: true,
            max_in_flight: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParaphrasedLine {
    pub t: u32,
    pub text: String,
    pub attempts: u32,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParaphrasedStory {
    pub lines: Vec<ParaphrasedLine>,
}

impl ParaphrasedStory {
    pub fn text(&self) -> String {
        self.lines.iter().map(|l| l.text.as_str()).collect::<Vec<_>>().join("\n")
    }

    pub fn fallback_count(&self) -> usize {
        self.lines.iter().filter(|l| l.fallback).count()
    }

    pub fn fallback_timesteps(&self) -> Vec<u32> {
        self.lines.iter().filter(|l| l.fallback).map(|l| l.t).collect()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParaphraseError {
    #[error("{0}")]
    TransformerUnavailable(String),
    #[error("paraphrase of t={t} lost a required token after {attempts} attempts")]
    GuardExhausted { t: u32, attempts: u32 },
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("could not start paraphrase workers: {0}")]
    Pool(String),
}

/// Paraphrases each event sentence on its own. A paraphrase is kept only if
/// it still contains the actor and location tokens verbatim; otherwise it
/// is retried and finally replaced by the template sentence.
pub fn paraphrase_story(
    story: &Story,
    tx: &dyn TextTransformer,
    opts: &ParaphraseOptions,
) -> Result<ParaphrasedStory, ParaphraseError> {
    let board = story.board();
    let (env, kind) = (board.environment, board.entity_kind);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.max_in_flight.max(1))
        .build()
        .map_err(|e| ParaphraseError::Pool(e.to_string()))?;
    let lines = pool.install(|| {
        story
            .events()
            .par_iter()
            .map(|e| {
                let source = render_event(e, env, kind)?;
                let tokens = guard_tokens(e, env);
                let attempts = opts.max_attempts.max(1);
                for attempt in 0..attempts {
                    let out = match tx.transform(&source, opts.temperature, attempt) {
                        Ok(out) => out,
                        Err(TransformError::Unavailable(msg)) => {
                            return Err(ParaphraseError::TransformerUnavailable(msg))
                        }
                        Err(TransformError::Failed(_)) => continue,
                    };
                    let out = out.trim();
                    if !out.is_empty() && !out.contains('\n') && tokens.iter().all(|tok| out.contains(tok.as_str())) {
                        return Ok(ParaphrasedLine {
                            t: e.t,
                            text: out.to_owned(),
                            attempts: attempt + 1,
                            fallback: false,
                        });
                    }
                }
                if !opts.fallback {
                    return Err(ParaphraseError::GuardExhausted { t: e.t, attempts });
                }
                Ok(ParaphrasedLine {
                    t: e.t,
                    text: source,
                    attempts,
                    fallback: true,
                })
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(ParaphrasedStory { lines })
}
