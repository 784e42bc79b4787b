//! Getting responses: a chat-completion client for hosted models and the
//! built-in bots used for calibration.
//!
//! Requests are a single user message holding the full prompt. Two wire
//! shapes are supported: `openai_chat` (`POST {base_url}/chat/completions`,
//! bearer auth, reply text at `choices[0].message.content`, stop reason
//! `choices[0].finish_reason`) and `anthropic_messages`
//! (`POST {base_url}/messages`, `x-api-key` header, reply text from the
//! `content` text blocks, stop reason `stop_reason`).

mod bots;
mod paraphrase;
mod transport;

use std::collections::{HashMap, HashSet};
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bots::{BotKind, REFUSAL_TEXT, TRUNCATED_TEXT};
pub use paraphrase::{ChatTransformer, PARAPHRASE_INSTRUCTION};
pub use transport::{
    parse_reply, request_body, ChatReply, ChatRequest, HttpTransport, ReplayTransport, Transport, TransportFailure,
};

use crate::eval::{append_response, parse_responses, write_responses, EvalError, FinishReason, ModelResponse, Usage};
use crate::suites::Dataset;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("API key variable `{var}` is not set")]
    MissingKey { var: String },
    #[error("provider rejected the credentials: {0}")]
    Auth(String),
    #[error("request failed after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed provider reply: {0}")]
    MalformedReply(String),
    #[error("invalid endpoint config: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Responses(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    #[default]
    OpenaiChat,
    AnthropicMessages,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model_name: String,
    /// Environment variable holding the API key; none for keyless servers.
    pub api_key_env: Option<String>,
    pub protocol: Protocol,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub request_timeout_ms: u64,
    pub max_retries: u32,
    pub max_in_flight: usize,
    /// First retry waits this long; each further retry doubles it.
    pub backoff_base_ms: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model_name: String::new(),
            api_key_env: Some("OPENAI_API_KEY".into()),
            protocol: Protocol::OpenaiChat,
            temperature: 0.0,
            max_output_tokens: 4096,
            request_timeout_ms: 120_000,
            max_retries: 5,
            max_in_flight: 4,
            backoff_base_ms: 500,
        }
    }
}

impl EndpointConfig {
    pub fn from_toml(text: &str) -> Result<Self, GatewayError> {
        let cfg: EndpointConfig = toml::from_str(text).map_err(|e| GatewayError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn check(&self) -> Result<(), GatewayError> {
        let bad = |m: &str| Err(GatewayError::Config(m.to_owned()));
        if self.max_in_flight < 1 {
            return bad("max_in_flight must be at least 1");
        }
        if !(self.temperature >= 0.0) {
            return bad("temperature must be non-negative");
        }
        if self.model_name.is_empty() {
            return bad("model_name is empty");
        }
        if self.base_url.is_empty() {
            return bad("base_url is empty");
        }
        Ok(())
    }

    /// Reads the API key from the configured variable.
    pub fn api_key(&self) -> Result<Option<String>, GatewayError> {
        match &self.api_key_env {
            None => Ok(None),
            Some(var) => match std::env::var(var) {
                Ok(k) if !k.is_empty() => Ok(Some(k)),
                _ => Err(GatewayError::MissingKey { var: var.clone() }),
            },
        }
    }
}

/// A hosted model behind a transport, with its key already resolved.
pub struct Client {
    pub cfg: EndpointConfig,
    transport: Arc<dyn Transport>,
    api_key: Option<String>,
    /// Replaces real sleeping between retries (tests).
    pub sleep: fn(Duration),
}

/// Result of one completed request.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub raw_text: String,
    pub finish_reason: FinishReason,
    pub latency_ms: u64,
    pub usage: Option<Usage>,
    pub retries: u32,
}

impl Client {
    pub fn new(cfg: EndpointConfig, transport: Arc<dyn Transport>) -> Result<Self, GatewayError> {
        cfg.check()?;
        let api_key = cfg.api_key()?;
        Ok(Self {
            cfg,
            transport,
            api_key,
            sleep: thread::sleep,
        })
    }

    /// A client over the HTTP transport described by `cfg`.
    pub fn http(cfg: EndpointConfig) -> Result<Self, GatewayError> {
        let transport = HttpTransport::new(&cfg).map_err(|e| GatewayError::Config(format!("{e:?}")))?;
        Self::new(cfg, Arc::new(transport))
    }

    pub fn complete(&self, prompt: &str) -> Result<Completion, GatewayError> {
        self.complete_with(prompt, self.cfg.temperature)
    }

    /// Sends one request, retrying transient failures with exponential
    /// backoff up to `max_retries` extra attempts.
    pub fn complete_with(&self, prompt: &str, temperature: f64) -> Result<Completion, GatewayError> {
        let req = ChatRequest {
            model: self.cfg.model_name.clone(),
            prompt: prompt.to_owned(),
            temperature,
            max_output_tokens: self.cfg.max_output_tokens,
        };
        let start = Instant::now();
        let mut retries = 0;
        loop {
            match self.transport.send(&req, self.api_key.as_deref()) {
                Ok(reply) => {
                    let finish_reason = if self.is_length_capped(&reply) {
                        FinishReason::LengthCapped
                    } else {
                        FinishReason::Completed
                    };
                    return Ok(Completion {
                        raw_text: reply.text,
                        finish_reason,
                        latency_ms: start.elapsed().as_millis() as u64,
                        usage: reply.usage,
                        retries,
                    });
                }
                Err(TransportFailure::Transient(msg)) => {
                    if retries >= self.cfg.max_retries {
                        return Err(GatewayError::Transport {
                            attempts: retries + 1,
                            message: msg,
                        });
                    }
                    let wait = self.cfg.backoff_base_ms.saturating_mul(1 << retries.min(16));
                    (self.sleep)(Duration::from_millis(wait));
                    retries += 1;
                }
                Err(TransportFailure::Auth(msg)) => return Err(GatewayError::Auth(msg)),
                Err(TransportFailure::Fatal(msg)) => {
                    return Err(GatewayError::Transport {
                        attempts: retries + 1,
                        message: msg,
                    })
                }
                Err(TransportFailure::Malformed(msg)) => return Err(GatewayError::MalformedReply(msg)),
            }
        }
    }

    /// The provider's token-limit stop reason, or failing that a reply that
    /// used the whole budget and stops without closing punctuation.
    fn is_length_capped(&self, reply: &ChatReply) -> bool {
        match reply.stop_reason.as_deref() {
            Some("length" | "max_tokens" | "max_output_tokens") => true,
            Some(_) => false,
            None => {
                let used = reply.usage.and_then(|u| u.completion_tokens).unwrap_or(0);
                let closed = reply
                    .text
                    .trim_end()
                    .ends_with(['.', '!', '?', '"', '\'', ')', '*', '`']);
                used >= u64::from(self.cfg.max_output_tokens) && !closed
            }
        }
    }
}

/// Where responses come from.
pub enum Responder {
    Bot(BotKind),
    Model(Client),
}

impl Responder {
    pub fn name(&self) -> String {
        match self {
            Responder::Bot(b) => b.model_name(),
            Responder::Model(c) => c.cfg.model_name.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub concurrency: usize,
    /// Append-only log of finished responses; rewritten sorted at the end.
    pub out: Option<PathBuf>,
    /// Keep responses already in `out` and skip their records.
    pub resume: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            concurrency: 4,
            out: None,
            resume: false,
        }
    }
}

/// Reads a log that may end in a half-written line.
fn read_log(path: &Path) -> Result<Vec<ModelResponse>, GatewayError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    Ok(parse_responses(complete)?)
}

/// Answers every record of `ds`. Failed requests become `transport_error`
/// responses; only a credential failure stops the run.
pub fn run_dataset(responder: &Responder, ds: &Dataset, opts: &RunOptions) -> Result<Vec<ModelResponse>, GatewayError> {
    let ids: HashSet<&str> = ds.records.iter().map(|r| r.id.as_str()).collect();
    let mut done: HashMap<String, ModelResponse> = HashMap::new();
    if let (true, Some(path)) = (opts.resume, &opts.out) {
        for r in read_log(path)? {
            if ids.contains(r.record_id.as_str()) {
                done.insert(r.record_id.clone(), r);
            }
        }
    }
    let log = match &opts.out {
        Some(path) => {
            // Rewrite what is kept so the log ends on a line boundary.
            let mut kept: Vec<ModelResponse> = done.values().cloned().collect();
            kept.sort_by(|a, b| a.record_id.cmp(&b.record_id));
            write_responses(&kept, path)?;
            Some(Mutex::new(OpenOptions::new().append(true).open(path)?))
        }
        None => None,
    };
    let todo: Vec<_> = ds.records.iter().filter(|r| !done.contains_key(&r.id)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.concurrency.max(1))
        .build()
        .map_err(|e| GatewayError::Config(e.to_string()))?;
    let model = responder.name();
    let fresh: Vec<ModelResponse> = pool.install(|| {
        todo.par_iter()
            .map(|record| {
                let resp = match responder {
                    Responder::Bot(bot) => bot.respond(record),
                    Responder::Model(client) => {
                        let prompt = record.prompt().map_err(|e| GatewayError::Config(e.to_string()))?;
                        let mut resp = match client.complete(&prompt) {
                            Ok(c) => {
                                let mut r = ModelResponse::new(record.id.clone(), c.raw_text, c.finish_reason);
                                r.latency_ms = c.latency_ms;
                                r.usage = c.usage;
                                if c.retries > 0 {
                                    r.meta.insert("retries".into(), c.retries.into());
                                }
                                r
                            }
                            Err(e @ (GatewayError::Auth(_) | GatewayError::MissingKey { .. })) => return Err(e),
                            Err(e) => {
                                let mut r = ModelResponse::new(record.id.clone(), "", FinishReason::TransportError);
                                r.meta.insert("error".into(), e.to_string().into());
                                r
                            }
                        };
                        resp.model = Some(model.clone());
                        resp
                    }
                };
                if let Some(log) = &log {
                    let mut f = log.lock().expect("response log");
                    append_response(&mut f, &resp)?;
                }
                Ok(resp)
            })
            .collect::<Result<Vec<_>, GatewayError>>()
    })?;
    let mut all: Vec<ModelResponse> = done.into_values().chain(fresh).collect();
    all.sort_by(|a, b| a.record_id.cmp(&b.record_id));
    if let Some(path) = &opts.out {
        let tmp = path.with_extension("jsonl.tmp");
        write_responses(&all, &tmp)?;
        fs::rename(&tmp, path)?;
    }
    Ok(all)
}
