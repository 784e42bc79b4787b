use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{EndpointConfig, Protocol};
use crate::eval::Usage;

/// One single-message chat request.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub prompt: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatReply {
    pub text: String,
    /// The provider's stop reason, verbatim.
    pub stop_reason: Option<String>,
    pub usage: Option<Usage>,
}

impl ChatReply {
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            stop_reason: Some("stop".into()),
            usage: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportFailure {
    /// Worth retrying: rate limits, server errors, network trouble.
    Transient(String),
    /// Rejected credentials.
    Auth(String),
    /// Any other refusal by the provider.
    Fatal(String),
    /// The reply could not be understood.
    Malformed(String),
}

pub trait Transport: Send + Sync {
    fn send(&self, req: &ChatRequest, api_key: Option<&str>) -> Result<ChatReply, TransportFailure>;
}

/// Canned replies keyed by prompt, with an optional fallback reply.
#[derive(Debug, Default)]
pub struct ReplayTransport {
    pub replies: HashMap<String, ChatReply>,
    pub fallback: Option<ChatReply>,
    calls: Mutex<usize>,
}

impl ReplayTransport {
    pub fn new(replies: HashMap<String, ChatReply>) -> Self {
        Self {
            replies,
            ..Self::default()
        }
    }

    pub fn constant(reply: ChatReply) -> Self {
        Self {
            fallback: Some(reply),
            ..Self::default()
        }
    }

    pub fn calls(&self) -> usize {
        *self.calls.lock().expect("replay counter")
    }
}

impl Transport for ReplayTransport {
    fn send(&self, req: &ChatRequest, _api_key: Option<&str>) -> Result<ChatReply, TransportFailure> {
        *self.calls.lock().expect("replay counter") += 1;
        self.replies
            .get(&req.prompt)
            .or(self.fallback.as_ref())
            .cloned()
            .ok_or_else(|| TransportFailure::Fatal("no recorded reply for this prompt".into()))
    }
}

/// Blocking HTTP transport for chat-completion style endpoints.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    base_url: String,
    protocol: Protocol,
}

impl HttpTransport {
    pub fn new(cfg: &EndpointConfig) -> Result<Self, TransportFailure> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(cfg.request_timeout_ms))
            .build()
            .map_err(|e| TransportFailure::Fatal(e.to_string()))?;
        Ok(Self {
            client,
            base_url: cfg.base_url.trim_end_matches('/').to_owned(),
            protocol: cfg.protocol,
        })
    }
}

/// Request body and path for a protocol.
pub fn request_body(protocol: Protocol, req: &ChatRequest) -> (&'static str, Value) {
    let messages = json!([{ "role": "user", "content": req.prompt }]);
    match protocol {
        Protocol::OpenaiChat => (
            "/chat/completions",
            json!({
                "model": req.model,
                "messages": messages,
                "temperature": req.temperature,
                "max_tokens": req.max_output_tokens,
            }),
        ),
        Protocol::AnthropicMessages => (
            "/messages",
            json!({
                "model": req.model,
                "messages": messages,
                "temperature": req.temperature,
                "max_tokens": req.max_output_tokens,
            }),
        ),
    }
}

/// Pulls text, stop reason and token counts out of a reply body.
pub fn parse_reply(protocol: Protocol, body: &Value) -> Result<ChatReply, TransportFailure> {
    let malformed = |what: &str| TransportFailure::Malformed(format!("reply has no {what}"));
    let tokens = |v: &Value, key: &str| v.get(key).and_then(Value::as_u64);
    match protocol {
        Protocol::OpenaiChat => {
            let choice = body.pointer("/choices/0").ok_or_else(|| malformed("choices"))?;
            let text = choice
                .pointer("/message/content")
                .ok_or_else(|| malformed("message content"))?;
            let usage = body.get("usage").map(|u| Usage {
                prompt_tokens: tokens(u, "prompt_tokens"),
                completion_tokens: tokens(u, "completion_tokens"),
            });
            Ok(ChatReply {
                text: text.as_str().unwrap_or_default().to_owned(),
                stop_reason: choice.get("finish_reason").and_then(Value::as_str).map(str::to_owned),
                usage,
            })
        }
        Protocol::AnthropicMessages => {
            let blocks = body
                .get("content")
                .and_then(Value::as_array)
                .ok_or_else(|| malformed("content"))?;
            let text = blocks
                .iter()
                .filter(|b| b.get("type").and_then(Value::as_str) == Some("text"))
                .filter_map(|b| b.get("text").and_then(Value::as_str))
                .collect::<String>();
            let usage = body.get("usage").map(|u| Usage {
                prompt_tokens: tokens(u, "input_tokens"),
                completion_tokens: tokens(u, "output_tokens"),
            });
            Ok(ChatReply {
                text,
                stop_reason: body.get("stop_reason").and_then(Value::as_str).map(str::to_owned),
                usage,
            })
        }
    }
}

impl Transport for HttpTransport {
    fn send(&self, req: &ChatRequest, api_key: Option<&str>) -> Result<ChatReply, TransportFailure> {
        let (path, body) = request_body(self.protocol, req);
        let mut builder = self.client.post(format!("{}{path}", self.base_url)).json(&body);
        if let Some(key) = api_key {
            builder = match self.protocol {
                Protocol::OpenaiChat => builder.bearer_auth(key),
                Protocol::AnthropicMessages => builder
                    .header("x-api-key", key)
                    .header("anthropic-version", "2023-06-01"),
            };
        }
        let resp = builder.send().map_err(|e| TransportFailure::Transient(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| TransportFailure::Transient(e.to_string()))?;
        let snippet = || format!("HTTP {}: {}", status.as_u16(), text.chars().take(300).collect::<String>());
        match status.as_u16() {
            200..=299 => {}
            401 | 403 => return Err(TransportFailure::Auth(snippet())),
            408 | 409 | 429 | 500..=599 => return Err(TransportFailure::Transient(snippet())),
            _ => return Err(TransportFailure::Fatal(snippet())),
        }
        let body: Value = serde_json::from_str(&text).map_err(|e| TransportFailure::Malformed(e.to_string()))?;
        parse_reply(self.protocol, &body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req() -> ChatRequest {
        ChatRequest {
            model: "m".into(),
            prompt: "Where is Bob?".into(),
            temperature: 0.0,
            max_output_tokens: 16,
        }
    }

    #[test]
    fn openai_shape() {
        let (path, body) = request_body(Protocol::OpenaiChat, &req());
        assert_eq!(path, "/chat/completions");
        assert_eq!(body["messages"][0]["content"], "Where is Bob?");
        assert_eq!(body["max_tokens"], 16);
        let reply = json!({
            "choices": [{"message": {"role": "assistant", "content": "room_2"}, "finish_reason": "length"}],
            "usage": {"prompt_tokens": 12, "completion_tokens": 16}
        });
        let r = parse_reply(Protocol::OpenaiChat, &reply).unwrap();
        assert_eq!(r.text, "room_2");
        assert_eq!(r.stop_reason.as_deref(), Some("length"));
        assert_eq!(r.usage.unwrap().completion_tokens, Some(16));
        assert!(matches!(
            parse_reply(Protocol::OpenaiChat, &json!({"error": "x"})),
            Err(TransportFailure::Malformed(_))
        ));
    }

    #[test]
    fn anthropic_shape() {
        let reply = json!({
            "content": [{"type": "text", "text": "room_"}, {"type": "text", "text": "3"}],
            "stop_reason": "max_tokens",
            "usage": {"input_tokens": 5, "output_tokens": 7}
        });
        let r = parse_reply(Protocol::AnthropicMessages, &reply).unwrap();
        assert_eq!(r.text, "room_3");
        assert_eq!(r.stop_reason.as_deref(), Some("max_tokens"));
        assert_eq!(r.usage.unwrap().prompt_tokens, Some(5));
    }

    #[test]
    fn unreachable_host_is_transient() {
        let cfg = EndpointConfig {
            base_url: "http://127.0.0.1:9".into(),
            request_timeout_ms: 500,
            ..EndpointConfig::default()
        };
        let t = HttpTransport::new(&cfg).unwrap();
        assert!(matches!(t.send(&req(), None), Err(TransportFailure::Transient(_))));
    }
}
