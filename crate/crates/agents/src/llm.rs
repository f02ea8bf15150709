//! Chat-completion clients.

use std::collections::VecDeque;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use dseval_core::Registry;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::request::TokenUsage;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub usage: Option<TokenUsage>,
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("LLM transport error: {0}")]
    Transport(String),
    #[error("LLM returned an empty completion")]
    Empty,
    #[error("LLM client configuration: {0}")]
    Config(String),
    #[error("unknown LLM client `{0}`")]
    Unknown(String),
}

pub trait LlmClient: Send + Sync {
    fn model(&self) -> String;

    fn complete(&self, messages: &[ChatMessage]) -> Result<Completion, LlmError>;
}

pub trait LlmClientFactory: Send + Sync {
    fn name(&self) -> &'static str;

    fn create(&self, arg: &str) -> Result<Arc<dyn LlmClient>, LlmError>;
}

pub fn standard_llm_clients() -> Registry<dyn LlmClientFactory> {
    let mut r: Registry<dyn LlmClientFactory> = Registry::new();
    r.register("stub", Arc::new(StubFactory));
    r.register("openai", Arc::new(OpenAiFactory));
    r
}

/// Builds a client from `NAME[:ARG]`, e.g. `stub:replies.json` or
/// `openai:gpt-4o-mini`.
pub fn create_llm_client(
    registry: &Registry<dyn LlmClientFactory>,
    spec: &str,
) -> Result<Arc<dyn LlmClient>, LlmError> {
    let (name, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let factory = registry.get(name).ok_or_else(|| LlmError::Unknown(name.to_string()))?;
    factory.create(arg)
}

/// Deterministic client that replays canned completions in order and then
/// repeats the last one. Every prompt it receives is recorded.
pub struct StubClient {
    replies: Mutex<VecDeque<String>>,
    last: Mutex<Option<String>>,
    prompts: Mutex<Vec<Vec<ChatMessage>>>,
}

impl StubClient {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        StubClient {
            replies: Mutex::new(replies.into_iter().map(Into::into).collect()),
            last: Mutex::new(None),
            prompts: Mutex::new(Vec::new()),
        }
    }

    /// Reads a JSON or YAML list of replies.
    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LlmError::Config(format!("reading {}: {e}", path.display())))?;
        let replies: Vec<String> =
            serde_yaml::from_str(&text).map_err(|e| LlmError::Config(format!("{}: {e}", path.display())))?;
        Ok(StubClient::new(replies))
    }

    pub fn prompts(&self) -> Vec<Vec<ChatMessage>> {
        self.prompts.lock().expect("stub lock").clone()
    }

    pub fn calls(&self) -> usize {
        self.prompts.lock().expect("stub lock").len()
    }
}

fn rough_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

impl LlmClient for StubClient {
    fn model(&self) -> String {
        "stub".into()
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<Completion, LlmError> {
        self.prompts.lock().expect("stub lock").push(messages.to_vec());
        let next = self.replies.lock().expect("stub lock").pop_front();
        let mut last = self.last.lock().expect("stub lock");
        let text = match next {
            Some(t) => {
                *last = Some(t.clone());
                t
            }
            None => last.clone().ok_or(LlmError::Empty)?,
        };
        let prompt: u64 = messages.iter().map(|m| rough_tokens(&m.content)).sum();
        Ok(Completion {
            usage: Some(TokenUsage {
                prompt,
                completion: rough_tokens(&text),
            }),
            text,
        })
    }
}

struct StubFactory;

impl LlmClientFactory for StubFactory {
    fn name(&self) -> &'static str {
        "stub"
    }

    fn create(&self, arg: &str) -> Result<Arc<dyn LlmClient>, LlmError> {
        if arg.is_empty() {
            return Err(LlmError::Config("stub client needs a replies file: stub:PATH".into()));
        }
        Ok(Arc::new(StubClient::from_file(Path::new(arg))?))
    }
}

/// Client for OpenAI-compatible `/chat/completions` endpoints.
///
/// Reads `OPENAI_API_KEY` (or the variable named by `api_key_env`) and
/// `OPENAI_BASE_URL`.
pub struct OpenAiClient {
    pub model: String,
    pub base_url: String,
    pub temperature: f64,
    api_key: String,
    http: reqwest::blocking::Client,
}

impl OpenAiClient {
    pub fn from_env(model: &str, api_key_env: &str, timeout: Duration) -> Result<Self, LlmError> {
        let api_key = std::env::var(api_key_env)
            .map_err(|_| LlmError::Config(format!("environment variable {api_key_env} is not set")))?;
        let base_url = std::env::var("OPENAI_BASE_URL").unwrap_or_else(|_| "https://api.openai.com/v1".into());
        let http = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(OpenAiClient {
            model: model.to_string(),
            base_url: base_url.trim_end_matches('/').to_string(),
            temperature: 0.0,
            api_key,
            http,
        })
    }
}

impl LlmClient for OpenAiClient {
    fn model(&self) -> String {
        self.model.clone()
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<Completion, LlmError> {
        let body = json!({
            "model": self.model,
            "messages": messages,
            "temperature": self.temperature,
        });
        let resp = self
            .http
            .post(format!("{}/chat/completions", self.base_url))
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status();
        let payload: serde_json::Value = resp.json().map_err(|e| LlmError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(LlmError::Transport(format!("HTTP {status}: {payload}")));
        }
        let text = payload["choices"][0]["message"]["content"]
            .as_str()
            .unwrap_or_default()
            .to_string();
        if text.trim().is_empty() {
            return Err(LlmError::Empty);
        }
        let usage = payload.get("usage").map(|u| TokenUsage {
            prompt: u["prompt_tokens"].as_u64().unwrap_or(0),
            completion: u["completion_tokens"].as_u64().unwrap_or(0),
        });
        Ok(Completion { text, usage })
    }
}

struct OpenAiFactory;

impl LlmClientFactory for OpenAiFactory {
    fn name(&self) -> &'static str {
        "openai"
    }

    fn create(&self, arg: &str) -> Result<Arc<dyn LlmClient>, LlmError> {
        let model = if arg.is_empty() { "gpt-4o-mini" } else { arg };
        Ok(Arc::new(OpenAiClient::from_env(
            model,
            "OPENAI_API_KEY",
            Duration::from_secs(120),
        )?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stub_replays_then_repeats() {
        let stub = StubClient::new(["a", "b"]);
        let msg = [ChatMessage::user("hi there")];
        let texts: Vec<String> = (0..3).map(|_| stub.complete(&msg).unwrap().text).collect();
        assert_eq!(texts, ["a", "b", "b"]);
        assert_eq!(stub.calls(), 3);
        assert!(StubClient::new(Vec::<String>::new()).complete(&msg).is_err());
    }

    #[test]
    fn unknown_client_is_reported() {
        let r = standard_llm_clients();
        assert!(matches!(create_llm_client(&r, "nope:x"), Err(LlmError::Unknown(_))));
    }
}
