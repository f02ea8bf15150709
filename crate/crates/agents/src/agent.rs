//! The agent contract and the built-in adapters.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::{mpsc, Arc};
use std::time::Duration;

use dseval_core::{Problemset, Registry};
use serde::Deserialize;

use crate::context::{extract_code, render_context, ContextOrder};
use crate::llm::{create_llm_client, standard_llm_clients, ChatMessage, LlmClient, LlmClientFactory, LlmError};
use crate::request::{AgentRequest, AgentResponse};

pub const DEFAULT_AGENT_DEADLINE: Duration = Duration::from_secs(120);

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("agent configuration: {0}")]
    Config(String),
    #[error("agent did not answer within {0:?}")]
    Timeout(Duration),
    #[error("agent transport failure: {0}")]
    Transport(String),
    #[error("agent protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

pub trait Agent: Send {
    fn id(&self) -> String;

    /// Called once before the first request of each problemset.
    fn begin_problemset(&mut self, _ps: &Problemset) -> Result<(), AgentError> {
        Ok(())
    }

    fn act(&mut self, request: &AgentRequest) -> Result<AgentResponse, AgentError>;

    /// Whether separate instances may run at the same time.
    fn concurrent_safe(&self) -> bool {
        true
    }
}

#[derive(Clone)]
pub struct AgentSettings {
    pub deadline: Duration,
    pub context_order: ContextOrder,
    pub llm_clients: Registry<dyn LlmClientFactory>,
}

impl Default for AgentSettings {
    fn default() -> Self {
        AgentSettings {
            deadline: DEFAULT_AGENT_DEADLINE,
            context_order: ContextOrder::default(),
            llm_clients: standard_llm_clients(),
        }
    }
}

pub trait AgentFactory: Send + Sync {
    fn name(&self) -> &'static str;

    fn create(&self, arg: &str, settings: &AgentSettings) -> Result<Box<dyn Agent>, AgentError>;
}

pub fn standard_agents() -> Registry<dyn AgentFactory> {
    let mut r: Registry<dyn AgentFactory> = Registry::new();
    let all: Vec<Arc<dyn AgentFactory>> = vec![
        Arc::new(OracleFactory),
        Arc::new(ScriptedFactory),
        Arc::new(ProcessFactory),
        Arc::new(LlmFactory),
    ];
    for f in all {
        r.register(f.name(), f);
    }
    r
}

/// Builds an agent from a spec string `NAME[:ARG]`, for example `oracle`,
/// `scripted:answers.yaml`, `process:python3 agent.py` or `llm:openai:gpt-4o`.
pub fn create_agent(
    registry: &Registry<dyn AgentFactory>,
    spec: &str,
    settings: &AgentSettings,
) -> Result<Box<dyn Agent>, AgentError> {
    let (name, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let factory = registry
        .get(name)
        .ok_or_else(|| AgentError::Config(format!("unknown agent `{name}` (known: {})", registry.names().join(", "))))?;
    factory.create(arg, settings)
}

/// Submits the reference code of each problem.
#[derive(Default)]
pub struct OracleAgent {
    references: BTreeMap<(String, usize), String>,
}

impl Agent for OracleAgent {
    fn id(&self) -> String {
        "oracle".into()
    }

    fn begin_problemset(&mut self, ps: &Problemset) -> Result<(), AgentError> {
        for p in &ps.problems {
            self.references.insert((ps.id.clone(), p.index), p.reference_code.clone());
        }
        Ok(())
    }

    fn act(&mut self, request: &AgentRequest) -> Result<AgentResponse, AgentError> {
        self.references
            .get(&(request.problemset_id.clone(), request.problem_index))
            .map(|code| AgentResponse::code(code.clone()))
            .ok_or_else(|| {
                AgentError::Config(format!(
                    "oracle has no reference for {}#{}",
                    request.problemset_id, request.problem_index
                ))
            })
    }
}

struct OracleFactory;

impl AgentFactory for OracleFactory {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn create(&self, _: &str, _: &AgentSettings) -> Result<Box<dyn Agent>, AgentError> {
        Ok(Box::new(OracleAgent::default()))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ScriptEntry {
    Once(String),
    /// One snippet per repair attempt; the last repeats.
    Attempts(Vec<String>),
}

/// Replays canned code. The script maps problemset ids (or `"*"` for any)
/// to one entry per problem.
pub struct ScriptedAgent {
    name: String,
    script: BTreeMap<String, Vec<ScriptEntry>>,
}

impl ScriptedAgent {
    pub fn new(name: impl Into<String>, script: BTreeMap<String, Vec<ScriptEntry>>) -> Self {
        ScriptedAgent {
            name: name.into(),
            script,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, AgentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AgentError::Config(format!("reading {}: {e}", path.display())))?;
        let script = serde_yaml::from_str(&text)
            .map_err(|e| AgentError::Config(format!("{}: {e}", path.display())))?;
        Ok(ScriptedAgent::new(format!("scripted:{}", path.display()), script))
    }
}

impl Agent for ScriptedAgent {
    fn id(&self) -> String {
        self.name.clone()
    }

    fn act(&mut self, request: &AgentRequest) -> Result<AgentResponse, AgentError> {
        let entries = self
            .script
            .get(&request.problemset_id)
            .or_else(|| self.script.get("*"))
            .ok_or_else(|| AgentError::Config(format!("no script for problemset `{}`", request.problemset_id)))?;
        let entry = entries.get(request.problem_index).ok_or_else(|| {
            AgentError::Config(format!(
                "script for `{}` has no entry {}",
                request.problemset_id, request.problem_index
            ))
        })?;
        let code = match entry {
            ScriptEntry::Once(code) => code.clone(),
            ScriptEntry::Attempts(list) => list
                .get(request.round_index)
                .or_else(|| list.last())
                .cloned()
                .unwrap_or_default(),
        };
        Ok(AgentResponse::code(code))
    }
}

struct ScriptedFactory;

impl AgentFactory for ScriptedFactory {
    fn name(&self) -> &'static str {
        "scripted"
    }

    fn create(&self, arg: &str, _: &AgentSettings) -> Result<Box<dyn Agent>, AgentError> {
        Ok(Box::new(ScriptedAgent::from_file(Path::new(arg))?))
    }
}

/// Runs an external command per request. The request is written to its
/// stdin as one JSON line; the first stdout line must be a JSON response.
pub struct ProcessAgent {
    command: String,
    deadline: Duration,
}

impl ProcessAgent {
    pub fn new(command: impl Into<String>, deadline: Duration) -> Self {
        ProcessAgent {
            command: command.into(),
            deadline,
        }
    }
}

impl Agent for ProcessAgent {
    fn id(&self) -> String {
        format!("process:{}", self.command)
    }

    fn act(&mut self, request: &AgentRequest) -> Result<AgentResponse, AgentError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| AgentError::Transport(format!("spawning `{}`: {e}", self.command)))?;
        let line = serde_json::to_string(request).map_err(|e| AgentError::Protocol(e.to_string()))?;
        {
            let mut stdin = child.stdin.take().expect("stdin piped");
            stdin
                .write_all(line.as_bytes())
                .and_then(|_| stdin.write_all(b"\n"))
                .map_err(|e| AgentError::Transport(e.to_string()))?;
        }
        let stdout = child.stdout.take().expect("stdout piped");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let mut first = String::new();
            let res = BufReader::new(stdout).read_line(&mut first).map(|_| first);
            let _ = tx.send(res);
        });
        let reply = match rx.recv_timeout(self.deadline) {
            Ok(r) => r.map_err(|e| AgentError::Transport(e.to_string())),
            Err(_) => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(AgentError::Timeout(self.deadline));
            }
        };
        let _ = child.wait();
        let reply = reply?;
        if reply.trim().is_empty() {
            return Err(AgentError::Protocol("agent process wrote no response".into()));
        }
        serde_json::from_str(reply.trim()).map_err(|e| AgentError::Protocol(format!("bad response line: {e}")))
    }
}

struct ProcessFactory;

impl AgentFactory for ProcessFactory {
    fn name(&self) -> &'static str {
        "process"
    }

    fn create(&self, arg: &str, settings: &AgentSettings) -> Result<Box<dyn Agent>, AgentError> {
        if arg.trim().is_empty() {
            return Err(AgentError::Config("process agent needs a command: process:CMD".into()));
        }
        Ok(Box::new(ProcessAgent::new(arg, settings.deadline)))
    }
}

pub const DEFAULT_SYSTEM_PROMPT: &str = "You are a data scientist working in a Python notebook. \
Answer the task with a single Python code block. The value of the last expression is shown as the cell output.";

/// Prompts a chat model and extracts the code from its reply.
pub struct LlmAgent {
    client: Arc<dyn LlmClient>,
    order: ContextOrder,
    system_prompt: String,
}

impl LlmAgent {
    pub fn new(client: Arc<dyn LlmClient>, order: ContextOrder) -> Self {
        LlmAgent {
            client,
            order,
            system_prompt: DEFAULT_SYSTEM_PROMPT.into(),
        }
    }
}

impl Agent for LlmAgent {
    fn id(&self) -> String {
        format!("llm:{}", self.client.model())
    }

    fn act(&mut self, request: &AgentRequest) -> Result<AgentResponse, AgentError> {
        let messages = [
            ChatMessage::system(self.system_prompt.clone()),
            ChatMessage::user(render_context(request, &self.order)),
        ];
        let completion = self.client.complete(&messages)?;
        Ok(AgentResponse {
            code: extract_code(&completion.text),
            raw_message: completion.text,
            token_usage: completion.usage,
        })
    }
}

struct LlmFactory;

impl AgentFactory for LlmFactory {
    fn name(&self) -> &'static str {
        "llm"
    }

    fn create(&self, arg: &str, settings: &AgentSettings) -> Result<Box<dyn Agent>, AgentError> {
        let client = create_llm_client(&settings.llm_clients, arg)?;
        Ok(Box::new(LlmAgent::new(client, settings.context_order.clone())))
    }
}
