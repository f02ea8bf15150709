//! Agents under evaluation: the request/response contract, built-in
//! adapters, LLM clients and repair loops.

pub mod agent;
pub mod context;
pub mod llm;
pub mod repair;
pub mod request;

pub use agent::{
    create_agent, standard_agents, Agent, AgentError, AgentFactory, AgentSettings, LlmAgent, OracleAgent,
    ProcessAgent, ScriptEntry, ScriptedAgent, DEFAULT_AGENT_DEADLINE,
};
pub use context::{extract_code, render_context, ContextOrder, ContextPart};
pub use llm::{
    create_llm_client, standard_llm_clients, ChatMessage, Completion, LlmClient, LlmClientFactory, LlmError,
    OpenAiClient, StubClient,
};
pub use repair::{
    repair_strategy, run_with_repair, standard_repair_strategies, Attempt, RepairRun, RepairStrategy, Resample,
    SelfDebug,
};
pub use request::{AgentRequest, AgentResponse, RepairFeedback, TokenUsage};
