use serde::{Deserialize, Serialize};

/// Execution artifacts from a previous attempt, sent back for self-debugging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairFeedback {
    pub previous_code: String,
    pub error: Option<String>,
    pub console: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct AgentRequest {
    pub problemset_id: String,
    pub problem_index: usize,
    pub query: String,
    pub variable_description: String,
    pub code_history: Vec<String>,
    /// Attempt number within a repair loop, starting at 0.
    pub round_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repair_feedback: Option<RepairFeedback>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct TokenUsage {
    pub prompt: u64,
    pub completion: u64,
}

impl std::ops::AddAssign for TokenUsage {
    fn add_assign(&mut self, rhs: Self) {
        self.prompt += rhs.prompt;
        self.completion += rhs.completion;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct AgentResponse {
    pub code: String,
    #[serde(default)]
    pub raw_message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_usage: Option<TokenUsage>,
}

impl AgentResponse {
    pub fn code(code: impl Into<String>) -> Self {
        let code = code.into();
        AgentResponse {
            raw_message: code.clone(),
            code,
            token_usage: None,
        }
    }
}
