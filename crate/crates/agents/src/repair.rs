//! Multi-attempt repair loops.

use std::sync::Arc;

use dseval_core::Registry;
use dseval_runtime::{ExecutionResult, RuntimeError, Session};
use dseval_validate::Verdict;

use crate::agent::Agent;
use crate::request::{AgentRequest, AgentResponse, RepairFeedback};

#[derive(Debug, Clone)]
pub struct Attempt {
    pub response: AgentResponse,
    pub result: ExecutionResult,
    pub verdict: Verdict,
}

/// Builds the request for the next attempt from the previous one.
pub trait RepairStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn next_request(&self, original: &AgentRequest, previous: &Attempt, attempt: usize) -> AgentRequest;
}

/// Sends back the previous code with its error and console output. The
/// verdict itself is never shown to the agent.
pub struct SelfDebug;

impl RepairStrategy for SelfDebug {
    fn name(&self) -> &'static str {
        "self_debug"
    }

    fn next_request(&self, original: &AgentRequest, previous: &Attempt, attempt: usize) -> AgentRequest {
        let error = previous.result.error.as_ref().map(|e| {
            if e.traceback.trim().is_empty() {
                format!("{}: {}", e.kind, e.message)
            } else {
                e.traceback.clone()
            }
        });
        AgentRequest {
            round_index: attempt,
            repair_feedback: Some(RepairFeedback {
                previous_code: previous.response.code.clone(),
                error,
                console: previous.result.stream_output.clone(),
            }),
            ..original.clone()
        }
    }
}

/// Asks again with the untouched original request.
pub struct Resample;

impl RepairStrategy for Resample {
    fn name(&self) -> &'static str {
        "resample"
    }

    fn next_request(&self, original: &AgentRequest, _: &Attempt, attempt: usize) -> AgentRequest {
        AgentRequest {
            round_index: attempt,
            ..original.clone()
        }
    }
}

pub fn standard_repair_strategies() -> Registry<dyn RepairStrategy> {
    let mut r: Registry<dyn RepairStrategy> = Registry::new();
    r.register("self_debug", Arc::new(SelfDebug));
    r.register("resample", Arc::new(Resample));
    r
}

/// Looks a strategy up by name; `self-debug` and `self_debug` are the same.
pub fn repair_strategy(registry: &Registry<dyn RepairStrategy>, name: &str) -> Option<Arc<dyn RepairStrategy>> {
    registry.get(&name.trim().to_ascii_lowercase().replace('-', "_"))
}

#[derive(Debug, Default)]
pub struct RepairRun {
    pub attempts: Vec<Attempt>,
    /// Set when the agent itself failed and the loop stopped early.
    pub agent_error: Option<String>,
}

impl RepairRun {
    pub fn final_attempt(&self) -> Option<&Attempt> {
        self.attempts.last()
    }

    pub fn final_response(&self) -> Option<&AgentResponse> {
        self.attempts.last().map(|a| &a.response)
    }

    pub fn solved(&self) -> bool {
        self.attempts.last().is_some_and(|a| a.verdict.is_correct())
    }
}

/// Runs up to `max_attempts` attempts. Each attempt starts from the session
/// state captured before the first one, and the loop stops at the first
/// correct verdict.
pub fn run_with_repair<E, F>(
    agent: &mut dyn Agent,
    request: &AgentRequest,
    session: &mut Session,
    strategy: &dyn RepairStrategy,
    max_attempts: usize,
    mut evaluate: F,
) -> Result<RepairRun, E>
where
    E: From<RuntimeError>,
    F: FnMut(&mut Session, &AgentResponse) -> Result<(ExecutionResult, Verdict), E>,
{
    let max_attempts = max_attempts.max(1);
    let start = if max_attempts > 1 {
        Some(session.snapshot()?)
    } else {
        None
    };
    let mut run = RepairRun::default();
    let mut next = request.clone();
    for attempt in 0..max_attempts {
        if attempt > 0 {
            if let Some(snap) = &start {
                session.restore(snap)?;
            }
        }
        let response = match agent.act(&next) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("agent {} failed on attempt {attempt}: {e}", agent.id());
                run.agent_error = Some(e.to_string());
                break;
            }
        };
        let (result, verdict) = evaluate(session, &response)?;
        let done = verdict.is_correct();
        run.attempts.push(Attempt {
            response,
            result,
            verdict,
        });
        if done {
            break;
        }
        if attempt + 1 < max_attempts {
            next = strategy.next_request(request, run.attempts.last().expect("just pushed"), attempt + 1);
        }
    }
    Ok(run)
}
