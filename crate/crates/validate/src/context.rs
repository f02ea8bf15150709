use std::collections::BTreeMap;

use dseval_core::{Problem, Value};
use dseval_runtime::{
    CallOutcome, ExecutionResult, GroundTruthStep, RuntimeError, ScoreOutcome, Session, SessionConfig, Snapshot,
};
use serde_json::Value as Json;

/// Read access to a live namespace, as needed by validators.
pub trait SessionProbe {
    fn view(&mut self, names: &[String]) -> Result<BTreeMap<String, Option<Value>>, RuntimeError>;

    fn call_function(
        &mut self,
        function: &str,
        args: &[Json],
        input_validator: Option<&str>,
        max_time: Option<f64>,
    ) -> Result<CallOutcome, RuntimeError>;

    fn score_model(
        &mut self,
        model: &str,
        x: &str,
        y: &str,
        metric: Option<&str>,
        max_time: Option<f64>,
    ) -> Result<ScoreOutcome, RuntimeError>;
}

impl SessionProbe for Session {
    fn view(&mut self, names: &[String]) -> Result<BTreeMap<String, Option<Value>>, RuntimeError> {
        Session::view(self, Some(names))
    }

    fn call_function(
        &mut self,
        function: &str,
        args: &[Json],
        input_validator: Option<&str>,
        max_time: Option<f64>,
    ) -> Result<CallOutcome, RuntimeError> {
        Session::call_function(self, function, args, input_validator, max_time)
    }

    fn score_model(
        &mut self,
        model: &str,
        x: &str,
        y: &str,
        metric: Option<&str>,
        max_time: Option<f64>,
    ) -> Result<ScoreOutcome, RuntimeError> {
        Session::score_model(self, model, x, y, metric, max_time)
    }
}

/// A reference session restored to a snapshot on first use.
///
/// The underlying session lives in a caller-owned slot so it can be reused
/// across problems; it is restored to `snapshot` before the first request.
pub struct ReferenceProbe<'a> {
    snapshot: &'a Snapshot,
    config: &'a SessionConfig,
    slot: &'a mut Option<Session>,
    ready: bool,
}

impl<'a> ReferenceProbe<'a> {
    pub fn new(snapshot: &'a Snapshot, config: &'a SessionConfig, slot: &'a mut Option<Session>) -> Self {
        ReferenceProbe {
            snapshot,
            config,
            slot,
            ready: false,
        }
    }

    fn session(&mut self) -> Result<&mut Session, RuntimeError> {
        if self.slot.is_none() {
            *self.slot = Some(Session::start(self.config.clone())?);
        }
        let session = self.slot.as_mut().expect("slot filled above");
        if !self.ready {
            session.restore(self.snapshot)?;
            self.ready = true;
        }
        Ok(session)
    }
}

impl SessionProbe for ReferenceProbe<'_> {
    fn view(&mut self, names: &[String]) -> Result<BTreeMap<String, Option<Value>>, RuntimeError> {
        self.session()?.view(Some(names))
    }

    fn call_function(
        &mut self,
        function: &str,
        args: &[Json],
        input_validator: Option<&str>,
        max_time: Option<f64>,
    ) -> Result<CallOutcome, RuntimeError> {
        self.session()?.call_function(function, args, input_validator, max_time)
    }

    fn score_model(
        &mut self,
        model: &str,
        x: &str,
        y: &str,
        metric: Option<&str>,
        max_time: Option<f64>,
    ) -> Result<ScoreOutcome, RuntimeError> {
        self.session()?.score_model(model, x, y, metric, max_time)
    }
}

/// Everything a validator may look at for one submission.
pub struct ValidationContext<'a> {
    pub problem: &'a Problem,
    pub submission_code: &'a str,
    pub submission_result: &'a ExecutionResult,
    pub submission: &'a mut dyn SessionProbe,
    pub reference_result: &'a ExecutionResult,
    pub reference_pre: &'a BTreeMap<String, Value>,
    pub reference_post: &'a BTreeMap<String, Value>,
    /// Namespace in the reference post-state, for function and model checks.
    pub reference: &'a mut dyn SessionProbe,
}

impl<'a> ValidationContext<'a> {
    pub fn from_step(
        problem: &'a Problem,
        submission_code: &'a str,
        submission_result: &'a ExecutionResult,
        submission: &'a mut dyn SessionProbe,
        step: &'a GroundTruthStep,
        reference: &'a mut dyn SessionProbe,
    ) -> Self {
        ValidationContext {
            problem,
            submission_code,
            submission_result,
            submission,
            reference_result: &step.reference_result,
            reference_pre: &step.pre_values,
            reference_post: &step.post_values,
            reference,
        }
    }

    /// Names the reference code created or changed.
    pub fn changed_names(&self) -> Vec<String> {
        self.reference_post
            .iter()
            .filter(|(k, v)| self.reference_pre.get(*k) != Some(*v))
            .map(|(k, _)| k.clone())
            .collect()
    }
}
