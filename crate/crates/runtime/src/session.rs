use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use dseval_core::syntax::referenced_identifiers;
use dseval_core::{ExecutionConfig, Value};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

use crate::result::{ErrorKind, ExecutionResult};
use crate::worker::{python_command, Worker, WorkerFailure};

pub const DEFAULT_MAX_TIME: f64 = 30.0;

#[derive(Debug, thiserror::Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Worker(#[from] WorkerFailure),
    #[error("variable `{name}` cannot be snapshotted")]
    SnapshotUnsupported { name: String },
    #[error("session setup failed: {0}")]
    Setup(String),
    #[error("unexpected worker reply: {0}")]
    Reply(String),
}

/// What to do with variables that cannot be serialized into a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotPolicy {
    /// Keep the snapshot and rebuild state by replaying code on restore.
    #[default]
    Replay,
    /// Refuse with [`RuntimeError::SnapshotUnsupported`].
    Strict,
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub python: String,
    /// Copied into `<workdir>/inputs` when the session starts.
    pub inputs_dir: Option<PathBuf>,
    /// Working directory; a private temporary directory when absent.
    pub workdir: Option<PathBuf>,
    pub default_max_time: f64,
    /// Extra wall-clock allowance before the worker is killed.
    pub grace: Duration,
    /// Largest table (in cells) transferred as data rather than a fingerprint.
    pub max_cells: usize,
    pub snapshot_policy: SnapshotPolicy,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            python: python_command(),
            inputs_dir: None,
            workdir: None,
            default_max_time: DEFAULT_MAX_TIME,
            grace: Duration::from_millis(400),
            max_cells: 200_000,
            snapshot_policy: SnapshotPolicy::Replay,
        }
    }
}

impl SessionConfig {
    pub fn with_inputs(mut self, dir: impl Into<PathBuf>) -> Self {
        self.inputs_dir = Some(dir.into());
        self
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SnapshotData {
    blob: Option<String>,
    unpicklable: Vec<String>,
    code_history: Vec<String>,
    console_log: String,
}

/// Immutable, cheaply clonable capture of a session's state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Snapshot {
    inner: Arc<SnapshotData>,
}

impl Snapshot {
    pub fn created_at_execution_count(&self) -> usize {
        self.inner.code_history.len()
    }

    pub fn code_history(&self) -> &[String] {
        &self.inner.code_history
    }

    pub fn console_log(&self) -> &str {
        &self.inner.console_log
    }

    /// Restoring this snapshot re-executes its code history.
    pub fn requires_replay(&self) -> bool {
        self.inner.blob.is_none() || !self.inner.unpicklable.is_empty()
    }

    pub fn unpicklable(&self) -> &[String] {
        &self.inner.unpicklable
    }

    pub fn same_as(&self, other: &Snapshot) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
    }
}

/// Outcome of calling a session function on test inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum CallOutcome {
    Returned(crate::result::ResultValue),
    Raised(crate::result::ExecError),
    /// The input validator rejected the arguments, or they failed to evaluate.
    BadInput(crate::result::ExecError),
    Missing,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScoreOutcome {
    Score(f64),
    Raised(crate::result::ExecError),
    Missing(String),
}

/// A live Python namespace with its execution history.
pub struct Session {
    config: SessionConfig,
    _tempdir: Option<tempfile::TempDir>,
    workdir: PathBuf,
    worker: Option<Worker>,
    history: Vec<String>,
    console: String,
    base: Option<Snapshot>,
    since_base: Vec<String>,
}

fn copy_dir(from: &Path, to: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(to)?;
    for entry in std::fs::read_dir(from)? {
        let entry = entry?;
        let target = to.join(entry.file_name());
        if entry.file_type()?.is_dir() {
            copy_dir(&entry.path(), &target)?;
        } else {
            std::fs::copy(entry.path(), target)?;
        }
    }
    Ok(())
}

impl Session {
    pub fn start(config: SessionConfig) -> Result<Session, RuntimeError> {
        let (tempdir, workdir) = match &config.workdir {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| RuntimeError::Setup(e.to_string()))?;
                (None, dir.clone())
            }
            None => {
                let tmp = tempfile::Builder::new()
                    .prefix("dseval-session-")
                    .tempdir()
                    .map_err(|e| RuntimeError::Setup(e.to_string()))?;
                let path = tmp.path().to_path_buf();
                (Some(tmp), path)
            }
        };
        let inputs = workdir.join("inputs");
        match &config.inputs_dir {
            Some(src) => copy_dir(src, &inputs).map_err(|e| RuntimeError::Setup(format!("{}: {e}", src.display())))?,
            None => std::fs::create_dir_all(&inputs).map_err(|e| RuntimeError::Setup(e.to_string()))?,
        }
        let worker = Worker::spawn(&config.python, &workdir)?;
        Ok(Session {
            config,
            _tempdir: tempdir,
            workdir,
            worker: Some(worker),
            history: Vec::new(),
            console: String::new(),
            base: None,
            since_base: Vec::new(),
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn workdir(&self) -> &Path {
        &self.workdir
    }

    pub fn code_history(&self) -> &[String] {
        &self.history
    }

    pub fn console_log(&self) -> &str {
        &self.console
    }

    pub fn execution_count(&self) -> usize {
        self.history.len()
    }

    fn worker(&mut self) -> Result<&mut Worker, RuntimeError> {
        if self.worker.is_none() {
            log::debug!("respawning session worker in {}", self.workdir.display());
            let mut worker = Worker::spawn(&self.config.python, &self.workdir)?;
            if let Some(base) = self.base.clone() {
                self.load(&mut worker, &base)?;
            }
            for code in self.since_base.clone() {
                let req = self.exec_request(&code, self.config.default_max_time, false);
                worker.request(&req, None)?;
            }
            self.worker = Some(worker);
        }
        Ok(self.worker.as_mut().expect("worker present"))
    }

    fn exec_request(&self, code: &str, max_time: f64, trace: bool) -> Json {
        json!({
            "op": "exec",
            "code": code,
            "max_time": max_time,
            "max_cells": self.config.max_cells,
            "trace_calls": trace,
        })
    }

    fn load(&self, worker: &mut Worker, snapshot: &Snapshot) -> Result<(), RuntimeError> {
        if snapshot.requires_replay() {
            worker.request(&json!({"op": "reset"}), None)?;
            for code in snapshot.code_history() {
                let req = self.exec_request(code, self.config.default_max_time, false);
                worker.request(&req, None)?;
            }
        } else {
            let blob = snapshot.inner.blob.as_deref().unwrap_or_default();
            worker.request(&json!({"op": "restore", "blob": blob}), None)?;
        }
        Ok(())
    }

    /// Names in `forbid` that `code` mentions, if any.
    pub fn forbidden_hits(code: &str, forbid: &[String]) -> Vec<String> {
        if forbid.is_empty() {
            return Vec::new();
        }
        match referenced_identifiers(code) {
            Ok(ids) => forbid.iter().filter(|n| ids.contains(n.as_str())).cloned().collect(),
            Err(_) => Vec::new(),
        }
    }

    /// Runs a cell under the given restrictions, including forbidden names.
    pub fn execute(&mut self, code: &str, restrictions: &ExecutionConfig) -> Result<ExecutionResult, RuntimeError> {
        let hits = Self::forbidden_hits(code, &restrictions.forbid_names);
        if !hits.is_empty() {
            return Ok(ExecutionResult::failed(
                ErrorKind::ForbiddenName,
                format!("use of forbidden name(s): {}", hits.join(", ")),
                0.0,
            ));
        }
        self.run(code, restrictions.max_time)
    }

    /// Runs a cell with only a time limit.
    pub fn run(&mut self, code: &str, max_time: Option<f64>) -> Result<ExecutionResult, RuntimeError> {
        self.run_traced(code, max_time, false).map(|(r, _)| r)
    }

    /// Runs a cell and records every library API it touches.
    pub fn run_with_api_trace(&mut self, code: &str) -> Result<(ExecutionResult, Vec<String>), RuntimeError> {
        self.run_traced(code, None, true)
    }

    fn run_traced(
        &mut self,
        code: &str,
        max_time: Option<f64>,
        trace: bool,
    ) -> Result<(ExecutionResult, Vec<String>), RuntimeError> {
        let max_time = max_time.unwrap_or(self.config.default_max_time);
        let req = self.exec_request(code, max_time, trace);
        let deadline = Duration::from_secs_f64(max_time) + self.config.grace;
        let started = Instant::now();
        let reply = match self.worker()?.request(&req, Some(deadline)) {
            Ok(reply) => reply,
            Err(WorkerFailure::Deadline) => {
                self.worker = None;
                let elapsed = started.elapsed().as_secs_f64();
                let result = ExecutionResult::failed(ErrorKind::Timeout, "execution exceeded the time limit", elapsed);
                return Ok((result, Vec::new()));
            }
            Err(e) => {
                self.worker = None;
                return Err(e.into());
            }
        };
        let api_calls: Vec<String> = reply
            .get("api_calls")
            .map(|v| serde_json::from_value(v.clone()))
            .transpose()
            .map_err(|e| RuntimeError::Reply(e.to_string()))?
            .unwrap_or_default();
        let result: ExecutionResult =
            serde_json::from_value(reply).map_err(|e| RuntimeError::Reply(e.to_string()))?;
        self.console.push_str(&result.stream_output);
        let keep = !matches!(result.error_kind(), Some(ErrorKind::Timeout | ErrorKind::Syntax));
        if keep {
            self.history.push(code.to_string());
            self.since_base.push(code.to_string());
        }
        Ok((result, api_calls))
    }

    pub fn reset(&mut self) -> Result<(), RuntimeError> {
        self.worker()?.request(&json!({"op": "reset"}), None)?;
        self.history.clear();
        self.console.clear();
        self.base = None;
        self.since_base.clear();
        Ok(())
    }

    pub fn snapshot(&mut self) -> Result<Snapshot, RuntimeError> {
        let policy = self.config.snapshot_policy;
        let reply = self.worker()?.request(&json!({"op": "snapshot"}), None)?;
        let blob = reply.get("blob").and_then(Json::as_str).map(str::to_string);
        let unpicklable: Vec<String> = reply
            .get("unpicklable")
            .and_then(|v| serde_json::from_value(v.clone()).ok())
            .unwrap_or_default();
        if policy == SnapshotPolicy::Strict {
            if let Some(name) = unpicklable.first() {
                return Err(RuntimeError::SnapshotUnsupported { name: name.clone() });
            }
        }
        Ok(Snapshot {
            inner: Arc::new(SnapshotData {
                blob,
                unpicklable,
                code_history: self.history.clone(),
                console_log: self.console.clone(),
            }),
        })
    }

    pub fn restore(&mut self, snapshot: &Snapshot) -> Result<(), RuntimeError> {
        let mut worker = match self.worker.take() {
            Some(w) => w,
            None => Worker::spawn(&self.config.python, &self.workdir)?,
        };
        let loaded = self.load(&mut worker, snapshot);
        if loaded.is_ok() {
            self.worker = Some(worker);
        }
        loaded?;
        self.history = snapshot.inner.code_history.clone();
        self.console = snapshot.inner.console_log.clone();
        self.base = Some(snapshot.clone());
        self.since_base.clear();
        Ok(())
    }

    /// Values of the named variables (all user variables when `None`).
    /// Missing names map to `None`.
    pub fn view(&mut self, names: Option<&[String]>) -> Result<BTreeMap<String, Option<Value>>, RuntimeError> {
        let max_cells = self.config.max_cells;
        let reply = self
            .worker()?
            .request(&json!({"op": "view", "names": names, "max_cells": max_cells}), None)?;
        serde_json::from_value(reply["values"].clone()).map_err(|e| RuntimeError::Reply(e.to_string()))
    }

    /// All user variables, present ones only.
    pub fn values(&mut self) -> Result<BTreeMap<String, Value>, RuntimeError> {
        Ok(self
            .view(None)?
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k, v)))
            .collect())
    }

    /// Variable names mapped to a short kind label (`DataFrame`, `module`, ...).
    pub fn variable_kinds(&mut self) -> Result<BTreeMap<String, String>, RuntimeError> {
        let reply = self.worker()?.request(&json!({"op": "names"}), None)?;
        serde_json::from_value(reply["names"].clone()).map_err(|e| RuntimeError::Reply(e.to_string()))
    }

    pub fn variable_names(&mut self) -> Result<BTreeSet<String>, RuntimeError> {
        Ok(self.variable_kinds()?.into_keys().collect())
    }

    pub(crate) fn summaries(&mut self) -> Result<Json, RuntimeError> {
        let reply = self.worker()?.request(&json!({"op": "summaries"}), None)?;
        Ok(reply["variables"].clone())
    }

    /// Calls `function` from the namespace on deep copies of `args`.
    ///
    /// String arguments wrapped in backticks are evaluated as Python
    /// expressions against the namespace; anything else is passed as a
    /// literal.
    pub fn call_function(
        &mut self,
        function: &str,
        args: &[Json],
        input_validator: Option<&str>,
        max_time: Option<f64>,
    ) -> Result<CallOutcome, RuntimeError> {
        let max_time = max_time.unwrap_or(self.config.default_max_time);
        let req = json!({
            "op": "call",
            "function": function,
            "args": args,
            "input_validator": input_validator,
            "max_time": max_time,
            "max_cells": self.config.max_cells,
        });
        let deadline = Duration::from_secs_f64(max_time * 2.0) + self.config.grace;
        let reply = match self.worker()?.request(&req, Some(deadline)) {
            Ok(r) => r,
            Err(WorkerFailure::Deadline) => {
                self.worker = None;
                return Ok(CallOutcome::Raised(timeout_error()));
            }
            Err(e) => {
                self.worker = None;
                return Err(e.into());
            }
        };
        let error = || serde_json::from_value(reply["error"].clone()).map_err(|e| RuntimeError::Reply(e.to_string()));
        match reply["status"].as_str() {
            Some("ok") => Ok(CallOutcome::Returned(
                serde_json::from_value(reply["result"].clone()).map_err(|e| RuntimeError::Reply(e.to_string()))?,
            )),
            Some("raised") => Ok(CallOutcome::Raised(error()?)),
            Some("bad-input") => Ok(CallOutcome::BadInput(error()?)),
            Some("missing") => Ok(CallOutcome::Missing),
            other => Err(RuntimeError::Reply(format!("call status {other:?}"))),
        }
    }

    /// Scores a fitted estimator held in `model` on `x`/`y` (expressions).
    pub fn score_model(
        &mut self,
        model: &str,
        x: &str,
        y: &str,
        metric: Option<&str>,
        max_time: Option<f64>,
    ) -> Result<ScoreOutcome, RuntimeError> {
        let max_time = max_time.unwrap_or(self.config.default_max_time);
        let req = json!({"op": "score_model", "model": model, "x": x, "y": y, "metric": metric, "max_time": max_time});
        let deadline = Duration::from_secs_f64(max_time) + self.config.grace;
        let reply = match self.worker()?.request(&req, Some(deadline)) {
            Ok(r) => r,
            Err(WorkerFailure::Deadline) => {
                self.worker = None;
                return Ok(ScoreOutcome::Raised(timeout_error()));
            }
            Err(e) => {
                self.worker = None;
                return Err(e.into());
            }
        };
        match reply["status"].as_str() {
            Some("ok") => Ok(ScoreOutcome::Score(reply["score"].as_f64().unwrap_or(f64::NAN))),
            Some("raised") => Ok(ScoreOutcome::Raised(
                serde_json::from_value(reply["error"].clone()).map_err(|e| RuntimeError::Reply(e.to_string()))?,
            )),
            _ => Ok(ScoreOutcome::Missing(
                reply["message"].as_str().unwrap_or("model not found").to_string(),
            )),
        }
    }
}

fn timeout_error() -> crate::result::ExecError {
    crate::result::ExecError {
        kind: ErrorKind::Timeout,
        message: "execution exceeded the time limit".into(),
        traceback: String::new(),
    }
}
