//! Python execution sessions.
//!
//! Each [`Session`] drives a dedicated `python3` worker process over a
//! line-delimited JSON protocol. The worker keeps the namespace, captures
//! console output and trailing-expression values, enforces time limits and
//! serializes the namespace for snapshots.

pub mod describe;
pub mod ground_truth;
pub mod result;
pub mod session;
mod worker;

pub use describe::{describe_variables, render_summaries, DescribeStyle, VariableSummary};
pub use ground_truth::{build_ground_truth, GroundTruth, GroundTruthError, GroundTruthStep, Values};
pub use result::{ErrorKind, ExecError, ExecutionResult, ResultValue};
pub use session::{
    CallOutcome, RuntimeError, ScoreOutcome, Session, SessionConfig, Snapshot, SnapshotPolicy, DEFAULT_MAX_TIME,
};
pub use worker::{python_command, WorkerFailure};
