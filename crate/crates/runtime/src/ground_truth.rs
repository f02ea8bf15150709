//! Reference executions of a problemset.

use std::collections::BTreeMap;
use std::sync::Arc;

use dseval_core::{Problemset, Value};

use crate::result::ExecutionResult;
use crate::session::{RuntimeError, Session, Snapshot};

pub type Values = Arc<BTreeMap<String, Value>>;

/// Reference state around one problem.
#[derive(Debug, Clone)]
pub struct GroundTruthStep {
    pub pre: Snapshot,
    pub post: Snapshot,
    pub reference_result: ExecutionResult,
    pub pre_values: Values,
    pub post_values: Values,
}

impl GroundTruthStep {
    /// Variables the reference code created or changed.
    pub fn changed_names(&self) -> Vec<String> {
        self.post_values
            .iter()
            .filter(|(k, v)| self.pre_values.get(*k) != Some(*v))
            .map(|(k, _)| k.clone())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub problemset_id: String,
    pub preamble_result: ExecutionResult,
    pub steps: Vec<GroundTruthStep>,
}

#[derive(Debug, thiserror::Error)]
pub enum GroundTruthError {
    #[error("problemset `{problemset}`: preamble failed: {message}")]
    Preamble { problemset: String, message: String },
    #[error("problemset `{problemset}`: reference code of problem {index} failed: {message}")]
    Reference {
        problemset: String,
        index: usize,
        message: String,
    },
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
}

impl GroundTruthError {
    pub fn problem_index(&self) -> Option<usize> {
        match self {
            GroundTruthError::Reference { index, .. } => Some(*index),
            _ => None,
        }
    }
}

/// Runs the preamble and every reference solution in order on a reset
/// session, capturing snapshots and variable values around each problem.
pub fn build_ground_truth(ps: &Problemset, session: &mut Session) -> Result<GroundTruth, GroundTruthError> {
    session.reset()?;
    let preamble_result = if ps.preamble.trim().is_empty() {
        ExecutionResult::default()
    } else {
        session.run(&ps.preamble, None)?
    };
    if let Some(err) = &preamble_result.error {
        return Err(GroundTruthError::Preamble {
            problemset: ps.id.clone(),
            message: err.message.clone(),
        });
    }

    let mut steps = Vec::with_capacity(ps.problems.len());
    let mut pre = session.snapshot()?;
    let mut pre_values: Values = Arc::new(session.values()?);
    for problem in &ps.problems {
        let result = session.run(&problem.reference_code, problem.execution.max_time)?;
        if let Some(err) = &result.error {
            return Err(GroundTruthError::Reference {
                problemset: ps.id.clone(),
                index: problem.index,
                message: format!("{}: {}", err.kind, err.message),
            });
        }
        let post = session.snapshot()?;
        let post_values: Values = Arc::new(session.values()?);
        steps.push(GroundTruthStep {
            pre: pre.clone(),
            post: post.clone(),
            reference_result: result,
            pre_values: Arc::clone(&pre_values),
            post_values: Arc::clone(&post_values),
        });
        pre = post;
        pre_values = post_values;
    }
    Ok(GroundTruth {
        problemset_id: ps.id.clone(),
        preamble_result,
        steps,
    })
}
