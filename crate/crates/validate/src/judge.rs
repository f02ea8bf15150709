//! One-call evaluation of a submission against a ground-truth step.

use dseval_core::Problem;
use dseval_runtime::{ExecutionResult, GroundTruthStep, Session, SessionConfig};

use crate::classify::{classify_verdict, result_options, ClassifyInput};
use crate::context::{ReferenceProbe, ValidationContext};
use crate::outcome::Outcome;
use crate::validators::{CompositeMode, Engine};
use crate::verdict::Verdict;
use crate::ValidationError;

#[derive(Debug, Clone)]
pub struct Judgement {
    pub outcome: Outcome,
    pub verdict: Verdict,
}

/// Validates `code` (already executed in `submission`, producing `result`)
/// and classifies the outcome. Composites are always run exhaustively so the
/// classifier sees every failing node. `reference_slot` holds a reusable
/// reference session; it is started on demand.
#[allow(clippy::too_many_arguments)]
pub fn judge(
    engine: &Engine,
    problem: &Problem,
    step: &GroundTruthStep,
    reference_config: &SessionConfig,
    code: &str,
    result: &ExecutionResult,
    submission: &mut Session,
    reference_slot: &mut Option<Session>,
) -> Result<Judgement, ValidationError> {
    let engine = engine.clone().with_mode(CompositeMode::Exhaustive);
    let tree = engine.expand(&problem.validator)?;
    let mut reference = ReferenceProbe::new(&step.post, reference_config, reference_slot);
    let outcome = {
        let mut ctx = ValidationContext::from_step(problem, code, result, submission, step, &mut reference);
        engine.run(&tree, &mut ctx)?
    };
    let verdict = classify_verdict(&ClassifyInput {
        code,
        result,
        reference_result: &step.reference_result,
        outcome: &outcome,
        result_options: result_options(&tree),
    });
    Ok(Judgement { outcome, verdict })
}
