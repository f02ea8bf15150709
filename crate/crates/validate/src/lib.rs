//! Validation of agent submissions against reference executions, verdict
//! classification and pass-rate metrics.

pub mod classify;
pub mod compare;
pub mod context;
pub mod judge;
pub mod metrics;
pub mod outcome;
pub mod templates;
pub mod validators;
pub mod verdict;

pub use classify::{classify_verdict, crash_subcategory, partially_contains, result_options, ClassifyInput};
pub use compare::{compare_values, CompareOptions, Comparison, Mismatch, MismatchKind};
pub use context::{ReferenceProbe, SessionProbe, ValidationContext};
pub use judge::{judge, Judgement};
pub use metrics::{aggregate_metrics, round1, EvalMode, Metrics};
pub use outcome::{Failure, Outcome};
pub use templates::{standard_templates, Template};
pub use validators::{standard_validators, CompositeMode, Engine, Validator, DEFAULT_MODEL_TOLERANCE};
pub use verdict::{Category, SubCategory, Verdict, VerdictLabel};

use dseval_runtime::RuntimeError;

#[derive(Debug, thiserror::Error)]
pub enum ValidationError {
    /// The problem's validator configuration cannot be applied.
    #[error("validator configuration error: {0}")]
    Config(String),
    #[error("unknown validator `{0}`")]
    UnknownValidator(String),
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
}

impl ValidationError {
    pub fn is_config(&self) -> bool {
        !matches!(self, ValidationError::Runtime(_))
    }
}
