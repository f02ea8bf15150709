//! Bootstraps new problemsets with an LLM: seeds are sketched, sketches are
//! expanded into full problemset files, and human-revised files are accepted
//! into a pool that feeds later prompts.

pub mod pipeline;
pub mod prompts;
pub mod seed;
pub mod state;

pub use pipeline::{Annotator, AnnotatorConfig, DraftReport};
pub use prompts::{count_examples, select_examples, Guide, DATASET_PLACEHOLDER, DEFAULT_FEW_SHOT_CAP};
pub use seed::{load_seeds, IdeaSeed};
pub use state::{AcceptedProblemset, AnnotationState, SeedProgress, Stage, UsageEntry};

#[derive(Debug, thiserror::Error)]
pub enum AnnotateError {
    #[error("invalid seed: {0}")]
    Seed(String),
    #[error("annotation state: {0}")]
    State(String),
    #[error("seed `{0}` has no sketch yet")]
    MissingSketch(String),
    #[error("problemset does not parse: {0}")]
    Parse(String),
    #[error("integrity check failed{}: {message}", problem_index.map(|i| format!(" at problem {i}")).unwrap_or_default())]
    Integrity {
        problem_index: Option<usize>,
        message: String,
    },
    #[error(transparent)]
    Llm(#[from] dseval_agents::LlmError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
