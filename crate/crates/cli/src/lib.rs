//! The `dseval` command line and the corpus analysis driver behind `analyze`.

pub mod analyze;
pub mod cli;

pub use analyze::{analyze_file, summarize_corpus, AnalyzeOptions, CorpusSummary, ProblemsetAnalysis};
pub use cli::{execute, Cli};
