//! Corpus statistics: difficulty scores, dependency graphs, API coverage and
//! session-context sizes.

pub mod contexts;
pub mod coverage;
pub mod deps;
pub mod difficulty;

pub use contexts::{context_samples, summarize_contexts, summarize_samples, ContextSample, ContextSummary};
pub use coverage::{extract_api_coverage, ApiCoverage, UNRESOLVED};
pub use deps::{
    extract_dependencies, DependencyEdge, DependencyGraph, DependencyKind, LlmSemanticClassifier, SemanticClassifier,
};
pub use difficulty::{score_difficulty, DifficultyScore};

use serde::{Deserialize, Serialize};

/// Mean and spread of difficulty totals over a set of problems.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DifficultyStats {
    pub problems: usize,
    pub mean: f64,
    pub min: usize,
    pub max: usize,
}

pub fn difficulty_stats<'a, I>(scores: I) -> DifficultyStats
where
    I: IntoIterator<Item = &'a DifficultyScore>,
{
    let totals: Vec<usize> = scores.into_iter().map(|s| s.total).collect();
    if totals.is_empty() {
        return DifficultyStats::default();
    }
    DifficultyStats {
        problems: totals.len(),
        mean: totals.iter().sum::<usize>() as f64 / totals.len() as f64,
        min: *totals.iter().min().unwrap_or(&0),
        max: *totals.iter().max().unwrap_or(&0),
    }
}
