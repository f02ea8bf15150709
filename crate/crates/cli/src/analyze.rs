use std::path::{Path, PathBuf};
use std::sync::Arc;

use dseval_agents::LlmClient;
use dseval_analysis::{
    context_samples, difficulty_stats, extract_api_coverage, extract_dependencies, score_difficulty,
    summarize_samples, ApiCoverage, ContextSample, ContextSummary, DependencyGraph, DifficultyScore, DifficultyStats,
    LlmSemanticClassifier, SemanticClassifier,
};
use dseval_runner::prepare_problemset;
use dseval_runtime::{build_ground_truth, Session, SessionConfig};
use serde::Serialize;

#[derive(Clone)]
pub struct AnalyzeOptions {
    pub difficulty: bool,
    pub deps: bool,
    pub api_coverage: bool,
    pub contexts: bool,
    pub semantic: Option<Arc<dyn LlmClient>>,
    pub cache_dir: PathBuf,
    pub offline: bool,
    pub session: SessionConfig,
}

impl AnalyzeOptions {
    pub fn all(cache_dir: impl Into<PathBuf>) -> Self {
        AnalyzeOptions {
            difficulty: true,
            deps: true,
            api_coverage: true,
            contexts: true,
            semantic: None,
            cache_dir: cache_dir.into(),
            offline: false,
            session: SessionConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DifficultyReport {
    pub stats: DifficultyStats,
    pub per_problem: Vec<DifficultyScore>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DependencyReport {
    pub mean_in_degree: f64,
    pub max_chain_length: usize,
    pub graph: DependencyGraph,
}

/// One JSON line of `analyze` output.
#[derive(Debug, Clone, Serialize)]
pub struct ProblemsetAnalysis {
    pub problemset: String,
    pub path: PathBuf,
    pub problems: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<DifficultyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dependencies: Option<DependencyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub api_coverage: Option<ApiCoverage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contexts: Option<ContextSummary>,
    #[serde(skip)]
    pub context_samples: Vec<ContextSample>,
    /// Why part of the analysis could not be done.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

pub fn analyze_file(path: &Path, opts: &AnalyzeOptions) -> ProblemsetAnalysis {
    let mut out = ProblemsetAnalysis {
        problemset: path.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
        path: path.to_path_buf(),
        problems: 0,
        difficulty: None,
        dependencies: None,
        api_coverage: None,
        contexts: None,
        context_samples: Vec::new(),
        errors: Vec::new(),
    };
    let prepared = match prepare_problemset(path, &opts.cache_dir, opts.offline, &opts.session) {
        Ok(p) => p,
        Err(report) => {
            out.errors.push(report.message);
            return out;
        }
    };
    let ps = &prepared.problemset;
    out.problemset = ps.id.clone();
    out.problems = ps.problems.len();

    if opts.difficulty {
        let mut per_problem = Vec::new();
        for p in &ps.problems {
            match score_difficulty(&p.reference_code) {
                Ok(s) => per_problem.push(s),
                Err(e) => out.errors.push(format!("difficulty of problem {}: {e}", p.index)),
            }
        }
        out.difficulty = Some(DifficultyReport {
            stats: difficulty_stats(&per_problem),
            per_problem,
        });
    }

    if opts.deps || opts.contexts {
        let gt = Session::start(prepared.session.clone())
            .map_err(|e| e.to_string())
            .and_then(|mut s| build_ground_truth(ps, &mut s).map_err(|e| e.to_string()));
        match gt {
            Ok(gt) => {
                if opts.deps {
                    let classifier = opts.semantic.clone().map(|client| LlmSemanticClassifier { client });
                    let graph = extract_dependencies(ps, &gt, classifier.as_ref().map(|c| c as &dyn SemanticClassifier));
                    out.dependencies = Some(DependencyReport {
                        mean_in_degree: graph.mean_in_degree(),
                        max_chain_length: graph.max_chain_length(),
                        graph,
                    });
                }
                if opts.contexts {
                    out.context_samples = context_samples(&gt);
                    out.contexts = Some(summarize_samples(&out.context_samples));
                }
            }
            Err(e) => out.errors.push(format!("ground truth: {e}")),
        }
    }

    if opts.api_coverage {
        match Session::start(prepared.session.clone()).and_then(|mut s| extract_api_coverage(ps, &mut s)) {
            Ok(cov) => out.api_coverage = Some(cov),
            Err(e) => out.errors.push(format!("api coverage: {e}")),
        }
    }
    out
}

/// Aggregates over every analyzed problemset.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CorpusSummary {
    pub problemsets: usize,
    pub problems: usize,
    pub difficulty: DifficultyStats,
    /// Edges over nodes, pooled across all dependency graphs.
    pub mean_in_degree: Option<f64>,
    pub max_chain_length: Option<usize>,
    pub api_coverage: Option<ApiCoverage>,
    pub contexts: Option<ContextSummary>,
}

pub fn summarize_corpus(items: &[ProblemsetAnalysis]) -> CorpusSummary {
    let scores: Vec<&DifficultyScore> = items
        .iter()
        .filter_map(|a| a.difficulty.as_ref())
        .flat_map(|d| d.per_problem.iter())
        .collect();
    let graphs: Vec<&DependencyReport> = items.iter().filter_map(|a| a.dependencies.as_ref()).collect();
    let (edges, nodes) = graphs
        .iter()
        .fold((0, 0), |(e, n), g| (e + g.graph.edges.len(), n + g.graph.nodes.len()));
    let coverage = items.iter().filter_map(|a| a.api_coverage.as_ref()).fold(None, |acc: Option<ApiCoverage>, c| {
        let mut acc = acc.unwrap_or_default();
        acc.merge(c);
        Some(acc)
    });
    let samples: Vec<ContextSample> = items.iter().flat_map(|a| a.context_samples.iter().cloned()).collect();
    CorpusSummary {
        problemsets: items.len(),
        problems: items.iter().map(|a| a.problems).sum(),
        difficulty: difficulty_stats(scores),
        mean_in_degree: (nodes > 0).then(|| edges as f64 / nodes as f64),
        max_chain_length: graphs.iter().map(|g| g.max_chain_length).max(),
        api_coverage: coverage,
        contexts: items.iter().any(|a| a.contexts.is_some()).then(|| summarize_samples(&samples)),
    }
}
