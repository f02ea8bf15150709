//! End-to-end benchmark runs.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::time::{Duration, Instant};

use dseval_agents::{
    create_agent, repair_strategy, run_with_repair, standard_agents, standard_repair_strategies, AgentFactory,
    AgentRequest, AgentSettings, ContextOrder, RepairStrategy, Resample,
};
use dseval_core::{discover, parse_problemset, ParseError, Problemset, Registry};
use dseval_runtime::{
    build_ground_truth, describe_variables, DescribeStyle, RuntimeError, Session, SessionConfig,
};
use dseval_validate::{aggregate_metrics, judge, Engine, EvalMode, Metrics, ValidationError};
use serde::{Deserialize, Serialize};

use crate::provision::{merged_manifest, provision_data, ProvisionOptions};
use crate::record::{EvaluationRecord, JsonlWriter, PassFlags, ResultSummary};
use crate::report::{emit_report, format_for_path, standard_report_formats, ReportError, ReportFormat};

/// Which relaxed verdicts count as passing in [`RunOutput::relaxed_pass_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Relaxations {
    pub intact: bool,
    pub presentation: bool,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// A directory of problemset files, or a single file.
    pub benchmark: PathBuf,
    pub agent: String,
    pub modes: Vec<EvalMode>,
    pub relax: Relaxations,
    /// `None` for single-shot evaluation.
    pub repair: Option<String>,
    pub max_attempts: usize,
    pub parallel: usize,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub report_format: Option<String>,
    pub cache_dir: PathBuf,
    pub offline: bool,
    pub agent_deadline: Duration,
    pub context_order: ContextOrder,
    pub describe_style: DescribeStyle,
    pub session: SessionConfig,
}

impl RunConfig {
    pub fn new(benchmark: impl Into<PathBuf>, agent: impl Into<String>) -> Self {
        RunConfig {
            benchmark: benchmark.into(),
            agent: agent.into(),
            modes: vec![EvalMode::Reset],
            relax: Relaxations::default(),
            repair: None,
            max_attempts: 1,
            parallel: 1,
            out: None,
            report: None,
            report_format: None,
            cache_dir: std::env::temp_dir().join("dseval-cache"),
            offline: false,
            agent_deadline: dseval_agents::DEFAULT_AGENT_DEADLINE,
            context_order: ContextOrder::default(),
            describe_style: DescribeStyle::default(),
            session: SessionConfig::default(),
        }
    }

    pub fn with_modes(mut self, modes: &[EvalMode]) -> Self {
        self.modes = modes.to_vec();
        self
    }
}

/// A problemset (or one of its problems) that could not be evaluated because
/// its own reference material is broken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrityReport {
    pub problemset: String,
    pub path: PathBuf,
    pub problem_index: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<EvaluationRecord>,
    pub metrics: Metrics,
    pub integrity: Vec<IntegrityReport>,
    pub relax: Relaxations,
}

impl RunOutput {
    /// Percentage of records passing under the configured relaxations.
    pub fn relaxed_pass_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        let hits = self
            .records
            .iter()
            .filter(|r| {
                r.pass.strict || (self.relax.intact && r.pass.wo_intact) || (self.relax.presentation && r.pass.wo_pe)
            })
            .count();
        hits as f64 * 100.0 / self.records.len() as f64
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("no problemset files found under {0}")]
    NoProblemsets(PathBuf),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error("agent failed on {problemset}#{problem_index}: {message} ({records_written} records kept)")]
    Agent {
        problemset: String,
        problem_index: usize,
        message: String,
        records_written: usize,
    },
    #[error("runtime failure in {problemset}: {source}")]
    Runtime {
        problemset: String,
        #[source]
        source: RuntimeError,
    },
    #[error("records file: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Report(#[from] ReportError),
}

/// Strategy registries the runner draws from.
#[derive(Clone)]
pub struct Runner {
    pub agents: Registry<dyn AgentFactory>,
    pub repairs: Registry<dyn RepairStrategy>,
    pub reports: Registry<dyn ReportFormat>,
    pub engine: Engine,
}

impl Default for Runner {
    fn default() -> Self {
        Runner {
            agents: standard_agents(),
            repairs: standard_repair_strategies(),
            reports: standard_report_formats(),
            engine: Engine::standard(),
        }
    }
}

pub fn run_benchmark(config: &RunConfig) -> Result<RunOutput, RunError> {
    Runner::default().run(config)
}

/// Parses every problemset of a benchmark in path order.
pub fn load_benchmark(path: &Path) -> Result<Vec<Problemset>, RunError> {
    let files = if path.is_file() {
        vec![path.to_path_buf()]
    } else {
        discover(path).map_err(|e| RunError::Config(format!("reading {}: {e}", path.display())))?
    };
    if files.is_empty() {
        return Err(RunError::NoProblemsets(path.to_path_buf()));
    }
    files.iter().map(|f| parse_problemset(f).map_err(RunError::from)).collect()
}

fn benchmark_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

enum JobFailure {
    Integrity(IntegrityReport),
    Fatal(RunError),
}

struct Shared<'a> {
    runner: &'a Runner,
    config: &'a RunConfig,
    settings: AgentSettings,
    strategy: Arc<dyn RepairStrategy>,
    benchmark: String,
    abort: AtomicBool,
}

impl Runner {
    pub fn run(&self, config: &RunConfig) -> Result<RunOutput, RunError> {
        if config.parallel == 0 {
            return Err(RunError::Config("parallelism must be at least 1".into()));
        }
        if config.modes.is_empty() {
            return Err(RunError::Config("at least one evaluation mode is required".into()));
        }
        let problemsets = load_benchmark(&config.benchmark)?;
        let strategy: Arc<dyn RepairStrategy> = match &config.repair {
            None => Arc::new(Resample),
            Some(name) => repair_strategy(&self.repairs, name)
                .ok_or_else(|| RunError::Config(format!("unknown repair strategy `{name}`")))?,
        };
        let settings = AgentSettings {
            deadline: config.agent_deadline,
            context_order: config.context_order.clone(),
            ..AgentSettings::default()
        };
        let probe = create_agent(&self.agents, &config.agent, &settings)
            .map_err(|e| RunError::Config(e.to_string()))?;
        let parallel = if probe.concurrent_safe() {
            config.parallel.min(problemsets.len())
        } else {
            1
        };
        drop(probe);

        let mut writer = match &config.out {
            Some(path) => Some(JsonlWriter::create(path)?),
            None => None,
        };
        let (tx, rx) = mpsc::channel::<EvaluationRecord>();
        let shared = Shared {
            runner: self,
            config,
            settings,
            strategy,
            benchmark: benchmark_id(&config.benchmark),
            abort: AtomicBool::new(false),
        };
        let queue: Mutex<VecDeque<(usize, &Problemset)>> = Mutex::new(problemsets.iter().enumerate().collect());
        let results: Mutex<Vec<(usize, Result<(), JobFailure>)>> = Mutex::new(Vec::new());

        let mut streamed = Vec::new();
        let write_result = std::thread::scope(|scope| {
            for _ in 0..parallel {
                let (shared, queue, results, sink) = (&shared, &queue, &results, tx.clone());
                scope.spawn(move || loop {
                    if shared.abort.load(Ordering::SeqCst) {
                        break;
                    }
                    let Some((i, ps)) = queue.lock().expect("queue lock").pop_front() else {
                        break;
                    };
                    let res = shared.run_problemset(ps, &sink);
                    if matches!(res, Err(JobFailure::Fatal(_))) {
                        shared.abort.store(true, Ordering::SeqCst);
                    }
                    results.lock().expect("results lock").push((i, res));
                });
            }
            drop(tx);
            // Single writer: records hit the file as they arrive, before any
            // aggregation happens.
            let mut io_result: std::io::Result<()> = Ok(());
            for rec in rx {
                if let (Some(w), Ok(())) = (writer.as_mut(), &io_result) {
                    io_result = w.write(&rec);
                }
                streamed.push(rec);
            }
            io_result
        });
        write_result?;
        let written = streamed.len();

        let mut integrity = Vec::new();
        let mut fatal = None;
        let mut results = results.into_inner().expect("results lock");
        results.sort_by_key(|(i, _)| *i);
        for (_, res) in results {
            match res {
                Ok(()) => {}
                Err(JobFailure::Integrity(r)) => integrity.push(r),
                Err(JobFailure::Fatal(e)) => {
                    if fatal.is_none() {
                        fatal = Some(e);
                    }
                }
            }
        }
        for r in &integrity {
            log::warn!("integrity: {} ({}): {}", r.problemset, r.path.display(), r.message);
        }
        if let Some(err) = fatal {
            return Err(match err {
                RunError::Agent {
                    problemset,
                    problem_index,
                    message,
                    ..
                } => RunError::Agent {
                    problemset,
                    problem_index,
                    message,
                    records_written: written,
                },
                other => other,
            });
        }

        let order: Vec<&str> = problemsets.iter().map(|p| p.id.as_str()).collect();
        let mut records = streamed;
        records.sort_by_key(|r| {
            (
                order.iter().position(|id| *id == r.problemset).unwrap_or(usize::MAX),
                r.mode == EvalMode::Propagate,
                r.problem_index,
            )
        });
        let metrics = aggregate_metrics(records.iter().map(|r| (r.mode, &r.verdict)));
        if let Some(path) = &config.report {
            let format = config
                .report_format
                .as_deref()
                .or_else(|| format_for_path(path))
                .unwrap_or("html");
            emit_report(&self.reports, format, &records, &metrics, path)?;
        }
        Ok(RunOutput {
            records,
            metrics,
            integrity,
            relax: config.relax,
        })
    }
}

impl Shared<'_> {
    fn integrity(&self, ps: &Problemset, index: Option<usize>, message: String) -> JobFailure {
        JobFailure::Integrity(IntegrityReport {
            problemset: ps.id.clone(),
            path: ps.source_path.clone(),
            problem_index: index,
            message,
        })
    }

    fn runtime(&self, ps: &Problemset, source: RuntimeError) -> JobFailure {
        JobFailure::Fatal(RunError::Runtime {
            problemset: ps.id.clone(),
            source,
        })
    }

    fn run_problemset(&self, ps: &Problemset, sink: &mpsc::Sender<EvaluationRecord>) -> Result<(), JobFailure> {
        let inputs = tempfile::Builder::new()
            .prefix("dseval-inputs-")
            .tempdir()
            .map_err(|e| JobFailure::Fatal(RunError::Io(e)))?;
        let manifest =
            merged_manifest(ps.problems.iter().map(|p| &p.data)).map_err(|m| self.integrity(ps, None, m))?;
        let base = ps.source_path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut popts = ProvisionOptions::new(&self.config.cache_dir, base);
        popts.offline = self.config.offline;
        provision_data(&manifest, inputs.path(), &popts).map_err(|e| self.integrity(ps, None, e.to_string()))?;
        let session_config = self.config.session.clone().with_inputs(inputs.path());

        let gt = {
            let mut reference = Session::start(session_config.clone()).map_err(|e| self.runtime(ps, e))?;
            build_ground_truth(ps, &mut reference).map_err(|e| self.integrity(ps, e.problem_index(), e.to_string()))?
        };
        let mut reference_slot: Option<Session> = None;
        let mut agent = create_agent(&self.runner.agents, &self.config.agent, &self.settings)
            .map_err(|e| JobFailure::Fatal(RunError::Config(e.to_string())))?;
        agent.begin_problemset(ps).map_err(|e| {
            JobFailure::Fatal(RunError::Agent {
                problemset: ps.id.clone(),
                problem_index: 0,
                message: e.to_string(),
                records_written: 0,
            })
        })?;
        let agent_id = agent.id();

        for &mode in &self.config.modes {
            let mut session = Session::start(session_config.clone()).map_err(|e| self.runtime(ps, e))?;
            if !ps.preamble.trim().is_empty() {
                session.run(&ps.preamble, None).map_err(|e| self.runtime(ps, e))?;
            }
            for (i, problem) in ps.problems.iter().enumerate() {
                if self.abort.load(Ordering::SeqCst) {
                    return Ok(());
                }
                let step = &gt.steps[i];
                if mode == EvalMode::Reset {
                    session.restore(&step.pre).map_err(|e| self.runtime(ps, e))?;
                }
                let started = Instant::now();
                let request = AgentRequest {
                    problemset_id: ps.id.clone(),
                    problem_index: problem.index,
                    query: problem.query.clone(),
                    variable_description: describe_variables(&mut session, self.config.describe_style)
                        .map_err(|e| self.runtime(ps, e))?,
                    code_history: session.code_history().to_vec(),
                    round_index: 0,
                    repair_feedback: None,
                };
                let engine = &self.runner.engine;
                let run = run_with_repair(
                    agent.as_mut(),
                    &request,
                    &mut session,
                    self.strategy.as_ref(),
                    if self.config.repair.is_some() { self.config.max_attempts } else { 1 },
                    |session: &mut Session, response| -> Result<_, ValidationError> {
                        let result = session.execute(&response.code, &problem.execution)?;
                        let j = judge(
                            engine,
                            problem,
                            step,
                            &session_config,
                            &response.code,
                            &result,
                            session,
                            &mut reference_slot,
                        )?;
                        Ok((result, j.verdict))
                    },
                );
                let run = match run {
                    Ok(run) => run,
                    Err(ValidationError::Runtime(e)) => return Err(self.runtime(ps, e)),
                    Err(e) => return Err(self.integrity(ps, Some(problem.index), e.to_string())),
                };
                let Some(last) = run.final_attempt() else {
                    return Err(JobFailure::Fatal(RunError::Agent {
                        problemset: ps.id.clone(),
                        problem_index: problem.index,
                        message: run.agent_error.clone().unwrap_or_else(|| "no response".into()),
                        records_written: 0,
                    }));
                };
                let mut usage = None;
                for a in &run.attempts {
                    if let Some(u) = a.response.token_usage {
                        *usage.get_or_insert_with(Default::default) += u;
                    }
                }
                let record = EvaluationRecord {
                    benchmark: self.benchmark.clone(),
                    problemset: ps.id.clone(),
                    problem_index: problem.index,
                    agent: agent_id.clone(),
                    mode,
                    query: problem.query.clone(),
                    code: last.response.code.clone(),
                    reference_code: problem.reference_code.clone(),
                    result: ResultSummary::from(&last.result),
                    pass: PassFlags::from(&last.verdict),
                    verdict: last.verdict.clone(),
                    attempts: run.attempts.len(),
                    token_usage: usage,
                    duration: started.elapsed().as_secs_f64(),
                    timestamp: chrono::Utc::now().to_rfc3339(),
                };
                // The receiver only disappears once the run is over.
                let _ = sink.send(record);
            }
        }
        Ok(())
    }
}
