use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dseval_agents::{create_llm_client, standard_llm_clients, ContextOrder};
use dseval_annotator::{load_seeds, AnnotationState, Annotator, AnnotatorConfig, IdeaSeed, Stage};
use dseval_runner::{check_problemset_file, Relaxations, RunConfig, RunError, Runner};
use dseval_runtime::{DescribeStyle, SessionConfig};
use dseval_validate::EvalMode;

use crate::analyze::{analyze_file, summarize_corpus, AnalyzeOptions};

#[derive(Debug, Parser)]
#[command(name = "dseval", version, about = "Evaluate data-science agents on DSEAL problemsets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an agent over a benchmark and write records and a report.
    Run(RunArgs),
    /// Parse problemset files and check that every reference passes.
    ValidateFile(ValidateArgs),
    /// Compute corpus statistics for a benchmark.
    Analyze(AnalyzeArgs),
    /// Bootstrap new problemsets from idea seeds.
    Annotate(AnnotateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Reset,
    Propagate,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RepairArg {
    None,
    SelfDebug,
    Resample,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Download cache for remote data files.
    #[arg(long, default_value_os_t = std::env::temp_dir().join("dseval-cache"))]
    pub cache_dir: PathBuf,
    /// Never download; remote data must already be cached.
    #[arg(long)]
    pub offline: bool,
    /// Python interpreter for sessions.
    #[arg(long, default_value = "python3")]
    pub python: String,
}

impl CommonArgs {
    fn session(&self) -> SessionConfig {
        SessionConfig {
            python: self.python.clone(),
            ..SessionConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub benchmark: PathBuf,
    /// Agent spec such as `oracle`, `scripted:FILE`, `process:CMD` or `llm:openai:MODEL`.
    #[arg(long)]
    pub agent: String,
    #[arg(long, value_enum, default_value = "reset")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "none")]
    pub repair: RepairArg,
    #[arg(long, default_value_t = 1)]
    pub max_attempts: usize,
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Report format; guessed from the report extension when omitted.
    #[arg(long)]
    pub report_format: Option<String>,
    /// Count intact violations as passes in the printed summary.
    #[arg(long)]
    pub relax_intact: bool,
    /// Count presentation errors as passes in the printed summary.
    #[arg(long)]
    pub relax_presentation: bool,
    /// Seconds an agent may take per request.
    #[arg(long, default_value_t = 120.0)]
    pub agent_deadline: f64,
    #[arg(long, default_value = "V+C+Q")]
    pub context_order: String,
    #[arg(long, default_value = "compact")]
    pub describe_style: String,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// A problemset file or a directory of them.
    pub benchmark: PathBuf,
    #[arg(long)]
    pub difficulty: bool,
    #[arg(long)]
    pub deps: bool,
    #[arg(long)]
    pub api_coverage: bool,
    #[arg(long)]
    pub contexts: bool,
    /// LLM spec used to look for semantic dependencies.
    #[arg(long)]
    pub semantic_llm: Option<String>,
    /// JSON-lines output; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for one Graphviz file per problemset.
    #[arg(long)]
    pub dot_dir: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StageArg {
    Sketch,
    Draft,
    Accept,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    #[arg(long)]
    pub seeds: PathBuf,
    #[arg(long)]
    pub workspace: PathBuf,
    /// LLM spec such as `stub:replies.yaml` or `openai:MODEL`.
    #[arg(long)]
    pub llm: String,
    #[arg(long, value_enum)]
    pub stage: StageArg,
    /// Only process this seed.
    #[arg(long)]
    pub seed: Option<String>,
    /// Revision notes recorded on acceptance.
    #[arg(long, default_value = "")]
    pub notes: String,
    /// Guideline appended to the guide on acceptance.
    #[arg(long)]
    pub amend: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    #[arg(long, default_value_t = 3)]
    pub max_parse_attempts: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Runs a command and returns the process exit code.
pub fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run(args) => run(args),
        Command::ValidateFile(args) => validate(args),
        Command::Analyze(args) => analyze(args),
        Command::Annotate(args) => annotate(args),
    }
}

fn run(args: RunArgs) -> Result<i32> {
    let mut config = RunConfig::new(&args.benchmark, &args.agent);
    config.modes = match args.mode {
        ModeArg::Reset => vec![EvalMode::Reset],
        ModeArg::Propagate => vec![EvalMode::Propagate],
        ModeArg::Both => vec![EvalMode::Reset, EvalMode::Propagate],
    };
    config.repair = match args.repair {
        RepairArg::None => None,
        RepairArg::SelfDebug => Some("self_debug".into()),
        RepairArg::Resample => Some("resample".into()),
    };
    config.max_attempts = args.max_attempts.max(1);
    config.parallel = args.parallel.max(1);
    config.out = args.out;
    config.report = args.report;
    config.report_format = args.report_format;
    config.relax = Relaxations {
        intact: args.relax_intact,
        presentation: args.relax_presentation,
    };
    config.cache_dir = args.common.cache_dir.clone();
    config.offline = args.common.offline;
    config.session = args.common.session();
    config.agent_deadline = Duration::from_secs_f64(args.agent_deadline);
    config.context_order = args
        .context_order
        .parse::<ContextOrder>()
        .map_err(anyhow::Error::msg)
        .context("--context-order")?;
    config.describe_style = args
        .describe_style
        .parse::<DescribeStyle>()
        .map_err(anyhow::Error::msg)
        .context("--describe-style")?;

    match Runner::default().run(&config) {
        Ok(output) => {
            for report in &output.integrity {
                match report.problem_index {
                    Some(i) => eprintln!("integrity: {} problem {i}: {}", report.problemset, report.message),
                    None => eprintln!("integrity: {}: {}", report.problemset, report.message),
                }
            }
            println!("{}", serde_json::to_string_pretty(&output.metrics)?);
            if config.relax.intact || config.relax.presentation {
                println!("relaxed pass rate: {:.1}", output.relaxed_pass_rate());
            }
            Ok(0)
        }
        Err(RunError::Agent {
            problemset,
            problem_index,
            message,
            records_written,
        }) => {
            eprintln!(
                "run aborted: agent failed on {problemset} problem {problem_index}: {message} ({records_written} records kept)"
            );
            Ok(1)
        }
        Err(e) => Err(e.into()),
    }
}

fn problemset_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let files = dseval_core::discover(path).with_context(|| format!("reading {}", path.display()))?;
    if files.is_empty() {
        bail!("no problemset files under {}", path.display());
    }
    Ok(files)
}

fn validate(args: ValidateArgs) -> Result<i32> {
    let session = args.common.session();
    let mut failures = 0;
    for path in &args.paths {
        for file in problemset_files(path)? {
            match check_problemset_file(&file, &args.common.cache_dir, args.common.offline, &session) {
                Ok((ps, _)) => println!("ok    {} ({} problems)", file.display(), ps.problems.len()),
                Err(report) => {
                    failures += 1;
                    match report.problem_index {
                        Some(i) => println!("FAIL  {} problem {i}: {}", file.display(), report.message),
                        None => println!("FAIL  {}: {}", file.display(), report.message),
                    }
                }
            }
        }
    }
    Ok(if failures == 0 { 0 } else { 1 })
}

fn analyze(args: AnalyzeArgs) -> Result<i32> {
    let none_selected = !(args.difficulty || args.deps || args.api_coverage || args.contexts);
    let semantic = match &args.semantic_llm {
        Some(spec) => Some(create_llm_client(&standard_llm_clients(), spec)?),
        None => None,
    };
    let opts = AnalyzeOptions {
        difficulty: args.difficulty || none_selected,
        deps: args.deps || none_selected,
        api_coverage: args.api_coverage || none_selected,
        contexts: args.contexts || none_selected,
        semantic,
        cache_dir: args.common.cache_dir.clone(),
        offline: args.common.offline,
        session: args.common.session(),
    };
    let mut sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout()),
    };
    if let Some(dir) = &args.dot_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut items = Vec::new();
    for file in problemset_files(&args.benchmark)? {
        let item = analyze_file(&file, &opts);
        for e in &item.errors {
            log::warn!("{}: {e}", file.display());
        }
        if let (Some(dir), Some(deps)) = (&args.dot_dir, &item.dependencies) {
            std::fs::write(dir.join(format!("{}.dot", item.problemset)), deps.graph.to_dot())?;
        }
        writeln!(sink, "{}", serde_json::to_string(&item)?)?;
        items.push(item);
    }
    let summary = summarize_corpus(&items);
    writeln!(sink, "{}", serde_json::json!({ "summary": summary }))?;
    sink.flush()?;
    Ok(0)
}

fn annotate(args: AnnotateArgs) -> Result<i32> {
    let seeds: Vec<IdeaSeed> = load_seeds(&args.seeds)?
        .into_iter()
        .filter(|s| args.seed.as_deref().map_or(true, |id| s.source_id == id))
        .collect();
    if seeds.is_empty() {
        bail!("no matching seeds in {}", args.seeds.display());
    }
    std::fs::create_dir_all(&args.workspace)?;
    let state_path = args.workspace.join("state.json");
    let templates = args.workspace.join("templates");
    let mut state = AnnotationState::load_or_default(&state_path)?;
    state.guide.write_templates(&templates)?;
    state.guide.load_templates(&templates)?;

    let client = create_llm_client(&standard_llm_clients(), &args.llm)?;
    let mut config = AnnotatorConfig::new(&args.workspace);
    config.rng_seed = args.rng_seed;
    config.max_parse_attempts = args.max_parse_attempts;
    config.session = args.common.session();
    let annotator = Annotator::new(client, config);
    let sketch_dir = args.workspace.join("sketches");

    let mut failures = 0;
    match args.stage {
        StageArg::Sketch => {
            let todo: Vec<IdeaSeed> = seeds
                .into_iter()
                .filter(|s| args.seed.is_some() || state.stage(&s.source_id) == Stage::Unstarted)
                .collect();
            let result = annotator.generate_sketches(&mut state, &todo);
            std::fs::create_dir_all(&sketch_dir)?;
            for seed in &todo {
                if let Some(sketch) = state.pending.get(&seed.source_id).and_then(|p| p.sketch.as_ref()) {
                    std::fs::write(sketch_dir.join(format!("{}.md", seed.source_id)), sketch)?;
                    println!("sketched {}", seed.source_id);
                }
            }
            if let Err(e) = result {
                eprintln!("{e}");
                failures += 1;
            }
        }
        StageArg::Draft => {
            for seed in &seeds {
                if args.seed.is_none() && state.stage(&seed.source_id) != Stage::Sketched {
                    continue;
                }
                // a hand-edited sketch file wins over the stored one
                let edited = sketch_dir.join(format!("{}.md", seed.source_id));
                if edited.exists() {
                    state.progress(&seed.source_id).sketch = Some(std::fs::read_to_string(&edited)?);
                }
                let report = annotator.generate_problemset(&mut state, seed)?;
                println!(
                    "drafted {} -> {} ({} attempts, {:?})",
                    seed.source_id,
                    report.path.display(),
                    report.attempts,
                    report.stage
                );
                for issue in &state.pending[&seed.source_id].issues {
                    println!("  needs revision: {issue}");
                }
            }
        }
        StageArg::Accept => {
            for seed in &seeds {
                let stage = state.stage(&seed.source_id);
                if args.seed.is_none()
                    && !matches!(stage, Stage::Drafted | Stage::DraftedWithErrors | Stage::Revised)
                {
                    continue;
                }
                let path = annotator.draft_path(&seed.source_id);
                match annotator.accept_revision(&mut state, seed, &path, &args.notes, args.amend.as_deref()) {
                    Ok(size) => println!("accepted {} (pool size {size})", seed.source_id),
                    Err(e) => {
                        println!("rejected {}: {e}", seed.source_id);
                        failures += 1;
                    }
                }
            }
        }
    }
    state.save(&state_path)?;
    let usage = state.total_usage();
    println!("token usage so far: {} prompt, {} completion", usage.prompt, usage.completion);
    Ok(if failures == 0 { 0 } else { 1 })
}
