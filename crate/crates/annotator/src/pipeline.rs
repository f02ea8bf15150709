use std::path::{Path, PathBuf};
use std::sync::Arc;

use dseval_agents::{extract_code, ChatMessage, Completion, LlmClient};
use dseval_core::parse_str;
use dseval_runner::{check_integrity, IntegrityReport};
use dseval_runtime::SessionConfig;
use dseval_validate::Engine;

use crate::prompts::{problemset_prompt, select_examples, sketch_prompt, DEFAULT_FEW_SHOT_CAP};
use crate::seed::IdeaSeed;
use crate::state::{AcceptedProblemset, AnnotationState, Stage, UsageEntry};
use crate::AnnotateError;

#[derive(Debug, Clone)]
pub struct AnnotatorConfig {
    pub workspace: PathBuf,
    pub few_shot_cap: usize,
    pub rng_seed: u64,
    pub max_parse_attempts: usize,
    pub session: SessionConfig,
}

impl AnnotatorConfig {
    pub fn new(workspace: impl Into<PathBuf>) -> Self {
        AnnotatorConfig {
            workspace: workspace.into(),
            few_shot_cap: DEFAULT_FEW_SHOT_CAP,
            rng_seed: 0,
            max_parse_attempts: 3,
            session: SessionConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DraftReport {
    pub path: PathBuf,
    pub attempts: usize,
    pub parse_errors: Vec<String>,
    /// Set when the draft parsed but a reference solution misbehaves.
    pub integrity: Option<IntegrityReport>,
    pub stage: Stage,
}

pub struct Annotator {
    llm: Arc<dyn LlmClient>,
    config: AnnotatorConfig,
    engine: Engine,
}

fn reply_text(completion: &Completion) -> String {
    if completion.text.contains("```") {
        extract_code(&completion.text)
    } else {
        completion.text.trim().to_string()
    }
}

impl Annotator {
    pub fn new(llm: Arc<dyn LlmClient>, config: AnnotatorConfig) -> Self {
        Annotator {
            llm,
            config,
            engine: Engine::standard(),
        }
    }

    pub fn config(&self) -> &AnnotatorConfig {
        &self.config
    }

    pub fn draft_path(&self, seed: &str) -> PathBuf {
        self.config.workspace.join("drafts").join(format!("{seed}.py"))
    }

    fn examples<'a>(&self, state: &'a AnnotationState) -> Vec<&'a AcceptedProblemset> {
        select_examples(state.accepted_pool.len(), self.config.few_shot_cap, self.config.rng_seed)
            .into_iter()
            .map(|i| &state.accepted_pool[i])
            .collect()
    }

    pub fn build_sketch_prompt(&self, state: &AnnotationState, seed: &IdeaSeed) -> String {
        sketch_prompt(&state.guide, &self.examples(state), seed)
    }

    pub fn build_problemset_prompt(&self, state: &AnnotationState, seed: &IdeaSeed, sketch: &str) -> String {
        problemset_prompt(&state.guide, &self.examples(state), seed, sketch)
    }

    fn log_usage(&self, state: &mut AnnotationState, seed: &str, stage: &str, completion: &Completion) {
        state.usage_log.push(UsageEntry {
            seed: seed.to_string(),
            stage: stage.to_string(),
            model: self.llm.model(),
            usage: completion.usage,
        });
    }

    /// Asks for a sketch without touching the state.
    pub fn request_sketch(&self, state: &AnnotationState, seed: &IdeaSeed) -> Result<Completion, AnnotateError> {
        seed.validate()?;
        let prompt = self.build_sketch_prompt(state, seed);
        let completion = self.llm.complete(&[ChatMessage::user(prompt)])?;
        if completion.text.trim().is_empty() {
            return Err(AnnotateError::Llm(dseval_agents::LlmError::Empty));
        }
        Ok(completion)
    }

    fn apply_sketch(&self, state: &mut AnnotationState, seed: &IdeaSeed, completion: Completion) -> String {
        self.log_usage(state, &seed.source_id, "sketch", &completion);
        let sketch = completion.text.trim().to_string();
        let progress = state.progress(&seed.source_id);
        progress.sketch = Some(sketch.clone());
        progress.stage = Stage::Sketched;
        sketch
    }

    pub fn generate_sketch(&self, state: &mut AnnotationState, seed: &IdeaSeed) -> Result<String, AnnotateError> {
        let completion = self.request_sketch(state, seed)?;
        Ok(self.apply_sketch(state, seed, completion))
    }

    /// Sketches several seeds with concurrent LLM calls. Results are applied
    /// to the state in seed order; the first failure is returned after all
    /// successful sketches were stored.
    pub fn generate_sketches(
        &self,
        state: &mut AnnotationState,
        seeds: &[IdeaSeed],
    ) -> Result<Vec<String>, AnnotateError> {
        let results: Vec<_> = std::thread::scope(|scope| {
            let snapshot = &*state;
            let handles: Vec<_> = seeds
                .iter()
                .map(|seed| scope.spawn(move || self.request_sketch(snapshot, seed)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sketch thread panicked"))
                .collect()
        });
        let mut sketches = Vec::new();
        let mut first_err = None;
        for (seed, res) in seeds.iter().zip(results) {
            match res {
                Ok(c) => sketches.push(self.apply_sketch(state, seed, c)),
                Err(e) => {
                    log::warn!("sketch for `{}` failed: {e}", seed.source_id);
                    first_err.get_or_insert(e);
                }
            }
        }
        match first_err {
            Some(e) => Err(e),
            None => Ok(sketches),
        }
    }

    fn session_for(&self, seed: Option<&IdeaSeed>) -> SessionConfig {
        match seed.and_then(|s| s.inputs.clone()) {
            Some(dir) => self.config.session.clone().with_inputs(dir),
            None => self.config.session.clone(),
        }
    }

    /// Generates the full problemset for a sketched seed, retrying output
    /// that does not parse, and writes the draft into the workspace.
    pub fn generate_problemset(
        &self,
        state: &mut AnnotationState,
        seed: &IdeaSeed,
    ) -> Result<DraftReport, AnnotateError> {
        seed.validate()?;
        let sketch = state
            .pending
            .get(&seed.source_id)
            .and_then(|p| p.sketch.clone())
            .ok_or_else(|| AnnotateError::MissingSketch(seed.source_id.clone()))?;
        let mut messages = vec![ChatMessage::user(self.build_problemset_prompt(state, seed, &sketch))];
        let mut parse_errors = Vec::new();
        let mut attempts = 0;
        let mut text = String::new();
        let mut parsed = None;
        while attempts < self.config.max_parse_attempts.max(1) {
            attempts += 1;
            let completion = self.llm.complete(&messages)?;
            self.log_usage(state, &seed.source_id, "draft", &completion);
            text = reply_text(&completion);
            match parse_str(&text, &seed.source_id) {
                Ok(ps) => {
                    parsed = Some(ps);
                    break;
                }
                Err(e) => {
                    log::info!("draft for `{}` attempt {attempts} does not parse: {e}", seed.source_id);
                    parse_errors.push(e.to_string());
                    messages.push(ChatMessage {
                        role: "assistant".into(),
                        content: completion.text,
                    });
                    messages.push(ChatMessage::user(format!(
                        "The problemset above cannot be parsed: {e}\nReply with the complete corrected problemset."
                    )));
                }
            }
        }

        let path = self.draft_path(&seed.source_id);
        std::fs::create_dir_all(path.parent().expect("draft dir"))?;
        std::fs::write(&path, format!("{}\n", text.trim_end()))?;

        let integrity = match &parsed {
            Some(ps) => check_integrity(ps, &self.session_for(Some(seed)), &self.engine).err(),
            None => None,
        };
        let stage = if parsed.is_some() { Stage::Drafted } else { Stage::DraftedWithErrors };
        let progress = state.progress(&seed.source_id);
        progress.stage = stage;
        progress.draft = Some(text);
        progress.draft_attempts = attempts;
        progress.issues = parse_errors.clone();
        if let Some(report) = &integrity {
            progress.issues.push(describe(report));
        }
        Ok(DraftReport {
            path,
            attempts,
            parse_errors,
            integrity,
            stage,
        })
    }

    /// Ingests a human-revised problemset. It must parse and every reference
    /// must pass its own validators; otherwise the state records the failure
    /// and the pool is left untouched.
    pub fn accept_revision(
        &self,
        state: &mut AnnotationState,
        seed: &IdeaSeed,
        revised: &Path,
        notes: &str,
        amendment: Option<&str>,
    ) -> Result<usize, AnnotateError> {
        let text = std::fs::read_to_string(revised)?;
        let rejected = |state: &mut AnnotationState, issue: String| {
            let progress = state.progress(&seed.source_id);
            progress.stage = Stage::Revised;
            progress.issues = vec![issue];
        };
        let ps = match parse_str(&text, &seed.source_id) {
            Ok(ps) => ps,
            Err(e) => {
                rejected(state, e.to_string());
                return Err(AnnotateError::Parse(e.to_string()));
            }
        };
        if let Err(report) = check_integrity(&ps, &self.session_for(Some(seed)), &self.engine) {
            rejected(state, describe(&report));
            return Err(AnnotateError::Integrity {
                problem_index: report.problem_index,
                message: report.message,
            });
        }
        let sketch = state.pending.get(&seed.source_id).and_then(|p| p.sketch.clone());
        state.accepted_pool.push(AcceptedProblemset {
            seed: seed.source_id.clone(),
            sketch,
            source: text,
            accepted_at: chrono::Utc::now(),
        });
        if !notes.trim().is_empty() {
            state.revision_notes.push(format!("[{}] {}", seed.source_id, notes.trim()));
        }
        if let Some(a) = amendment.filter(|a| !a.trim().is_empty()) {
            state.guide.amendments.push(a.trim().to_string());
        }
        let progress = state.progress(&seed.source_id);
        progress.stage = Stage::Accepted;
        progress.issues.clear();
        Ok(state.accepted_pool.len())
    }
}

fn describe(report: &IntegrityReport) -> String {
    match report.problem_index {
        Some(i) => format!("problem {i}: {}", report.message),
        None => report.message.clone(),
    }
}
