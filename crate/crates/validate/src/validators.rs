//! Built-in validators, one per [`ValidatorKind`].

use std::collections::BTreeSet;
use std::sync::Arc;

use dseval_core::{Registry, ValidatorConfig, ValidatorKind, Value};
use dseval_runtime::{CallOutcome, ScoreOutcome};
use serde_yaml::{Mapping, Value as Yaml};

use crate::compare::{compare_values, yaml_f64, CompareOptions};
use crate::context::ValidationContext;
use crate::outcome::Outcome;
use crate::templates::{standard_templates, Template};
use crate::ValidationError;

/// How composite nodes treat children after the result is already decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CompositeMode {
    /// `and` stops at the first failure, `or` at the first pass.
    #[default]
    ShortCircuit,
    /// Every child is evaluated so the classifier sees all failures.
    Exhaustive,
}

pub trait Validator: Send + Sync {
    fn kind(&self) -> ValidatorKind;

    fn validate(
        &self,
        config: &ValidatorConfig,
        ctx: &mut ValidationContext<'_>,
        engine: &Engine,
    ) -> Result<Outcome, ValidationError>;
}

/// Validator and template registries plus the evaluation mode.
#[derive(Clone)]
pub struct Engine {
    pub validators: Registry<dyn Validator>,
    pub templates: Registry<dyn Template>,
    pub mode: CompositeMode,
}

impl Default for Engine {
    fn default() -> Self {
        Engine::standard()
    }
}

impl Engine {
    pub fn standard() -> Self {
        Engine {
            validators: standard_validators(),
            templates: standard_templates(),
            mode: CompositeMode::ShortCircuit,
        }
    }

    pub fn with_mode(mut self, mode: CompositeMode) -> Self {
        self.mode = mode;
        self
    }

    /// Replaces every template node with its expansion.
    pub fn expand(&self, config: &ValidatorConfig) -> Result<ValidatorConfig, ValidationError> {
        let expanded = if let Some(name) = config.template_name() {
            let template = self
                .templates
                .get(name)
                .ok_or_else(|| ValidationError::UnknownTemplate(name.to_string()))?;
            template.expand(config)?
        } else {
            config.clone()
        };
        let children = expanded
            .children
            .iter()
            .map(|c| self.expand(c))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ValidatorConfig { children, ..expanded })
    }

    pub fn run(&self, config: &ValidatorConfig, ctx: &mut ValidationContext<'_>) -> Result<Outcome, ValidationError> {
        if config.kind == ValidatorKind::Template {
            let expanded = self.expand(config)?;
            return self.run(&expanded, ctx);
        }
        let validator = self
            .validators
            .get(config.kind.name())
            .ok_or_else(|| ValidationError::UnknownValidator(config.kind.name().to_string()))?;
        validator.validate(config, ctx, self)
    }
}

pub fn standard_validators() -> Registry<dyn Validator> {
    let mut r: Registry<dyn Validator> = Registry::new();
    let all: Vec<Arc<dyn Validator>> = vec![
        Arc::new(Crash),
        Arc::new(ExecuteResult),
        Arc::new(NamespaceCheck),
        Arc::new(TableTest),
        Arc::new(ModelValidator),
        Arc::new(StreamOutput),
        Arc::new(AnswerInSource),
        Arc::new(NamespaceIntact),
        Arc::new(Composite(ValidatorKind::And)),
        Arc::new(Composite(ValidatorKind::Or)),
    ];
    for v in all {
        r.register(v.kind().name(), v);
    }
    r
}

fn config_err(kind: ValidatorKind, msg: impl std::fmt::Display) -> ValidationError {
    ValidationError::Config(format!("{kind}: {msg}"))
}

pub struct Crash;

impl Validator for Crash {
    fn kind(&self) -> ValidatorKind {
        ValidatorKind::Crash
    }

    fn validate(&self, _: &ValidatorConfig, ctx: &mut ValidationContext<'_>, _: &Engine) -> Result<Outcome, ValidationError> {
        Ok(match &ctx.submission_result.error {
            None => Outcome::pass(self.kind()),
            Some(e) => Outcome::fail(self.kind(), None, format!("{}: {}", e.kind, e.message)),
        })
    }
}

pub struct ExecuteResult;

impl Validator for ExecuteResult {
    fn kind(&self) -> ValidatorKind {
        ValidatorKind::ExecuteResult
    }

    fn validate(
        &self,
        config: &ValidatorConfig,
        ctx: &mut ValidationContext<'_>,
        _: &Engine,
    ) -> Result<Outcome, ValidationError> {
        let opts = CompareOptions::from_options(&config.options)?;
        let Some(expected) = &ctx.reference_result.execute_result else {
            return Ok(Outcome::pass(self.kind()));
        };
        let Some(actual) = &ctx.submission_result.execute_result else {
            return Ok(Outcome::fail(
                self.kind(),
                None,
                format!("expected a {} result, got none", expected.value.type_label()),
            ));
        };
        let cmp = compare_values(&actual.value, &expected.value, &opts);
        Ok(match cmp.mismatch {
            None => Outcome::pass(self.kind()),
            Some(m) => Outcome::fail(self.kind(), Some(m.kind), m.detail),
        })
    }
}

/// Reads `name: null | {compare options}` entries.
fn variable_specs(options: &Mapping, kind: ValidatorKind) -> Result<Vec<(String, CompareOptions)>, ValidationError> {
    let mut out = Vec::new();
    for (k, v) in options {
        let name = k.as_str().ok_or_else(|| config_err(kind, "variable names must be strings"))?;
        let opts = match v {
            Yaml::Null => CompareOptions::default(),
            Yaml::Mapping(m) => CompareOptions::from_options(m)?,
            other => return Err(config_err(kind, format!("options for `{name}` must be a mapping, got {other:?}"))),
        };
        out.push((name.to_string(), opts));
    }
    Ok(out)
}

pub struct NamespaceCheck;

impl Validator for NamespaceCheck {
    fn kind(&self) -> ValidatorKind {
        ValidatorKind::NamespaceCheck
    }

    fn validate(
        &self,
        config: &ValidatorConfig,
        ctx: &mut ValidationContext<'_>,
        _: &Engine,
    ) -> Result<Outcome, ValidationError> {
        let mut specs = variable_specs(&config.options, self.kind())?;
        if specs.is_empty() {
            specs = ctx
                .changed_names()
                .into_iter()
                .map(|n| (n, CompareOptions::default()))
                .collect();
        }
        for (name, _) in &specs {
            if !ctx.reference_post.contains_key(name) {
                return Err(config_err(self.kind(), format!("reference never defines `{name}`")));
            }
        }
        let names: Vec<String> = specs.iter().map(|(n, _)| n.clone()).collect();
        let actual = ctx.submission.view(&names)?;
        for (name, opts) in &specs {
            let expected = &ctx.reference_post[name];
            let Some(Some(value)) = actual.get(name) else {
                return Ok(Outcome::fail(self.kind(), None, format!("variable `{name}` is not defined")));
            };
            if let Some(m) = compare_values(value, expected, opts).mismatch {
                return Ok(Outcome::fail(self.kind(), Some(m.kind), format!("`{name}`: {}", m.detail)));
            }
        }
        Ok(Outcome::pass(self.kind()))
    }
}

pub struct TableTest;

impl Validator for TableTest {
    fn kind(&self) -> ValidatorKind {
        ValidatorKind::TableTest
    }

    fn validate(
        &self,
        config: &ValidatorConfig,
        ctx: &mut ValidationContext<'_>,
        _: &Engine,
    ) -> Result<Outcome, ValidationError> {
        let kind = self.kind();
        let function = config
            .option("function_name")
            .and_then(Yaml::as_str)
            .ok_or_else(|| config_err(kind, "`function_name` is required"))?;
        let input_validator = config.option("input_validator").and_then(Yaml::as_str);
        let opts = match config.option("output_checker") {
            None | Some(Yaml::Null) => CompareOptions::default(),
            Some(Yaml::Mapping(m)) => CompareOptions::from_options(m)?,
            Some(_) => return Err(config_err(kind, "`output_checker` must be a mapping")),
        };
        let cases = match config.option("test_cases") {
            Some(Yaml::Sequence(items)) => items.clone(),
            _ => return Err(config_err(kind, "`test_cases` must be a list")),
        };
        let max_time = ctx.problem.execution.max_time;
        for (i, case) in cases.iter().enumerate() {
            let args: Vec<serde_json::Value> = match case {
                Yaml::Sequence(items) => items.iter().map(yaml_to_json).collect::<Result<_, _>>()?,
                single => vec![yaml_to_json(single)?],
            };
            let expected = match ctx.reference.call_function(function, &args, input_validator, max_time)? {
                CallOutcome::Returned(v) => v,
                CallOutcome::Missing => {
                    return Err(config_err(kind, format!("reference does not define `{function}`")))
                }
                CallOutcome::BadInput(e) => {
                    return Err(config_err(kind, format!("test case {i} rejected: {}", e.message)))
                }
                CallOutcome::Raised(e) => {
                    return Err(config_err(kind, format!("reference raised on test case {i}: {}", e.message)))
                }
            };
            match ctx.submission.call_function(function, &args, None, max_time)? {
                CallOutcome::Returned(actual) => {
                    if let Some(m) = compare_values(&actual.value, &expected.value, &opts).mismatch {
                        return Ok(Outcome::fail(kind, Some(m.kind), format!("test case {i}: {}", m.detail)));
                    }
                }
                CallOutcome::Missing => {
                    return Ok(Outcome::fail(kind, None, format!("function `{function}` is not defined")))
                }
                CallOutcome::Raised(e) | CallOutcome::BadInput(e) => {
                    return Ok(Outcome::fail(
                        kind,
                        None,
                        format!("test case {i} raised {}: {}", e.kind, e.message),
                    ))
                }
            }
        }
        Ok(Outcome::pass(kind))
    }
}

fn yaml_to_json(v: &Yaml) -> Result<serde_json::Value, ValidationError> {
    serde_json::to_value(v).map_err(|e| ValidationError::Config(format!("test case is not JSON-compatible: {e}")))
}

pub const DEFAULT_MODEL_TOLERANCE: f64 = 0.05;

pub struct ModelValidator;

impl Validator for ModelValidator {
    fn kind(&self) -> ValidatorKind {
        ValidatorKind::Model
    }

    fn validate(
        &self,
        config: &ValidatorConfig,
        ctx: &mut ValidationContext<'_>,
        _: &Engine,
    ) -> Result<Outcome, ValidationError> {
        let kind = self.kind();
        let text = |key: &str| -> Result<String, ValidationError> {
            config
                .option(key)
                .and_then(Yaml::as_str)
                .map(str::to_string)
                .ok_or_else(|| config_err(kind, format!("`{key}` is required")))
        };
        let model = text("model")?;
        let x = text("test_x")?;
        let y = text("test_y")?;
        let metric = config.option("metric").and_then(Yaml::as_str);
        let tolerance = match config.option("tolerance") {
            None => DEFAULT_MODEL_TOLERANCE,
            Some(v) => yaml_f64(v)
                .filter(|t| *t >= 0.0)
                .ok_or_else(|| config_err(kind, "`tolerance` must be a non-negative number"))?,
        };
        let threshold = match config.option("threshold") {
            None => None,
            Some(v) => Some(yaml_f64(v).ok_or_else(|| config_err(kind, "`threshold` must be a number"))?),
        };
        let max_time = ctx.problem.execution.max_time;
        let bar = match threshold {
            Some(t) => t,
            None => match ctx.reference.score_model(&model, &x, &y, metric, max_time)? {
                ScoreOutcome::Score(s) => s - tolerance,
                ScoreOutcome::Raised(e) => {
                    return Err(config_err(kind, format!("reference model failed to score: {}", e.message)))
                }
                ScoreOutcome::Missing(m) => return Err(config_err(kind, format!("reference model: {m}"))),
            },
        };
        Ok(match ctx.submission.score_model(&model, &x, &y, metric, max_time)? {
            ScoreOutcome::Score(s) if s >= bar - 1e-12 => Outcome::pass(kind),
            ScoreOutcome::Score(s) => Outcome::fail(
                kind,
                Some(crate::compare::MismatchKind::Value),
                format!("model score {s:.4} is below the required {bar:.4}"),
            ),
            ScoreOutcome::Raised(e) => Outcome::fail(kind, None, format!("scoring raised {}: {}", e.kind, e.message)),
            ScoreOutcome::Missing(m) => Outcome::fail(kind, None, m),
        })
    }
}

pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn strip_whitespace(text: &str) -> String {
    text.chars().filter(|c| !c.is_whitespace()).collect()
}

pub struct StreamOutput;

impl Validator for StreamOutput {
    fn kind(&self) -> ValidatorKind {
        ValidatorKind::StreamOutput
    }

    fn validate(&self, _: &ValidatorConfig, ctx: &mut ValidationContext<'_>, _: &Engine) -> Result<Outcome, ValidationError> {
        let expected = normalize_whitespace(&ctx.reference_result.stream_output);
        let actual = normalize_whitespace(&ctx.submission_result.stream_output);
        if expected.is_empty() {
            return Ok(Outcome::fail(self.kind(), None, "reference printed nothing to match"));
        }
        Ok(if actual.contains(&expected) {
            Outcome::pass(self.kind())
        } else {
            Outcome::fail(self.kind(), None, "console output does not contain the expected text")
        })
    }
}

pub struct AnswerInSource;

impl Validator for AnswerInSource {
    fn kind(&self) -> ValidatorKind {
        ValidatorKind::AnswerInSource
    }

    fn validate(&self, _: &ValidatorConfig, ctx: &mut ValidationContext<'_>, _: &Engine) -> Result<Outcome, ValidationError> {
        let answer = ctx
            .reference_result
            .execute_result
            .as_ref()
            .map(|r| strip_whitespace(&r.text))
            .unwrap_or_default();
        Ok(if !answer.is_empty() && strip_whitespace(ctx.submission_code).contains(&answer) {
            Outcome::pass(self.kind())
        } else {
            Outcome::fail(self.kind(), None, "answer does not appear in the code")
        })
    }
}

pub struct NamespaceIntact;

impl NamespaceIntact {
    fn allow_list(config: &ValidatorConfig) -> Result<BTreeSet<String>, ValidationError> {
        let kind = ValidatorKind::NamespaceIntact;
        match config.option("update") {
            None | Some(Yaml::Null) => Ok(BTreeSet::new()),
            Some(Yaml::String(s)) => Ok(BTreeSet::from([s.clone()])),
            Some(Yaml::Sequence(items)) => items
                .iter()
                .map(|i| {
                    i.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| config_err(kind, "`update` entries must be names"))
                })
                .collect(),
            Some(_) => Err(config_err(kind, "`update` must be a name or a list of names")),
        }
    }
}

impl Validator for NamespaceIntact {
    fn kind(&self) -> ValidatorKind {
        ValidatorKind::NamespaceIntact
    }

    fn validate(
        &self,
        config: &ValidatorConfig,
        ctx: &mut ValidationContext<'_>,
        _: &Engine,
    ) -> Result<Outcome, ValidationError> {
        let mut allowed = Self::allow_list(config)?;
        allowed.extend(ctx.changed_names());
        let protected: Vec<String> = ctx
            .reference_pre
            .keys()
            .filter(|k| !allowed.contains(*k))
            .cloned()
            .collect();
        if protected.is_empty() {
            return Ok(Outcome::pass(self.kind()));
        }
        let actual = ctx.submission.view(&protected)?;
        for name in &protected {
            let before: &Value = &ctx.reference_pre[name];
            match actual.get(name) {
                Some(Some(v)) if v == before => {}
                Some(Some(_)) => {
                    return Ok(Outcome::fail(self.kind(), None, format!("`{name}` was modified")));
                }
                _ => return Ok(Outcome::fail(self.kind(), None, format!("`{name}` was deleted"))),
            }
        }
        Ok(Outcome::pass(self.kind()))
    }
}

/// `and` / `or` over child validators.
pub struct Composite(pub ValidatorKind);

impl Validator for Composite {
    fn kind(&self) -> ValidatorKind {
        self.0
    }

    fn validate(
        &self,
        config: &ValidatorConfig,
        ctx: &mut ValidationContext<'_>,
        engine: &Engine,
    ) -> Result<Outcome, ValidationError> {
        let is_and = self.0 == ValidatorKind::And;
        if config.children.is_empty() {
            return Err(config_err(self.0, "needs at least one child"));
        }
        let mut children = Vec::with_capacity(config.children.len());
        for child in &config.children {
            let outcome = engine.run(child, ctx)?;
            let decisive = outcome.pass != is_and;
            children.push(outcome);
            if decisive && engine.mode == CompositeMode::ShortCircuit {
                break;
            }
        }
        let pass = if is_and {
            children.iter().all(|c| c.pass)
        } else {
            children.iter().any(|c| c.pass)
        };
        let failure = if pass {
            None
        } else if is_and {
            children.iter().find(|c| !c.pass).and_then(|c| c.failure.clone())
        } else {
            children.iter().rev().find(|c| !c.pass).and_then(|c| c.failure.clone())
        };
        Ok(Outcome {
            kind: self.0,
            pass,
            failure,
            children,
        })
    }
}
