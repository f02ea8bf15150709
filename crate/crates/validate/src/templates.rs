//! Named validator templates.

use std::sync::Arc;

use dseval_core::{Registry, ValidatorConfig, ValidatorKind};

use crate::ValidationError;

pub trait Template: Send + Sync {
    fn name(&self) -> &'static str;

    /// Expands a template node whose children are the user-supplied keys.
    fn expand(&self, config: &ValidatorConfig) -> Result<ValidatorConfig, ValidationError>;
}

pub fn standard_templates() -> Registry<dyn Template> {
    let mut r: Registry<dyn Template> = Registry::new();
    let all: Vec<Arc<dyn Template>> = vec![Arc::new(Basic), Arc::new(NoTemplate)];
    for t in all {
        r.register(t.name(), t);
    }
    r
}

/// Crash check, intactness, then any user checks, then the result group.
pub struct Basic;

impl Template for Basic {
    fn name(&self) -> &'static str {
        "basic"
    }

    fn expand(&self, config: &ValidatorConfig) -> Result<ValidatorConfig, ValidationError> {
        let mut crash = ValidatorConfig::leaf(ValidatorKind::Crash);
        let mut intact = ValidatorConfig::leaf(ValidatorKind::NamespaceIntact);
        let mut extras = Vec::new();
        let mut results = Vec::new();
        for child in &config.children {
            match child.kind {
                ValidatorKind::Crash => crash = child.clone(),
                ValidatorKind::NamespaceIntact => {
                    for (k, v) in &child.options {
                        intact.options.insert(k.clone(), v.clone());
                    }
                }
                ValidatorKind::Or => results.extend(child.children.iter().cloned()),
                ValidatorKind::ExecuteResult | ValidatorKind::StreamOutput | ValidatorKind::AnswerInSource => {
                    results.push(child.clone())
                }
                ValidatorKind::Template => {
                    return Err(ValidationError::Config("templates cannot be nested".into()));
                }
                _ => extras.push(child.clone()),
            }
        }
        if !results
            .iter()
            .any(|c| matches!(c.kind, ValidatorKind::ExecuteResult | ValidatorKind::StreamOutput))
        {
            results.insert(0, ValidatorConfig::leaf(ValidatorKind::ExecuteResult));
        }
        if !results.iter().any(|c| c.kind == ValidatorKind::AnswerInSource) {
            results.push(ValidatorConfig::leaf(ValidatorKind::AnswerInSource));
        }
        let mut children = vec![crash, intact];
        children.extend(extras);
        children.push(ValidatorConfig::composite(ValidatorKind::Or, results));
        Ok(ValidatorConfig::composite(ValidatorKind::And, children))
    }
}

/// Uses only the user-supplied validators.
pub struct NoTemplate;

impl Template for NoTemplate {
    fn name(&self) -> &'static str {
        "none"
    }

    fn expand(&self, config: &ValidatorConfig) -> Result<ValidatorConfig, ValidationError> {
        match config.children.as_slice() {
            [] => Err(ValidationError::Config(
                "template `none` needs at least one validator".into(),
            )),
            [only] => Ok(only.clone()),
            many => Ok(ValidatorConfig::composite(ValidatorKind::And, many.to_vec())),
        }
    }
}
