use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Utc};
use dseval_agents::TokenUsage;
use serde::{Deserialize, Serialize};

use crate::prompts::Guide;
use crate::AnnotateError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    #[default]
    Unstarted,
    Sketched,
    Drafted,
    DraftedWithErrors,
    Revised,
    Accepted,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SeedProgress {
    pub stage: Stage,
    pub sketch: Option<String>,
    pub draft: Option<String>,
    pub draft_attempts: usize,
    /// Parse errors and integrity failures found in the latest draft.
    pub issues: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptedProblemset {
    pub seed: String,
    pub sketch: Option<String>,
    pub source: String,
    pub accepted_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UsageEntry {
    pub seed: String,
    pub stage: String,
    pub model: String,
    pub usage: Option<TokenUsage>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AnnotationState {
    /// Finished problemsets in acceptance order; used as few-shot examples.
    pub accepted_pool: Vec<AcceptedProblemset>,
    pub guide: Guide,
    pub pending: BTreeMap<String, SeedProgress>,
    pub revision_notes: Vec<String>,
    pub usage_log: Vec<UsageEntry>,
}

impl AnnotationState {
    pub fn new(guide: Guide) -> Self {
        AnnotationState {
            guide,
            ..Default::default()
        }
    }

    pub fn stage(&self, seed: &str) -> Stage {
        self.pending.get(seed).map(|p| p.stage).unwrap_or_default()
    }

    pub fn progress(&mut self, seed: &str) -> &mut SeedProgress {
        self.pending.entry(seed.to_string()).or_default()
    }

    pub fn total_usage(&self) -> TokenUsage {
        let mut total = TokenUsage::default();
        for u in self.usage_log.iter().filter_map(|e| e.usage) {
            total += u;
        }
        total
    }

    pub fn load(path: &Path) -> Result<Self, AnnotateError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| AnnotateError::State(format!("{}: {e}", path.display())))
    }

    /// Loads the state at `path`, or starts a fresh one with the default guide.
    pub fn load_or_default(path: &Path) -> Result<Self, AnnotateError> {
        if path.exists() {
            Self::load(path)
        } else {
            Ok(AnnotationState::new(Guide::default()))
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), AnnotateError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| AnnotateError::State(e.to_string()))?;
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}
