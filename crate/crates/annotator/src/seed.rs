use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::AnnotateError;

/// The scenario a generated problemset is anchored to.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IdeaSeed {
    #[serde(default)]
    pub source_id: String,
    #[serde(default)]
    pub dataset_description: String,
    #[serde(default)]
    pub notebook_description: String,
    /// Directory holding the seed's data files, made available to drafts as
    /// the session's input directory.
    #[serde(default)]
    pub inputs: Option<PathBuf>,
}

impl IdeaSeed {
    pub fn new(source_id: impl Into<String>, dataset_description: impl Into<String>) -> Self {
        IdeaSeed {
            source_id: source_id.into(),
            dataset_description: dataset_description.into(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), AnnotateError> {
        if self.source_id.trim().is_empty() {
            return Err(AnnotateError::Seed("seed has no source id".into()));
        }
        if self.dataset_description.trim().is_empty() && self.notebook_description.trim().is_empty() {
            return Err(AnnotateError::Seed(format!(
                "seed `{}` has neither a dataset nor a notebook description",
                self.source_id
            )));
        }
        Ok(())
    }
}

/// Reads every `*.yaml`, `*.yml` and `*.json` seed in a directory, sorted by
/// file name. A missing `source_id` defaults to the file stem and a relative
/// `inputs` path is resolved against the directory.
pub fn load_seeds(dir: &Path) -> Result<Vec<IdeaSeed>, AnnotateError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("yaml") | Some("yml") | Some("json")
            )
        })
        .collect();
    paths.sort();
    let mut seeds = Vec::new();
    for path in paths {
        let text = std::fs::read_to_string(&path)?;
        let mut seed: IdeaSeed =
            serde_yaml::from_str(&text).map_err(|e| AnnotateError::Seed(format!("{}: {e}", path.display())))?;
        if seed.source_id.is_empty() {
            seed.source_id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        }
        if let Some(inputs) = &seed.inputs {
            if inputs.is_relative() {
                seed.inputs = Some(dir.join(inputs));
            }
        }
        seed.validate()?;
        seeds.push(seed);
    }
    Ok(seeds)
}
