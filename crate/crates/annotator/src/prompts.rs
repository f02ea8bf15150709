use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::seed::IdeaSeed;
use crate::state::AcceptedProblemset;
use crate::AnnotateError;

pub const SKETCH_TEMPLATE: &str = include_str!("../templates/sketch.txt");
pub const PROBLEMSET_TEMPLATE: &str = include_str!("../templates/problemset.txt");
pub const DATASET_PLACEHOLDER: &str = "<DATASET DESCRIPTION>";
pub const DEFAULT_FEW_SHOT_CAP: usize = 5;

/// The instruction documents behind both generation stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Guide {
    pub sketch: String,
    pub problemset: String,
    /// Extra guidelines collected from human revisions.
    #[serde(default)]
    pub amendments: Vec<String>,
}

impl Default for Guide {
    fn default() -> Self {
        Guide {
            sketch: SKETCH_TEMPLATE.to_string(),
            problemset: PROBLEMSET_TEMPLATE.to_string(),
            amendments: Vec::new(),
        }
    }
}

impl Guide {
    /// Writes the templates into `dir` unless they already exist there.
    pub fn write_templates(&self, dir: &Path) -> Result<(), AnnotateError> {
        std::fs::create_dir_all(dir)?;
        for (name, text) in [("sketch.txt", &self.sketch), ("problemset.txt", &self.problemset)] {
            let path = dir.join(name);
            if !path.exists() {
                std::fs::write(path, text)?;
            }
        }
        Ok(())
    }

    /// Replaces the templates with edited copies found in `dir`.
    pub fn load_templates(&mut self, dir: &Path) -> Result<(), AnnotateError> {
        let sketch = dir.join("sketch.txt");
        if sketch.exists() {
            self.sketch = std::fs::read_to_string(sketch)?;
        }
        let problemset = dir.join("problemset.txt");
        if problemset.exists() {
            self.problemset = std::fs::read_to_string(problemset)?;
        }
        Ok(())
    }

    fn amendment_block(&self) -> Option<String> {
        if self.amendments.is_empty() {
            return None;
        }
        let mut out = String::from("Additional guidelines:\n");
        for a in &self.amendments {
            out.push_str(&format!("- {}\n", a.trim()));
        }
        Some(out.trim_end().to_string())
    }
}

/// Picks which pool entries to show. Small pools are shown whole; larger
/// ones contribute `cap` entries drawn with a seeded generator, returned in
/// pool order.
pub fn select_examples(pool_len: usize, cap: usize, rng_seed: u64) -> Vec<usize> {
    if pool_len <= cap {
        return (0..pool_len).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut picked = sample(&mut rng, pool_len, cap).into_vec();
    picked.sort_unstable();
    picked
}

fn seed_block(seed: &IdeaSeed) -> String {
    let mut parts = Vec::new();
    if !seed.dataset_description.trim().is_empty() {
        parts.push(format!("Dataset description:\n{}", seed.dataset_description.trim()));
    }
    if !seed.notebook_description.trim().is_empty() {
        parts.push(format!("Reference notebook:\n{}", seed.notebook_description.trim()));
    }
    parts.join("\n\n")
}

fn example_block(examples: &[&AcceptedProblemset], with_sketch: bool) -> Option<String> {
    if examples.is_empty() {
        return None;
    }
    let mut parts = Vec::new();
    for (i, ex) in examples.iter().enumerate() {
        let mut block = format!("## Example problemset {}\n", i + 1);
        if with_sketch {
            if let Some(sketch) = &ex.sketch {
                block.push_str(&format!("Sketch:\n{}\n\n", sketch.trim()));
            }
        }
        block.push_str(&format!("```python\n{}\n```", ex.source.trim_end()));
        parts.push(block);
    }
    Some(parts.join("\n\n"))
}

/// Number of example problemsets embedded in a prompt.
pub fn count_examples(prompt: &str) -> usize {
    prompt.matches("## Example problemset ").count()
}

pub fn sketch_prompt(guide: &Guide, examples: &[&AcceptedProblemset], seed: &IdeaSeed) -> String {
    let mut payload = Vec::new();
    if let Some(block) = example_block(examples, true) {
        payload.push(block);
    }
    payload.push(seed_block(seed));
    let payload = payload.join("\n\n");
    let mut prompt = if guide.sketch.contains(DATASET_PLACEHOLDER) {
        guide.sketch.replace(DATASET_PLACEHOLDER, &payload)
    } else {
        format!("{}\n\n{}", guide.sketch.trim_end(), payload)
    };
    if let Some(a) = guide.amendment_block() {
        prompt = format!("{}\n\n{}", prompt.trim_end(), a);
    }
    prompt
}

pub fn problemset_prompt(guide: &Guide, examples: &[&AcceptedProblemset], seed: &IdeaSeed, sketch: &str) -> String {
    let mut parts = vec![guide.problemset.trim_end().to_string()];
    if let Some(a) = guide.amendment_block() {
        parts.push(a);
    }
    if let Some(block) = example_block(examples, false) {
        parts.push(block);
    }
    parts.push(seed_block(seed));
    parts.push(format!("Sketch:\n{}", sketch.trim()));
    parts.push("Write the complete problemset as a single Python file.".into());
    parts.join("\n\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_pools_are_shown_whole() {
        assert_eq!(select_examples(0, 5, 1), Vec::<usize>::new());
        assert_eq!(select_examples(5, 5, 1), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn selection_is_seeded() {
        let a = select_examples(7, 5, 42);
        assert_eq!(a.len(), 5);
        assert_eq!(a, select_examples(7, 5, 42));
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn placeholder_is_filled() {
        let seed = IdeaSeed::new("s", "Weather readings per city.");
        let p = sketch_prompt(&Guide::default(), &[], &seed);
        assert!(!p.contains(DATASET_PLACEHOLDER));
        assert!(p.contains("Weather readings per city."));
        assert_eq!(count_examples(&p), 0);
    }
}
