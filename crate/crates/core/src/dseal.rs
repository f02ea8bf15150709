//! Reading and writing problemset files.
//!
//! A problemset is a Python source file split into cells by lines starting
//! with `# %%`. The first cell holds setup code; every following cell opens
//! with a triple-quoted YAML block describing the problem, followed by the
//! reference solution.

use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_yaml::{Mapping, Value as Yaml};

use crate::config::{ConfigError, ValidatorConfig};
use crate::syntax::{self, bare_string};

pub const CELL_MARKER: &str = "# %%";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExecutionConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forbid_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_time: Option<f64>,
}

impl ExecutionConfig {
    pub fn is_empty(&self) -> bool {
        self.forbid_names.is_empty() && self.max_time.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub index: usize,
    pub query: String,
    pub validator: ValidatorConfig,
    pub execution: ExecutionConfig,
    /// File name under `inputs/` to source URL.
    pub data: IndexMap<String, String>,
    pub reference_code: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problemset {
    pub id: String,
    pub preamble: String,
    pub problems: Vec<Problem>,
    pub source_path: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cell {cell}: {message}")]
    Yaml { cell: usize, message: String },
    #[error("cell {cell}: missing configuration string")]
    MissingConfig { cell: usize },
    #[error("cell {cell}: more than one configuration string")]
    MultipleConfigs { cell: usize },
    #[error("cell {cell}: data file `{file}` listed twice")]
    DuplicateData { cell: usize, file: String },
    #[error("cell {cell}: {source}")]
    Validator {
        cell: usize,
        #[source]
        source: ConfigError,
    },
    #[error("cell {cell}: {source}")]
    Syntax {
        cell: usize,
        #[source]
        source: syntax::SyntaxError,
    },
    #[error("cell {cell}: {message}")]
    Invalid { cell: usize, message: String },
}

/// The YAML keys allowed in a problem's configuration string.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    query: Option<String>,
    #[serde(default)]
    validator: Yaml,
    #[serde(default)]
    execution: Option<ExecutionConfig>,
    #[serde(default)]
    data: Option<IndexMap<String, String>>,
}

pub fn parse_problemset(path: &Path) -> Result<Problemset, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|source| ParseError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "problemset".into());
    let mut ps = parse_str(&text, &id)?;
    ps.source_path = path.to_path_buf();
    Ok(ps)
}

fn is_marker(line: &str) -> bool {
    line.trim().starts_with(CELL_MARKER)
}

/// Splits source text into the chunk before the first marker plus one chunk
/// per marker.
fn split_cells(text: &str) -> (String, Vec<String>) {
    let mut head = String::new();
    let mut cells: Vec<String> = Vec::new();
    for line in text.lines() {
        if is_marker(line) {
            cells.push(String::new());
            continue;
        }
        let target = cells.last_mut().unwrap_or(&mut head);
        target.push_str(line);
        target.push('\n');
    }
    (head, cells)
}

fn tidy(code: &str) -> String {
    let trimmed = code.trim_end();
    let start = trimmed
        .char_indices()
        .scan(0usize, |line_start, (i, c)| {
            if c == '\n' {
                *line_start = i + 1;
            }
            Some((i, c, *line_start))
        })
        .find(|&(_, c, _)| !c.is_whitespace())
        .map(|(_, _, line_start)| line_start)
        .unwrap_or(trimmed.len());
    trimmed[start..].to_string()
}

fn starts_with_config(cell: &str) -> bool {
    match syntax::parse_module(cell) {
        Ok(body) => body.first().and_then(bare_string).is_some(),
        Err(_) => {
            let t = cell.trim_start();
            t.starts_with("\"\"\"") || t.starts_with("r\"\"\"") || t.starts_with("'''")
        }
    }
}

pub fn parse_str(text: &str, id: &str) -> Result<Problemset, ParseError> {
    let (head, mut cells) = split_cells(text);
    cells.retain(|c| !c.trim().is_empty());

    let preamble = if !head.trim().is_empty() {
        tidy(&head)
    } else if cells.first().is_some_and(|c| !starts_with_config(c)) {
        tidy(&cells.remove(0))
    } else {
        String::new()
    };

    let problems = cells
        .iter()
        .enumerate()
        .map(|(i, cell)| parse_cell(i, cell))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(Problemset {
        id: id.to_string(),
        preamble,
        problems,
        source_path: PathBuf::new(),
    })
}

fn parse_cell(index: usize, cell: &str) -> Result<Problem, ParseError> {
    let body = syntax::parse_module(cell).map_err(|source| ParseError::Syntax { cell: index, source })?;
    let first = body.first().ok_or(ParseError::MissingConfig { cell: index })?;
    let config_text = bare_string(first).ok_or(ParseError::MissingConfig { cell: index })?;

    if let Some(second) = body.get(1).and_then(bare_string) {
        let looks_like_config = serde_yaml::from_str::<Yaml>(second)
            .ok()
            .and_then(|y| y.as_mapping().map(|m| m.contains_key("query")))
            .unwrap_or(false);
        if looks_like_config {
            return Err(ParseError::MultipleConfigs { cell: index });
        }
    }

    let code = tidy(&cell[syntax::stmt_end(first)..]);

    if let Some(file) = duplicate_data_key(config_text) {
        return Err(ParseError::DuplicateData { cell: index, file });
    }
    let raw: RawConfig = serde_yaml::from_str(config_text).map_err(|e| ParseError::Yaml {
        cell: index,
        message: e.to_string(),
    })?;

    let query = raw.query.unwrap_or_default();
    if query.trim().is_empty() {
        return Err(ParseError::Invalid {
            cell: index,
            message: "query is empty".into(),
        });
    }
    let validator =
        ValidatorConfig::from_yaml(&raw.validator).map_err(|source| ParseError::Validator { cell: index, source })?;
    let execution = raw.execution.unwrap_or_default();
    if let Some(t) = execution.max_time {
        if !(t > 0.0) {
            return Err(ParseError::Invalid {
                cell: index,
                message: format!("max_time must be positive, got {t}"),
            });
        }
    }
    let data = raw.data.unwrap_or_default();
    for name in data.keys() {
        if !is_safe_relative(name) {
            return Err(ParseError::Invalid {
                cell: index,
                message: format!("data file `{name}` must be a relative path inside inputs/"),
            });
        }
    }

    Ok(Problem {
        index,
        query,
        validator,
        execution,
        data,
        reference_code: code,
    })
}

/// Rejects absolute paths and `..` components.
pub fn is_safe_relative(name: &str) -> bool {
    let p = Path::new(name);
    !name.is_empty()
        && p.is_relative()
        && p.components().all(|c| matches!(c, std::path::Component::Normal(_)))
}

fn duplicate_data_key(config_text: &str) -> Option<String> {
    let mut in_data = false;
    let mut seen = std::collections::HashSet::new();
    for line in config_text.lines() {
        if !line.starts_with(' ') && !line.trim().is_empty() {
            in_data = line.trim_end() == "data:";
            continue;
        }
        if in_data {
            if let Some((key, _)) = line.trim().split_once(':') {
                if !seen.insert(key.trim().to_string()) {
                    return Some(key.trim().to_string());
                }
            }
        }
    }
    None
}

fn config_yaml(problem: &Problem) -> Mapping {
    let mut map = Mapping::new();
    map.insert("query".into(), problem.query.clone().into());
    if !problem.validator.is_default() {
        map.insert("validator".into(), problem.validator.to_yaml());
    }
    if !problem.execution.is_empty() {
        let value = serde_yaml::to_value(&problem.execution).expect("execution config serializes");
        map.insert("execution".into(), value);
    }
    if !problem.data.is_empty() {
        let mut data = Mapping::new();
        for (k, v) in &problem.data {
            data.insert(k.clone().into(), v.clone().into());
        }
        map.insert("data".into(), Yaml::Mapping(data));
    }
    map
}

fn quote_config(yaml: &str) -> String {
    if yaml.contains("\"\"\"") {
        let escaped = yaml.replace('\\', "\\\\").replace("\"\"\"", "\\\"\\\"\\\"");
        format!("\"\"\"\n{escaped}\"\"\"")
    } else if yaml.contains('\\') {
        format!("r\"\"\"\n{yaml}\"\"\"")
    } else {
        format!("\"\"\"\n{yaml}\"\"\"")
    }
}

pub fn serialize_problemset(ps: &Problemset) -> String {
    let mut out = String::new();
    if !ps.preamble.is_empty() {
        out.push_str(&ps.preamble);
        out.push_str("\n\n");
    }
    for problem in &ps.problems {
        let yaml = serde_yaml::to_string(&Yaml::Mapping(config_yaml(problem))).expect("yaml serializes");
        out.push_str(CELL_MARKER);
        out.push('\n');
        out.push_str(&quote_config(&yaml));
        out.push_str("\n\n");
        if !problem.reference_code.is_empty() {
            out.push_str(&problem.reference_code);
            out.push_str("\n\n");
        }
    }
    let trimmed = out.trim_end().len();
    out.truncate(trimmed);
    out.push('\n');
    out
}

impl Problemset {
    /// Checks the invariants that parsing guarantees, for values built in code.
    pub fn check(&self) -> Result<(), ParseError> {
        if self.id.is_empty() {
            return Err(ParseError::Invalid {
                cell: 0,
                message: "problemset id is empty".into(),
            });
        }
        for (i, p) in self.problems.iter().enumerate() {
            if p.query.trim().is_empty() {
                return Err(ParseError::Invalid {
                    cell: i,
                    message: "query is empty".into(),
                });
            }
            syntax::parse_module(&p.reference_code).map_err(|source| ParseError::Syntax { cell: i, source })?;
            p.validator
                .check()
                .map_err(|source| ParseError::Validator { cell: i, source })?;
        }
        Ok(())
    }

    /// Data manifest merged across all problems, in first-seen order.
    pub fn data_manifest(&self) -> IndexMap<String, String> {
        let mut all = IndexMap::new();
        for p in &self.problems {
            for (k, v) in &p.data {
                all.entry(k.clone()).or_insert_with(|| v.clone());
            }
        }
        all
    }
}

/// Lists problemset files (`*.py`) under `dir`, recursively, sorted by path.
pub fn discover(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                if path.file_name().is_some_and(|n| n != "inputs") {
                    stack.push(path);
                }
            } else if path.extension().is_some_and(|e| e == "py") {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ValidatorKind;

    const POPULATION: &str = r#"import pandas as pd
pop = pd.read_csv('inputs/pop.csv')

# %%
"""
query: |
  Show the correlation between population
  density in 2023 and 2050, rounded to 2 decimals.
validator:
  template: basic
  namespace_intact:
    update: [pop]
  or:
    result:
      atol: 0
    output:
execution:
  forbid_names:
  - pop_heldout_test
  max_time: 0.5
data:
  pop.csv: https://example.org/pop.csv
"""
(pop['pop2023'] / pop['landAreaKm']).corr(pop['pop2050'] / pop['landAreaKm']).round(2)
"#;

    #[test]
    fn parses_population_cell() {
        let ps = parse_str(POPULATION, "population").unwrap();
        assert_eq!(ps.problems.len(), 1);
        let p = &ps.problems[0];
        assert!(p.query.starts_with("Show the correlation between population"));
        assert_eq!(p.execution.forbid_names, vec!["pop_heldout_test"]);
        assert_eq!(p.execution.max_time, Some(0.5));
        assert_eq!(p.data["pop.csv"], "https://example.org/pop.csv");
        assert_eq!(p.validator.template_name(), Some("basic"));
        let kinds: Vec<_> = p.validator.children.iter().map(|c| c.kind).collect();
        assert_eq!(kinds, vec![ValidatorKind::NamespaceIntact, ValidatorKind::Or]);
        assert!(p.reference_code.starts_with("(pop['pop2023']"));
        assert!(ps.preamble.starts_with("import pandas"));
    }

    #[test]
    fn preamble_only() {
        let ps = parse_str("# %%\nimport pandas as pd\n", "x").unwrap();
        assert_eq!(ps.preamble, "import pandas as pd");
        assert!(ps.problems.is_empty());
    }

    #[test]
    fn round_trip_population() {
        let ps = parse_str(POPULATION, "population").unwrap();
        let text = serialize_problemset(&ps);
        let again = parse_str(&text, "population").unwrap();
        assert_eq!(again, ps);
        assert_eq!(text.lines().filter(|l| is_marker(l)).count(), 1);
    }

    #[test]
    fn empty_blocks_are_omitted() {
        let ps = parse_str("# %%\n\"\"\"\nquery: hi\n\"\"\"\nx = 1\n", "t").unwrap();
        let text = serialize_problemset(&ps);
        assert!(!text.contains("execution"));
        assert!(!text.contains("data"));
        assert!(!text.contains("validator"));
    }

    #[test]
    fn missing_config_is_error() {
        let err = parse_str("import os\n# %%\nx = 1\n", "t").unwrap_err();
        assert!(matches!(err, ParseError::MissingConfig { cell: 0 }));
    }

    #[test]
    fn bad_yaml_cites_cell() {
        let src = "import os\n# %%\n\"\"\"\nquery: ok\n\"\"\"\n1\n# %%\n\"\"\"\nquery: [unclosed\n\"\"\"\n2\n";
        let err = parse_str(src, "t").unwrap_err();
        assert!(matches!(err, ParseError::Yaml { cell: 1, .. }), "{err:?}");
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_str("# %%\n\"\"\"\nquery: q\nhint: x\n\"\"\"\n1\n", "t").unwrap_err();
        assert!(matches!(err, ParseError::Yaml { .. }));
    }

    #[test]
    fn duplicate_data_rejected() {
        let src = "# %%\n\"\"\"\nquery: q\ndata:\n  a.csv: u1\n  a.csv: u2\n\"\"\"\n1\n";
        let err = parse_str(src, "t").unwrap_err();
        assert!(matches!(err, ParseError::DuplicateData { ref file, .. } if file == "a.csv"), "{err:?}");
    }

    #[test]
    fn second_config_string_rejected() {
        let src = "# %%\n\"\"\"\nquery: q\n\"\"\"\n\"\"\"\nquery: again\n\"\"\"\n1\n";
        let err = parse_str(src, "t").unwrap_err();
        assert!(matches!(err, ParseError::MultipleConfigs { .. }));
    }

    #[test]
    fn backslashes_survive_round_trip() {
        let src = "# %%\nr\"\"\"\nquery: match r'^\\d+$'\n\"\"\"\nx = 1\n";
        let ps = parse_str(src, "t").unwrap();
        assert!(ps.problems[0].query.contains("\\d"));
        let again = parse_str(&serialize_problemset(&ps), "t").unwrap();
        assert_eq!(again, ps);
    }

    #[test]
    fn path_traversal_rejected() {
        let src = "# %%\n\"\"\"\nquery: q\ndata:\n  ../x.csv: u\n\"\"\"\n1\n";
        assert!(parse_str(src, "t").is_err());
    }
}
