//! Text descriptions of a session's variables for agent prompts.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::session::{RuntimeError, Session};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescribeStyle {
    /// Name, kind, shape, columns and head rows.
    #[default]
    Compact,
    /// Compact plus per-column dtype and unique-value count.
    Verbose,
}

impl FromStr for DescribeStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "compact" => Ok(DescribeStyle::Compact),
            "verbose" => Ok(DescribeStyle::Verbose),
            other => Err(format!("unknown description style `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct VariableSummary {
    pub name: String,
    pub kind: String,
    pub shape: Option<Vec<usize>>,
    #[serde(default)]
    pub columns: Vec<String>,
    #[serde(default)]
    pub dtypes: Vec<String>,
    #[serde(default)]
    pub nunique: Vec<usize>,
    pub head: Option<String>,
}

fn shape_text(shape: &[usize]) -> String {
    match shape {
        [n] => format!("({n},)"),
        dims => format!("({})", dims.iter().map(usize::to_string).collect::<Vec<_>>().join(", ")),
    }
}

/// Renders summaries in name order.
pub fn render_summaries(vars: &[VariableSummary], style: DescribeStyle) -> String {
    let mut sorted: Vec<&VariableSummary> = vars.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let mut out = String::new();
    for v in sorted {
        let _ = write!(out, "{}: {}", v.name, v.kind);
        if let Some(shape) = &v.shape {
            let _ = write!(out, ", shape {}", shape_text(shape));
        }
        if !v.columns.is_empty() {
            let _ = write!(out, ", columns: {}", v.columns.join(", "));
        }
        out.push('\n');
        if style == DescribeStyle::Verbose && !v.dtypes.is_empty() {
            let labels: Vec<String> = if v.columns.len() == v.dtypes.len() {
                v.columns.clone()
            } else {
                vec!["values".to_string(); v.dtypes.len()]
            };
            for (i, (label, dtype)) in labels.iter().zip(&v.dtypes).enumerate() {
                match v.nunique.get(i) {
                    Some(n) => {
                        let _ = writeln!(out, "  - {label}: {dtype}, {n} unique values");
                    }
                    None => {
                        let _ = writeln!(out, "  - {label}: {dtype}");
                    }
                }
            }
        }
        if let Some(head) = &v.head {
            for line in head.lines() {
                let _ = writeln!(out, "    {line}");
            }
        }
    }
    out
}

pub fn describe_variables(session: &mut Session, style: DescribeStyle) -> Result<String, RuntimeError> {
    let raw = session.summaries()?;
    let vars: Vec<VariableSummary> = serde_json::from_value(raw).map_err(|e| RuntimeError::Reply(e.to_string()))?;
    Ok(render_summaries(&vars, style))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_empty() {
        assert_eq!(render_summaries(&[], DescribeStyle::Verbose), "");
    }

    #[test]
    fn verbose_lists_dtypes() {
        let v = VariableSummary {
            name: "t".into(),
            kind: "DataFrame".into(),
            shape: Some(vec![3, 2]),
            columns: vec!["a".into(), "b".into()],
            dtypes: vec!["int64".into(), "object".into()],
            nunique: vec![3, 1],
            head: None,
        };
        let compact = render_summaries(std::slice::from_ref(&v), DescribeStyle::Compact);
        assert!(compact.contains("shape (3, 2)"));
        assert!(!compact.contains("int64"));
        let verbose = render_summaries(&[v], DescribeStyle::Verbose);
        assert!(verbose.contains("a: int64, 3 unique values"));
        assert!(verbose.contains("b: object, 1 unique values"));
    }
}
