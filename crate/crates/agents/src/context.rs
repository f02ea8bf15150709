//! Prompt context assembly: which parts go in, and in what order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::request::AgentRequest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContextPart {
    /// Variable descriptions of the live session.
    Variables,
    /// Previously executed code.
    Code,
    Query,
}

impl ContextPart {
    fn letter(self) -> char {
        match self {
            ContextPart::Variables => 'V',
            ContextPart::Code => 'C',
            ContextPart::Query => 'Q',
        }
    }
}

/// An ordering of context parts, written like `V+C+Q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextOrder(pub Vec<ContextPart>);

impl Default for ContextOrder {
    fn default() -> Self {
        ContextOrder(vec![ContextPart::Variables, ContextPart::Code, ContextPart::Query])
    }
}

impl FromStr for ContextOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = Vec::new();
        for token in s.split('+').map(str::trim) {
            let part = match token {
                "V" | "v" => ContextPart::Variables,
                "C" | "c" => ContextPart::Code,
                "Q" | "q" => ContextPart::Query,
                other => return Err(format!("unknown context part `{other}` (expected V, C or Q)")),
            };
            if parts.contains(&part) {
                return Err(format!("context part `{token}` repeated"));
            }
            parts.push(part);
        }
        if !parts.contains(&ContextPart::Query) {
            return Err("context order must include the query (Q)".into());
        }
        Ok(ContextOrder(parts))
    }
}

impl fmt::Display for ContextOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letters: Vec<String> = self.0.iter().map(|p| p.letter().to_string()).collect();
        f.write_str(&letters.join("+"))
    }
}

impl Serialize for ContextOrder {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ContextOrder {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Renders the user prompt for a request.
pub fn render_context(req: &AgentRequest, order: &ContextOrder) -> String {
    let mut sections = Vec::new();
    for part in &order.0 {
        match part {
            ContextPart::Variables => {
                if !req.variable_description.trim().is_empty() {
                    sections.push(format!(
                        "Variables in the current session:\n{}",
                        req.variable_description.trim_end()
                    ));
                }
            }
            ContextPart::Code => {
                if !req.code_history.is_empty() {
                    let mut block = String::from("Code executed so far:\n```python\n");
                    for cell in &req.code_history {
                        block.push_str(cell.trim_end());
                        block.push_str("\n\n");
                    }
                    block.truncate(block.trim_end().len());
                    block.push_str("\n```");
                    sections.push(block);
                }
            }
            ContextPart::Query => sections.push(format!("Task:\n{}", req.query.trim())),
        }
    }
    if let Some(fb) = &req.repair_feedback {
        let mut block = format!(
            "Your previous attempt:\n```python\n{}\n```",
            fb.previous_code.trim_end()
        );
        if let Some(err) = &fb.error {
            block.push_str(&format!("\nIt raised an error:\n{}", err.trim_end()));
        }
        if !fb.console.trim().is_empty() {
            block.push_str(&format!("\nConsole output:\n{}", fb.console.trim_end()));
        }
        block.push_str("\nExplain the problem line by line, then write a corrected solution.");
        sections.push(block);
    }
    sections.join("\n\n")
}

/// Extracts code from a chat completion: every fenced python (or unlabeled)
/// block joined in order, or the whole text when there is none.
pub fn extract_code(message: &str) -> String {
    let mut blocks = Vec::new();
    // (keep, lines) of the fence currently open
    let mut open: Option<(bool, Vec<&str>)> = None;
    for line in message.lines() {
        let fence = line.trim_start().strip_prefix("```");
        match (open.take(), fence) {
            (None, Some(lang)) => {
                let lang = lang.trim().to_ascii_lowercase();
                open = Some((lang.is_empty() || lang == "python" || lang == "py", Vec::new()));
            }
            (None, None) => {}
            (Some((keep, lines)), Some(_)) => {
                if keep {
                    blocks.push(lines.join("\n"));
                }
            }
            (Some((keep, mut lines)), None) => {
                lines.push(line);
                open = Some((keep, lines));
            }
        }
    }
    if blocks.is_empty() {
        message.trim().to_string()
    } else {
        blocks.join("\n\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_parses_and_prints() {
        let o: ContextOrder = "C+V+Q".parse().unwrap();
        assert_eq!(o.to_string(), "C+V+Q");
        assert_eq!(ContextOrder::default().to_string(), "V+C+Q");
        assert!("V+V+Q".parse::<ContextOrder>().is_err());
        assert!("V+C".parse::<ContextOrder>().is_err());
    }

    #[test]
    fn sections_follow_order() {
        let req = AgentRequest {
            query: "Count rows.".into(),
            variable_description: "df: DataFrame".into(),
            code_history: vec!["import pandas as pd".into()],
            ..Default::default()
        };
        let vcq = render_context(&req, &ContextOrder::default());
        let v = vcq.find("df: DataFrame").unwrap();
        let c = vcq.find("import pandas").unwrap();
        let q = vcq.find("Count rows.").unwrap();
        assert!(v < c && c < q);
        let qvc = render_context(&req, &"Q+V+C".parse().unwrap());
        assert!(qvc.find("Count rows.").unwrap() < qvc.find("df: DataFrame").unwrap());
    }

    #[test]
    fn code_blocks_are_extracted() {
        let msg = "Here:\n```python\nx = 1\n```\nthen\n```bash\nls\n```\n```\ny = 2\n```";
        assert_eq!(extract_code(msg), "x = 1\n\ny = 2");
        assert_eq!(extract_code("just text"), "just text");
    }
}
