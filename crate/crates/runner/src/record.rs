use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use dseval_agents::TokenUsage;
use dseval_runtime::{ErrorKind, ExecutionResult};
use dseval_validate::{Category, EvalMode, Verdict};
use serde::{Deserialize, Serialize};

const MAX_TEXT: usize = 4000;

fn clip(text: &str) -> String {
    if text.len() <= MAX_TEXT {
        return text.to_string();
    }
    let mut end = MAX_TEXT;
    while !text.is_char_boundary(end) {
        end -= 1;
    }
    format!("{}... [{} bytes truncated]", &text[..end], text.len() - end)
}

/// What a submission produced, with long texts truncated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSummary {
    pub result_text: Option<String>,
    pub stream_output: String,
    pub error_kind: Option<ErrorKind>,
    pub error_message: Option<String>,
    pub duration: f64,
}

impl From<&ExecutionResult> for ResultSummary {
    fn from(r: &ExecutionResult) -> Self {
        ResultSummary {
            result_text: r.execute_result.as_ref().map(|v| clip(&v.text)),
            stream_output: clip(&r.stream_output),
            error_kind: r.error.as_ref().map(|e| e.kind),
            error_message: r.error.as_ref().map(|e| clip(&e.message)),
            duration: r.duration,
        }
    }
}

/// Whether a verdict passes strictly and under each relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassFlags {
    pub strict: bool,
    pub wo_intact: bool,
    pub wo_pe: bool,
}

impl From<&Verdict> for PassFlags {
    fn from(v: &Verdict) -> Self {
        let strict = v.is_correct();
        PassFlags {
            strict,
            wo_intact: strict || v.category() == Category::IntactViolation,
            wo_pe: strict || v.category() == Category::PresentationError,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub benchmark: String,
    pub problemset: String,
    pub problem_index: usize,
    pub agent: String,
    pub mode: EvalMode,
    pub query: String,
    pub code: String,
    pub reference_code: String,
    pub result: ResultSummary,
    pub verdict: Verdict,
    pub pass: PassFlags,
    pub attempts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_usage: Option<TokenUsage>,
    pub duration: f64,
    pub timestamp: String,
}

/// Appends records as JSON lines, flushing after each one.
pub struct JsonlWriter {
    out: BufWriter<File>,
    written: usize,
}

impl JsonlWriter {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        Ok(JsonlWriter {
            out: BufWriter::new(File::create(path)?),
            written: 0,
        })
    }

    pub fn write(&mut self, record: &EvaluationRecord) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> usize {
        self.written
    }
}

pub fn read_jsonl(path: &Path) -> std::io::Result<Vec<EvaluationRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| {
            std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {}: {e}", n + 1))
        })?;
        out.push(rec);
    }
    Ok(out)
}
