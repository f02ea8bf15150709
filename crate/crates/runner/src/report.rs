//! Report formats over a finished run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use dseval_core::Registry;
use dseval_validate::{round1, Category, Metrics};

use crate::record::{EvaluationRecord, JsonlWriter};

pub trait ReportFormat: Send + Sync {
    fn name(&self) -> &'static str;

    fn write(&self, records: &[EvaluationRecord], metrics: &Metrics, path: &Path) -> std::io::Result<()>;
}

pub fn standard_report_formats() -> Registry<dyn ReportFormat> {
    let mut r: Registry<dyn ReportFormat> = Registry::new();
    r.register("jsonl", Arc::new(JsonlReport));
    r.register("html", Arc::new(HtmlReport));
    r.register("markdown", Arc::new(MarkdownReport));
    r.register("md", Arc::new(MarkdownReport));
    r
}

/// Picks a format from the file extension (`.jsonl`, `.html`, `.md`).
pub fn format_for_path(path: &Path) -> Option<&'static str> {
    match path.extension()?.to_str()? {
        "jsonl" => Some("jsonl"),
        "html" | "htm" => Some("html"),
        "md" | "markdown" => Some("markdown"),
        _ => None,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("unknown report format `{0}`")]
    UnknownFormat(String),
    #[error("writing report {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub fn emit_report(
    registry: &Registry<dyn ReportFormat>,
    format: &str,
    records: &[EvaluationRecord],
    metrics: &Metrics,
    path: &Path,
) -> Result<(), ReportError> {
    let writer = registry
        .get(format)
        .ok_or_else(|| ReportError::UnknownFormat(format.to_string()))?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| ReportError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    writer.write(records, metrics, path).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub struct JsonlReport;

impl ReportFormat for JsonlReport {
    fn name(&self) -> &'static str {
        "jsonl"
    }

    fn write(&self, records: &[EvaluationRecord], _: &Metrics, path: &Path) -> std::io::Result<()> {
        let mut w = JsonlWriter::create(path)?;
        for r in records {
            w.write(r)?;
        }
        Ok(())
    }
}

fn pct(x: f64) -> String {
    format!("{:.1}", round1(x))
}

fn metric_cells(m: &Metrics) -> [String; 4] {
    [
        pct(m.pass_rate),
        m.pass_rate_error_prop.map(pct).unwrap_or_else(|| "-".into()),
        pct(m.pass_rate_wo_intact),
        pct(m.pass_rate_wo_pe),
    ]
}

const METRIC_HEADERS: [&str; 4] = ["Pass Rate", "Error Prop", "w/o Intact", "w/o PE"];

fn category_rows(m: &Metrics) -> Vec<(String, usize, f64)> {
    let total = m.category_counts.values().sum::<usize>().max(1) as f64;
    Category::ALL
        .iter()
        .map(|c| {
            let n = m.category_counts.get(c.display_name()).copied().unwrap_or(0);
            (c.display_name().to_string(), n, n as f64 * 100.0 / total)
        })
        .collect()
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Self-contained static page: metrics table, verdict breakdown and one
/// collapsible entry per problem.
pub struct HtmlReport;

const STYLE: &str = "body{font-family:sans-serif;margin:2em;max-width:70em}\
table{border-collapse:collapse;margin:1em 0}td,th{border:1px solid #ccc;padding:.3em .7em;text-align:left}\
.banner{background:#fff3cd;border:1px solid #e0c060;padding:1em;font-weight:bold}\
.bar{background:#4a7fc1;height:.8em;display:inline-block}\
pre{background:#f6f6f6;padding:.5em;overflow-x:auto}.pass{color:#1a7f37}.fail{color:#b42318}\
.cols{display:flex;gap:1em}.cols>div{flex:1;min-width:0}";

impl ReportFormat for HtmlReport {
    fn name(&self) -> &'static str {
        "html"
    }

    fn write(&self, records: &[EvaluationRecord], metrics: &Metrics, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, render_html(records, metrics))
    }
}

pub fn render_html(records: &[EvaluationRecord], metrics: &Metrics) -> String {
    let mut h = String::new();
    h.push_str("<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>dseval report</title>");
    let _ = write!(h, "<style>{STYLE}</style></head><body>\n<h1>Evaluation report</h1>\n");
    if records.is_empty() || metrics.empty {
        h.push_str("<div class=\"banner\">No records: nothing was evaluated in this run.</div>\n");
    }
    if let Some(first) = records.first() {
        let _ = writeln!(
            h,
            "<p>Benchmark <code>{}</code>, agent <code>{}</code>, {} records.</p>",
            escape(&first.benchmark),
            escape(&first.agent),
            records.len()
        );
    }

    h.push_str("<h2>Metrics</h2>\n<table><tr>");
    for head in METRIC_HEADERS {
        let _ = write!(h, "<th>{head}</th>");
    }
    h.push_str("</tr>\n<tr>");
    for cell in metric_cells(metrics) {
        let _ = write!(h, "<td>{cell}</td>");
    }
    h.push_str("</tr></table>\n");

    let rows = category_rows(metrics);
    h.push_str("<h2>Verdicts</h2>\n<table><tr><th>Category</th><th>Count</th><th>Share</th></tr>\n");
    for (name, n, share) in &rows {
        let _ = writeln!(
            h,
            "<tr><td>{}</td><td>{n}</td><td><span class=\"bar\" style=\"width:{:.0}px\"></span> {}%</td></tr>",
            escape(name),
            share * 2.0,
            pct(*share)
        );
    }
    h.push_str("</table>\n");
    let breakdown: BTreeMap<&str, usize> = rows.iter().map(|(n, c, _)| (n.as_str(), *c)).collect();
    let _ = writeln!(
        h,
        "<script type=\"application/json\" id=\"verdict-breakdown\">{}</script>",
        escape(&serde_json::to_string(&breakdown).unwrap_or_default())
    );

    if !records.is_empty() {
        h.push_str("<h2>Problems</h2>\n");
    }
    for r in records {
        let class = if r.pass.strict { "pass" } else { "fail" };
        let _ = writeln!(
            h,
            "<details><summary><code>{}#{}</code> [{}] <span class=\"{class}\">{}</span></summary>",
            escape(&r.problemset),
            r.problem_index,
            r.mode_name(),
            escape(&r.verdict.to_string())
        );
        let _ = writeln!(h, "<p>{}</p>", escape(&r.query));
        if !r.verdict.detail.is_empty() {
            let _ = writeln!(h, "<p><em>{}</em></p>", escape(&r.verdict.detail));
        }
        let _ = writeln!(
            h,
            "<div class=\"cols\"><div><h4>Submission</h4><pre>{}</pre></div><div><h4>Reference</h4><pre>{}</pre></div></div>",
            escape(&r.code),
            escape(&r.reference_code)
        );
        if let Some(text) = &r.result.result_text {
            let _ = writeln!(h, "<h4>Result</h4><pre>{}</pre>", escape(text));
        }
        if !r.result.stream_output.is_empty() {
            let _ = writeln!(h, "<h4>Console</h4><pre>{}</pre>", escape(&r.result.stream_output));
        }
        if let Some(msg) = &r.result.error_message {
            let _ = writeln!(h, "<h4>Error</h4><pre>{}</pre>", escape(msg));
        }
        h.push_str("</details>\n");
    }
    h.push_str("</body></html>\n");
    h
}

pub struct MarkdownReport;

impl ReportFormat for MarkdownReport {
    fn name(&self) -> &'static str {
        "markdown"
    }

    fn write(&self, records: &[EvaluationRecord], metrics: &Metrics, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, render_markdown(records, metrics))
    }
}

pub fn render_markdown(records: &[EvaluationRecord], metrics: &Metrics) -> String {
    let mut m = String::new();
    if records.is_empty() || metrics.empty {
        m.push_str("> **No records:** nothing was evaluated in this run.\n\n");
    }
    let _ = writeln!(m, "| {} |", METRIC_HEADERS.join(" | "));
    m.push_str("|---|---|---|---|\n");
    let _ = writeln!(m, "| {} |\n", metric_cells(metrics).join(" | "));
    m.push_str("| Category | Count |\n|---|---|\n");
    for (name, n, _) in category_rows(metrics) {
        let _ = writeln!(m, "| {name} | {n} |");
    }
    if !records.is_empty() {
        m.push_str("\n| Problemset | # | Mode | Verdict | Attempts |\n|---|---|---|---|---|\n");
        for r in records {
            let _ = writeln!(
                m,
                "| {} | {} | {} | {} | {} |",
                r.problemset.replace('|', "\\|"),
                r.problem_index,
                r.mode_name(),
                r.verdict,
                r.attempts
            );
        }
    }
    m
}

impl EvaluationRecord {
    pub fn mode_name(&self) -> &'static str {
        match self.mode {
            dseval_validate::EvalMode::Reset => "reset",
            dseval_validate::EvalMode::Propagate => "propagate",
        }
    }
}
