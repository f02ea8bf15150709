//! Benchmark orchestration: data provisioning, agent runs in reset or
//! propagate mode, record persistence and reports.

pub mod integrity;
pub mod provision;
pub mod record;
pub mod report;
pub mod run;

pub use integrity::{check_integrity, check_problemset_file, prepare_problemset, Prepared};
pub use provision::{merged_manifest, provision_data, sha256_hex, ProvisionError, ProvisionOptions};
pub use record::{read_jsonl, EvaluationRecord, JsonlWriter, PassFlags, ResultSummary};
pub use report::{
    emit_report, format_for_path, render_html, render_markdown, standard_report_formats, ReportError, ReportFormat,
};
pub use run::{
    load_benchmark, run_benchmark, IntegrityReport, Relaxations, RunConfig, RunError, RunOutput,
    Runner,
};
