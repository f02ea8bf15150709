use std::io::{Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use dseval_runner::*;
use dseval_validate::{aggregate_metrics, Category, EvalMode, SubCategory, Verdict};
use indexmap::IndexMap;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn config(bench: &Path, agent: &str, cache: &Path) -> RunConfig {
    let mut c = RunConfig::new(bench, agent);
    c.cache_dir = cache.to_path_buf();
    c
}

#[test]
fn oracle_passes_fixture_benchmark_in_both_modes() {
    let cache = tempfile::tempdir().unwrap();
    let cfg = config(&fixtures().join("benchmark"), "oracle", cache.path())
        .with_modes(&[EvalMode::Reset, EvalMode::Propagate]);
    let cfg = RunConfig { parallel: 4, ..cfg };
    let out = run_benchmark(&cfg).unwrap();
    assert!(out.integrity.is_empty(), "{:?}", out.integrity);
    let wrong: Vec<_> = out
        .records
        .iter()
        .filter(|r| !r.pass.strict)
        .map(|r| format!("{}#{} {:?}: {}", r.problemset, r.problem_index, r.mode, r.verdict.detail))
        .collect();
    assert!(wrong.is_empty(), "{wrong:#?}");
    assert_eq!(out.records.len(), 2 * 21);
    assert_eq!(out.metrics.pass_rate, 100.0);
    assert_eq!(out.metrics.pass_rate_error_prop, Some(100.0));
}

#[test]
fn propagation_hurts_a_dependent_chain() {
    let cache = tempfile::tempdir().unwrap();
    let agent = format!("scripted:{}", fixtures().join("agents/chain_wrong_first.yaml").display());
    let cfg = config(&fixtures().join("chain"), &agent, cache.path()).with_modes(&[EvalMode::Reset]);
    let reset = run_benchmark(&cfg).unwrap();
    let verdicts: Vec<bool> = reset.records.iter().map(|r| r.pass.strict).collect();
    assert_eq!(verdicts, [false, true, true]);
    assert_eq!(dseval_validate::round1(reset.metrics.pass_rate), 66.7);

    let cfg = cfg.with_modes(&[EvalMode::Propagate]);
    let prop = run_benchmark(&cfg).unwrap();
    assert!(prop.records.iter().all(|r| !r.pass.strict));
    assert_eq!(prop.metrics.pass_rate_error_prop, Some(0.0));
    assert!(prop.metrics.pass_rate <= reset.metrics.pass_rate);
}

#[test]
fn repair_through_the_runner() {
    let cache = tempfile::tempdir().unwrap();
    let agent = format!("scripted:{}", fixtures().join("agents/chain_repair.yaml").display());
    let mut cfg = config(&fixtures().join("chain"), &agent, cache.path());
    let single = run_benchmark(&cfg).unwrap();
    assert_eq!(single.records[0].verdict.to_string(), "Crash / Name Error");
    cfg.repair = Some("self-debug".into());
    cfg.max_attempts = 4;
    let repaired = run_benchmark(&cfg).unwrap();
    assert_eq!(repaired.records[0].attempts, 2);
    assert_eq!(repaired.metrics.pass_rate, 100.0);
    assert!(repaired.metrics.pass_rate >= single.metrics.pass_rate);
}

#[test]
fn parallel_and_serial_runs_agree() {
    let cache = tempfile::tempdir().unwrap();
    let agent = format!("scripted:{}", fixtures().join("agents/chain_wrong_first.yaml").display());
    let tmp = tempfile::tempdir().unwrap();
    // Two copies of the chain so there is something to parallelize.
    for name in ["a.py", "b.py"] {
        std::fs::copy(fixtures().join("chain/chain.py"), tmp.path().join(name)).unwrap();
    }
    let mut cfg = config(tmp.path(), &agent, cache.path()).with_modes(&[EvalMode::Reset, EvalMode::Propagate]);
    let serial = run_benchmark(&cfg).unwrap();
    cfg.parallel = 2;
    let parallel = run_benchmark(&cfg).unwrap();
    assert_eq!(serial.metrics, parallel.metrics);
    let labels = |o: &RunOutput| o.records.iter().map(|r| r.verdict.to_string()).collect::<Vec<_>>();
    assert_eq!(labels(&serial), labels(&parallel));
}

#[test]
fn empty_benchmark_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), "oracle", dir.path());
    cfg.out = Some(out.path().join("records.jsonl"));
    assert!(matches!(run_benchmark(&cfg), Err(RunError::NoProblemsets(_))));
    assert!(!out.path().join("records.jsonl").exists());
}

#[test]
fn broken_reference_is_reported_not_skipped_silently() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixtures().join("chain/chain.py"), dir.path().join("good.py")).unwrap();
    std::fs::write(
        dir.path().join("broken.py"),
        "x = 1\n# %%\n\"\"\"\nquery: q\n\"\"\"\nundefined_thing + 1\n",
    )
    .unwrap();
    let out = run_benchmark(&config(dir.path(), "oracle", dir.path())).unwrap();
    assert_eq!(out.integrity.len(), 1);
    assert_eq!(out.integrity[0].problemset, "broken");
    assert_eq!(out.integrity[0].problem_index, Some(0));
    assert_eq!(out.records.len(), 3);
}

#[test]
fn agent_failure_aborts_with_records_kept() {
    let dir = tempfile::tempdir().unwrap();
    // Answers problem 0 only; the missing entry is a transport-level failure.
    std::fs::write(dir.path().join("short.yaml"), "'*':\n  - total = sum(nums)\n").unwrap();
    let agent = format!("scripted:{}", dir.path().join("short.yaml").display());
    let mut cfg = config(&fixtures().join("chain"), &agent, dir.path());
    let records = dir.path().join("records.jsonl");
    cfg.out = Some(records.clone());
    let err = run_benchmark(&cfg).unwrap_err();
    match err {
        RunError::Agent {
            problem_index,
            records_written,
            ..
        } => {
            assert_eq!(problem_index, 1);
            assert_eq!(records_written, 1);
        }
        other => panic!("unexpected {other}"),
    }
    assert_eq!(read_jsonl(&records).unwrap().len(), 1);
}

#[test]
fn records_stream_to_jsonl_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let agent = format!("scripted:{}", fixtures().join("agents/chain_wrong_first.yaml").display());
    let mut cfg = config(&fixtures().join("chain"), &agent, dir.path());
    cfg.out = Some(dir.path().join("out/records.jsonl"));
    cfg.report = Some(dir.path().join("out/report.html"));
    let out = run_benchmark(&cfg).unwrap();
    let back = read_jsonl(cfg.out.as_ref().unwrap()).unwrap();
    assert_eq!(back, out.records);
    let text = std::fs::read_to_string(cfg.out.as_ref().unwrap()).unwrap();
    let first = text.lines().next().unwrap();
    assert!(first.starts_with("{\"benchmark\":\"chain\",\"problemset\":\"chain\",\"problem_index\":0"));
    let html = std::fs::read_to_string(cfg.report.as_ref().unwrap()).unwrap();
    assert!(html.contains("66.7"));
    assert!(html.contains("total = 0") && html.contains("total = sum(nums)"));
}

fn synthetic_record(i: usize, verdict: Verdict) -> EvaluationRecord {
    EvaluationRecord {
        benchmark: "synthetic".into(),
        problemset: "s".into(),
        problem_index: i,
        agent: "test".into(),
        mode: EvalMode::Reset,
        query: format!("q{i}"),
        code: "x".into(),
        reference_code: "x".into(),
        result: ResultSummary {
            result_text: None,
            stream_output: String::new(),
            error_kind: None,
            error_message: None,
            duration: 0.0,
        },
        pass: PassFlags::from(&verdict),
        verdict,
        attempts: 1,
        token_usage: None,
        duration: 0.0,
        timestamp: "2024-01-01T00:00:00+00:00".into(),
    }
}

fn ten_records() -> Vec<EvaluationRecord> {
    let mut verdicts = vec![Verdict::new(Category::Correct, None, ""); 6];
    verdicts.push(Verdict::new(Category::IntactViolation, None, ""));
    verdicts.push(Verdict::new(Category::IntactViolation, None, ""));
    verdicts.push(Verdict::new(Category::PresentationError, Some(SubCategory::MissingReturn), ""));
    verdicts.push(Verdict::new(Category::Crash, Some(SubCategory::NameError), ""));
    verdicts.into_iter().enumerate().map(|(i, v)| synthetic_record(i, v)).collect()
}

#[test]
fn html_report_shows_synthetic_pass_rate() {
    let records = ten_records();
    let metrics = aggregate_metrics(records.iter().map(|r| (r.mode, &r.verdict)));
    let html = render_html(&records, &metrics);
    assert!(html.contains("<td>60.0</td>"));
    assert!(html.contains("<td>80.0</td>") && html.contains("<td>70.0</td>"));
    for head in ["Pass Rate", "Error Prop", "w/o Intact", "w/o PE"] {
        assert!(html.contains(head));
    }
    assert!(!html.contains("No records"));
    let md = render_markdown(&records, &metrics);
    assert!(md.contains("| 60.0 | - | 80.0 | 70.0 |"));
}

#[test]
fn empty_report_has_banner() {
    let metrics = aggregate_metrics(std::iter::empty());
    assert!(render_html(&[], &metrics).contains("No records"));
    assert!(render_markdown(&[], &metrics).contains("No records"));
}

#[test]
fn report_formats_come_from_the_registry() {
    let dir = tempfile::tempdir().unwrap();
    let records = ten_records();
    let metrics = aggregate_metrics(records.iter().map(|r| (r.mode, &r.verdict)));
    let reg = standard_report_formats();
    for (fmt, file) in [("jsonl", "r.jsonl"), ("html", "r.html"), ("markdown", "r.md")] {
        emit_report(&reg, fmt, &records, &metrics, &dir.path().join(file)).unwrap();
    }
    assert_eq!(read_jsonl(&dir.path().join("r.jsonl")).unwrap(), records);
    assert!(matches!(
        emit_report(&reg, "pdf", &records, &metrics, &dir.path().join("r.pdf")),
        Err(ReportError::UnknownFormat(_))
    ));
}

/// Serves `body` for every request and counts hits.
fn serve(body: Vec<u8>) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut buf = [0u8; 2048];
            let _ = stream.read(&mut buf);
            counter.fetch_add(1, Ordering::SeqCst);
            let head = format!(
                "HTTP/1.1 200 OK\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                body.len()
            );
            let _ = stream.write_all(head.as_bytes());
            let _ = stream.write_all(&body);
        }
    });
    (format!("http://{addr}"), hits)
}

#[test]
fn provisioning_downloads_once_then_hits_cache() {
    let fixture = std::fs::read(fixtures().join("benchmark/data/sales.csv")).unwrap();
    let (base, hits) = serve(fixture.clone());
    let cache = tempfile::tempdir().unwrap();
    let mut manifest = IndexMap::new();
    manifest.insert("sales.csv".to_string(), format!("{base}/sales.csv"));
    let opts = ProvisionOptions::new(cache.path(), cache.path());

    let first = tempfile::tempdir().unwrap();
    provision_data(&manifest, first.path(), &opts).unwrap();
    assert_eq!(std::fs::read(first.path().join("sales.csv")).unwrap(), fixture);
    assert_eq!(hits.load(Ordering::SeqCst), 1);

    let second = tempfile::tempdir().unwrap();
    let offline = ProvisionOptions {
        offline: true,
        ..opts.clone()
    };
    provision_data(&manifest, second.path(), &offline).unwrap();
    assert_eq!(std::fs::read(second.path().join("sales.csv")).unwrap(), fixture);
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[test]
fn provisioning_errors() {
    let cache = tempfile::tempdir().unwrap();
    let inputs = tempfile::tempdir().unwrap();
    let opts = ProvisionOptions::new(cache.path(), fixtures().join("benchmark"));

    let empty = IndexMap::new();
    provision_data(&empty, inputs.path(), &opts).unwrap();
    assert_eq!(std::fs::read_dir(inputs.path()).unwrap().count(), 0);

    let one = |k: &str, v: String| IndexMap::from([(k.to_string(), v)]);
    let err = provision_data(&one("../escape.csv", "data/sales.csv".into()), inputs.path(), &opts).unwrap_err();
    assert!(matches!(err, ProvisionError::UnsafeName(_)));

    let err = provision_data(&one("x.csv", "data/missing.csv".into()), inputs.path(), &opts).unwrap_err();
    assert!(matches!(&err, ProvisionError::Unreachable { file, .. } if file == "x.csv"), "{err}");

    let bad_pin = format!("data/sales.csv#sha256={}", "0".repeat(64));
    let err = provision_data(&one("s.csv", bad_pin), inputs.path(), &opts).unwrap_err();
    assert!(matches!(err, ProvisionError::Integrity { .. }));

    let bytes = std::fs::read(fixtures().join("benchmark/data/sales.csv")).unwrap();
    let good_pin = format!("data/sales.csv#sha256={}", sha256_hex(&bytes));
    provision_data(&one("s.csv", good_pin), inputs.path(), &opts).unwrap();

    let offline = ProvisionOptions { offline: true, ..opts };
    let err = provision_data(&one("r.csv", "http://127.0.0.1:9/r.csv".into()), inputs.path(), &offline).unwrap_err();
    assert!(matches!(err, ProvisionError::NotCached { .. }));

    let (base, _) = serve(Vec::new());
    drop(base);
    let unreachable = ProvisionOptions { offline: false, ..offline };
    let err =
        provision_data(&one("r.csv", "http://127.0.0.1:9/r.csv".into()), inputs.path(), &unreachable).unwrap_err();
    assert!(matches!(err, ProvisionError::Unreachable { .. }), "{err}");
}
