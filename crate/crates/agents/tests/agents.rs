use std::io::Write;
use std::sync::Arc;
use std::time::Duration;

use dseval_agents::*;
use dseval_runtime::{ExecutionResult, RuntimeError, Session, SessionConfig};
use dseval_validate::{crash_subcategory, Category, Verdict};

fn request(ps: &str, index: usize) -> AgentRequest {
    AgentRequest {
        problemset_id: ps.into(),
        problem_index: index,
        query: "Compute x.".into(),
        ..Default::default()
    }
}

fn crash_or_correct(session: &mut Session, resp: &AgentResponse) -> Result<(ExecutionResult, Verdict), RuntimeError> {
    let result = session.run(&resp.code, Some(10.0))?;
    let verdict = match &result.error {
        None => Verdict::new(Category::Correct, None, ""),
        Some(e) => Verdict::new(Category::Crash, Some(crash_subcategory(e.kind)), e.message.clone()),
    };
    Ok((result, verdict))
}

#[test]
fn oracle_returns_reference_code() {
    let ps = dseval_core::parse_str("# %%\n'''\nquery: Set x.\n'''\nx = 1\n", "ps").unwrap();
    let mut agent = create_agent(&standard_agents(), "oracle", &AgentSettings::default()).unwrap();
    agent.begin_problemset(&ps).unwrap();
    let resp = agent.act(&request("ps", ps.problems[0].index)).unwrap();
    assert_eq!(resp.code.trim(), "x = 1");
    assert!(agent.act(&request("other", 0)).is_err());
}

#[test]
fn unknown_agent_spec_is_a_config_error() {
    let err = create_agent(&standard_agents(), "wizard:x", &AgentSettings::default()).err().unwrap();
    assert!(matches!(err, AgentError::Config(_)));
}

#[test]
fn process_agent_round_trips_json() {
    let settings = AgentSettings::default();
    let cmd = r#"process:python3 -c "import json,sys; r=json.loads(sys.stdin.readline()); print(json.dumps({'code': 'x = %d' % r['problem_index']}))""#;
    let mut agent = create_agent(&standard_agents(), cmd, &settings).unwrap();
    let resp = agent.act(&request("ps", 7)).unwrap();
    assert_eq!(resp.code, "x = 7");
}

#[test]
fn process_agent_deadline_kills_child() {
    let mut agent = ProcessAgent::new("sleep 5", Duration::from_millis(300));
    let started = std::time::Instant::now();
    let err = agent.act(&request("ps", 0)).unwrap_err();
    assert!(matches!(err, AgentError::Timeout(_)));
    assert!(started.elapsed() < Duration::from_secs(3));
}

#[test]
fn process_agent_rejects_garbage() {
    let mut agent = ProcessAgent::new("echo not-json", Duration::from_secs(5));
    assert!(matches!(agent.act(&request("ps", 0)), Err(AgentError::Protocol(_))));
}

#[test]
fn scripted_agent_reads_yaml_attempts() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "ps:\n  - x = 1\n  - [boom(), y = 2]\n'*':\n  - z = 3").unwrap();
    let spec = format!("scripted:{}", file.path().display());
    let mut agent = create_agent(&standard_agents(), &spec, &AgentSettings::default()).unwrap();
    assert_eq!(agent.act(&request("ps", 0)).unwrap().code, "x = 1");
    let mut r = request("ps", 1);
    assert_eq!(agent.act(&r).unwrap().code, "boom()");
    r.round_index = 5;
    assert_eq!(agent.act(&r).unwrap().code, "y = 2");
    assert_eq!(agent.act(&request("elsewhere", 0)).unwrap().code, "z = 3");
}

#[test]
fn self_debug_repairs_a_crash() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "'*':\n  - ['x = undefined_name + 1', 'x = 41 + 1']").unwrap();
    let mut agent = ScriptedAgent::from_file(file.path()).unwrap();
    let mut session = Session::start(SessionConfig::default()).unwrap();
    session.run("base = 1", None).unwrap();
    let strategies = standard_repair_strategies();
    let strategy = repair_strategy(&strategies, "self-debug").unwrap();
    let run = run_with_repair(&mut agent, &request("ps", 0), &mut session, strategy.as_ref(), 3, crash_or_correct)
        .unwrap();
    assert_eq!(run.attempts.len(), 2);
    assert_eq!(run.attempts[0].verdict.to_string().split(':').next().unwrap(), "Crash / Name Error");
    assert!(run.solved());
    assert_eq!(run.final_response().unwrap().code, "x = 41 + 1");
    let names = session.variable_names().unwrap();
    assert!(names.contains("x") && names.contains("base"));
}

#[test]
fn self_debug_feedback_carries_error_not_verdict() {
    let attempt = Attempt {
        response: AgentResponse::code("1/0"),
        result: ExecutionResult::failed(dseval_runtime::ErrorKind::Other, "division by zero", 0.0),
        verdict: Verdict::new(Category::Crash, None, ""),
    };
    let next = SelfDebug.next_request(&request("ps", 0), &attempt, 1);
    let fb = next.repair_feedback.unwrap();
    assert_eq!(fb.previous_code, "1/0");
    assert!(fb.error.unwrap().contains("division by zero"));
    assert_eq!(next.round_index, 1);
    let resampled = Resample.next_request(&request("ps", 0), &attempt, 2);
    assert!(resampled.repair_feedback.is_none());
    assert_eq!(resampled.round_index, 2);
}

#[test]
fn llm_agent_uses_stub_and_extracts_code() {
    let stub = Arc::new(StubClient::new(["Sure.\n```python\nx = 2\n```"]));
    let mut agent = LlmAgent::new(stub.clone(), ContextOrder::default());
    let resp = agent.act(&request("ps", 0)).unwrap();
    assert_eq!(resp.code, "x = 2");
    assert!(resp.token_usage.is_some());
    let prompts = stub.prompts();
    assert_eq!(prompts.len(), 1);
    assert!(prompts[0][1].content.contains("Compute x."));
}
