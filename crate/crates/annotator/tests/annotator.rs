use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::Utc;
use dseval_agents::StubClient;
use dseval_annotator::{
    count_examples, load_seeds, AcceptedProblemset, AnnotateError, AnnotationState, Annotator, AnnotatorConfig,
    Guide, IdeaSeed, Stage,
};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

fn chain_source() -> String {
    std::fs::read_to_string(fixture("chain/chain.py")).unwrap()
}

fn seed() -> IdeaSeed {
    IdeaSeed::new("numbers", "A list of the integers one to ten.")
}

fn annotator(replies: Vec<String>, workspace: &Path) -> (Annotator, Arc<StubClient>) {
    let stub = Arc::new(StubClient::new(replies));
    let mut config = AnnotatorConfig::new(workspace);
    config.rng_seed = 7;
    (Annotator::new(stub.clone(), config), stub)
}

fn pooled(n: usize) -> AnnotationState {
    let mut state = AnnotationState::new(Guide::default());
    for i in 0..n {
        state.accepted_pool.push(AcceptedProblemset {
            seed: format!("seed{i}"),
            sketch: Some(format!("sketch number {i}")),
            source: format!("x{i} = {i}\n"),
            accepted_at: Utc::now(),
        });
    }
    state
}

fn last_prompt(stub: &StubClient) -> String {
    let prompts = stub.prompts();
    prompts.last().unwrap().iter().map(|m| m.content.clone()).collect::<Vec<_>>().join("\n")
}

const MALFORMED: &str = "x = 1\n\n# %%\n\"\"\"\nquery: [unclosed\n\"\"\"\nx\n";

#[test]
fn sketch_is_stored_and_stage_advances() {
    let ws = tempfile::tempdir().unwrap();
    let (a, stub) = annotator(vec!["Knowledge points: sums.\n1. add things".into()], ws.path());
    let mut state = AnnotationState::default();
    let sketch = a.generate_sketch(&mut state, &seed()).unwrap();
    assert_eq!(sketch, "Knowledge points: sums.\n1. add things");
    assert_eq!(state.stage("numbers"), Stage::Sketched);
    assert_eq!(state.pending["numbers"].sketch.as_deref(), Some(sketch.as_str()));
    assert_eq!(stub.calls(), 1);
    assert_eq!(state.usage_log.len(), 1);
}

#[test]
fn empty_pool_gives_zero_shot_prompt() {
    let ws = tempfile::tempdir().unwrap();
    let (a, stub) = annotator(vec!["sketch".into()], ws.path());
    let mut state = pooled(0);
    a.generate_sketch(&mut state, &seed()).unwrap();
    let prompt = last_prompt(&stub);
    assert_eq!(count_examples(&prompt), 0);
    assert!(prompt.contains("A list of the integers one to ten."));
}

#[test]
fn pool_of_seven_shows_exactly_five() {
    let ws = tempfile::tempdir().unwrap();
    let (a, stub) = annotator(vec!["sketch".into()], ws.path());
    let mut state = pooled(7);
    a.generate_sketch(&mut state, &seed()).unwrap();
    let prompt = last_prompt(&stub);
    assert_eq!(count_examples(&prompt), 5);
    let shown = (0..7).filter(|i| prompt.contains(&format!("sketch number {i}\n"))).count();
    assert_eq!(shown, 5);
    // same seed, same selection
    assert_eq!(a.build_sketch_prompt(&state, &seed()), a.build_sketch_prompt(&state, &seed()));
}

#[test]
fn empty_completion_is_an_error() {
    let ws = tempfile::tempdir().unwrap();
    let (a, _) = annotator(vec!["   ".into()], ws.path());
    let mut state = AnnotationState::default();
    assert!(matches!(a.generate_sketch(&mut state, &seed()), Err(AnnotateError::Llm(_))));
    assert_eq!(state.stage("numbers"), Stage::Unstarted);
}

#[test]
fn seed_without_descriptions_is_rejected() {
    let ws = tempfile::tempdir().unwrap();
    let (a, stub) = annotator(vec!["sketch".into()], ws.path());
    let mut state = AnnotationState::default();
    let bad = IdeaSeed::new("blank", "  ");
    assert!(matches!(a.generate_sketch(&mut state, &bad), Err(AnnotateError::Seed(_))));
    assert_eq!(stub.calls(), 0);
}

#[test]
fn known_good_draft_parses() {
    let ws = tempfile::tempdir().unwrap();
    let reply = format!("Here it is:\n```python\n{}```\n", chain_source());
    let (a, _) = annotator(vec!["sketch".into(), reply], ws.path());
    let mut state = AnnotationState::default();
    a.generate_sketch(&mut state, &seed()).unwrap();
    let report = a.generate_problemset(&mut state, &seed()).unwrap();
    assert_eq!(report.attempts, 1);
    assert!(report.integrity.is_none(), "{:?}", report.integrity);
    assert_eq!(state.stage("numbers"), Stage::Drafted);
    let written = std::fs::read_to_string(&report.path).unwrap();
    assert!(written.contains("total = sum(nums)"));
}

#[test]
fn malformed_twice_then_valid_takes_three_attempts() {
    let ws = tempfile::tempdir().unwrap();
    let replies = vec!["sketch".into(), MALFORMED.into(), MALFORMED.into(), chain_source()];
    let (a, stub) = annotator(replies, ws.path());
    let mut state = AnnotationState::default();
    a.generate_sketch(&mut state, &seed()).unwrap();
    let report = a.generate_problemset(&mut state, &seed()).unwrap();
    assert_eq!(report.attempts, 3);
    assert_eq!(report.parse_errors.len(), 2);
    assert_eq!(report.stage, Stage::Drafted);
    assert_eq!(state.pending["numbers"].draft_attempts, 3);
    // the retry carries the parse error back to the model
    assert!(last_prompt(&stub).contains("cannot be parsed"));
}

#[test]
fn persistent_parse_failure_is_surfaced() {
    let ws = tempfile::tempdir().unwrap();
    let (a, _) = annotator(vec!["sketch".into(), MALFORMED.into()], ws.path());
    let mut state = AnnotationState::default();
    a.generate_sketch(&mut state, &seed()).unwrap();
    let report = a.generate_problemset(&mut state, &seed()).unwrap();
    assert_eq!(report.attempts, 3);
    assert_eq!(report.stage, Stage::DraftedWithErrors);
    assert_eq!(state.pending["numbers"].issues.len(), 3);
    assert!(report.path.exists());
}

#[test]
fn draft_requires_sketch() {
    let ws = tempfile::tempdir().unwrap();
    let (a, _) = annotator(vec![chain_source()], ws.path());
    let mut state = AnnotationState::default();
    assert!(matches!(
        a.generate_problemset(&mut state, &seed()),
        Err(AnnotateError::MissingSketch(_))
    ));
}

#[test]
fn crashing_reference_is_listed_for_revision() {
    let ws = tempfile::tempdir().unwrap();
    let buggy = chain_source().replace("total = sum(nums)", "total = sum(numbers)");
    let (a, _) = annotator(vec!["sketch".into(), buggy], ws.path());
    let mut state = AnnotationState::default();
    a.generate_sketch(&mut state, &seed()).unwrap();
    let report = a.generate_problemset(&mut state, &seed()).unwrap();
    assert_eq!(report.stage, Stage::Drafted);
    let integrity = report.integrity.expect("integrity failure");
    assert_eq!(integrity.problem_index, Some(0));
    assert!(state.pending["numbers"].issues[0].starts_with("problem 0:"));
}

#[test]
fn accepting_grows_pool_and_feeds_next_prompt() {
    let ws = tempfile::tempdir().unwrap();
    let (a, stub) = annotator(vec!["first sketch".into(), chain_source(), "second sketch".into()], ws.path());
    let mut state = AnnotationState::default();
    a.generate_sketch(&mut state, &seed()).unwrap();
    let report = a.generate_problemset(&mut state, &seed()).unwrap();
    let size = a
        .accept_revision(&mut state, &seed(), &report.path, "clarified problem 1", Some("Name every variable."))
        .unwrap();
    assert_eq!(size, 1);
    assert_eq!(state.stage("numbers"), Stage::Accepted);
    assert_eq!(state.revision_notes, vec!["[numbers] clarified problem 1".to_string()]);
    assert_eq!(state.guide.amendments, vec!["Name every variable.".to_string()]);

    let next = IdeaSeed::new("weather", "Daily temperatures.");
    a.generate_sketch(&mut state, &next).unwrap();
    let prompt = last_prompt(&stub);
    assert_eq!(count_examples(&prompt), 1);
    assert!(prompt.contains("total = sum(nums)"));
    assert!(prompt.contains("first sketch"));
    assert!(prompt.contains("Name every variable."));
}

#[test]
fn integrity_failure_blocks_acceptance() {
    let ws = tempfile::tempdir().unwrap();
    let (a, _) = annotator(vec![], ws.path());
    let mut state = pooled(2);
    let revised = ws.path().join("revised.py");
    std::fs::write(&revised, chain_source().replace("total * 2", "total / undefined_name")).unwrap();
    let err = a.accept_revision(&mut state, &seed(), &revised, "", None).unwrap_err();
    match err {
        AnnotateError::Integrity { problem_index, .. } => assert_eq!(problem_index, Some(1)),
        other => panic!("unexpected {other}"),
    }
    assert_eq!(state.accepted_pool.len(), 2);
    assert_eq!(state.stage("numbers"), Stage::Revised);
}

#[test]
fn reference_failing_its_own_validator_is_rejected() {
    let ws = tempfile::tempdir().unwrap();
    let (a, _) = annotator(vec![], ws.path());
    let mut state = AnnotationState::default();
    let revised = ws.path().join("revised.py");
    // the reference prints instead of producing the checked value
    let text = "import random\n\n# %%\n\"\"\"\nquery: Draw a random number.\n\"\"\"\nrandom.random()\n";
    std::fs::write(&revised, text).unwrap();
    let err = a.accept_revision(&mut state, &seed(), &revised, "", None).unwrap_err();
    assert!(matches!(err, AnnotateError::Integrity { problem_index: Some(0), .. }), "{err}");
    assert!(state.accepted_pool.is_empty());
}

#[test]
fn state_round_trips_through_json() {
    let ws = tempfile::tempdir().unwrap();
    let (a, _) = annotator(vec!["sketch".into(), chain_source()], ws.path());
    let mut state = AnnotationState::default();
    a.generate_sketch(&mut state, &seed()).unwrap();
    let report = a.generate_problemset(&mut state, &seed()).unwrap();
    a.accept_revision(&mut state, &seed(), &report.path, "ok", None).unwrap();
    let path = ws.path().join("state.json");
    state.save(&path).unwrap();
    let back = AnnotationState::load(&path).unwrap();
    assert_eq!(back.accepted_pool, state.accepted_pool);
    assert_eq!(back.stage("numbers"), Stage::Accepted);
    assert_eq!(back.total_usage(), state.total_usage());
}

#[test]
fn concurrent_sketches_land_in_seed_order() {
    let ws = tempfile::tempdir().unwrap();
    let (a, stub) = annotator(vec!["same sketch".into()], ws.path());
    let mut state = AnnotationState::default();
    let seeds: Vec<_> = (0..4).map(|i| IdeaSeed::new(format!("s{i}"), format!("data {i}"))).collect();
    let out = a.generate_sketches(&mut state, &seeds).unwrap();
    assert_eq!(out.len(), 4);
    assert_eq!(stub.calls(), 4);
    let logged: Vec<_> = state.usage_log.iter().map(|u| u.seed.clone()).collect();
    assert_eq!(logged, vec!["s0", "s1", "s2", "s3"]);
    assert!(seeds.iter().all(|s| state.stage(&s.source_id) == Stage::Sketched));
}

#[test]
fn seeds_load_from_directory() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.yaml"), "dataset_description: Sales per month.\ninputs: data\n").unwrap();
    std::fs::write(
        dir.path().join("b.json"),
        r#"{"source_id": "kaggle-42", "notebook_description": "Cleans a survey."}"#,
    )
    .unwrap();
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let seeds = load_seeds(dir.path()).unwrap();
    assert_eq!(seeds.len(), 2);
    assert_eq!(seeds[0].source_id, "a");
    assert_eq!(seeds[0].inputs.as_deref(), Some(dir.path().join("data").as_path()));
    assert_eq!(seeds[1].source_id, "kaggle-42");

    std::fs::write(dir.path().join("c.yaml"), "source_id: empty\n").unwrap();
    assert!(matches!(load_seeds(dir.path()), Err(AnnotateError::Seed(_))));
}

#[test]
fn edited_templates_override_the_guide() {
    let dir = tempfile::tempdir().unwrap();
    let mut guide = Guide::default();
    guide.write_templates(dir.path()).unwrap();
    std::fs::write(dir.path().join("sketch.txt"), "Custom: <DATASET DESCRIPTION>").unwrap();
    guide.load_templates(dir.path()).unwrap();
    assert_eq!(guide.sketch, "Custom: <DATASET DESCRIPTION>");
    assert_eq!(guide.problemset, Guide::default().problemset);
}
