use std::collections::BTreeSet;
use std::path::Path;

use dseval_core::parse_problemset;
use dseval_runtime::{build_ground_truth, Session, SessionConfig};
use dseval_validate::{judge, Category, Engine};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
struct Case {
    name: String,
    problem: usize,
    code: String,
    expect: String,
}

#[derive(Debug, Deserialize)]
struct Cases {
    leaves: Vec<Case>,
    priority: Vec<Case>,
}

fn fixtures() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/verdicts"))
}

/// Runs every case in reset mode and returns (name, expected, actual).
fn replay(cases: &[Case]) -> Vec<(String, String, String)> {
    let ps = parse_problemset(&fixtures().join("catalog.py")).unwrap();
    let config = SessionConfig::default();
    let mut session = Session::start(config.clone()).unwrap();
    let gt = build_ground_truth(&ps, &mut session).unwrap();
    let engine = Engine::standard();
    let mut slot = None;
    cases
        .iter()
        .map(|case| {
            let problem = &ps.problems[case.problem];
            let step = &gt.steps[case.problem];
            session.restore(&step.pre).unwrap();
            let result = session.execute(&case.code, &problem.execution).unwrap();
            let j = judge(&engine, problem, step, &config, &case.code, &result, &mut session, &mut slot)
                .unwrap_or_else(|e| panic!("{}: {e}", case.name));
            (case.name.clone(), case.expect.clone(), j.verdict.to_string())
        })
        .collect()
}

fn load() -> Cases {
    serde_yaml::from_str(&std::fs::read_to_string(fixtures().join("cases.yaml")).unwrap()).unwrap()
}

#[test]
fn every_leaf_has_a_case() {
    let cases = load();
    let expected: BTreeSet<String> = cases
        .leaves
        .iter()
        .filter(|c| c.expect != "Correct")
        .map(|c| c.expect.clone())
        .collect();
    let mut leaves = BTreeSet::new();
    for cat in Category::ALL.into_iter().filter(|c| *c != Category::Correct) {
        let subs = cat.subcategories();
        if subs.is_empty() {
            leaves.insert(cat.display_name().to_string());
        }
        for sub in subs {
            leaves.insert(format!("{} / {}", cat.display_name(), sub.display_name()));
        }
    }
    assert_eq!(leaves.len(), 32);
    assert_eq!(expected, leaves);
}

#[test]
fn catalog_submissions_get_their_verdicts() {
    let wrong: Vec<_> = replay(&load().leaves).into_iter().filter(|(_, e, a)| e != a).collect();
    assert!(wrong.is_empty(), "{wrong:#?}");
}

#[test]
fn multi_fault_submissions_follow_priority() {
    let wrong: Vec<_> = replay(&load().priority).into_iter().filter(|(_, e, a)| e != a).collect();
    assert!(wrong.is_empty(), "{wrong:#?}");
}
