use std::collections::BTreeMap;

use dseval_core::Problemset;
use dseval_runtime::{RuntimeError, Session};
use serde::{Deserialize, Serialize};

pub const UNRESOLVED: &str = "<unresolved>";

/// Library API usage counts across reference solutions.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ApiCoverage {
    pub counts: BTreeMap<String, usize>,
    /// Calls and accesses that could not be tied to a library name.
    pub unresolved: usize,
}

impl ApiCoverage {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn merge(&mut self, other: &ApiCoverage) {
        for (k, v) in &other.counts {
            *self.counts.entry(k.clone()).or_default() += v;
        }
        self.unresolved += other.unresolved;
    }

    /// Most used APIs first; ties by name.
    pub fn top(&self, n: usize) -> Vec<(&str, usize)> {
        let mut v: Vec<(&str, usize)> = self.counts.iter().map(|(k, c)| (k.as_str(), *c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        v.truncate(n);
        v
    }

    fn add(&mut self, names: Vec<String>) {
        for name in names {
            if name == UNRESOLVED {
                self.unresolved += 1;
            } else {
                *self.counts.entry(name).or_default() += 1;
            }
        }
    }
}

/// Replays a problemset on `session` (which should already see its input
/// files) and resolves the APIs each reference solution touches against the
/// live objects.
pub fn extract_api_coverage(ps: &Problemset, session: &mut Session) -> Result<ApiCoverage, RuntimeError> {
    session.reset()?;
    if !ps.preamble.trim().is_empty() {
        session.run(&ps.preamble, None)?;
    }
    let mut cov = ApiCoverage::default();
    for problem in &ps.problems {
        let (result, names) = session.run_with_api_trace(&problem.reference_code)?;
        if let Some(err) = &result.error {
            log::warn!("{}#{}: reference failed during API trace: {}", ps.id, problem.index, err.message);
        }
        cov.add(names);
    }
    Ok(cov)
}
