use std::path::Path;

use dseval_core::{parse_problemset, Problemset};
use dseval_runtime::{build_ground_truth, GroundTruth, Session, SessionConfig};
use dseval_validate::{judge, Engine};

use crate::provision::{merged_manifest, provision_data, ProvisionOptions};
use crate::run::IntegrityReport;

fn report(ps: &Problemset, index: Option<usize>, message: impl Into<String>) -> IntegrityReport {
    IntegrityReport {
        problemset: ps.id.clone(),
        path: ps.source_path.clone(),
        problem_index: index,
        message: message.into(),
    }
}

/// Builds the ground truth and checks that every reference solution passes
/// its own validator tree.
pub fn check_integrity(
    ps: &Problemset,
    session: &SessionConfig,
    engine: &Engine,
) -> Result<GroundTruth, IntegrityReport> {
    let mut reference = Session::start(session.clone()).map_err(|e| report(ps, None, e.to_string()))?;
    let gt = build_ground_truth(ps, &mut reference).map_err(|e| report(ps, e.problem_index(), e.to_string()))?;
    let mut submission = reference;
    let mut slot = None;
    for (problem, step) in ps.problems.iter().zip(&gt.steps) {
        let fail = |m: String| report(ps, Some(problem.index), m);
        submission.restore(&step.pre).map_err(|e| fail(e.to_string()))?;
        let result = submission
            .execute(&problem.reference_code, &problem.execution)
            .map_err(|e| fail(e.to_string()))?;
        let j = judge(
            engine,
            problem,
            step,
            session,
            &problem.reference_code,
            &result,
            &mut submission,
            &mut slot,
        )
        .map_err(|e| fail(e.to_string()))?;
        if !j.verdict.is_correct() {
            return Err(fail(format!("reference solution fails its own validators: {}", j.verdict)));
        }
    }
    Ok(gt)
}

/// A parsed problemset with its data provisioned into a temporary inputs
/// directory that lives as long as this value.
pub struct Prepared {
    pub problemset: Problemset,
    pub session: SessionConfig,
    _inputs: tempfile::TempDir,
}

/// Parses a problemset file and provisions the data it declares.
pub fn prepare_problemset(
    path: &Path,
    cache_dir: &Path,
    offline: bool,
    session: &SessionConfig,
) -> Result<Prepared, IntegrityReport> {
    let ps = parse_problemset(path).map_err(|e| IntegrityReport {
        problemset: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        path: path.to_path_buf(),
        problem_index: None,
        message: e.to_string(),
    })?;
    let inputs = tempfile::tempdir().map_err(|e| report(&ps, None, e.to_string()))?;
    let manifest = merged_manifest(ps.problems.iter().map(|p| &p.data)).map_err(|m| report(&ps, None, m))?;
    let mut opts = ProvisionOptions::new(cache_dir, path.parent().unwrap_or(Path::new(".")));
    opts.offline = offline;
    provision_data(&manifest, inputs.path(), &opts).map_err(|e| report(&ps, None, e.to_string()))?;
    Ok(Prepared {
        session: session.clone().with_inputs(inputs.path()),
        problemset: ps,
        _inputs: inputs,
    })
}

/// Parses a problemset file, provisions its data and checks its integrity.
pub fn check_problemset_file(
    path: &Path,
    cache_dir: &Path,
    offline: bool,
    session: &SessionConfig,
) -> Result<(Problemset, GroundTruth), IntegrityReport> {
    let prepared = prepare_problemset(path, cache_dir, offline, session)?;
    let gt = check_integrity(&prepared.problemset, &prepared.session, &Engine::standard())?;
    Ok((prepared.problemset, gt))
}
