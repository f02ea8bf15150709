use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::verdict::{Category, Verdict};

/// Whether each problem starts from the reference state or from the
/// session the agent itself produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    #[default]
    Reset,
    Propagate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Metrics {
    pub pass_rate: f64,
    pub pass_rate_error_prop: Option<f64>,
    pub pass_rate_wo_intact: f64,
    pub pass_rate_wo_pe: f64,
    pub total: usize,
    pub empty: bool,
    /// Counts per verdict display name, over the records used for `pass_rate`.
    pub category_counts: BTreeMap<String, usize>,
}

fn rate(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        (hits as f64 * 100.0) / total as f64
    }
}

/// Rounds a percentage to one decimal place for reporting.
pub fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

/// Aggregates `(mode, verdict)` pairs into pass rates (percentages).
///
/// The headline rates come from reset-mode records, or from propagate-mode
/// records when there are none; the error-propagation rate always comes from
/// propagate-mode records.
pub fn aggregate_metrics<'a, I>(records: I) -> Metrics
where
    I: IntoIterator<Item = (EvalMode, &'a Verdict)>,
{
    let records: Vec<(EvalMode, &Verdict)> = records.into_iter().collect();
    let reset: Vec<&Verdict> = records
        .iter()
        .filter(|(m, _)| *m == EvalMode::Reset)
        .map(|(_, v)| *v)
        .collect();
    let propagate: Vec<&Verdict> = records
        .iter()
        .filter(|(m, _)| *m == EvalMode::Propagate)
        .map(|(_, v)| *v)
        .collect();
    let main = if reset.is_empty() { &propagate } else { &reset };
    let count = |set: &[&Verdict], cats: &[Category]| set.iter().filter(|v| cats.contains(&v.category())).count();
    let total = main.len();
    let mut category_counts = BTreeMap::new();
    for v in main {
        *category_counts.entry(v.label.to_string()).or_insert(0) += 1;
    }
    Metrics {
        pass_rate: rate(count(main, &[Category::Correct]), total),
        pass_rate_error_prop: (!propagate.is_empty())
            .then(|| rate(count(&propagate, &[Category::Correct]), propagate.len())),
        pass_rate_wo_intact: rate(count(main, &[Category::Correct, Category::IntactViolation]), total),
        pass_rate_wo_pe: rate(count(main, &[Category::Correct, Category::PresentationError]), total),
        total,
        empty: total == 0,
        category_counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verdict::SubCategory;

    fn v(c: Category, s: Option<SubCategory>) -> Verdict {
        Verdict::new(c, s, "")
    }

    #[test]
    fn hand_counted_example() {
        let mut vs = vec![v(Category::Correct, None); 6];
        vs.extend(vec![v(Category::IntactViolation, None); 2]);
        vs.push(v(Category::PresentationError, Some(SubCategory::MissingReturn)));
        vs.push(v(Category::Crash, Some(SubCategory::KeyError)));
        let m = aggregate_metrics(vs.iter().map(|x| (EvalMode::Reset, x)));
        assert_eq!(m.pass_rate, 60.0);
        assert_eq!(m.pass_rate_wo_intact, 80.0);
        assert_eq!(m.pass_rate_wo_pe, 70.0);
        assert_eq!(m.category_counts["Correct"], 6);
    }

    #[test]
    fn all_correct_and_all_crash() {
        let ok = vec![v(Category::Correct, None); 3];
        let m = aggregate_metrics(
            ok.iter()
                .map(|x| (EvalMode::Reset, x))
                .chain(ok.iter().map(|x| (EvalMode::Propagate, x))),
        );
        assert_eq!(
            (m.pass_rate, m.pass_rate_error_prop, m.pass_rate_wo_intact, m.pass_rate_wo_pe),
            (100.0, Some(100.0), 100.0, 100.0)
        );
        let bad = vec![v(Category::Crash, Some(SubCategory::Others)); 3];
        let m = aggregate_metrics(
            bad.iter()
                .map(|x| (EvalMode::Reset, x))
                .chain(bad.iter().map(|x| (EvalMode::Propagate, x))),
        );
        assert_eq!(
            (m.pass_rate, m.pass_rate_error_prop, m.pass_rate_wo_intact, m.pass_rate_wo_pe),
            (0.0, Some(0.0), 0.0, 0.0)
        );
    }

    #[test]
    fn empty_is_flagged() {
        let m = aggregate_metrics(std::iter::empty());
        assert!(m.empty);
        assert_eq!(m.pass_rate, 0.0);
        assert_eq!(m.pass_rate_error_prop, None);
    }

    #[test]
    fn two_thirds_rounds_to_one_decimal() {
        let vs = [
            v(Category::Correct, None),
            v(Category::Correct, None),
            v(Category::Timeout, None),
        ];
        let m = aggregate_metrics(vs.iter().map(|x| (EvalMode::Reset, x)));
        assert_eq!(round1(m.pass_rate), 66.7);
    }
}
