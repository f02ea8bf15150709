//! Mapping from validation outcomes to verdicts.

use std::cmp::Ordering;

use dseval_core::syntax::looks_like_prose;
use dseval_core::value::cmp_slices;
use dseval_core::{Family, IndexData, ValidatorConfig, ValidatorKind, Value};
use dseval_runtime::{ErrorKind, ExecutionResult};

use crate::compare::{compare_values, CompareOptions};
use crate::outcome::Outcome;
use crate::validators::normalize_whitespace;
use crate::verdict::{Category, SubCategory, Verdict};

pub struct ClassifyInput<'a> {
    pub code: &'a str,
    pub result: &'a ExecutionResult,
    pub reference_result: &'a ExecutionResult,
    pub outcome: &'a Outcome,
    /// Tolerances used when re-checking results in relaxed form.
    pub result_options: CompareOptions,
}

/// Comparison options of the first `execute_result` node in an expanded tree.
pub fn result_options(config: &ValidatorConfig) -> CompareOptions {
    let mut found = None;
    config.visit(&mut |n| {
        if found.is_none() && n.kind == ValidatorKind::ExecuteResult {
            found = CompareOptions::from_options(&n.options).ok();
        }
    });
    found.unwrap_or_default()
}

pub fn crash_subcategory(kind: ErrorKind) -> SubCategory {
    match kind {
        ErrorKind::ModuleNotFound => SubCategory::ModuleNotFound,
        ErrorKind::Attribute => SubCategory::AttributeError,
        ErrorKind::Key => SubCategory::KeyError,
        ErrorKind::Name => SubCategory::NameError,
        ErrorKind::Type => SubCategory::TypeError,
        ErrorKind::Value => SubCategory::ValueError,
        _ => SubCategory::Others,
    }
}

pub fn classify_verdict(input: &ClassifyInput<'_>) -> Verdict {
    let outcome = input.outcome;
    if outcome.pass {
        return Verdict::new(Category::Correct, None, "");
    }
    if looks_like_prose(input.code) {
        return Verdict::new(
            Category::PresentationError,
            Some(SubCategory::NonCode),
            "submission is not code",
        );
    }
    if let Some(err) = &input.result.error {
        let detail = format!("{}: {}", err.kind, err.message);
        return match err.kind {
            ErrorKind::Syntax => Verdict::new(Category::SyntaxError, None, detail),
            ErrorKind::Timeout => Verdict::new(Category::Timeout, None, detail),
            kind => Verdict::new(Category::Crash, Some(crash_subcategory(kind)), detail),
        };
    }

    let failures = outcome.effective_failures();
    let first = |kinds: &[ValidatorKind]| failures.iter().copied().find(|f| kinds.contains(&f.kind));
    let wrong = |category: Category, node: &Outcome| {
        let f = node.failure.as_ref();
        Verdict::new(
            category,
            Some(SubCategory::from_mismatch(f.and_then(|f| f.mismatch))),
            f.map(|f| f.detail.clone()).unwrap_or_default(),
        )
    };

    if let Some(node) = first(&[ValidatorKind::TableTest]) {
        return wrong(Category::UnitTestFailure, node);
    }
    if let Some(node) = first(&[ValidatorKind::NamespaceCheck, ValidatorKind::Model]) {
        return wrong(Category::WrongVariables, node);
    }
    let output_kinds = [
        ValidatorKind::ExecuteResult,
        ValidatorKind::StreamOutput,
        ValidatorKind::AnswerInSource,
    ];
    if first(&output_kinds).is_some() {
        if let Some(sub) = presentation_error(input) {
            return Verdict::new(Category::PresentationError, Some(sub), "");
        }
        let node = first(&[ValidatorKind::ExecuteResult])
            .or_else(|| first(&[ValidatorKind::StreamOutput]))
            .or_else(|| first(&output_kinds))
            .expect("an output failure exists");
        return wrong(Category::WrongOutput, node);
    }
    if let Some(node) = first(&[ValidatorKind::NamespaceIntact]) {
        let detail = node.failure.as_ref().map(|f| f.detail.clone()).unwrap_or_default();
        return Verdict::new(Category::IntactViolation, None, detail);
    }
    let detail = outcome.failure.as_ref().map(|f| f.detail.clone()).unwrap_or_default();
    Verdict::new(Category::WrongOutput, Some(SubCategory::Others), detail)
}

/// Relaxed re-checks, tried in a fixed order.
fn presentation_error(input: &ClassifyInput<'_>) -> Option<SubCategory> {
    let expected = input.reference_result.execute_result.as_ref()?;
    let actual = input.result.execute_result.as_ref();
    if actual.is_none() {
        let wanted = normalize_whitespace(&expected.text);
        if !wanted.is_empty() && normalize_whitespace(&input.result.stream_output).contains(&wanted) {
            return Some(SubCategory::MissingReturn);
        }
        return None;
    }
    let actual = &actual.expect("checked above").value;
    let relaxed = input.result_options.relaxed();
    if matches!(expected.value.family(), Family::Series | Family::Frame | Family::Index)
        && index_mismatch(actual, &expected.value, &relaxed)
    {
        return Some(SubCategory::IndexMismatch);
    }
    if partially_contains(actual, &expected.value, &relaxed) {
        return Some(SubCategory::PartialMatch);
    }
    None
}

fn index_mismatch(actual: &Value, expected: &Value, opts: &CompareOptions) -> bool {
    if compare_values(actual, expected, opts).matched {
        return true;
    }
    // A series returned as a frame: one value column, or index and values as
    // two columns after `reset_index`.
    if let (
        Value::Frame {
            columns, dtypes, data, ..
        },
        Value::Series {
            index, values, dtype, ..
        },
    ) = (actual, expected)
    {
        let series = |i: usize| Value::Series {
            name: Box::new(Value::None),
            dtype: dtypes[i].clone(),
            index: IndexData::range(data[i].len()),
            values: data[i].clone(),
        };
        let target = Value::Series {
            name: Box::new(Value::None),
            dtype: dtype.clone(),
            index: IndexData::range(values.len()),
            values: values.clone(),
        };
        match columns.len() {
            1 => return compare_values(&series(0), &target, opts).matched,
            2 => {
                let as_index = Value::Series {
                    name: Box::new(Value::None),
                    dtype: index.dtype.clone(),
                    index: IndexData::range(index.values.len()),
                    values: index.values.clone(),
                };
                let strict = CompareOptions {
                    ignore_order: false,
                    ..*opts
                };
                return compare_values(&series(0), &as_index, &strict).matched
                    && compare_values(&series(1), &target, &strict).matched;
            }
            _ => {}
        }
    }
    false
}

fn is_scalar(v: &Value) -> bool {
    matches!(
        v.family(),
        Family::None | Family::Bool | Family::Number | Family::Str | Family::Datetime | Family::Duration
    )
}

fn same(a: &Value, b: &Value, opts: &CompareOptions) -> bool {
    compare_values(a, b, opts).matched
}

/// One-dimensional element list of a container, if it has one.
fn elements(v: &Value) -> Option<Vec<Value>> {
    match v {
        Value::List { items } | Value::Tuple { items } | Value::Set { items } => Some(items.clone()),
        Value::Index { index } => Some(index.values.clone()),
        Value::Array { shape, data, .. } if shape.len() == 1 => Some(data.clone()),
        Value::Series { values, .. } => Some(values.clone()),
        _ => None,
    }
}

/// Multiset containment of `inner` within `outer` under tolerances.
fn sub_multiset(inner: &[Value], outer: &[Value], opts: &CompareOptions) -> bool {
    if inner.is_empty() || inner.len() > outer.len() {
        return false;
    }
    let mut a = inner.to_vec();
    let mut b = outer.to_vec();
    a.sort_by(Value::canonical_cmp);
    b.sort_by(Value::canonical_cmp);
    let mut j = 0;
    for x in &a {
        loop {
            let Some(y) = b.get(j) else { return false };
            j += 1;
            if same(x, y, opts) {
                break;
            }
            if x.canonical_cmp(y) == Ordering::Less {
                return false;
            }
        }
    }
    true
}

fn sub_rows(inner: &[Vec<Value>], outer: &[Vec<Value>], opts: &CompareOptions) -> bool {
    if inner.is_empty() || inner.len() > outer.len() {
        return false;
    }
    let mut a = inner.to_vec();
    let mut b = outer.to_vec();
    a.sort_by(|p, q| cmp_slices(p, q));
    b.sort_by(|p, q| cmp_slices(p, q));
    let mut j = 0;
    for x in &a {
        loop {
            let Some(y) = b.get(j) else { return false };
            j += 1;
            if x.iter().zip(y).all(|(p, q)| same(p, q, opts)) {
                break;
            }
            if cmp_slices(x, y) == Ordering::Less {
                return false;
            }
        }
    }
    true
}

fn rows_of(columns: &[usize], data: &[Vec<Value>]) -> Vec<Vec<Value>> {
    let n = data.first().map_or(0, Vec::len);
    (0..n).map(|r| columns.iter().map(|&c| data[c][r].clone()).collect()).collect()
}

/// True when the expected output can be found inside the submitted one.
pub fn partially_contains(outer: &Value, inner: &Value, opts: &CompareOptions) -> bool {
    match outer {
        Value::Frame {
            columns: oc,
            data: od,
            index: oi,
            ..
        } => match inner {
            Value::Frame {
                columns: ic, data: idata, ..
            } => {
                let Some(positions) = ic
                    .iter()
                    .map(|c| oc.iter().position(|o| o == c))
                    .collect::<Option<Vec<usize>>>()
                else {
                    return false;
                };
                let all: Vec<usize> = (0..ic.len()).collect();
                sub_rows(&rows_of(&all, idata), &rows_of(&positions, od), opts)
            }
            v if is_scalar(v) => od.iter().flatten().any(|c| same(c, v, opts)),
            v => match elements(v) {
                Some(items) => {
                    od.iter().any(|col| sub_multiset(&items, col, opts)) || sub_multiset(&items, &oi.values, opts)
                }
                None => false,
            },
        },
        Value::Series { index, values, .. } => match inner {
            Value::Series {
                index: ii, values: iv, ..
            } => {
                let pairs = |idx: &IndexData, vals: &[Value]| -> Vec<Vec<Value>> {
                    idx.values.iter().zip(vals).map(|(i, v)| vec![i.clone(), v.clone()]).collect()
                };
                sub_rows(&pairs(ii, iv), &pairs(index, values), opts) || sub_multiset(iv, values, opts)
            }
            v if is_scalar(v) => values.iter().chain(&index.values).any(|c| same(c, v, opts)),
            v => match elements(v) {
                Some(items) => sub_multiset(&items, &index.values, opts) || sub_multiset(&items, values, opts),
                None => false,
            },
        },
        Value::Dict { items } => {
            if is_scalar(inner) {
                items.iter().any(|(k, v)| same(k, inner, opts) || same(v, inner, opts))
            } else {
                let keys: Vec<Value> = items.iter().map(|(k, _)| k.clone()).collect();
                elements(inner).is_some_and(|e| sub_multiset(&e, &keys, opts))
            }
        }
        Value::Str { v: text } => match inner {
            Value::Str { v } => !v.is_empty() && text.contains(v.as_str()) && text != v,
            v if is_scalar(v) => {
                let needle = v.to_string();
                text.split(|c: char| !(c.is_alphanumeric() || c == '.' || c == '-'))
                    .any(|tok| tok.trim_end_matches('.') == needle)
            }
            _ => false,
        },
        other => match elements(other) {
            Some(items) => {
                if is_scalar(inner) {
                    items.iter().any(|c| same(c, inner, opts))
                } else {
                    elements(inner).is_some_and(|e| sub_multiset(&e, &items, opts))
                }
            }
            None => false,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compare::MismatchKind;
    use dseval_runtime::{ExecError, ResultValue};

    fn result(v: Option<Value>, text: &str, stdout: &str) -> ExecutionResult {
        ExecutionResult {
            execute_result: v.map(|value| ResultValue {
                value,
                text: text.into(),
            }),
            stream_output: stdout.into(),
            error: None,
            duration: 0.0,
        }
    }

    fn failing(kind: ValidatorKind, mismatch: Option<MismatchKind>) -> Outcome {
        Outcome {
            kind: ValidatorKind::And,
            pass: false,
            failure: None,
            children: vec![Outcome::fail(kind, mismatch, "x")],
        }
    }

    fn classify(code: &str, r: &ExecutionResult, reference: &ExecutionResult, o: &Outcome) -> String {
        classify_verdict(&ClassifyInput {
            code,
            result: r,
            reference_result: reference,
            outcome: o,
            result_options: CompareOptions::default(),
        })
        .to_string()
    }

    fn series(name: &str, idx: Vec<Value>, vals: Vec<Value>) -> Value {
        Value::Series {
            name: Box::new(Value::str(name)),
            dtype: "int64".into(),
            index: IndexData {
                name: Box::new(Value::str("Year")),
                dtype: "int64".into(),
                values: idx,
            },
            values: vals,
        }
    }

    #[test]
    fn syntax_error_outranks_everything() {
        let mut r = result(None, "", "");
        r.error = Some(ExecError {
            kind: ErrorKind::Syntax,
            message: "invalid syntax".into(),
            traceback: String::new(),
        });
        let o = failing(ValidatorKind::NamespaceIntact, None);
        assert_eq!(classify("x = (", &r, &result(None, "", ""), &o), "Syntax Error");
    }

    #[test]
    fn printing_instead_of_returning() {
        let head = "   a\n0  1\n1  2";
        let reference = result(Some(Value::int(0)), head, "");
        let r = result(None, "", &format!("{head}\n"));
        let o = failing(ValidatorKind::ExecuteResult, None);
        assert_eq!(
            classify("print(df.head())", &r, &reference, &o),
            "Presentation Error / Missing Return"
        );
    }

    #[test]
    fn renamed_series_is_index_mismatch() {
        let idx = vec![Value::int(2000), Value::int(2001)];
        let vals = vec![Value::int(3), Value::int(5)];
        let reference = result(Some(series("Number of Fatalities", idx.clone(), vals.clone())), "", "");
        let r = result(Some(series("count", idx, vals)), "", "");
        let o = failing(ValidatorKind::ExecuteResult, Some(MismatchKind::Columns));
        assert_eq!(classify("s", &r, &reference, &o), "Presentation Error / Index Mismatch");
    }

    #[test]
    fn names_inside_series_index_is_partial_match() {
        let names = vec![Value::str("Tech"), Value::str("Finance")];
        let reference = result(Some(Value::list(names.clone())), "", "");
        let r = result(
            Some(Value::Series {
                name: Box::new(Value::None),
                dtype: "int64".into(),
                index: IndexData {
                    name: Box::new(Value::None),
                    dtype: "object".into(),
                    values: names,
                },
                values: vec![Value::int(9), Value::int(4)],
            }),
            "",
            "",
        );
        let o = failing(ValidatorKind::ExecuteResult, Some(MismatchKind::Type));
        assert_eq!(classify("s", &r, &reference, &o), "Presentation Error / Partial Match");
    }

    #[test]
    fn prose_is_non_code() {
        let reference = result(Some(Value::int(5)), "5", "");
        let o = failing(ValidatorKind::Crash, None);
        assert_eq!(
            classify("The dataset has five columns.", &result(None, "", ""), &reference, &o),
            "Presentation Error / Non-code"
        );
    }

    #[test]
    fn wrong_variables_beat_wrong_output() {
        let o = Outcome {
            kind: ValidatorKind::And,
            pass: false,
            failure: None,
            children: vec![
                Outcome::fail(ValidatorKind::NamespaceCheck, Some(MismatchKind::Shape), "x"),
                Outcome::fail(ValidatorKind::ExecuteResult, Some(MismatchKind::Value), "y"),
            ],
        };
        let r = result(Some(Value::int(1)), "1", "");
        let reference = result(Some(Value::int(2)), "2", "");
        assert_eq!(classify("x", &r, &reference, &o), "Wrong Variables / Shape Mismatch");
    }

    #[test]
    fn only_intact_failing_is_intact_violation() {
        let o = failing(ValidatorKind::NamespaceIntact, None);
        let r = result(None, "", "");
        assert_eq!(classify("x", &r, &r.clone(), &o), "Intact Violation");
    }
}
