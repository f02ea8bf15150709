//! Tolerant structural comparison of [`Value`]s.

use std::cmp::Ordering;
use std::fmt;

use dseval_core::value::cmp_slices;
use dseval_core::{dtype_kind, Family, IndexData, Value};
use serde::{Deserialize, Serialize};
use serde_yaml::{Mapping, Value as Yaml};

use crate::ValidationError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    pub atol: f64,
    pub rtol: f64,
    pub ignore_order: bool,
    pub ignore_index: bool,
    pub ignore_names: bool,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            atol: 1e-6,
            rtol: 1e-4,
            ignore_order: false,
            ignore_index: false,
            ignore_names: false,
        }
    }
}

const OPTION_KEYS: [&str; 5] = ["atol", "rtol", "ignore_order", "ignore_index", "ignore_names"];

impl CompareOptions {
    /// Reads comparison keys from a validator option map. Keys that are not
    /// comparison options are left for the caller.
    pub fn from_options(options: &Mapping) -> Result<Self, ValidationError> {
        let mut opts = CompareOptions::default();
        for key in OPTION_KEYS {
            let Some(v) = options.get(key) else { continue };
            let bad = || ValidationError::Config(format!("option `{key}` has an invalid value {v:?}"));
            match key {
                "atol" | "rtol" => {
                    let x = yaml_f64(v).ok_or_else(bad)?;
                    if !(x >= 0.0) {
                        return Err(bad());
                    }
                    if key == "atol" {
                        opts.atol = x;
                    } else {
                        opts.rtol = x;
                    }
                }
                _ => {
                    let flag = v.as_bool().ok_or_else(bad)?;
                    match key {
                        "ignore_order" => opts.ignore_order = flag,
                        "ignore_index" => opts.ignore_index = flag,
                        _ => opts.ignore_names = flag,
                    }
                }
            }
        }
        Ok(opts)
    }

    pub fn is_option_key(key: &str) -> bool {
        OPTION_KEYS.contains(&key)
    }

    /// The relaxed form used to recognise presentation errors.
    pub fn relaxed(self) -> Self {
        CompareOptions {
            ignore_order: true,
            ignore_index: true,
            ignore_names: true,
            ..self
        }
    }
}

pub(crate) fn yaml_f64(v: &Yaml) -> Option<f64> {
    match v {
        Yaml::Number(n) => n.as_f64(),
        Yaml::String(s) => s.parse().ok(),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MismatchKind {
    Type,
    Shape,
    Columns,
    Dtype,
    Value,
}

impl fmt::Display for MismatchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MismatchKind::Type => "type",
            MismatchKind::Shape => "shape",
            MismatchKind::Columns => "columns",
            MismatchKind::Dtype => "dtype",
            MismatchKind::Value => "value",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub kind: MismatchKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub matched: bool,
    pub mismatch: Option<Mismatch>,
}

impl Comparison {
    pub fn kind(&self) -> Option<MismatchKind> {
        self.mismatch.as_ref().map(|m| m.kind)
    }
}

/// Compares a submitted value against a reference value.
///
/// Checks run in a fixed order (type, shape, columns, dtype, values) and the
/// first failing check names the mismatch.
pub fn compare_values(a: &Value, b: &Value, opts: &CompareOptions) -> Comparison {
    match check(a, b, opts) {
        Ok(()) => Comparison {
            matched: true,
            mismatch: None,
        },
        Err(m) => Comparison {
            matched: false,
            mismatch: Some(m),
        },
    }
}

type Check = Result<(), Mismatch>;

fn fail(kind: MismatchKind, detail: impl Into<String>) -> Check {
    Err(Mismatch {
        kind,
        detail: detail.into(),
    })
}

pub fn numbers_close(x: f64, y: f64, opts: &CompareOptions) -> bool {
    if x.is_nan() || y.is_nan() {
        return x.is_nan() && y.is_nan();
    }
    if x.is_infinite() || y.is_infinite() {
        return x == y;
    }
    (x - y).abs() <= opts.atol + opts.rtol * x.abs().max(y.abs())
}

fn check(a: &Value, b: &Value, opts: &CompareOptions) -> Check {
    let (fa, fb) = (a.family(), b.family());
    if fa != fb {
        return fail(
            MismatchKind::Type,
            format!("expected {}, got {}", b.type_label(), a.type_label()),
        );
    }
    match (a, b) {
        (Value::None, Value::None) => Ok(()),
        (Value::Bool { v: x }, Value::Bool { v: y }) => {
            if x == y {
                Ok(())
            } else {
                fail(MismatchKind::Value, format!("expected {b}, got {a}"))
            }
        }
        (Value::Int { v: x }, Value::Int { v: y }) => {
            if x == y {
                Ok(())
            } else {
                fail(MismatchKind::Value, format!("expected {y}, got {x}"))
            }
        }
        _ if fa == Family::Number => {
            let (x, y) = (a.as_f64().unwrap_or(f64::NAN), b.as_f64().unwrap_or(f64::NAN));
            if numbers_close(x, y, opts) {
                Ok(())
            } else {
                fail(MismatchKind::Value, format!("expected {b}, got {a}"))
            }
        }
        (Value::Str { v: x }, Value::Str { v: y }) | (Value::Datetime { v: x }, Value::Datetime { v: y }) => {
            if x == y {
                Ok(())
            } else {
                fail(MismatchKind::Value, format!("expected {y:?}, got {x:?}"))
            }
        }
        (Value::Duration { seconds: x }, Value::Duration { seconds: y }) => {
            if numbers_close(*x, *y, opts) {
                Ok(())
            } else {
                fail(MismatchKind::Value, format!("expected {y}s, got {x}s"))
            }
        }
        (Value::List { items: x } | Value::Tuple { items: x }, Value::List { items: y } | Value::Tuple { items: y }) => {
            sequences(x, y, opts, opts.ignore_order)
        }
        (Value::Set { items: x }, Value::Set { items: y }) => sequences(x, y, opts, true),
        (Value::Dict { items: x }, Value::Dict { items: y }) => dicts(x, y, opts),
        (
            Value::Array {
                dtype: da,
                shape: sa,
                data: xa,
            },
            Value::Array {
                dtype: db,
                shape: sb,
                data: xb,
            },
        ) => {
            if sa != sb {
                return fail(MismatchKind::Shape, format!("expected shape {sb:?}, got {sa:?}"));
            }
            if dtype_kind(da) != dtype_kind(db) {
                return fail(MismatchKind::Dtype, format!("expected dtype {db}, got {da}"));
            }
            if opts.ignore_order && sa.len() >= 1 && sa[0] > 0 {
                let width = xa.len() / sa[0];
                let rows = |d: &[Value]| -> Vec<Vec<Value>> { d.chunks(width.max(1)).map(<[Value]>::to_vec).collect() };
                let (mut ra, mut rb) = (rows(xa), rows(xb));
                ra.sort_by(|p, q| cmp_slices(p, q));
                rb.sort_by(|p, q| cmp_slices(p, q));
                for (p, q) in ra.iter().zip(&rb) {
                    elementwise(p, q, opts)?;
                }
                Ok(())
            } else {
                elementwise(xa, xb, opts)
            }
        }
        (
            Value::Series {
                name: na,
                dtype: da,
                index: ia,
                values: va,
            },
            Value::Series {
                name: nb,
                dtype: db,
                index: ib,
                values: vb,
            },
        ) => {
            if va.len() != vb.len() {
                return fail(MismatchKind::Shape, format!("expected length {}, got {}", vb.len(), va.len()));
            }
            if !opts.ignore_names && na != nb {
                return fail(MismatchKind::Columns, format!("expected name {nb}, got {na}"));
            }
            if dtype_kind(da) != dtype_kind(db) {
                return fail(MismatchKind::Dtype, format!("expected dtype {db}, got {da}"));
            }
            if opts.ignore_order {
                let pairs = |idx: &IndexData, vals: &[Value]| -> Vec<Vec<Value>> {
                    let mut rows: Vec<Vec<Value>> = if opts.ignore_index {
                        vals.iter().map(|v| vec![v.clone()]).collect()
                    } else {
                        idx.values.iter().zip(vals).map(|(i, v)| vec![v.clone(), i.clone()]).collect()
                    };
                    rows.sort_by(|p, q| cmp_slices(p, q));
                    rows
                };
                let (pa, pb) = (pairs(ia, va), pairs(ib, vb));
                for (p, q) in pa.iter().zip(&pb) {
                    elementwise(p, q, opts)?;
                }
                return Ok(());
            }
            index(ia, ib, opts)?;
            elementwise(va, vb, opts)
        }
        (
            Value::Frame {
                columns: ca,
                dtypes: da,
                index: ia,
                data: xa,
            },
            Value::Frame {
                columns: cb,
                dtypes: db,
                index: ib,
                data: xb,
            },
        ) => frames((ca, da, ia, xa), (cb, db, ib, xb), opts),
        (Value::Index { index: ia }, Value::Index { index: ib }) => {
            if ia.values.len() != ib.values.len() {
                return fail(
                    MismatchKind::Shape,
                    format!("expected length {}, got {}", ib.values.len(), ia.values.len()),
                );
            }
            if !opts.ignore_names && ia.name != ib.name {
                return fail(MismatchKind::Columns, format!("expected name {}, got {}", ib.name, ia.name));
            }
            sequences(&ia.values, &ib.values, opts, opts.ignore_order)
        }
        (
            Value::Object {
                type_name: ta,
                fingerprint: fa,
                ..
            },
            Value::Object {
                type_name: tb,
                fingerprint: fb,
                ..
            },
        ) => {
            if ta != tb {
                fail(MismatchKind::Type, format!("expected {tb}, got {ta}"))
            } else if fa != fb {
                fail(MismatchKind::Value, format!("{ta} objects differ"))
            } else {
                Ok(())
            }
        }
        _ => fail(MismatchKind::Type, format!("cannot compare {} with {}", a.type_label(), b.type_label())),
    }
}

fn elementwise(a: &[Value], b: &[Value], opts: &CompareOptions) -> Check {
    if a.len() != b.len() {
        return fail(MismatchKind::Shape, format!("expected {} elements, got {}", b.len(), a.len()));
    }
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        check(x, y, opts).map_err(|m| Mismatch {
            kind: m.kind,
            detail: format!("at position {i}: {}", m.detail),
        })?;
    }
    Ok(())
}

fn sorted(items: &[Value]) -> Vec<Value> {
    let mut v = items.to_vec();
    v.sort_by(Value::canonical_cmp);
    v
}

fn sequences(a: &[Value], b: &[Value], opts: &CompareOptions, unordered: bool) -> Check {
    if a.len() != b.len() {
        return fail(MismatchKind::Shape, format!("expected length {}, got {}", b.len(), a.len()));
    }
    if unordered {
        elementwise(&sorted(a), &sorted(b), opts)
    } else {
        elementwise(a, b, opts)
    }
}

fn dicts(a: &[(Value, Value)], b: &[(Value, Value)], opts: &CompareOptions) -> Check {
    if a.len() != b.len() {
        return fail(MismatchKind::Shape, format!("expected {} keys, got {}", b.len(), a.len()));
    }
    for (kb, vb) in b {
        let found = a.iter().find(|(ka, _)| check(ka, kb, opts).is_ok());
        match found {
            Some((_, va)) => check(va, vb, opts).map_err(|m| Mismatch {
                kind: m.kind,
                detail: format!("at key {kb}: {}", m.detail),
            })?,
            None => return fail(MismatchKind::Value, format!("missing key {kb}")),
        }
    }
    Ok(())
}

fn index(a: &IndexData, b: &IndexData, opts: &CompareOptions) -> Check {
    if !opts.ignore_names && a.name != b.name {
        return fail(MismatchKind::Columns, format!("expected index name {}, got {}", b.name, a.name));
    }
    if opts.ignore_index {
        return Ok(());
    }
    elementwise(&a.values, &b.values, opts).map_err(|m| Mismatch {
        kind: MismatchKind::Value,
        detail: format!("index differs {}", m.detail),
    })
}

type FrameParts<'a> = (&'a Vec<Value>, &'a Vec<String>, &'a IndexData, &'a Vec<Vec<Value>>);

fn frames(a: FrameParts<'_>, b: FrameParts<'_>, opts: &CompareOptions) -> Check {
    let (ca, da, ia, xa) = a;
    let (cb, db, ib, xb) = b;
    let (rows_a, rows_b) = (ia.values.len(), ib.values.len());
    if rows_a != rows_b || ca.len() != cb.len() {
        return fail(
            MismatchKind::Shape,
            format!("expected shape ({rows_b}, {}), got ({rows_a}, {})", cb.len(), ca.len()),
        );
    }
    // Column alignment: positional unless labels match as a set and row order
    // is irrelevant.
    let mut order: Vec<usize> = (0..ca.len()).collect();
    if !opts.ignore_names && ca != cb {
        let same_set = sorted(ca) == sorted(cb);
        if same_set && opts.ignore_order {
            order = cb
                .iter()
                .map(|label| ca.iter().position(|c| c == label).expect("label present"))
                .collect();
        } else {
            let show = |c: &Vec<Value>| c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ");
            return fail(
                MismatchKind::Columns,
                format!("expected columns [{}], got [{}]", show(cb), show(ca)),
            );
        }
    }
    for (j, &i) in order.iter().enumerate() {
        if dtype_kind(&da[i]) != dtype_kind(&db[j]) {
            return fail(
                MismatchKind::Dtype,
                format!("column {}: expected dtype {}, got {}", cb[j], db[j], da[i]),
            );
        }
    }
    if opts.ignore_order {
        let rows = |x: &Vec<Vec<Value>>, cols: &[usize], n: usize| -> Vec<Vec<Value>> {
            let mut out: Vec<Vec<Value>> = (0..n).map(|r| cols.iter().map(|&c| x[c][r].clone()).collect()).collect();
            out.sort_by(|p, q| cmp_slices(p, q));
            out
        };
        let identity: Vec<usize> = (0..cb.len()).collect();
        let (ra, rb) = (rows(xa, &order, rows_a), rows(xb, &identity, rows_b));
        for (r, (p, q)) in ra.iter().zip(&rb).enumerate() {
            elementwise(p, q, opts).map_err(|m| Mismatch {
                kind: m.kind,
                detail: format!("sorted row {r}: {}", m.detail),
            })?;
        }
        return Ok(());
    }
    index(ia, ib, opts)?;
    for (j, &i) in order.iter().enumerate() {
        elementwise(&xa[i], &xb[j], opts).map_err(|m| Mismatch {
            kind: m.kind,
            detail: format!("column {}: {}", cb[j], m.detail),
        })?;
    }
    Ok(())
}

/// Total order helper re-exported for callers that sort values.
pub fn canonical(a: &Value, b: &Value) -> Ordering {
    a.canonical_cmp(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(cols: &[&str], data: Vec<Vec<Value>>, index: Vec<i64>) -> Value {
        Value::Frame {
            columns: cols.iter().map(|c| Value::str(*c)).collect(),
            dtypes: data
                .iter()
                .map(|c| match c.first() {
                    Some(Value::Float { .. }) => "float64".to_string(),
                    Some(Value::Int { .. }) => "int64".to_string(),
                    _ => "object".to_string(),
                })
                .collect(),
            index: IndexData {
                name: Box::new(Value::None),
                dtype: "int64".into(),
                values: index.into_iter().map(Value::int).collect(),
            },
            data,
        }
    }

    #[test]
    fn two_equals_two() {
        assert!(compare_values(&Value::int(2), &Value::int(2), &CompareOptions::default()).matched);
    }

    #[test]
    fn exact_tolerance_rejects_unrounded() {
        let opts = CompareOptions {
            atol: 0.0,
            ..Default::default()
        };
        let c = compare_values(&Value::float(0.123), &Value::float(0.12), &opts);
        assert_eq!(c.kind(), Some(MismatchKind::Value));
    }

    #[test]
    fn permuted_rows_match_when_unordered() {
        let a = frame(
            &["email"],
            vec![vec![Value::str("a@b.com"), Value::str("c@d.com")]],
            vec![0, 1],
        );
        let b = frame(
            &["email"],
            vec![vec![Value::str("c@d.com"), Value::str("a@b.com")]],
            vec![3, 7],
        );
        let strict = compare_values(&a, &b, &CompareOptions::default());
        assert!(!strict.matched);
        let loose = CompareOptions {
            ignore_order: true,
            ..Default::default()
        };
        assert!(compare_values(&a, &b, &loose).matched);
    }

    #[test]
    fn check_order_is_type_shape_columns_dtype_value() {
        let opts = CompareOptions::default();
        let base = frame(&["a"], vec![vec![Value::int(1), Value::int(2)]], vec![0, 1]);
        assert_eq!(compare_values(&Value::int(1), &base, &opts).kind(), Some(MismatchKind::Type));
        let short = frame(&["b"], vec![vec![Value::float(1.0)]], vec![0]);
        assert_eq!(compare_values(&short, &base, &opts).kind(), Some(MismatchKind::Shape));
        let renamed = frame(&["b"], vec![vec![Value::float(1.0), Value::float(2.0)]], vec![0, 1]);
        assert_eq!(compare_values(&renamed, &base, &opts).kind(), Some(MismatchKind::Columns));
        let floats = frame(&["a"], vec![vec![Value::float(1.0), Value::float(2.0)]], vec![0, 1]);
        assert_eq!(compare_values(&floats, &base, &opts).kind(), Some(MismatchKind::Dtype));
        let off = frame(&["a"], vec![vec![Value::int(1), Value::int(3)]], vec![0, 1]);
        assert_eq!(compare_values(&off, &base, &opts).kind(), Some(MismatchKind::Value));
    }

    #[test]
    fn nan_matches_nan_positionally() {
        let a = Value::list(vec![Value::float(f64::NAN), Value::int(1)]);
        assert!(compare_values(&a, &a.clone(), &CompareOptions::default()).matched);
        let b = Value::list(vec![Value::int(1), Value::float(f64::NAN)]);
        assert!(!compare_values(&a, &b, &CompareOptions::default()).matched);
    }

    #[test]
    fn int_and_float_scalars_are_compatible() {
        assert!(compare_values(&Value::int(3), &Value::float(3.0), &CompareOptions::default()).matched);
    }

    #[test]
    fn options_parse_and_validate() {
        let m: Mapping = serde_yaml::from_str("atol: 0\nignore_order: true\n").unwrap();
        let o = CompareOptions::from_options(&m).unwrap();
        assert_eq!(o.atol, 0.0);
        assert!(o.ignore_order);
        let bad: Mapping = serde_yaml::from_str("atol: -1\n").unwrap();
        assert!(CompareOptions::from_options(&bad).is_err());
    }
}
