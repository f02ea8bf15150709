//! Language-neutral snapshot of a Python value.
//!
//! The Python worker converts live objects into [`Value`] trees so that all
//! comparison logic can run on the Rust side. Large or opaque objects are
//! reduced to [`Value::Object`] carrying a content fingerprint.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An `f64` that round-trips NaN and infinities through JSON as strings.
#[derive(Debug, Clone, Copy)]
pub struct Num(pub f64);

impl PartialEq for Num {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0 || (self.0.is_nan() && other.0.is_nan())
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_nan() {
            s.serialize_str("nan")
        } else if v == f64::INFINITY {
            s.serialize_str("inf")
        } else if v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(v)
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            F(f64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::F(v) => Ok(Num(v)),
            Raw::S(s) => match s.as_str() {
                "nan" => Ok(Num(f64::NAN)),
                "inf" => Ok(Num(f64::INFINITY)),
                "-inf" => Ok(Num(f64::NEG_INFINITY)),
                other => other
                    .parse()
                    .map(Num)
                    .map_err(|_| serde::de::Error::custom(format!("bad float {other:?}"))),
            },
        }
    }
}

/// Labels of a pandas index (or of one axis of an array-like).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexData {
    #[serde(default)]
    pub name: Box<Value>,
    pub dtype: String,
    pub values: Vec<Value>,
}

impl IndexData {
    pub fn range(n: usize) -> Self {
        IndexData {
            name: Box::new(Value::None),
            dtype: "int64".into(),
            values: (0..n as i64).map(|v| Value::Int { v }).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Value {
    #[default]
    None,
    Bool {
        v: bool,
    },
    Int {
        v: i64,
    },
    Float {
        v: Num,
    },
    Str {
        v: String,
    },
    /// ISO-8601 timestamp text.
    Datetime {
        v: String,
    },
    Duration {
        seconds: f64,
    },
    List {
        items: Vec<Value>,
    },
    Tuple {
        items: Vec<Value>,
    },
    Set {
        items: Vec<Value>,
    },
    Dict {
        items: Vec<(Value, Value)>,
    },
    Array {
        dtype: String,
        shape: Vec<usize>,
        /// Flattened in C order.
        data: Vec<Value>,
    },
    Series {
        name: Box<Value>,
        dtype: String,
        index: IndexData,
        values: Vec<Value>,
    },
    Frame {
        columns: Vec<Value>,
        dtypes: Vec<String>,
        index: IndexData,
        /// Column-major: `data[c][r]`.
        data: Vec<Vec<Value>>,
    },
    Index {
        index: IndexData,
    },
    Object {
        type_name: String,
        repr: String,
        fingerprint: String,
    },
}

/// Coarse type family used to decide whether two values are comparable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    None,
    Bool,
    Number,
    Str,
    Datetime,
    Duration,
    Sequence,
    Set,
    Dict,
    Array,
    Series,
    Frame,
    Index,
    Object,
}

/// Element type family of a column or array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DtypeKind {
    Int,
    Float,
    Bool,
    Object,
    Category,
    Datetime,
    Timedelta,
    Complex,
    Other,
}

pub fn dtype_kind(dtype: &str) -> DtypeKind {
    let d = dtype.to_ascii_lowercase();
    if d.starts_with("int") || d.starts_with("uint") {
        DtypeKind::Int
    } else if d.starts_with("float") {
        DtypeKind::Float
    } else if d.starts_with("bool") {
        DtypeKind::Bool
    } else if d == "category" {
        DtypeKind::Category
    } else if d.starts_with("datetime") {
        DtypeKind::Datetime
    } else if d.starts_with("timedelta") {
        DtypeKind::Timedelta
    } else if d.starts_with("complex") {
        DtypeKind::Complex
    } else if d == "object" || d == "string" || d.starts_with("<u") || d.starts_with("str") {
        DtypeKind::Object
    } else {
        DtypeKind::Other
    }
}

impl Value {
    pub fn int(v: i64) -> Self {
        Value::Int { v }
    }

    pub fn float(v: f64) -> Self {
        Value::Float { v: Num(v) }
    }

    pub fn str(v: impl Into<String>) -> Self {
        Value::Str { v: v.into() }
    }

    pub fn list(items: Vec<Value>) -> Self {
        Value::List { items }
    }

    pub fn family(&self) -> Family {
        match self {
            Value::None => Family::None,
            Value::Bool { .. } => Family::Bool,
            Value::Int { .. } | Value::Float { .. } => Family::Number,
            Value::Str { .. } => Family::Str,
            Value::Datetime { .. } => Family::Datetime,
            Value::Duration { .. } => Family::Duration,
            Value::List { .. } | Value::Tuple { .. } => Family::Sequence,
            Value::Set { .. } => Family::Set,
            Value::Dict { .. } => Family::Dict,
            Value::Array { .. } => Family::Array,
            Value::Series { .. } => Family::Series,
            Value::Frame { .. } => Family::Frame,
            Value::Index { .. } => Family::Index,
            Value::Object { .. } => Family::Object,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int { v } => Some(*v as f64),
            Value::Float { v } => Some(v.0),
            Value::Bool { v } => Some(if *v { 1.0 } else { 0.0 }),
            _ => None,
        }
    }

    pub fn is_nan(&self) -> bool {
        matches!(self, Value::Float { v } if v.0.is_nan())
    }

    /// True when the value (recursively) contains a NaN.
    pub fn contains_nan(&self) -> bool {
        match self {
            Value::Float { v } => v.0.is_nan(),
            Value::List { items } | Value::Tuple { items } | Value::Set { items } => {
                items.iter().any(Value::contains_nan)
            }
            Value::Dict { items } => items.iter().any(|(k, v)| k.contains_nan() || v.contains_nan()),
            Value::Array { data, .. } => data.iter().any(Value::contains_nan),
            Value::Series { values, index, .. } => {
                values.iter().any(Value::contains_nan) || index.values.iter().any(Value::contains_nan)
            }
            Value::Frame { data, index, .. } => {
                data.iter().flatten().any(Value::contains_nan)
                    || index.values.iter().any(Value::contains_nan)
            }
            Value::Index { index } => index.values.iter().any(Value::contains_nan),
            _ => false,
        }
    }

    /// Total order used for order-insensitive comparison. Numbers compare
    /// numerically across int/float; NaN sorts last.
    pub fn canonical_cmp(&self, other: &Value) -> Ordering {
        let (fa, fb) = (self.family(), other.family());
        if fa != fb {
            return fa.cmp(&fb);
        }
        match (self, other) {
            (Value::None, Value::None) => Ordering::Equal,
            (Value::Bool { v: a }, Value::Bool { v: b }) => a.cmp(b),
            (Value::Int { v: a }, Value::Int { v: b }) => a.cmp(b),
            (a, b) if fa == Family::Number => {
                let (x, y) = (a.as_f64().unwrap_or(f64::NAN), b.as_f64().unwrap_or(f64::NAN));
                match (x.is_nan(), y.is_nan()) {
                    (true, true) => Ordering::Equal,
                    (true, false) => Ordering::Greater,
                    (false, true) => Ordering::Less,
                    _ => x.total_cmp(&y),
                }
            }
            (Value::Str { v: a }, Value::Str { v: b }) => a.cmp(b),
            (Value::Datetime { v: a }, Value::Datetime { v: b }) => a.cmp(b),
            (Value::Duration { seconds: a }, Value::Duration { seconds: b }) => a.total_cmp(b),
            (Value::List { items: a } | Value::Tuple { items: a }, Value::List { items: b } | Value::Tuple { items: b })
            | (Value::Set { items: a }, Value::Set { items: b }) => cmp_slices(a, b),
            (Value::Dict { items: a }, Value::Dict { items: b }) => {
                for ((ka, va), (kb, vb)) in a.iter().zip(b) {
                    let o = ka.canonical_cmp(kb).then_with(|| va.canonical_cmp(vb));
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                a.len().cmp(&b.len())
            }
            (Value::Array { data: a, shape: sa, .. }, Value::Array { data: b, shape: sb, .. }) => {
                sa.cmp(sb).then_with(|| cmp_slices(a, b))
            }
            (Value::Series { values: a, .. }, Value::Series { values: b, .. }) => cmp_slices(a, b),
            (Value::Frame { data: a, .. }, Value::Frame { data: b, .. }) => {
                for (ca, cb) in a.iter().zip(b) {
                    let o = cmp_slices(ca, cb);
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                a.len().cmp(&b.len())
            }
            (Value::Index { index: a }, Value::Index { index: b }) => cmp_slices(&a.values, &b.values),
            (
                Value::Object { type_name: ta, fingerprint: fa, .. },
                Value::Object { type_name: tb, fingerprint: fb, .. },
            ) => ta.cmp(tb).then_with(|| fa.cmp(fb)),
            _ => Ordering::Equal,
        }
    }

    /// Number of leaf cells, used to bound payload sizes.
    pub fn cell_count(&self) -> usize {
        match self {
            Value::List { items } | Value::Tuple { items } | Value::Set { items } => {
                items.iter().map(Value::cell_count).sum::<usize>().max(1)
            }
            Value::Dict { items } => items.iter().map(|(k, v)| k.cell_count() + v.cell_count()).sum(),
            Value::Array { data, .. } => data.len(),
            Value::Series { values, .. } => values.len(),
            Value::Frame { data, .. } => data.iter().map(Vec::len).sum(),
            Value::Index { index } => index.values.len(),
            _ => 1,
        }
    }

    pub fn type_label(&self) -> String {
        match self {
            Value::None => "NoneType".into(),
            Value::Bool { .. } => "bool".into(),
            Value::Int { .. } => "int".into(),
            Value::Float { .. } => "float".into(),
            Value::Str { .. } => "str".into(),
            Value::Datetime { .. } => "Timestamp".into(),
            Value::Duration { .. } => "Timedelta".into(),
            Value::List { .. } => "list".into(),
            Value::Tuple { .. } => "tuple".into(),
            Value::Set { .. } => "set".into(),
            Value::Dict { .. } => "dict".into(),
            Value::Array { .. } => "ndarray".into(),
            Value::Series { .. } => "Series".into(),
            Value::Frame { .. } => "DataFrame".into(),
            Value::Index { .. } => "Index".into(),
            Value::Object { type_name, .. } => type_name.clone(),
        }
    }
}

pub fn cmp_slices(a: &[Value], b: &[Value]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.canonical_cmp(y);
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::None => write!(f, "None"),
            Value::Bool { v } => write!(f, "{}", if *v { "True" } else { "False" }),
            Value::Int { v } => write!(f, "{v}"),
            Value::Float { v } => {
                if v.0.is_nan() {
                    write!(f, "nan")
                } else if v.0.fract() == 0.0 && v.0.abs() < 1e16 {
                    write!(f, "{:.1}", v.0)
                } else {
                    write!(f, "{}", v.0)
                }
            }
            Value::Str { v } => write!(f, "{v:?}"),
            Value::Datetime { v } => write!(f, "{v}"),
            Value::Duration { seconds } => write!(f, "{seconds}s"),
            Value::List { items } => write_seq(f, "[", "]", items),
            Value::Tuple { items } => write_seq(f, "(", ")", items),
            Value::Set { items } => write_seq(f, "{", "}", items),
            Value::Dict { items } => {
                write!(f, "{{")?;
                for (i, (k, v)) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{k}: {v}")?;
                }
                write!(f, "}}")
            }
            Value::Array { dtype, shape, .. } => write!(f, "ndarray<{dtype}>{shape:?}"),
            Value::Series { values, dtype, .. } => write!(f, "Series<{dtype}>({})", values.len()),
            Value::Frame { columns, index, .. } => {
                write!(f, "DataFrame({}, {})", index.values.len(), columns.len())
            }
            Value::Index { index } => write!(f, "Index({})", index.values.len()),
            Value::Object { type_name, repr, .. } => write!(f, "<{type_name}> {repr}"),
        }
    }
}

fn write_seq(f: &mut fmt::Formatter<'_>, open: &str, close: &str, items: &[Value]) -> fmt::Result {
    write!(f, "{open}")?;
    for (i, v) in items.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{v}")?;
    }
    write!(f, "{close}")
}
