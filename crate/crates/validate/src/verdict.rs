//! Verdict catalog: categories, sub-verdicts and their display names.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::compare::MismatchKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Correct,
    IntactViolation,
    PresentationError,
    WrongOutput,
    WrongVariables,
    UnitTestFailure,
    Timeout,
    Crash,
    SyntaxError,
}

impl Category {
    pub const ALL: [Category; 9] = [
        Category::Correct,
        Category::IntactViolation,
        Category::PresentationError,
        Category::WrongOutput,
        Category::WrongVariables,
        Category::UnitTestFailure,
        Category::Timeout,
        Category::Crash,
        Category::SyntaxError,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            Category::Correct => "Correct",
            Category::IntactViolation => "Intact Violation",
            Category::PresentationError => "Presentation Error",
            Category::WrongOutput => "Wrong Output",
            Category::WrongVariables => "Wrong Variables",
            Category::UnitTestFailure => "Unit-test Failure",
            Category::Timeout => "Timeout",
            Category::Crash => "Crash",
            Category::SyntaxError => "Syntax Error",
        }
    }

    /// Sub-verdicts allowed under this category; empty when it has none.
    pub fn subcategories(self) -> &'static [SubCategory] {
        use SubCategory::*;
        match self {
            Category::PresentationError => &[IndexMismatch, MissingReturn, PartialMatch, NonCode],
            Category::WrongOutput | Category::WrongVariables | Category::UnitTestFailure => &[
                ShapeMismatch,
                DtypeMismatch,
                ColumnsMismatch,
                ValueMismatch,
                UnexpectedType,
                Others,
            ],
            Category::Crash => &[
                ModuleNotFound,
                AttributeError,
                KeyError,
                NameError,
                TypeError,
                ValueError,
                Others,
            ],
            _ => &[],
        }
    }

    fn from_display(s: &str) -> Option<Category> {
        Category::ALL.into_iter().find(|c| c.display_name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SubCategory {
    IndexMismatch,
    MissingReturn,
    PartialMatch,
    NonCode,
    ShapeMismatch,
    DtypeMismatch,
    ColumnsMismatch,
    ValueMismatch,
    UnexpectedType,
    Others,
    ModuleNotFound,
    AttributeError,
    KeyError,
    NameError,
    TypeError,
    ValueError,
}

impl SubCategory {
    pub fn display_name(self) -> &'static str {
        match self {
            SubCategory::IndexMismatch => "Index Mismatch",
            SubCategory::MissingReturn => "Missing Return",
            SubCategory::PartialMatch => "Partial Match",
            SubCategory::NonCode => "Non-code",
            SubCategory::ShapeMismatch => "Shape Mismatch",
            SubCategory::DtypeMismatch => "Dtype Mismatch",
            SubCategory::ColumnsMismatch => "Columns Mismatch",
            SubCategory::ValueMismatch => "Value Mismatch",
            SubCategory::UnexpectedType => "Unexpected Type",
            SubCategory::Others => "Others",
            SubCategory::ModuleNotFound => "Module Not Found",
            SubCategory::AttributeError => "Attribute Error",
            SubCategory::KeyError => "Key Error",
            SubCategory::NameError => "Name Error",
            SubCategory::TypeError => "Type Error",
            SubCategory::ValueError => "Value Error",
        }
    }

    pub fn from_mismatch(kind: Option<MismatchKind>) -> SubCategory {
        match kind {
            Some(MismatchKind::Shape) => SubCategory::ShapeMismatch,
            Some(MismatchKind::Dtype) => SubCategory::DtypeMismatch,
            Some(MismatchKind::Columns) => SubCategory::ColumnsMismatch,
            Some(MismatchKind::Value) => SubCategory::ValueMismatch,
            Some(MismatchKind::Type) => SubCategory::UnexpectedType,
            None => SubCategory::Others,
        }
    }
}

/// A category plus optional sub-verdict. Serialized as its display name,
/// for example `"Presentation Error / Missing Return"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VerdictLabel {
    pub category: Category,
    pub subcategory: Option<SubCategory>,
}

impl VerdictLabel {
    pub fn new(category: Category, subcategory: Option<SubCategory>) -> Self {
        VerdictLabel { category, subcategory }
    }

    pub fn is_valid(&self) -> bool {
        let allowed = self.category.subcategories();
        match self.subcategory {
            None => allowed.is_empty(),
            Some(s) => allowed.contains(&s),
        }
    }

    /// The failure leaves of the catalog (everything except Correct).
    pub fn all_leaves() -> Vec<VerdictLabel> {
        let mut out = Vec::new();
        for c in Category::ALL {
            if c == Category::Correct {
                continue;
            }
            let subs = c.subcategories();
            if subs.is_empty() {
                out.push(VerdictLabel::new(c, None));
            } else {
                out.extend(subs.iter().map(|s| VerdictLabel::new(c, Some(*s))));
            }
        }
        out
    }
}

impl fmt::Display for VerdictLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.subcategory {
            Some(s) => write!(f, "{} / {}", self.category.display_name(), s.display_name()),
            None => f.write_str(self.category.display_name()),
        }
    }
}

impl FromStr for VerdictLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (cat, sub) = match s.split_once(" / ") {
            Some((c, sub)) => (c, Some(sub)),
            None => (s, None),
        };
        let category = Category::from_display(cat.trim()).ok_or_else(|| format!("unknown verdict `{s}`"))?;
        let subcategory = match sub {
            None => None,
            Some(name) => Some(
                category
                    .subcategories()
                    .iter()
                    .copied()
                    .find(|x| x.display_name() == name.trim())
                    .ok_or_else(|| format!("unknown sub-verdict in `{s}`"))?,
            ),
        };
        let label = VerdictLabel { category, subcategory };
        if label.is_valid() {
            Ok(label)
        } else {
            Err(format!("`{s}` needs a sub-verdict"))
        }
    }
}

impl Serialize for VerdictLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VerdictLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: VerdictLabel,
    #[serde(default)]
    pub detail: String,
}

impl Verdict {
    pub fn new(category: Category, subcategory: Option<SubCategory>, detail: impl Into<String>) -> Self {
        Verdict {
            label: VerdictLabel::new(category, subcategory),
            detail: detail.into(),
        }
    }

    pub fn category(&self) -> Category {
        self.label.category
    }

    pub fn subcategory(&self) -> Option<SubCategory> {
        self.label.subcategory
    }

    pub fn is_correct(&self) -> bool {
        self.label.category == Category::Correct
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.label.fmt(f)
    }
}
