//! Problemset model shared by every dseval crate.

pub mod config;
pub mod dseal;
pub mod registry;
pub mod syntax;
pub mod value;

pub use config::{ConfigError, ValidatorConfig, ValidatorKind};
pub use dseal::{
    discover, parse_problemset, parse_str, serialize_problemset, ExecutionConfig, ParseError, Problem, Problemset,
};
pub use value::{dtype_kind, DtypeKind, Family, IndexData, Num, Value};
pub use registry::Registry;
