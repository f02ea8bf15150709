//! Validator configuration trees as written in problem YAML blocks.

use std::fmt;
use std::str::FromStr;

use serde_yaml::{Mapping, Value as Yaml};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValidatorKind {
    Crash,
    ExecuteResult,
    NamespaceCheck,
    TableTest,
    Model,
    StreamOutput,
    AnswerInSource,
    NamespaceIntact,
    And,
    Or,
    Template,
}

impl ValidatorKind {
    pub const ALL: [ValidatorKind; 11] = [
        ValidatorKind::Crash,
        ValidatorKind::ExecuteResult,
        ValidatorKind::NamespaceCheck,
        ValidatorKind::TableTest,
        ValidatorKind::Model,
        ValidatorKind::StreamOutput,
        ValidatorKind::AnswerInSource,
        ValidatorKind::NamespaceIntact,
        ValidatorKind::And,
        ValidatorKind::Or,
        ValidatorKind::Template,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ValidatorKind::Crash => "crash",
            ValidatorKind::ExecuteResult => "execute_result",
            ValidatorKind::NamespaceCheck => "namespace_check",
            ValidatorKind::TableTest => "table_test",
            ValidatorKind::Model => "model",
            ValidatorKind::StreamOutput => "stream_output",
            ValidatorKind::AnswerInSource => "answer_in_source",
            ValidatorKind::NamespaceIntact => "namespace_intact",
            ValidatorKind::And => "and",
            ValidatorKind::Or => "or",
            ValidatorKind::Template => "template",
        }
    }

    pub fn is_composite(self) -> bool {
        matches!(self, ValidatorKind::And | ValidatorKind::Or)
    }
}

impl fmt::Display for ValidatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ValidatorKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let kind = match s {
            "crash" | "error" => ValidatorKind::Crash,
            "execute_result" | "result" => ValidatorKind::ExecuteResult,
            "namespace_check" => ValidatorKind::NamespaceCheck,
            "table_test" => ValidatorKind::TableTest,
            "model" => ValidatorKind::Model,
            "stream_output" | "output" => ValidatorKind::StreamOutput,
            "answer_in_source" => ValidatorKind::AnswerInSource,
            "namespace_intact" | "intact" => ValidatorKind::NamespaceIntact,
            "and" => ValidatorKind::And,
            "or" => ValidatorKind::Or,
            "template" => ValidatorKind::Template,
            other => return Err(ConfigError::UnknownKind(other.to_string())),
        };
        Ok(kind)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown validator kind `{0}`")]
    UnknownKind(String),
    #[error("`{0}` needs at least one child validator")]
    EmptyComposite(ValidatorKind),
    #[error("`{0}` is a leaf validator and cannot have children")]
    LeafWithChildren(ValidatorKind),
    #[error("validator options for `{kind}` must be a mapping, got {found}")]
    BadOptions { kind: ValidatorKind, found: String },
    #[error("template name must be a string")]
    BadTemplateName,
    #[error("validator block must be a mapping")]
    NotAMapping,
    #[error("list entries under `{0}` must be single-key mappings")]
    BadListEntry(ValidatorKind),
}

/// One node of a validator tree.
///
/// A `Template` node keeps its template name under `options["template"]` and
/// the user-supplied keys that sit next to it as children.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatorConfig {
    pub kind: ValidatorKind,
    pub options: Mapping,
    pub children: Vec<ValidatorConfig>,
}

pub const DEFAULT_TEMPLATE: &str = "basic";

impl Default for ValidatorConfig {
    fn default() -> Self {
        ValidatorConfig::template(DEFAULT_TEMPLATE, Vec::new())
    }
}

impl ValidatorConfig {
    pub fn leaf(kind: ValidatorKind) -> Self {
        ValidatorConfig {
            kind,
            options: Mapping::new(),
            children: Vec::new(),
        }
    }

    pub fn with_option(mut self, key: &str, value: impl Into<Yaml>) -> Self {
        self.options.insert(Yaml::from(key), value.into());
        self
    }

    pub fn composite(kind: ValidatorKind, children: Vec<ValidatorConfig>) -> Self {
        ValidatorConfig {
            kind,
            options: Mapping::new(),
            children,
        }
    }

    pub fn template(name: &str, children: Vec<ValidatorConfig>) -> Self {
        let mut options = Mapping::new();
        options.insert(Yaml::from("template"), Yaml::from(name));
        ValidatorConfig {
            kind: ValidatorKind::Template,
            options,
            children,
        }
    }

    pub fn template_name(&self) -> Option<&str> {
        if self.kind != ValidatorKind::Template {
            return None;
        }
        self.options.get("template").and_then(Yaml::as_str)
    }

    pub fn option(&self, key: &str) -> Option<&Yaml> {
        self.options.get(key)
    }

    /// Checks the structural invariants of the whole tree.
    pub fn check(&self) -> Result<(), ConfigError> {
        match self.kind {
            ValidatorKind::And | ValidatorKind::Or => {
                if self.children.is_empty() {
                    return Err(ConfigError::EmptyComposite(self.kind));
                }
            }
            ValidatorKind::Template => {
                if self.template_name().is_none() {
                    return Err(ConfigError::BadTemplateName);
                }
            }
            kind => {
                if !self.children.is_empty() {
                    return Err(ConfigError::LeafWithChildren(kind));
                }
            }
        }
        self.children.iter().try_for_each(ValidatorConfig::check)
    }

    /// Parses the value of a problem's `validator:` key.
    pub fn from_yaml(value: &Yaml) -> Result<Self, ConfigError> {
        let map = match value {
            Yaml::Null => return Ok(ValidatorConfig::default()),
            Yaml::Mapping(m) => m,
            _ => return Err(ConfigError::NotAMapping),
        };
        let mut name = DEFAULT_TEMPLATE.to_string();
        let mut children = Vec::new();
        for (k, v) in map {
            let key = k.as_str().ok_or(ConfigError::NotAMapping)?;
            if key == "template" {
                name = v.as_str().ok_or(ConfigError::BadTemplateName)?.to_string();
            } else {
                children.push(Self::node(key.parse()?, v)?);
            }
        }
        let config = ValidatorConfig::template(&name, children);
        config.check()?;
        Ok(config)
    }

    fn node(kind: ValidatorKind, value: &Yaml) -> Result<Self, ConfigError> {
        match kind {
            ValidatorKind::And | ValidatorKind::Or => {
                let mut children = Vec::new();
                match value {
                    Yaml::Mapping(m) => {
                        for (k, v) in m {
                            let key = k.as_str().ok_or(ConfigError::NotAMapping)?;
                            children.push(Self::node(key.parse()?, v)?);
                        }
                    }
                    Yaml::Sequence(items) => {
                        for item in items {
                            let entry = item.as_mapping().filter(|m| m.len() == 1);
                            let (k, v) = entry
                                .and_then(|m| m.iter().next())
                                .ok_or(ConfigError::BadListEntry(kind))?;
                            let key = k.as_str().ok_or(ConfigError::BadListEntry(kind))?;
                            children.push(Self::node(key.parse()?, v)?);
                        }
                    }
                    Yaml::Null => {}
                    other => {
                        return Err(ConfigError::BadOptions {
                            kind,
                            found: yaml_kind(other).into(),
                        })
                    }
                }
                Ok(ValidatorConfig::composite(kind, children))
            }
            ValidatorKind::Template => Err(ConfigError::UnknownKind("nested template".into())),
            leaf => {
                let options = match value {
                    Yaml::Null => Mapping::new(),
                    Yaml::Mapping(m) => m.clone(),
                    other => {
                        return Err(ConfigError::BadOptions {
                            kind: leaf,
                            found: yaml_kind(other).into(),
                        })
                    }
                };
                Ok(ValidatorConfig {
                    kind: leaf,
                    options,
                    children: Vec::new(),
                })
            }
        }
    }

    /// Renders the tree back into the YAML accepted by [`from_yaml`].
    ///
    /// [`from_yaml`]: ValidatorConfig::from_yaml
    pub fn to_yaml(&self) -> Yaml {
        match self.kind {
            ValidatorKind::Template => {
                let mut map = Mapping::new();
                let name = self.template_name().unwrap_or(DEFAULT_TEMPLATE);
                if name != DEFAULT_TEMPLATE {
                    map.insert("template".into(), name.into());
                }
                children_into(&mut map, &self.children);
                Yaml::Mapping(map)
            }
            ValidatorKind::And | ValidatorKind::Or => children_yaml(&self.children),
            _ if self.options.is_empty() => Yaml::Null,
            _ => Yaml::Mapping(self.options.clone()),
        }
    }

    /// True for the implicit configuration used when `validator:` is absent.
    pub fn is_default(&self) -> bool {
        *self == ValidatorConfig::default()
    }

    /// Visits every node, parents before children.
    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a ValidatorConfig)) {
        f(self);
        for child in &self.children {
            child.visit(f);
        }
    }
}

fn has_duplicate_kinds(children: &[ValidatorConfig]) -> bool {
    let mut seen = std::collections::HashSet::new();
    children.iter().any(|c| !seen.insert(c.kind))
}

fn children_into(map: &mut Mapping, children: &[ValidatorConfig]) {
    for child in children {
        map.insert(child.kind.name().into(), child.to_yaml());
    }
}

fn children_yaml(children: &[ValidatorConfig]) -> Yaml {
    if has_duplicate_kinds(children) {
        let items = children
            .iter()
            .map(|c| {
                let mut m = Mapping::new();
                m.insert(c.kind.name().into(), c.to_yaml());
                Yaml::Mapping(m)
            })
            .collect();
        Yaml::Sequence(items)
    } else {
        let mut map = Mapping::new();
        children_into(&mut map, children);
        Yaml::Mapping(map)
    }
}

fn yaml_kind(v: &Yaml) -> &'static str {
    match v {
        Yaml::Null => "null",
        Yaml::Bool(_) => "bool",
        Yaml::Number(_) => "number",
        Yaml::String(_) => "string",
        Yaml::Sequence(_) => "list",
        Yaml::Mapping(_) => "mapping",
        Yaml::Tagged(_) => "tagged value",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ValidatorConfig {
        ValidatorConfig::from_yaml(&serde_yaml::from_str(text).unwrap()).unwrap()
    }

    #[test]
    fn aliases_normalize() {
        let cfg = parse("template: basic\nor:\n  result:\n    atol: 0\n  output:\n");
        let or = &cfg.children[0];
        assert_eq!(or.kind, ValidatorKind::Or);
        assert_eq!(or.children[0].kind, ValidatorKind::ExecuteResult);
        assert_eq!(or.children[1].kind, ValidatorKind::StreamOutput);
        assert!(or.children[1].options.is_empty());
    }

    #[test]
    fn absent_validator_is_basic_default() {
        let cfg = ValidatorConfig::from_yaml(&Yaml::Null).unwrap();
        assert!(cfg.is_default());
        assert_eq!(cfg.template_name(), Some("basic"));
    }

    #[test]
    fn list_form_allows_repeated_kinds() {
        let cfg = parse("template: none\nand:\n- crash:\n- crash:\n");
        assert_eq!(cfg.children[0].children.len(), 2);
        let back = ValidatorConfig::from_yaml(&cfg.to_yaml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn empty_composite_rejected() {
        let err = ValidatorConfig::from_yaml(&serde_yaml::from_str("or:\n").unwrap()).unwrap_err();
        assert_eq!(err, ConfigError::EmptyComposite(ValidatorKind::Or));
    }

    #[test]
    fn unknown_kind_rejected() {
        let err = ValidatorConfig::from_yaml(&serde_yaml::from_str("chart:\n").unwrap()).unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKind(k) if k == "chart"));
    }
}
