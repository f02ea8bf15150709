use dseval_core::ValidatorKind;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::compare::MismatchKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    #[serde(with = "kind_name")]
    pub validator: ValidatorKind,
    pub mismatch: Option<MismatchKind>,
    pub detail: String,
}

/// Result of evaluating one validator node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    #[serde(with = "kind_name")]
    pub kind: ValidatorKind,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Outcome>,
}

impl Outcome {
    pub fn pass(kind: ValidatorKind) -> Self {
        Outcome {
            kind,
            pass: true,
            failure: None,
            children: Vec::new(),
        }
    }

    pub fn fail(kind: ValidatorKind, mismatch: Option<MismatchKind>, detail: impl Into<String>) -> Self {
        Outcome {
            kind,
            pass: false,
            failure: Some(Failure {
                validator: kind,
                mismatch,
                detail: detail.into(),
            }),
            children: Vec::new(),
        }
    }

    /// Leaves that fail and are not rescued by a passing `or` ancestor.
    pub fn effective_failures(&self) -> Vec<&Outcome> {
        let mut out = Vec::new();
        self.collect_failures(&mut out);
        out
    }

    fn collect_failures<'a>(&'a self, out: &mut Vec<&'a Outcome>) {
        if self.pass {
            return;
        }
        if self.children.is_empty() {
            out.push(self);
        } else {
            for c in &self.children {
                c.collect_failures(out);
            }
        }
    }

    /// Every node in the tree, parents first.
    pub fn nodes(&self) -> Vec<&Outcome> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.nodes());
        }
        out
    }
}

mod kind_name {
    use super::*;

    pub fn serialize<S: Serializer>(kind: &ValidatorKind, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(kind.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ValidatorKind, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}
