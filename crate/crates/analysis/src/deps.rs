use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use dseval_agents::{ChatMessage, LlmClient};
use dseval_core::syntax::free_reads;
use dseval_core::Problemset;
use dseval_runtime::GroundTruth;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DependencyKind {
    /// The later problem reads a variable the earlier one wrote.
    Session,
    /// The later query only makes sense after the earlier one.
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyEdge {
    pub from: usize,
    pub to: usize,
    pub kind: DependencyKind,
    /// Variables carried along a session edge.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencyGraph {
    pub problemset: String,
    pub nodes: Vec<usize>,
    pub edges: Vec<DependencyEdge>,
    /// False when no classifier was available and semantic edges were not looked for.
    pub semantic_checked: bool,
}

impl DependencyGraph {
    pub fn in_degree(&self, node: usize) -> usize {
        self.edges.iter().filter(|e| e.to == node).count()
    }

    pub fn mean_in_degree(&self) -> f64 {
        if self.nodes.is_empty() {
            0.0
        } else {
            self.edges.len() as f64 / self.nodes.len() as f64
        }
    }

    /// Number of problems on the longest dependency path.
    pub fn max_chain_length(&self) -> usize {
        let mut longest: BTreeMap<usize, usize> = BTreeMap::new();
        for &n in &self.nodes {
            let best = self
                .edges
                .iter()
                .filter(|e| e.to == n)
                .filter_map(|e| longest.get(&e.from))
                .max()
                .copied()
                .unwrap_or(0);
            longest.insert(n, best + 1);
        }
        longest.values().max().copied().unwrap_or(0)
    }

    /// Graphviz description; session edges solid, semantic edges dashed.
    pub fn to_dot(&self) -> String {
        let mut out = format!("digraph \"{}\" {{\n", self.problemset.replace('"', "'"));
        for n in &self.nodes {
            out.push_str(&format!("  p{n} [label=\"{n}\"];\n"));
        }
        for e in &self.edges {
            let style = match e.kind {
                DependencyKind::Session => "solid",
                DependencyKind::Semantic => "dashed",
            };
            let label = e.names.join(", ");
            out.push_str(&format!(
                "  p{} -> p{} [style={style}, label=\"{label}\"];\n",
                e.from, e.to
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// Decides whether a later query depends on the text of an earlier one.
pub trait SemanticClassifier: Send + Sync {
    fn depends(&self, earlier: &str, later: &str) -> bool;
}

/// Asks a chat model a yes/no question per query pair.
pub struct LlmSemanticClassifier {
    pub client: Arc<dyn LlmClient>,
}

impl SemanticClassifier for LlmSemanticClassifier {
    fn depends(&self, earlier: &str, later: &str) -> bool {
        let prompt = format!(
            "Question A:\n{earlier}\n\nQuestion B:\n{later}\n\n\
             Does understanding question B require having read question A? Answer yes or no."
        );
        match self.client.complete(&[ChatMessage::user(prompt)]) {
            Ok(c) => c.text.trim_start().to_ascii_lowercase().starts_with("yes"),
            Err(e) => {
                log::warn!("semantic classifier failed: {e}");
                false
            }
        }
    }
}

/// Session edges point from the nearest earlier problem that created or
/// changed a variable to each later problem whose reference code reads it.
pub fn extract_dependencies(
    ps: &Problemset,
    gt: &GroundTruth,
    semantic: Option<&dyn SemanticClassifier>,
) -> DependencyGraph {
    let nodes: Vec<usize> = ps.problems.iter().map(|p| p.index).collect();
    let mut last_writer: BTreeMap<String, usize> = BTreeMap::new();
    let mut edges = Vec::new();
    for (pos, problem) in ps.problems.iter().enumerate() {
        let reads = free_reads(&problem.reference_code).unwrap_or_else(|e| {
            log::warn!("{}#{}: {e}", ps.id, problem.index);
            BTreeSet::new()
        });
        let mut incoming: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for name in reads {
            if let Some(&from) = last_writer.get(&name) {
                incoming.entry(from).or_default().push(name);
            }
        }
        for (from, names) in incoming {
            edges.push(DependencyEdge {
                from,
                to: problem.index,
                kind: DependencyKind::Session,
                names,
            });
        }
        if let Some(step) = gt.steps.get(pos) {
            for name in step.changed_names() {
                last_writer.insert(name, problem.index);
            }
        }
    }
    if let Some(classifier) = semantic {
        for (j, later) in ps.problems.iter().enumerate() {
            for earlier in &ps.problems[..j] {
                if classifier.depends(&earlier.query, &later.query) {
                    edges.push(DependencyEdge {
                        from: earlier.index,
                        to: later.index,
                        kind: DependencyKind::Semantic,
                        names: Vec::new(),
                    });
                }
            }
        }
    }
    DependencyGraph {
        problemset: ps.id.clone(),
        nodes,
        edges,
        semantic_checked: semantic.is_some(),
    }
}
