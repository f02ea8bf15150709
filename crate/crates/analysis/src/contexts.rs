use dseval_core::Value;
use dseval_runtime::GroundTruth;
use serde::{Deserialize, Serialize};

/// Namespace size around each problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSample {
    pub variables: usize,
    /// Length of the variables' JSON encoding.
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ContextSummary {
    pub problems: usize,
    pub mean_variables: f64,
    pub max_variables: usize,
    pub median_bytes: f64,
    pub max_bytes: usize,
    pub empty: bool,
}

fn is_module(v: &Value) -> bool {
    matches!(v, Value::Object { type_name, .. } if type_name == "module")
}

/// One sample per problem, taken from the reference state after it ran.
/// Imported modules are not counted as variables.
pub fn context_samples(gt: &GroundTruth) -> Vec<ContextSample> {
    gt.steps
        .iter()
        .map(|step| {
            let vars: Vec<(&String, &Value)> = step.post_values.iter().filter(|(_, v)| !is_module(v)).collect();
            let bytes = vars
                .iter()
                .map(|(k, v)| k.len() + serde_json::to_string(v).map(|s| s.len()).unwrap_or(0))
                .sum();
            ContextSample {
                variables: vars.len(),
                bytes,
            }
        })
        .collect()
}

pub fn summarize_contexts<'a, I>(truths: I) -> ContextSummary
where
    I: IntoIterator<Item = &'a GroundTruth>,
{
    let samples: Vec<ContextSample> = truths.into_iter().flat_map(context_samples).collect();
    summarize_samples(&samples)
}

pub fn summarize_samples(samples: &[ContextSample]) -> ContextSummary {
    if samples.is_empty() {
        return ContextSummary {
            empty: true,
            ..Default::default()
        };
    }
    let n = samples.len();
    let mut bytes: Vec<usize> = samples.iter().map(|s| s.bytes).collect();
    bytes.sort_unstable();
    let median_bytes = if n % 2 == 1 {
        bytes[n / 2] as f64
    } else {
        (bytes[n / 2 - 1] + bytes[n / 2]) as f64 / 2.0
    };
    ContextSummary {
        problems: n,
        mean_variables: samples.iter().map(|s| s.variables).sum::<usize>() as f64 / n as f64,
        max_variables: samples.iter().map(|s| s.variables).max().unwrap_or(0),
        median_bytes,
        max_bytes: bytes[n - 1],
        empty: false,
    }
}
