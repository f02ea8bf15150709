//! Fetching problem data files into a session's `inputs/` directory.
//!
//! Downloads are cached by content digest under the cache directory:
//! `blobs/<sha256>` holds the bytes and `index.json` maps each source to
//! the digest it last produced.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Component, Path, PathBuf};
use std::time::Duration;

use indexmap::IndexMap;
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ProvisionError {
    #[error("data file name `{0}` must be a relative path inside inputs/")]
    UnsafeName(String),
    #[error("cannot fetch `{file}` from {source_url}: {reason}")]
    Unreachable {
        file: String,
        source_url: String,
        reason: String,
    },
    #[error("integrity error for `{file}`: expected sha256 {expected}, got {actual}")]
    Integrity {
        file: String,
        expected: String,
        actual: String,
    },
    #[error("offline mode: `{file}` ({source_url}) is not cached")]
    NotCached { file: String, source_url: String },
    #[error("data cache: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ProvisionOptions {
    pub cache_dir: PathBuf,
    /// Fail instead of fetching anything that is not cached.
    pub offline: bool,
    /// Base for relative sources, usually the problemset's directory.
    pub base_dir: PathBuf,
    pub timeout: Duration,
}

impl ProvisionOptions {
    pub fn new(cache_dir: impl Into<PathBuf>, base_dir: impl Into<PathBuf>) -> Self {
        ProvisionOptions {
            cache_dir: cache_dir.into(),
            offline: false,
            base_dir: base_dir.into(),
            timeout: Duration::from_secs(60),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn check_name(name: &str) -> Result<PathBuf, ProvisionError> {
    let path = PathBuf::from(name);
    let ok = !name.is_empty()
        && path
            .components()
            .all(|c| matches!(c, Component::Normal(_)));
    if ok {
        Ok(path)
    } else {
        Err(ProvisionError::UnsafeName(name.to_string()))
    }
}

/// Splits an optional `#sha256=<hex>` pin off a source.
fn split_pin(source: &str) -> (&str, Option<String>) {
    match source.rsplit_once("#sha256=") {
        Some((url, digest)) => (url, Some(digest.trim().to_ascii_lowercase())),
        None => (source, None),
    }
}

fn is_remote(url: &str) -> bool {
    url.starts_with("http://") || url.starts_with("https://")
}

struct Cache {
    dir: PathBuf,
    index: BTreeMap<String, String>,
}

impl Cache {
    fn open(dir: &Path) -> Result<Cache, ProvisionError> {
        fs::create_dir_all(dir.join("blobs"))?;
        let index_path = dir.join("index.json");
        let index = match fs::read_to_string(&index_path) {
            Ok(text) => serde_json::from_str(&text).unwrap_or_else(|e| {
                log::warn!("ignoring unreadable cache index {}: {e}", index_path.display());
                BTreeMap::new()
            }),
            Err(_) => BTreeMap::new(),
        };
        Ok(Cache {
            dir: dir.to_path_buf(),
            index,
        })
    }

    fn blob(&self, digest: &str) -> PathBuf {
        self.dir.join("blobs").join(digest)
    }

    fn lookup(&self, url: &str, pin: Option<&str>) -> Option<PathBuf> {
        let digest = pin.or_else(|| self.index.get(url).map(String::as_str))?;
        let blob = self.blob(digest);
        blob.is_file().then_some(blob)
    }

    fn store(&mut self, url: &str, bytes: &[u8]) -> Result<(String, PathBuf), ProvisionError> {
        let digest = sha256_hex(bytes);
        let blob = self.blob(&digest);
        if !blob.is_file() {
            let tmp = blob.with_extension("part");
            fs::write(&tmp, bytes)?;
            fs::rename(&tmp, &blob)?;
        }
        self.index.insert(url.to_string(), digest.clone());
        let text = serde_json::to_string_pretty(&self.index).expect("string map serializes");
        fs::write(self.dir.join("index.json"), text)?;
        Ok((digest, blob))
    }
}

fn fetch(url: &str, file: &str, opts: &ProvisionOptions) -> Result<Vec<u8>, ProvisionError> {
    let unreachable = |reason: String| ProvisionError::Unreachable {
        file: file.to_string(),
        source_url: url.to_string(),
        reason,
    };
    if is_remote(url) {
        let client = reqwest::blocking::Client::builder()
            .timeout(opts.timeout)
            .build()
            .map_err(|e| unreachable(e.to_string()))?;
        let resp = client.get(url).send().map_err(|e| unreachable(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(unreachable(format!("HTTP {}", resp.status())));
        }
        Ok(resp.bytes().map_err(|e| unreachable(e.to_string()))?.to_vec())
    } else {
        let path = match url.strip_prefix("file://") {
            Some(p) => PathBuf::from(p),
            None => opts.base_dir.join(url),
        };
        fs::read(&path).map_err(|e| unreachable(e.to_string()))
    }
}

fn verify_pin(file: &str, pin: Option<&str>, bytes: &[u8]) -> Result<(), ProvisionError> {
    if let Some(expected) = pin {
        let actual = sha256_hex(bytes);
        if actual != expected {
            return Err(ProvisionError::Integrity {
                file: file.to_string(),
                expected: expected.to_string(),
                actual,
            });
        }
    }
    Ok(())
}

/// Materializes every manifest entry under `inputs_dir` and returns it.
pub fn provision_data(
    manifest: &IndexMap<String, String>,
    inputs_dir: &Path,
    opts: &ProvisionOptions,
) -> Result<PathBuf, ProvisionError> {
    fs::create_dir_all(inputs_dir)?;
    if manifest.is_empty() {
        return Ok(inputs_dir.to_path_buf());
    }
    let mut cache = Cache::open(&opts.cache_dir)?;
    for (file, source) in manifest {
        let rel = check_name(file)?;
        let (url, pin) = split_pin(source);
        let target = inputs_dir.join(&rel);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent)?;
        }
        if !is_remote(url) {
            let bytes = fetch(url, file, opts)?;
            verify_pin(file, pin.as_deref(), &bytes)?;
            fs::write(&target, bytes)?;
            continue;
        }
        let blob = match cache.lookup(url, pin.as_deref()) {
            Some(blob) => {
                let actual = sha256_hex(&fs::read(&blob)?);
                let expected = pin.clone().or_else(|| cache.index.get(url).cloned()).unwrap_or_default();
                if actual != expected {
                    return Err(ProvisionError::Integrity {
                        file: file.clone(),
                        expected,
                        actual,
                    });
                }
                blob
            }
            None if opts.offline => {
                return Err(ProvisionError::NotCached {
                    file: file.clone(),
                    source_url: url.to_string(),
                })
            }
            None => {
                let bytes = fetch(url, file, opts)?;
                verify_pin(file, pin.as_deref(), &bytes)?;
                cache.store(url, &bytes)?.1
            }
        };
        fs::copy(&blob, &target)?;
    }
    Ok(inputs_dir.to_path_buf())
}

/// Union of the data manifests of all problems; later entries for the same
/// file name must agree with earlier ones.
pub fn merged_manifest<'a, I>(manifests: I) -> Result<IndexMap<String, String>, String>
where
    I: IntoIterator<Item = &'a IndexMap<String, String>>,
{
    let mut out: IndexMap<String, String> = IndexMap::new();
    for m in manifests {
        for (k, v) in m {
            match out.get(k) {
                Some(prev) if prev != v => {
                    return Err(format!("data file `{k}` has two sources: {prev} and {v}"));
                }
                _ => {
                    out.insert(k.clone(), v.clone());
                }
            }
        }
    }
    Ok(out)
}
