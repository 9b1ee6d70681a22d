use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::CliError;

pub const AREAS: &str = "areas.csv";
pub const SAMPLES: &str = "samples.jsonl";
pub const SAMPLING: &str = "sampling.json";
pub const MATRIX: &str = "features/matrix.f64";
pub const SPLIT: &str = "split.json";
pub const UNMASKING_CSV: &str = "unmasking.csv";
pub const UNMASKING_JSON: &str = "unmasking.json";
pub const META: &str = "run_meta.json";

/// Output directory of one run. Paths handed to it are relative.
#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn exists(&self, rel: &str) -> bool {
        self.path(rel).is_file()
    }

    /// The path of an artifact produced by `step`, or exit-3 if absent.
    pub fn require(&self, rel: &str, step: &'static str) -> Result<PathBuf, CliError> {
        let p = self.path(rel);
        if p.is_file() {
            Ok(p)
        } else {
            Err(CliError::Missing {
                artifact: rel.to_string(),
                step,
            })
        }
    }

    pub fn write(&self, rel: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let p = self.path(rel);
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&p, contents)?;
        Ok(p)
    }

    pub fn write_json<S: Serialize>(&self, rel: &str, value: &S) -> Result<PathBuf, CliError> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        self.write(rel, text)
    }

    pub fn read_json<D: DeserializeOwned>(&self, rel: &str, step: &'static str) -> Result<D, CliError> {
        let p = self.require(rel, step)?;
        let text = std::fs::read_to_string(&p)?;
        serde_json::from_str(&text).map_err(|e| CliError::Stale {
            artifact: rel.to_string(),
            reason: format!("cannot parse: {e}"),
            step,
        })
    }

    pub fn read_to_string(&self, rel: &str, step: &'static str) -> Result<String, CliError> {
        Ok(std::fs::read_to_string(self.require(rel, step)?)?)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    /// Seed the persisted split was drawn with.
    pub split: Option<u64>,
    pub classifier: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub config_hash: String,
    pub summary: String,
}

/// `run_meta.json`. Holds no timestamps so reruns are byte-identical.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub config_hash: String,
    pub seeds: Seeds,
    pub grammar_hash: Option<String>,
    pub split_hash: Option<String>,
    pub versions: BTreeMap<String, String>,
    pub steps: BTreeMap<String, StepRecord>,
}

impl RunMeta {
    pub fn load_or_default(run: &RunDir) -> RunMeta {
        std::fs::read_to_string(run.path(META))
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
            .unwrap_or_default()
    }

    pub fn record(&mut self, step: &str, config_hash: &str, summary: &str) {
        self.config_hash = config_hash.to_string();
        self.versions = versions();
        self.steps.insert(
            step.to_string(),
            StepRecord {
                config_hash: config_hash.to_string(),
                summary: summary.to_string(),
            },
        );
    }
}

fn versions() -> BTreeMap<String, String> {
    [("cxgvar-cli", env!("CARGO_PKG_VERSION")), ("run-format", "1")]
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// File-name-safe form of a label: lowercase ASCII alphanumerics joined by
/// single dashes.
pub fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') && !out.is_empty() {
            out.push('-');
        }
    }
    while out.ends_with('-') {
        out.pop();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs() {
        assert_eq!(slug("local-Africa, Southern"), "local-africa-southern");
        assert_eq!(slug("region"), "region");
        assert_eq!(slug("  A--B  "), "a-b");
    }

    #[test]
    fn missing_artifact_names_the_step() {
        let dir = tempfile::tempdir().unwrap();
        let run = RunDir::new(dir.path());
        let err = run.require(MATRIX, "features").unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("features/matrix.f64"));
        run.write(MATRIX, b"x").unwrap();
        assert!(run.require(MATRIX, "features").is_ok());
    }
}
