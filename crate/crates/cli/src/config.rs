use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cxgvar_core::experiments::{Correlation, Granularity, RemovalSchedule, UnmaskConfig};
use cxgvar_core::grammar::Stage;
use cxgvar_core::hashing::json_hash;
use cxgvar_core::matcher::{FeatureConfig, Normalization};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// File-based run configuration. Relative paths resolve against the
/// directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub corpus_ingest: CorpusSection,
    pub geo_areas: GeoSection,
    /// Country code to region name, merged over the built-in table.
    #[serde(default)]
    pub regions: BTreeMap<String, String>,
    pub embeddings: EmbeddingSection,
    pub grammar_model: GrammarSection,
    #[serde(default)]
    pub matcher: MatcherSection,
    #[serde(default)]
    pub classifier: ClassifierSection,
    #[serde(default)]
    pub experiments: ExperimentSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub corpus: PathBuf,
    pub keywords: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoSection {
    pub airports: PathBuf,
    #[serde(default)]
    pub overrides: Option<PathBuf>,
    #[serde(default = "default_radius")]
    pub radius_km: f64,
    #[serde(default = "default_min_cluster_size")]
    pub min_cluster_size: usize,
    #[serde(default)]
    pub min_samples: Option<usize>,
}

fn default_radius() -> f64 {
    cxgvar_core::geo::DEFAULT_RADIUS_KM
}

fn default_min_cluster_size() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSection {
    pub syn: PathBuf,
    pub sem: PathBuf,
    pub categories: PathBuf,
    /// Used for categories whose inventory line has no threshold.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    cxgvar_core::embeddings::DEFAULT_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrammarSection {
    pub grammar: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatcherSection {
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default)]
    pub presence: bool,
}

impl MatcherSection {
    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            normalization: self.normalization,
            presence: self.presence,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSection {
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
}

fn default_c() -> f64 {
    1.0
}

fn default_epochs() -> usize {
    20
}

impl Default for ClassifierSection {
    fn default() -> Self {
        ClassifierSection {
            c: default_c(),
            epochs: default_epochs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default)]
    pub granularity: Granularity,
    /// Restrict to one grammar stage; both stages when absent.
    #[serde(default)]
    pub stage: Option<Stage>,
    #[serde(default)]
    pub correlation: Correlation,
    #[serde(default)]
    pub unmasking: UnmaskSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleName {
    #[default]
    Calibrated,
    PerClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnmaskSection {
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_fraction")]
    pub target_fraction: f64,
    #[serde(default)]
    pub schedule: ScheduleName,
    /// Fixed per-class removal count for the `per_class` schedule; derived
    /// from `target_fraction` when absent.
    #[serde(default)]
    pub remove_per_class: Option<usize>,
}

fn default_rounds() -> usize {
    500
}

fn default_fraction() -> f64 {
    0.25
}

impl Default for UnmaskSection {
    fn default() -> Self {
        UnmaskSection {
            rounds: default_rounds(),
            target_fraction: default_fraction(),
            schedule: ScheduleName::Calibrated,
            remove_per_class: None,
        }
    }
}

impl UnmaskSection {
    pub fn unmask_config(&self) -> UnmaskConfig {
        UnmaskConfig {
            rounds: self.rounds,
            target_fraction: self.target_fraction,
            schedule: match self.schedule {
                ScheduleName::Calibrated => RemovalSchedule::Calibrated,
                ScheduleName::PerClass => RemovalSchedule::PerClass {
                    count: self.remove_per_class,
                },
            },
        }
    }
}

/// Command-line values that replace config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub stage: Option<Stage>,
    pub granularity: Option<Granularity>,
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.base_dir = base_dir.to_path_buf();
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        RunConfig::parse(&text, &base).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(stage) = o.stage {
            self.experiments.stage = Some(stage);
        }
        if let Some(g) = o.granularity {
            self.experiments.granularity = g;
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn inputs(&self) -> Vec<(&'static str, &PathBuf)> {
        let mut v = vec![
            ("corpus_ingest.corpus", &self.corpus_ingest.corpus),
            ("corpus_ingest.keywords", &self.corpus_ingest.keywords),
            ("geo_areas.airports", &self.geo_areas.airports),
            ("embeddings.syn", &self.embeddings.syn),
            ("embeddings.sem", &self.embeddings.sem),
            ("embeddings.categories", &self.embeddings.categories),
            ("grammar_model.grammar", &self.grammar_model.grammar),
        ];
        if let Some(o) = &self.geo_areas.overrides {
            v.push(("geo_areas.overrides", o));
        }
        v
    }

    /// Check referenced files and value ranges.
    pub fn validate(&self) -> Result<(), CliError> {
        for (field, p) in self.inputs() {
            let full = self.resolve(p);
            if !full.is_file() {
                return Err(CliError::Config(format!("{field}: {} does not exist", full.display())));
            }
        }
        let bad = |m: String| Err(CliError::Config(m));
        if self.geo_areas.radius_km.is_nan() || self.geo_areas.radius_km <= 0.0 {
            return bad(format!(
                "geo_areas.radius_km must be positive, got {}",
                self.geo_areas.radius_km
            ));
        }
        if self.geo_areas.min_cluster_size < 2 {
            return bad(format!(
                "geo_areas.min_cluster_size must be at least 2, got {}",
                self.geo_areas.min_cluster_size
            ));
        }
        if !(-1.0..=1.0).contains(&self.embeddings.threshold) {
            return bad(format!(
                "embeddings.threshold must lie in [-1, 1], got {}",
                self.embeddings.threshold
            ));
        }
        if !(self.classifier.c > 0.0 && self.classifier.c.is_finite()) {
            return bad(format!("classifier.c must be positive, got {}", self.classifier.c));
        }
        if self.classifier.epochs == 0 {
            return bad("classifier.epochs must be at least 1".into());
        }
        let u = &self.experiments.unmasking;
        if !(0.0..=1.0).contains(&u.target_fraction) {
            return bad(format!(
                "experiments.unmasking.target_fraction must lie in [0, 1], got {}",
                u.target_fraction
            ));
        }
        if u.remove_per_class.is_some() && u.schedule != ScheduleName::PerClass {
            return bad("experiments.unmasking.remove_per_class needs schedule = \"per_class\"".into());
        }
        for (country, region) in &self.regions {
            if country.is_empty() || region.is_empty() {
                return bad("regions: empty country or region name".into());
            }
        }
        Ok(())
    }

    /// Hash of the effective configuration, independent of where it lives.
    pub fn hash(&self) -> String {
        json_hash(self)
    }
}
