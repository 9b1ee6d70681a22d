use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Matcher, MatcherError, Memo};
use crate::corpus::Sample;
use crate::grammar::{CategoryId, ConstructionId};
use crate::hashing::sha256_hex;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Raw,
    /// Counts divided by the sample's token count.
    #[default]
    PerToken,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub normalization: Normalization,
    /// Count each construction at most once per document.
    pub presence: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<T> {
    pub sample_id: String,
    /// Raw match counts in construction order.
    pub counts: Vec<u64>,
    /// Counts after normalization.
    pub values: Vec<T>,
}

fn normalize<T: Scalar>(counts: &[u64], token_count: usize, how: Normalization) -> Vec<T> {
    match how {
        Normalization::Raw => counts.iter().map(|&c| T::of(c as f64)).collect(),
        Normalization::PerToken if token_count == 0 => vec![T::zero(); counts.len()],
        Normalization::PerToken => counts.iter().map(|&c| T::of(c as f64 / token_count as f64)).collect(),
    }
}

impl<T: Scalar> Matcher<'_, T> {
    /// Frequency vector for one sample given its documents' tokens.
    pub fn extract_features<D, S>(
        &self,
        sample_id: &str,
        documents: &[D],
        token_count: usize,
        config: &FeatureConfig,
        memo: &mut Memo,
    ) -> FeatureVector<T>
    where
        D: AsRef<[S]>,
        S: AsRef<str>,
    {
        let mut counts = vec![0u64; self.grammar().len()];
        for doc in documents {
            self.count_into(doc.as_ref(), memo, config.presence, &mut counts);
        }
        FeatureVector {
            sample_id: sample_id.to_string(),
            values: normalize(&counts, token_count, config.normalization),
            counts,
        }
    }
}

/// Settings recorded next to a persisted matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixMeta {
    pub grammar_hash: String,
    pub normalization: Normalization,
    pub presence: bool,
    pub thresholds: BTreeMap<CategoryId, f64>,
}

/// Samples × constructions, with labels at every granularity.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    pub sample_ids: Vec<String>,
    pub construction_ids: Vec<ConstructionId>,
    /// Row-major.
    pub data: Vec<T>,
    pub region: Vec<String>,
    pub country: Vec<String>,
    pub area: Vec<String>,
    pub meta: MatrixMeta,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    rows: usize,
    cols: usize,
    data_sha256: String,
    meta: MatrixMeta,
    sample_ids: Vec<String>,
    construction_ids: Vec<ConstructionId>,
    region: Vec<String>,
    country: Vec<String>,
    area: Vec<String>,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn rows(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn cols(&self) -> usize {
        self.construction_ids.len()
    }

    pub fn row(&self, i: usize) -> &[T] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols() + j]
    }

    /// Keep only the given columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> FeatureMatrix<T> {
        let data = (0..self.rows())
            .flat_map(|i| {
                let row = self.row(i);
                columns.iter().map(move |&j| row[j])
            })
            .collect();
        FeatureMatrix {
            construction_ids: columns.iter().map(|&j| self.construction_ids[j]).collect(),
            data,
            ..self.clone_labels()
        }
    }

    /// Keep only the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix<T> {
        let pick = |v: &Vec<String>| rows.iter().map(|&i| v[i].clone()).collect();
        FeatureMatrix {
            sample_ids: pick(&self.sample_ids),
            construction_ids: self.construction_ids.clone(),
            data: rows.iter().flat_map(|&i| self.row(i).iter().copied()).collect(),
            region: pick(&self.region),
            country: pick(&self.country),
            area: pick(&self.area),
            meta: self.meta.clone(),
        }
    }

    fn clone_labels(&self) -> FeatureMatrix<T> {
        FeatureMatrix {
            sample_ids: self.sample_ids.clone(),
            construction_ids: Vec::new(),
            data: Vec::new(),
            region: self.region.clone(),
            country: self.country.clone(),
            area: self.area.clone(),
            meta: self.meta.clone(),
        }
    }

    /// Write `path` (little-endian f64, row-major) and a JSON sidecar next to
    /// it with the `.json` extension.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MatcherError> {
        let path = path.as_ref();
        let bytes: Vec<u8> = self
            .data
            .iter()
            .flat_map(|x| x.to_f64_lossless().to_le_bytes())
            .collect();
        let sidecar = Sidecar {
            rows: self.rows(),
            cols: self.cols(),
            data_sha256: sha256_hex(&bytes),
            meta: self.meta.clone(),
            sample_ids: self.sample_ids.clone(),
            construction_ids: self.construction_ids.clone(),
            region: self.region.clone(),
            country: self.country.clone(),
            area: self.area.clone(),
        };
        let io = |p: &Path| {
            let p = p.display().to_string();
            move |source| MatcherError::Io { path: p, source }
        };
        std::fs::write(path, &bytes).map_err(io(path))?;
        let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        let meta_path = path.with_extension("json");
        std::fs::write(&meta_path, json + "\n").map_err(io(&meta_path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MatcherError> {
        let path = path.as_ref();
        let io = |p: &Path| {
            let p = p.display().to_string();
            move |source| MatcherError::Io { path: p, source }
        };
        let bytes = std::fs::read(path).map_err(io(path))?;
        let meta_path = path.with_extension("json");
        let json = std::fs::read_to_string(&meta_path).map_err(io(&meta_path))?;
        let s: Sidecar = serde_json::from_str(&json).map_err(|e| MatcherError::Metadata(e.to_string()))?;
        if bytes.len() != s.rows * s.cols * 8 {
            return Err(MatcherError::Metadata(format!(
                "expected {}×{} values, file holds {} bytes",
                s.rows,
                s.cols,
                bytes.len()
            )));
        }
        if sha256_hex(&bytes) != s.data_sha256 {
            return Err(MatcherError::Metadata("data checksum mismatch".into()));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|b| T::of(f64::from_le_bytes(b.try_into().expect("8-byte chunk"))))
            .collect();
        Ok(FeatureMatrix {
            sample_ids: s.sample_ids,
            construction_ids: s.construction_ids,
            data,
            region: s.region,
            country: s.country,
            area: s.area,
            meta: s.meta,
        })
    }
}

/// Feature matrix for `samples` in the given order. `corpus` maps document
/// ids to their tokens. Samples are processed in parallel with one memo per
/// worker; results do not depend on scheduling.
pub fn build_matrix<T: Scalar>(
    samples: &[Sample],
    corpus: &HashMap<String, Vec<String>>,
    matcher: &Matcher<'_, T>,
    config: &FeatureConfig,
) -> Result<FeatureMatrix<T>, MatcherError> {
    let grammar = matcher.grammar();
    if grammar.is_empty() {
        return Err(MatcherError::EmptyGrammar);
    }
    for s in samples {
        for (granularity, label) in [
            ("region", &s.region_label),
            ("country", &s.country_label),
            ("area", &s.area_label),
        ] {
            if label.is_empty() {
                return Err(MatcherError::MissingLabel {
                    sample: s.id.clone(),
                    granularity,
                });
            }
        }
        if let Some(d) = s.documents.iter().find(|d| !corpus.contains_key(*d)) {
            return Err(MatcherError::MissingDocument {
                sample: s.id.clone(),
                document: d.clone(),
            });
        }
    }
    let rows: Vec<FeatureVector<T>> = samples
        .par_iter()
        .map_init(Memo::default, |memo, s| {
            let docs: Vec<&[String]> = s.documents.iter().map(|d| corpus[d].as_slice()).collect();
            matcher.extract_features(&s.id, &docs, s.token_count, config, memo)
        })
        .collect();
    let thresholds = matcher
        .embeddings
        .categories
        .iter()
        .map(|c| (c.id, c.threshold.to_f64_lossless()))
        .collect();
    Ok(FeatureMatrix {
        sample_ids: samples.iter().map(|s| s.id.clone()).collect(),
        construction_ids: grammar.ids(),
        data: rows.into_iter().flat_map(|r| r.values).collect(),
        region: samples.iter().map(|s| s.region_label.clone()).collect(),
        country: samples.iter().map(|s| s.country_label.clone()).collect(),
        area: samples.iter().map(|s| s.area_label.clone()).collect(),
        meta: MatrixMeta {
            grammar_hash: sha256_hex(grammar.serialize()),
            normalization: config.normalization,
            presence: config.presence,
            thresholds,
        },
    })
}
