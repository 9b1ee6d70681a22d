//! The analyses: granularity runs, per-node scans, unmasking, and
//! error-based dialect similarity.
//!
//! Every analysis takes the same persisted [`SplitSpec`], so results are
//! comparable across runs.

mod nodes;
mod similarity;
mod unmask;

pub use nodes::{node_scan, NodeKind, NodeResult, NodeScan};
pub use similarity::{
    error_similarity, pearson, quantiles, similarity_correlation, spearman, Correlation, CorrelationSummary,
    NodeCorrelation, SimilarityVector,
};
pub use unmask::{removal_targets, unmask, unmask_with, RemovalSchedule, UnmaskConfig, UnmaskRound, UnmaskingCurve};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{evaluate, train, ClassifierError, Dataset, LinearModel, Metrics, SplitSpec, SvmConfig};
use crate::matcher::FeatureMatrix;
use crate::Scalar;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error("{granularity} labels are missing for sample {sample}")]
    MissingLabels { granularity: Granularity, sample: String },
    #[error("{context}: only one class ({class:?}); nothing to discriminate")]
    SingleClass { context: String, class: String },
    #[error("split covers {split} samples, matrix has {matrix}")]
    SplitMismatch { split: usize, matrix: usize },
    #[error("construction {0} of the grammar has no column in the feature matrix")]
    MissingColumn(u32),
    #[error(transparent)]
    Grammar(#[from] crate::grammar::GrammarError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    #[default]
    Region,
    Country,
    /// Areas, one model per region.
    Local,
}

impl Granularity {
    pub fn labels<T>(self, m: &FeatureMatrix<T>) -> &[String] {
        match self {
            Granularity::Region => &m.region,
            Granularity::Country => &m.country,
            Granularity::Local => &m.area,
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Region => "region",
            Granularity::Country => "country",
            Granularity::Local => "local",
        })
    }
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "region" => Ok(Granularity::Region),
            "country" => Ok(Granularity::Country),
            "local" => Ok(Granularity::Local),
            other => Err(format!("unknown granularity {other:?} (region, country, local)")),
        }
    }
}

/// One trained and evaluated model.
#[derive(Debug, Clone)]
pub struct GranularityRun<T> {
    /// `region`, `country`, or `local-<region>`.
    pub name: String,
    pub model: LinearModel<T>,
    pub metrics: Metrics<T>,
}

fn check_split<T>(m: &FeatureMatrix<T>, split: &SplitSpec) -> Result<(), ExperimentError> {
    let covered = split.train.len() + split.test.len();
    let max = split.train.iter().chain(&split.test).max().map_or(0, |&i| i + 1);
    if covered != m.sample_ids.len() || max > m.sample_ids.len() {
        return Err(ExperimentError::SplitMismatch {
            split: covered,
            matrix: m.sample_ids.len(),
        });
    }
    Ok(())
}

fn check_labels<T>(m: &FeatureMatrix<T>, g: Granularity) -> Result<(), ExperimentError> {
    let labels = g.labels(m);
    match labels.iter().position(|l| l.is_empty()) {
        Some(i) => Err(ExperimentError::MissingLabels {
            granularity: g,
            sample: m.sample_ids[i].clone(),
        }),
        None if labels.len() != m.sample_ids.len() => Err(ExperimentError::MissingLabels {
            granularity: g,
            sample: m.sample_ids.get(labels.len()).cloned().unwrap_or_default(),
        }),
        None => Ok(()),
    }
}

/// Train on `train` rows and evaluate on `test` rows of `labels`.
pub(crate) fn fit_and_score<T: Scalar>(
    m: &FeatureMatrix<T>,
    labels: &[String],
    train_rows: &[usize],
    test_rows: &[usize],
    svm: &SvmConfig,
    context: &str,
) -> Result<(LinearModel<T>, Metrics<T>), ExperimentError> {
    let first = &labels[train_rows.first().copied().ok_or(ClassifierError::EmptyTrainingSet)?];
    if train_rows.iter().chain(test_rows).all(|&i| &labels[i] == first) {
        return Err(ExperimentError::SingleClass {
            context: context.to_string(),
            class: first.clone(),
        });
    }
    let ds = Dataset::new(&m.data, m.cols(), labels)?;
    let mut model = train(&ds, train_rows, &m.construction_ids, svm)?;
    model.grammar_hash = Some(m.meta.grammar_hash.clone());
    let metrics = evaluate(&model, &ds, test_rows)?;
    Ok((model, metrics))
}

/// Region and country runs give one model; local runs give one model per
/// region over that region's areas, in region order.
pub fn run_granularity<T: Scalar>(
    m: &FeatureMatrix<T>,
    split: &SplitSpec,
    granularity: Granularity,
    svm: &SvmConfig,
) -> Result<Vec<GranularityRun<T>>, ExperimentError> {
    check_split(m, split)?;
    check_labels(m, granularity)?;
    let labels = granularity.labels(m);
    if granularity != Granularity::Local {
        let (model, metrics) = fit_and_score(m, labels, &split.train, &split.test, svm, &granularity.to_string())?;
        return Ok(vec![GranularityRun {
            name: granularity.to_string(),
            model,
            metrics,
        }]);
    }
    check_labels(m, Granularity::Region)?;
    let mut regions: Vec<&String> = m.region.iter().collect();
    regions.sort_unstable();
    regions.dedup();
    regions
        .into_iter()
        .map(|region| {
            let keep = |rows: &[usize]| {
                rows.iter()
                    .copied()
                    .filter(|&i| &m.region[i] == region)
                    .collect::<Vec<_>>()
            };
            let name = format!("local-{region}");
            let (model, metrics) = fit_and_score(m, labels, &keep(&split.train), &keep(&split.test), svm, &name)?;
            Ok(GranularityRun { name, model, metrics })
        })
        .collect()
}

/// Metrics of always predicting the most frequent training class (ties to
/// the lowest label).
pub fn majority_baseline<T: Scalar>(
    labels: &[String],
    train_rows: &[usize],
    test_rows: &[usize],
) -> Result<Metrics<T>, ExperimentError> {
    let mut classes: Vec<String> = train_rows.iter().chain(test_rows).map(|&i| labels[i].clone()).collect();
    classes.sort_unstable();
    classes.dedup();
    let mut counts = vec![0usize; classes.len()];
    for &i in train_rows {
        counts[classes.binary_search(&labels[i]).expect("collected above")] += 1;
    }
    let majority = (0..classes.len()).fold(0, |best, k| if counts[k] > counts[best] { k } else { best });
    let mut confusion = vec![vec![0u64; classes.len()]; classes.len()];
    for &i in test_rows {
        confusion[classes.binary_search(&labels[i]).expect("collected above")][majority] += 1;
    }
    Ok(Metrics::from_confusion(classes, confusion)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::make_split;
    use crate::matcher::{MatrixMeta, Normalization};
    use std::collections::BTreeMap;

    pub(crate) fn matrix(
        data: Vec<f64>,
        cols: usize,
        region: &[&str],
        country: &[&str],
        area: &[&str],
    ) -> FeatureMatrix<f64> {
        let n = region.len();
        let own = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        FeatureMatrix {
            sample_ids: (0..n).map(|i| format!("s{i}")).collect(),
            construction_ids: (0..cols as u32).collect(),
            data,
            region: own(region),
            country: own(country),
            area: own(area),
            meta: MatrixMeta {
                grammar_hash: "test".into(),
                normalization: Normalization::Raw,
                presence: false,
                thresholds: BTreeMap::new(),
            },
        }
    }

    fn separable() -> FeatureMatrix<f64> {
        // Two regions, each with two areas; feature j is high for area j.
        let mut data = Vec::new();
        let (mut region, mut country, mut area) = (Vec::new(), Vec::new(), Vec::new());
        let areas = [
            ("R1", "AA", "AA-1"),
            ("R1", "AA", "AA-2"),
            ("R2", "BB", "BB-1"),
            ("R2", "BB", "BB-2"),
        ];
        for rep in 0..10 {
            for (k, (r, c, a)) in areas.iter().enumerate() {
                for j in 0..4 {
                    data.push(if j == k { 5.0 + rep as f64 * 0.1 } else { 0.5 });
                }
                region.push(*r);
                country.push(*c);
                area.push(*a);
            }
        }
        matrix(data, 4, &region, &country, &area)
    }

    #[test]
    fn granularities() {
        let m = separable();
        let split = make_split(&m.area, 3).unwrap();
        let svm = SvmConfig::default();
        let region = run_granularity(&m, &split, Granularity::Region, &svm).unwrap();
        assert_eq!(region.len(), 1);
        assert_eq!(region[0].metrics.weighted_f1, 1.0);
        let local = run_granularity(&m, &split, Granularity::Local, &svm).unwrap();
        assert_eq!(
            local.iter().map(|r| r.name.as_str()).collect::<Vec<_>>(),
            ["local-R1", "local-R2"]
        );
        assert_eq!(local[0].model.classes, ["AA-1", "AA-2"]);
        assert!(local.iter().all(|r| r.metrics.weighted_f1 == 1.0));
    }

    #[test]
    fn single_class_rejected() {
        let m = separable();
        let split = make_split(&m.area, 3).unwrap();
        // Country and region coincide here but each local region has two areas;
        // collapse everything into one region to force the error.
        let mut one = m.clone();
        one.region = vec!["R".into(); one.region.len()];
        assert!(matches!(
            run_granularity(&one, &split, Granularity::Region, &SvmConfig::default()),
            Err(ExperimentError::SingleClass { .. })
        ));
        let mut missing = m.clone();
        missing.country[3].clear();
        assert!(matches!(
            run_granularity(&missing, &split, Granularity::Country, &SvmConfig::default()),
            Err(ExperimentError::MissingLabels { .. })
        ));
    }

    #[test]
    fn majority_baseline_share() {
        let labels: Vec<String> = ["a", "a", "a", "b", "a", "b"].iter().map(|s| s.to_string()).collect();
        let m = majority_baseline::<f64>(&labels, &[0, 1, 2, 3], &[4, 5]).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.confusion, [[1, 0], [1, 0]]);
    }
}
