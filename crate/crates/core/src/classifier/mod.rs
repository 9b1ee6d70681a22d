//! One-vs-rest linear SVM dialect models, stratified splits, and metrics.

mod metrics;
mod split;
mod svm;

pub use metrics::{csv_field, evaluate, Metrics};
pub use split::{make_split, SplitSpec, TEST_FRACTION};
pub use svm::{top_features, train, LinearModel, SvmConfig};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("class {0:?} has a single sample and cannot be split")]
    SingletonClass(String),
    #[error("no samples to split")]
    NoSamples,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("label {0:?} is not a class of the model")]
    UnknownLabel(String),
    #[error("expected {expected} features, found {found}")]
    FeatureCount { expected: usize, found: usize },
    #[error("{rows} rows but {labels} labels")]
    LabelCount { rows: usize, labels: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Borrowed row-major data with one label per row.
#[derive(Debug, Clone, Copy)]
pub struct Dataset<'a, T> {
    pub data: &'a [T],
    pub cols: usize,
    pub labels: &'a [String],
}

impl<'a, T: crate::Scalar> Dataset<'a, T> {
    pub fn new(data: &'a [T], cols: usize, labels: &'a [String]) -> Result<Self, ClassifierError> {
        let rows = data.len().checked_div(cols).unwrap_or(labels.len());
        if rows != labels.len() || (cols > 0 && !data.len().is_multiple_of(cols)) {
            return Err(ClassifierError::LabelCount {
                rows,
                labels: labels.len(),
            });
        }
        Ok(Dataset { data, cols, labels })
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, i: usize) -> &'a [T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}
