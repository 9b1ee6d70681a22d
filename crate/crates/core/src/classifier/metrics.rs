use serde::{Deserialize, Serialize};

use super::{ClassifierError, Dataset, LinearModel};
use crate::Scalar;

/// Per-class and support-weighted precision, recall, and F-score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics<T> {
    pub classes: Vec<String>,
    pub precision: Vec<T>,
    pub recall: Vec<T>,
    pub f1: Vec<T>,
    pub support: Vec<u64>,
    pub weighted_precision: T,
    pub weighted_recall: T,
    pub weighted_f1: T,
    pub accuracy: T,
    /// Rows are true labels, columns predictions.
    pub confusion: Vec<Vec<u64>>,
}

fn ratio<T: Scalar>(num: u64, den: u64) -> T {
    if den == 0 {
        T::zero()
    } else {
        T::of(num as f64 / den as f64)
    }
}

impl<T: Scalar> Metrics<T> {
    pub fn from_confusion(classes: Vec<String>, confusion: Vec<Vec<u64>>) -> Result<Self, ClassifierError> {
        let k = classes.len();
        let total: u64 = confusion.iter().flatten().sum();
        if total == 0 {
            return Err(ClassifierError::EmptyTestSet);
        }
        let support: Vec<u64> = confusion.iter().map(|r| r.iter().sum()).collect();
        let predicted: Vec<u64> = (0..k).map(|j| confusion.iter().map(|r| r[j]).sum()).collect();
        let (mut precision, mut recall, mut f1) = (Vec::new(), Vec::new(), Vec::new());
        for c in 0..k {
            let tp = confusion[c][c];
            let p: T = ratio(tp, predicted[c]);
            let r: T = ratio(tp, support[c]);
            let f = if p + r > T::zero() {
                T::of(2.0) * p * r / (p + r)
            } else {
                T::zero()
            };
            precision.push(p);
            recall.push(r);
            f1.push(f);
        }
        let weigh =
            |v: &[T]| v.iter().zip(&support).map(|(x, &s)| *x * T::of(s as f64)).sum::<T>() / T::of(total as f64);
        let correct: u64 = (0..k).map(|c| confusion[c][c]).sum();
        Ok(Metrics {
            weighted_precision: weigh(&precision),
            weighted_recall: weigh(&recall),
            weighted_f1: weigh(&f1),
            accuracy: ratio(correct, total),
            classes,
            precision,
            recall,
            f1,
            support,
            confusion,
        })
    }

    /// Per-class rows plus a weighted-average row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,precision,recall,f1,support\n");
        for c in 0..self.classes.len() {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{}\n",
                csv_field(&self.classes[c]),
                self.precision[c],
                self.recall[c],
                self.f1[c],
                self.support[c]
            ));
        }
        out.push_str(&format!(
            "weighted_avg,{:.6},{:.6},{:.6},{}\n",
            self.weighted_precision,
            self.weighted_recall,
            self.weighted_f1,
            self.support.iter().sum::<u64>()
        ));
        out
    }
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Metrics of `model` on the rows listed in `test_rows`.
pub fn evaluate<T: Scalar>(
    model: &LinearModel<T>,
    data: &Dataset<'_, T>,
    test_rows: &[usize],
) -> Result<Metrics<T>, ClassifierError> {
    if test_rows.is_empty() {
        return Err(ClassifierError::EmptyTestSet);
    }
    if data.cols != model.features() {
        return Err(ClassifierError::FeatureCount {
            expected: model.features(),
            found: data.cols,
        });
    }
    let k = model.classes.len();
    let mut confusion = vec![vec![0u64; k]; k];
    for &i in test_rows {
        let truth = model
            .class_index(&data.labels[i])
            .ok_or_else(|| ClassifierError::UnknownLabel(data.labels[i].clone()))?;
        confusion[truth][model.predict(data.row(i))] += 1;
    }
    Metrics::from_confusion(model.classes.clone(), confusion)
}
