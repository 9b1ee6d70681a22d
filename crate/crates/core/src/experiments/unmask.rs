use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{check_labels, check_split, fit_and_score, ExperimentError, Granularity};
use crate::classifier::{top_features, LinearModel, SplitSpec, SvmConfig};
use crate::matcher::FeatureMatrix;
use crate::Scalar;

/// How many features each class gives up per round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RemovalSchedule {
    /// The cumulative removal after round `t` of `R` tracks
    /// `round(fraction · F · t / R)`; each round's batch is dealt out across
    /// classes in turn, starting one class later every round.
    Calibrated,
    /// A fixed count per class per round. Without a count,
    /// `ceil(fraction · F / (R · K))` is used.
    PerClass { count: Option<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UnmaskConfig {
    pub rounds: usize,
    /// Share of the features removed by the last round.
    pub target_fraction: f64,
    pub schedule: RemovalSchedule,
}

impl Default for UnmaskConfig {
    fn default() -> Self {
        UnmaskConfig {
            rounds: 500,
            target_fraction: 0.25,
            schedule: RemovalSchedule::Calibrated,
        }
    }
}

/// Per-class removal quotas for round `round` (1-based) given how many
/// features are already gone.
pub fn removal_targets(
    config: &UnmaskConfig,
    features: usize,
    classes: usize,
    round: usize,
    removed: usize,
) -> Vec<usize> {
    if classes == 0 || config.rounds == 0 {
        return vec![0; classes];
    }
    match config.schedule {
        RemovalSchedule::PerClass { count: Some(k) } => vec![k; classes],
        RemovalSchedule::PerClass { count: None } => {
            let k = (config.target_fraction * features as f64 / (config.rounds * classes) as f64).ceil() as usize;
            vec![k; classes]
        }
        RemovalSchedule::Calibrated => {
            let target =
                (config.target_fraction * features as f64 * round as f64 / config.rounds as f64).round() as usize;
            let batch = target.saturating_sub(removed);
            let offset = (round - 1) % classes;
            (0..classes)
                .map(|c| batch / classes + usize::from((c + classes - offset) % classes < batch % classes))
                .collect()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnmaskRound<T> {
    pub round: usize,
    /// Features available to this round's model.
    pub features: usize,
    pub weighted_f1: T,
    pub per_class_f1: Vec<T>,
    /// Construction ids removed after this round's evaluation, per class in
    /// class order.
    pub removed: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnmaskingCurve<T> {
    pub classes: Vec<String>,
    pub initial_features: usize,
    pub split_hash: String,
    /// No further feature could be removed before the last round.
    pub exhausted: bool,
    pub rounds: Vec<UnmaskRound<T>>,
}

impl<T: Scalar> UnmaskingCurve<T> {
    pub fn total_removed(&self) -> usize {
        self.rounds
            .iter()
            .map(|r| r.removed.iter().map(Vec::len).sum::<usize>())
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("round,features,remaining_share,weighted_f1");
        for c in &self.classes {
            out.push(',');
            out.push_str(&crate::classifier::csv_field(&format!("f1_{c}")));
        }
        out.push_str(",removed\n");
        for r in &self.rounds {
            out.push_str(&format!(
                "{},{},{:.6},{:.6}",
                r.round,
                r.features,
                r.features as f64 / self.initial_features.max(1) as f64,
                r.weighted_f1
            ));
            for f in &r.per_class_f1 {
                out.push_str(&format!(",{f:.6}"));
            }
            let ids: Vec<String> = r.removed.iter().flatten().map(|id| id.to_string()).collect();
            out.push_str(&format!(",{}\n", ids.join(" ")));
        }
        out
    }
}

pub fn unmask<T: Scalar>(
    m: &FeatureMatrix<T>,
    split: &SplitSpec,
    granularity: Granularity,
    config: &UnmaskConfig,
    svm: &SvmConfig,
) -> Result<UnmaskingCurve<T>, ExperimentError> {
    unmask_with(m, split, granularity, config, svm, |_, _, _| {})
}

/// As [`unmask`], calling `observe(round, model, quotas)` after each
/// round's model is trained.
pub fn unmask_with<T: Scalar>(
    m: &FeatureMatrix<T>,
    split: &SplitSpec,
    granularity: Granularity,
    config: &UnmaskConfig,
    svm: &SvmConfig,
    mut observe: impl FnMut(usize, &LinearModel<T>, &[usize]),
) -> Result<UnmaskingCurve<T>, ExperimentError> {
    check_split(m, split)?;
    check_labels(m, granularity)?;
    let labels = granularity.labels(m);
    let total = m.cols();
    let mut removed: BTreeSet<u32> = BTreeSet::new();
    let mut curve = UnmaskingCurve {
        classes: Vec::new(),
        initial_features: total,
        split_hash: split.hash(),
        exhausted: false,
        rounds: Vec::new(),
    };
    for round in 0..=config.rounds {
        let cols: Vec<usize> = (0..total)
            .filter(|&j| !removed.contains(&m.construction_ids[j]))
            .collect();
        let sub = m.select_columns(&cols);
        let (model, metrics) = fit_and_score(&sub, labels, &split.train, &split.test, svm, "unmasking")?;
        curve.classes.clone_from(&model.classes);
        let quotas = if round < config.rounds {
            removal_targets(config, total, model.classes.len(), round + 1, removed.len())
        } else {
            vec![0; model.classes.len()]
        };
        observe(round, &model, &quotas);
        let mut taken = Vec::with_capacity(quotas.len());
        for (class, &q) in quotas.iter().enumerate() {
            let ids: Vec<u32> = top_features(&model, class, usize::MAX)
                .into_iter()
                .filter(|id| !removed.contains(id))
                .take(q)
                .collect();
            removed.extend(&ids);
            taken.push(ids);
        }
        let progressed = taken.iter().any(|t| !t.is_empty());
        curve.rounds.push(UnmaskRound {
            round,
            features: cols.len(),
            weighted_f1: metrics.weighted_f1,
            per_class_f1: metrics.f1,
            removed: taken,
        });
        if round < config.rounds && removed.len() == total {
            curve.exhausted = true;
            break;
        }
        if round < config.rounds && !progressed && quotas.iter().any(|&q| q > 0) {
            curve.exhausted = true;
            break;
        }
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::make_split;
    use crate::experiments::tests::matrix;

    #[test]
    fn calibrated_targets_sum_to_fraction() {
        let config = UnmaskConfig::default();
        for (f, k) in [(14_170, 7), (1_045, 7), (1_000, 4), (37, 3)] {
            let mut removed = 0;
            for t in 1..=config.rounds {
                let q = removal_targets(&config, f, k, t, removed);
                removed += q.iter().sum::<usize>();
                assert!(q.iter().max().unwrap() - q.iter().min().unwrap() <= 1);
            }
            assert_eq!(removed, (0.25 * f as f64).round() as usize, "F={f}");
        }
    }

    #[test]
    fn formula_schedule() {
        let config = UnmaskConfig {
            schedule: RemovalSchedule::PerClass { count: None },
            ..Default::default()
        };
        assert_eq!(removal_targets(&config, 14_170, 7, 1, 0), vec![2; 7]);
        assert_eq!(removal_targets(&config, 1_000, 4, 9, 0), vec![1; 4]);
    }

    fn two_class(features: usize) -> FeatureMatrix<f64> {
        // Even features favour "a", odd ones "b".
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for rep in 0..10 {
            for (k, l) in ["a", "b"].iter().enumerate() {
                for j in 0..features {
                    let strength = 1.0 + j as f64 * 0.1;
                    data.push(if j % 2 == k { strength + rep as f64 * 0.01 } else { 0.0 });
                }
                labels.push(*l);
            }
        }
        matrix(data, features, &labels, &labels, &labels)
    }

    #[test]
    fn zero_rounds_is_one_evaluation() {
        let m = two_class(4);
        let split = make_split(&m.region, 2).unwrap();
        let svm = SvmConfig::default();
        let config = UnmaskConfig {
            rounds: 0,
            ..Default::default()
        };
        let curve = unmask(&m, &split, Granularity::Region, &config, &svm).unwrap();
        assert_eq!(curve.rounds.len(), 1);
        let single = crate::experiments::run_granularity(&m, &split, Granularity::Region, &svm).unwrap();
        assert_eq!(curve.rounds[0].weighted_f1, single[0].metrics.weighted_f1);
        assert_eq!(curve.total_removed(), 0);
    }

    #[test]
    fn exhausts_ten_features_in_five_rounds() {
        let m = two_class(10);
        let split = make_split(&m.region, 2).unwrap();
        let config = UnmaskConfig {
            rounds: 50,
            schedule: RemovalSchedule::PerClass { count: Some(1) },
            ..Default::default()
        };
        let curve = unmask(&m, &split, Granularity::Region, &config, &SvmConfig::default()).unwrap();
        assert!(curve.exhausted);
        assert!(curve.rounds.len() <= 5, "{}", curve.rounds.len());
        assert_eq!(curve.total_removed(), 10);
        let mut all: Vec<u32> = curve
            .rounds
            .iter()
            .flat_map(|r| r.removed.iter().flatten().copied())
            .collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 10);
    }

    #[test]
    fn csv_has_one_line_per_round() {
        let m = two_class(6);
        let split = make_split(&m.region, 2).unwrap();
        let config = UnmaskConfig {
            rounds: 2,
            ..Default::default()
        };
        let curve = unmask(&m, &split, Granularity::Region, &config, &SvmConfig::default()).unwrap();
        let csv = curve.to_csv();
        assert!(csv.starts_with("round,features,remaining_share,weighted_f1,f1_a,f1_b,removed\n"));
        assert_eq!(csv.lines().count(), 1 + curve.rounds.len());
    }
}
