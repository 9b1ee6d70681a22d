//! Synthetic data with known structure, for tests and demonstrations.
//!
//! [`planted`] draws construction counts from class-conditional Poisson
//! rates, so the Bayes-optimal accuracy is known from the generator.
//! [`text`] writes a small but complete set of input files for the
//! command-line pipeline.

pub mod text;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::grammar::{Construction, Grammar, SlotConstraint, Stage};
use crate::matcher::{FeatureMatrix, MatrixMeta, Normalization};
use crate::Scalar;

/// Layout of a planted corpus. Construction ids run cluster by cluster;
/// each cluster holds the signal constructions of the dialects assigned to
/// it (dialect `d` goes to cluster `d mod clusters`) followed by noise
/// constructions shared by all dialects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub dialects: usize,
    pub clusters: usize,
    /// Micro-clusters are grouped into macro-clusters of this many.
    pub micros_per_macro: usize,
    pub signals_per_dialect: usize,
    pub noise_per_cluster: usize,
    pub samples_per_dialect: usize,
    /// Expected count of every construction in every sample.
    pub base_rate: f64,
    /// Expected count of a dialect's signal constructions in its own samples.
    pub signal_rate: f64,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            dialects: 4,
            clusters: 4,
            micros_per_macro: 2,
            signals_per_dialect: 6,
            noise_per_cluster: 10,
            samples_per_dialect: 60,
            base_rate: 2.0,
            signal_rate: 6.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus<T> {
    pub spec: PlantedSpec,
    /// Raw counts; all three label columns hold the dialect name.
    pub matrix: FeatureMatrix<T>,
    pub grammar: Grammar,
    /// `dialects × constructions` Poisson means.
    pub rates: Vec<Vec<f64>>,
}

pub fn dialect_name(d: usize) -> String {
    format!("D{d}")
}

pub fn planted<T: Scalar>(spec: &PlantedSpec) -> PlantedCorpus<T> {
    assert!(spec.dialects >= 2 && spec.clusters >= 1 && spec.micros_per_macro >= 1);
    let mut constructions = Vec::new();
    let mut rates: Vec<Vec<f64>> = vec![Vec::new(); spec.dialects];
    for cluster in 0..spec.clusters {
        let mut add = |signal_for: Option<usize>| {
            let id = constructions.len() as u32;
            constructions.push(Construction {
                id,
                stage: Stage::Late,
                micro: cluster as u32,
                macro_: (cluster / spec.micros_per_macro) as u32,
                slots: vec![SlotConstraint::Lex(format!("w{id}"))],
            });
            for (d, r) in rates.iter_mut().enumerate() {
                r.push(if signal_for == Some(d) {
                    spec.signal_rate
                } else {
                    spec.base_rate
                });
            }
        };
        for d in (0..spec.dialects).filter(|d| d % spec.clusters == cluster) {
            for _ in 0..spec.signals_per_dialect {
                add(Some(d));
            }
        }
        for _ in 0..spec.noise_per_cluster {
            add(None);
        }
    }
    let grammar = Grammar::new(constructions, &BTreeMap::new()).expect("generated grammar is valid");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let cols = grammar.len();
    let mut data = Vec::with_capacity(spec.dialects * spec.samples_per_dialect * cols);
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    for s in 0..spec.samples_per_dialect {
        for (d, r) in rates.iter().enumerate() {
            data.extend(draw(r, &mut rng).into_iter().map(T::of));
            labels.push(dialect_name(d));
            ids.push(format!("{}-s{}", dialect_name(d), s + 1));
        }
    }
    let matrix = FeatureMatrix {
        sample_ids: ids,
        construction_ids: grammar.ids(),
        data,
        region: labels.clone(),
        country: labels.clone(),
        area: labels,
        meta: MatrixMeta {
            grammar_hash: crate::hashing::sha256_hex(grammar.serialize()),
            normalization: Normalization::Raw,
            presence: false,
            thresholds: BTreeMap::new(),
        },
    };
    PlantedCorpus {
        spec: *spec,
        matrix,
        grammar,
        rates,
    }
}

fn draw(rates: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    rates
        .iter()
        .map(|&r| Poisson::new(r).expect("positive rate").sample(rng))
        .collect()
}

/// Monte Carlo estimate of the Bayes-optimal accuracy under equal priors:
/// fresh samples are classified by their exact Poisson log-likelihood.
pub fn bayes_accuracy(rates: &[Vec<f64>], draws_per_class: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let logs: Vec<Vec<f64>> = rates.iter().map(|r| r.iter().map(|x| x.ln()).collect()).collect();
    let sums: Vec<f64> = rates.iter().map(|r| r.iter().sum()).collect();
    let mut correct = 0usize;
    for (truth, r) in rates.iter().enumerate() {
        for _ in 0..draws_per_class {
            let x = draw(r, &mut rng);
            let best = (0..rates.len())
                .map(|c| x.iter().zip(&logs[c]).map(|(xi, l)| xi * l).sum::<f64>() - sums[c])
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |b, (c, ll)| if ll > b.1 { (c, ll) } else { b })
                .0;
            correct += usize::from(best == truth);
        }
    }
    correct as f64 / (draws_per_class * rates.len()) as f64
}
