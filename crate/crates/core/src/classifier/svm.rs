use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ClassifierError, Dataset};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    /// Inverse regularization strength; `λ = 1 / (C·n)`.
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            epochs: 20,
            seed: 0,
        }
    }
}

/// One-vs-rest linear model. Weights apply to max-abs scaled features; the
/// scale factors are part of the model, so inputs are raw feature values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel<T> {
    pub classes: Vec<String>,
    /// Construction id of each feature column.
    pub feature_ids: Vec<u32>,
    /// `classes × features`, row-major.
    pub weights: Vec<T>,
    pub biases: Vec<T>,
    /// Per-feature multiplier fit on the training rows.
    pub scale: Vec<T>,
    pub config: SvmConfig,
    pub grammar_hash: Option<String>,
}

impl<T: Scalar> LinearModel<T> {
    pub fn features(&self) -> usize {
        self.scale.len()
    }

    pub fn class_weights(&self, class: usize) -> &[T] {
        let d = self.features();
        &self.weights[class * d..(class + 1) * d]
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }

    pub fn decision(&self, x: &[T]) -> Vec<T> {
        (0..self.classes.len())
            .map(|k| {
                let w = self.class_weights(k);
                let mut s = self.biases[k];
                for j in 0..x.len() {
                    s = s + w[j] * x[j] * self.scale[j];
                }
                s
            })
            .collect()
    }

    /// Highest decision value; equal scores go to the lowest class index.
    pub fn predict(&self, x: &[T]) -> usize {
        let scores = self.decision(x);
        let mut best = 0;
        for k in 1..scores.len() {
            if scores[k] > scores[best] {
                best = k;
            }
        }
        best
    }

    pub fn weight_norm(&self) -> T {
        self.weights.iter().map(|w| *w * *w).sum::<T>().sqrt()
    }
}

struct SparseRow<T> {
    idx: Vec<u32>,
    val: Vec<T>,
    /// Squared norm including the constant bias feature.
    norm2: T,
}

/// Pegasos subgradient descent for one binary problem. The bias is the
/// weight of a constant feature and is regularized with the rest.
fn pegasos<T: Scalar>(rows: &[SparseRow<T>], y: &[T], d: usize, config: &SvmConfig, stream: u64) -> (Vec<T>, T) {
    let n = rows.len();
    let lambda = 1.0 / (config.c * n as f64);
    let radius = T::of(1.0 / lambda.sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);
    // w = a · v, with v[d] the bias coordinate.
    let mut v = vec![T::zero(); d + 1];
    let mut a = T::one();
    let mut v_norm2 = T::zero();
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0u64;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let row = &rows[i];
            let mut vx = v[d];
            for (&j, &x) in row.idx.iter().zip(&row.val) {
                vx = vx + v[j as usize] * x;
            }
            let margin = y[i] * a * vx;
            if t == 1 {
                v.iter_mut().for_each(|x| *x = T::zero());
                a = T::one();
                v_norm2 = T::zero();
            } else {
                a = a * T::of(1.0 - 1.0 / t as f64);
            }
            if margin < T::one() {
                let eta = T::of(1.0 / (lambda * t as f64));
                let delta = eta * y[i] / a;
                let vx_now = if t == 1 { T::zero() } else { vx };
                for (&j, &x) in row.idx.iter().zip(&row.val) {
                    v[j as usize] = v[j as usize] + delta * x;
                }
                v[d] = v[d] + delta;
                v_norm2 = (v_norm2 + T::of(2.0) * delta * vx_now + delta * delta * row.norm2).max(T::zero());
            }
            let w_norm = a * v_norm2.sqrt();
            if w_norm > radius {
                a = a * radius / w_norm;
            }
            if a < T::of(1e-6) {
                v.iter_mut().for_each(|x| *x = *x * a);
                v_norm2 = v.iter().map(|x| *x * *x).sum();
                a = T::one();
            }
        }
    }
    let bias = a * v[d];
    v.truncate(d);
    v.iter_mut().for_each(|x| *x = *x * a);
    (v, bias)
}

/// Fit a one-vs-rest model on the rows listed in `train_rows`. Classes are
/// the sorted distinct training labels; per-class problems run in parallel,
/// each on its own seeded stream.
pub fn train<T: Scalar>(
    data: &Dataset<'_, T>,
    train_rows: &[usize],
    feature_ids: &[u32],
    config: &SvmConfig,
) -> Result<LinearModel<T>, ClassifierError> {
    if train_rows.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    if !(config.c > 0.0 && config.c.is_finite()) {
        return Err(ClassifierError::Config(format!("C must be positive, got {}", config.c)));
    }
    if feature_ids.len() != data.cols {
        return Err(ClassifierError::FeatureCount {
            expected: data.cols,
            found: feature_ids.len(),
        });
    }
    let d = data.cols;
    let mut max_abs = vec![T::zero(); d];
    for &i in train_rows {
        for (j, &x) in data.row(i).iter().enumerate() {
            if !x.is_finite() {
                return Err(ClassifierError::NonFinite { row: i, col: j });
            }
            max_abs[j] = max_abs[j].max(x.abs());
        }
    }
    let scale: Vec<T> = max_abs
        .iter()
        .map(|&m| if m > T::zero() { T::one() / m } else { T::one() })
        .collect();
    let rows: Vec<SparseRow<T>> = train_rows
        .iter()
        .map(|&i| {
            let (mut idx, mut val) = (Vec::new(), Vec::new());
            for (j, &x) in data.row(i).iter().enumerate() {
                if x != T::zero() {
                    idx.push(j as u32);
                    val.push(x * scale[j]);
                }
            }
            let norm2 = val.iter().map(|x| *x * *x).sum::<T>() + T::one();
            SparseRow { idx, val, norm2 }
        })
        .collect();
    let mut classes: Vec<String> = train_rows.iter().map(|&i| data.labels[i].clone()).collect();
    classes.sort_unstable();
    classes.dedup();

    let fitted: Vec<(Vec<T>, T)> = if classes.len() == 1 {
        vec![(vec![T::zero(); d], T::zero())]
    } else {
        (0..classes.len())
            .into_par_iter()
            .map(|k| {
                let y: Vec<T> = train_rows
                    .iter()
                    .map(|&i| {
                        if data.labels[i] == classes[k] {
                            T::one()
                        } else {
                            -T::one()
                        }
                    })
                    .collect();
                pegasos(&rows, &y, d, config, k as u64)
            })
            .collect()
    };
    let mut weights = Vec::with_capacity(classes.len() * d);
    let mut biases = Vec::with_capacity(classes.len());
    for (w, b) in fitted {
        weights.extend(w);
        biases.push(b);
    }
    Ok(LinearModel {
        classes,
        feature_ids: feature_ids.to_vec(),
        weights,
        biases,
        scale,
        config: *config,
        grammar_hash: None,
    })
}

/// Up to `k` feature ids with the largest positive weights for `class`,
/// by descending weight, equal weights by ascending id.
pub fn top_features<T: Scalar>(model: &LinearModel<T>, class: usize, k: usize) -> Vec<u32> {
    let mut ranked: Vec<(T, u32)> = model
        .class_weights(class)
        .iter()
        .zip(&model.feature_ids)
        .filter(|(w, _)| **w > T::zero())
        .map(|(w, id)| (*w, *id))
        .collect();
    ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite weights").then(a.1.cmp(&b.1)));
    ranked.into_iter().take(k).map(|(_, id)| id).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn normal(rng: &mut impl Rng) -> f64 {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    fn ids(d: usize) -> Vec<u32> {
        (0..d as u32).collect()
    }

    #[test]
    fn separable_toy_set() {
        let data = [0.0, 0.1, 0.2, 0.0, 0.1, 0.3, 1.0, 1.1, 1.2, 0.9, 0.9, 1.3];
        let labels: Vec<String> = ["a", "a", "a", "b", "b", "b"].iter().map(|s| s.to_string()).collect();
        let ds = Dataset::new(&data, 2, &labels).unwrap();
        let cfg = SvmConfig {
            epochs: 50,
            ..Default::default()
        };
        let m = train(&ds, &[0, 1, 2, 3, 4, 5], &ids(2), &cfg).unwrap();
        for (i, label) in labels.iter().enumerate() {
            assert_eq!(&m.classes[m.predict(ds.row(i))], label);
        }
    }

    #[test]
    fn zero_features_collapse_to_one_class() {
        let data = [0.0; 12];
        let labels: Vec<String> = ["b", "a", "c", "a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let ds = Dataset::new(&data, 2, &labels).unwrap();
        let m = train(&ds, &[0, 1, 2, 3, 4, 5], &ids(2), &SvmConfig::default()).unwrap();
        assert_eq!(m.classes, ["a", "b", "c"]);
        let p: Vec<usize> = (0..6).map(|i| m.predict(ds.row(i))).collect();
        assert!(p.iter().all(|&x| x == p[0]));
        let mut tied = m.clone();
        tied.biases = vec![0.0; 3];
        assert_eq!(tied.predict(&[0.0, 0.0]), 0);
    }

    #[test]
    fn single_class_training() {
        let data = [1.0, 2.0];
        let labels = vec!["x".to_string(), "x".to_string()];
        let ds = Dataset::new(&data, 1, &labels).unwrap();
        let m = train(&ds, &[0, 1], &ids(1), &SvmConfig::default()).unwrap();
        assert_eq!(m.classes, ["x"]);
        assert_eq!(m.predict(&[5.0]), 0);
    }

    #[test]
    fn non_finite_is_fatal() {
        let data = [1.0, f64::NAN];
        let labels = vec!["x".to_string(), "y".to_string()];
        let ds = Dataset::new(&data, 1, &labels).unwrap();
        assert!(matches!(
            train(&ds, &[0, 1], &ids(1), &SvmConfig::default()),
            Err(ClassifierError::NonFinite { row: 1, col: 0 })
        ));
    }

    fn blobs(seed: u64, per_class: usize, sigma: f64) -> (Vec<f64>, Vec<String>, Vec<[f64; 2]>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = [[0.0, 0.0], [5.0, 0.0], [0.0, 5.0], [5.0, 5.0]];
        let (mut data, mut labels) = (Vec::new(), Vec::new());
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..per_class {
                data.push(center[0] + sigma * normal(&mut rng));
                data.push(center[1] + sigma * normal(&mut rng));
                labels.push(format!("c{c}"));
            }
        }
        (data, labels, centers.to_vec())
    }

    #[test]
    fn gaussian_blobs_agree_with_nearest_centroid() {
        let (data, labels, _) = blobs(3, 100, 1.0);
        let ds = Dataset::new(&data, 2, &labels).unwrap();
        let split = crate::classifier::make_split(&labels, 7).unwrap();
        let m = train(
            &ds,
            &split.train,
            &ids(2),
            &SvmConfig {
                epochs: 50,
                ..Default::default()
            },
        )
        .unwrap();
        // Oracle: nearest class mean of the training rows.
        let mut means = [[0.0; 2]; 4];
        let mut counts = [0.0; 4];
        for &i in &split.train {
            let c = labels[i][1..].parse::<usize>().unwrap();
            means[c][0] += data[2 * i];
            means[c][1] += data[2 * i + 1];
            counts[c] += 1.0;
        }
        for c in 0..4 {
            means[c][0] /= counts[c];
            means[c][1] /= counts[c];
        }
        let (mut correct, mut agree) = (0, 0);
        for &i in &split.test {
            let x = ds.row(i);
            let nc = (0..4)
                .min_by(|&a, &b| {
                    let da = (x[0] - means[a][0]).powi(2) + (x[1] - means[a][1]).powi(2);
                    let db = (x[0] - means[b][0]).powi(2) + (x[1] - means[b][1]).powi(2);
                    da.total_cmp(&db)
                })
                .unwrap();
            let p = m.predict(x);
            correct += (m.classes[p] == labels[i]) as usize;
            agree += (m.classes[p] == format!("c{nc}")) as usize;
        }
        let n = split.test.len() as f64;
        assert!(correct as f64 / n >= 0.99, "accuracy {}", correct as f64 / n);
        assert!(agree as f64 / n >= 0.99);
    }

    #[test]
    fn deterministic_weights() {
        let (data, labels, _) = blobs(4, 30, 1.0);
        let ds = Dataset::new(&data, 2, &labels).unwrap();
        let rows: Vec<usize> = (0..labels.len()).collect();
        let a = train(&ds, &rows, &ids(2), &SvmConfig::default()).unwrap();
        let b = train(&ds, &rows, &ids(2), &SvmConfig::default()).unwrap();
        assert_eq!(
            a.weights.iter().map(|w| w.to_bits()).collect::<Vec<_>>(),
            b.weights.iter().map(|w| w.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(a.biases, b.biases);
        let c = train(
            &ds,
            &rows,
            &ids(2),
            &SvmConfig {
                seed: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert_ne!(a.weights, c.weights);
    }

    #[test]
    fn rescaled_features_predict_alike() {
        let (data, labels, _) = blobs(5, 50, 0.5);
        let scaled: Vec<f64> = data.iter().map(|x| x * 37.5).collect();
        let rows: Vec<usize> = (0..labels.len()).collect();
        let a = train(
            &Dataset::new(&data, 2, &labels).unwrap(),
            &rows,
            &ids(2),
            &SvmConfig::default(),
        )
        .unwrap();
        let b = train(
            &Dataset::new(&scaled, 2, &labels).unwrap(),
            &rows,
            &ids(2),
            &SvmConfig::default(),
        )
        .unwrap();
        let agree = rows
            .iter()
            .filter(|&&i| a.predict(&data[2 * i..2 * i + 2]) == b.predict(&scaled[2 * i..2 * i + 2]))
            .count();
        assert!(agree as f64 / rows.len() as f64 >= 0.99);
    }

    #[test]
    fn weight_norm_shrinks_with_c() {
        let (data, labels, _) = blobs(6, 40, 0.5);
        let ds = Dataset::new(&data, 2, &labels).unwrap();
        let rows: Vec<usize> = (0..labels.len()).collect();
        let norms: Vec<f64> = [100.0, 10.0, 1.0, 0.1, 0.01, 0.001]
            .iter()
            .map(|&c| {
                train(
                    &ds,
                    &rows,
                    &ids(2),
                    &SvmConfig {
                        c,
                        ..Default::default()
                    },
                )
                .unwrap()
                .weight_norm()
            })
            .collect();
        for w in norms.windows(2) {
            assert!(w[1] <= w[0], "{norms:?}");
        }
    }

    #[test]
    fn top_feature_order() {
        let m = LinearModel {
            classes: vec!["a".into()],
            feature_ids: vec![0, 1, 2],
            weights: vec![0.5, -1.0, 2.0],
            biases: vec![0.0],
            scale: vec![1.0; 3],
            config: SvmConfig::default(),
            grammar_hash: None,
        };
        assert_eq!(top_features(&m, 0, 1), [2]);
        assert_eq!(top_features(&m, 0, 10), [2, 0]);
        let tie = LinearModel {
            feature_ids: vec![0, 1],
            weights: vec![1.0, 1.0],
            scale: vec![1.0; 2],
            ..m
        };
        assert_eq!(top_features(&tie, 0, 2), [0, 1]);
    }

    #[test]
    fn top_features_match_full_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let d = rng.gen_range(1..40);
            let weights: Vec<f64> = (0..d).map(|_| (rng.gen_range(-4..5) as f64) * 0.5).collect();
            let m = LinearModel {
                classes: vec!["a".into()],
                feature_ids: ids(d),
                weights: weights.clone(),
                biases: vec![0.0],
                scale: vec![1.0; d],
                config: SvmConfig::default(),
                grammar_hash: None,
            };
            let k = rng.gen_range(0..d + 3);
            let mut oracle: Vec<u32> = (0..d as u32).filter(|&j| weights[j as usize] > 0.0).collect();
            oracle.sort_by(|&x, &y| weights[y as usize].total_cmp(&weights[x as usize]).then(x.cmp(&y)));
            oracle.truncate(k);
            assert_eq!(top_features(&m, 0, k), oracle);
        }
    }

    #[test]
    fn single_precision_trains() {
        let data: Vec<f32> = vec![0.0, 0.1, 0.2, 0.0, 1.0, 1.1, 1.2, 0.9];
        let labels: Vec<String> = ["a", "a", "b", "b"].iter().map(|s| s.to_string()).collect();
        let ds = Dataset::new(&data, 2, &labels).unwrap();
        let m = train(
            &ds,
            &[0, 1, 2, 3],
            &ids(2),
            &SvmConfig {
                epochs: 50,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(m.predict(&[1.1, 1.0]), 1);
        assert_eq!(m.predict(&[0.0, 0.1]), 0);
    }
}
