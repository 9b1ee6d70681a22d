use serde::{Deserialize, Serialize};

use super::{NodeKind, NodeResult};
use crate::classifier::csv_field;
use crate::Scalar;

/// Pooled error shares of unordered dialect pairs, in `(i, j)` order with
/// `i < j` over the class list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityVector<T> {
    pub pairs: Vec<(String, String)>,
    /// Errors in both directions.
    pub errors: Vec<u64>,
    pub shares: Vec<T>,
    pub no_errors: bool,
}

impl<T: Scalar> SimilarityVector<T> {
    /// Pairs by descending share; equal shares keep pair order.
    pub fn ranked(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.pairs.len()).collect();
        idx.sort_by(|&a, &b| {
            self.shares[b]
                .partial_cmp(&self.shares[a])
                .expect("finite shares")
                .then(a.cmp(&b))
        });
        idx
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("dialect_a,dialect_b,errors,share\n");
        for i in self.ranked() {
            out.push_str(&format!(
                "{},{},{},{:.6}\n",
                csv_field(&self.pairs[i].0),
                csv_field(&self.pairs[i].1),
                self.errors[i],
                self.shares[i]
            ));
        }
        out
    }
}

/// Share of all off-diagonal errors falling on each unordered pair.
pub fn error_similarity<T: Scalar>(classes: &[String], confusion: &[Vec<u64>]) -> SimilarityVector<T> {
    let k = classes.len();
    let total: u64 = (0..k)
        .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| confusion[i][j])
        .sum();
    let mut v = SimilarityVector {
        pairs: Vec::new(),
        errors: Vec::new(),
        shares: Vec::new(),
        no_errors: total == 0,
    };
    for i in 0..k {
        for j in i + 1..k {
            let e = confusion[i][j] + confusion[j][i];
            v.pairs.push((classes[i].clone(), classes[j].clone()));
            v.errors.push(e);
            v.shares.push(if total == 0 {
                T::zero()
            } else {
                T::of(e as f64 / total as f64)
            });
        }
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correlation {
    #[default]
    Pearson,
    Spearman,
}

/// Pearson correlation; `None` when either input is constant.
pub fn pearson<T: Scalar>(x: &[T], y: &[T]) -> Option<T> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = T::of_usize(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (*a - mx, *b - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).max(-T::one()).min(T::one()))
}

fn ranks<T: Scalar>(x: &[T]) -> Vec<T> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("finite values"));
    let mut r = vec![T::zero(); x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = T::of((i + j) as f64 / 2.0 + 1.0);
        for &p in &idx[i..=j] {
            r[p] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman<T: Scalar>(x: &[T], y: &[T]) -> Option<T> {
    if x.len() != y.len() {
        return None;
    }
    pearson(&ranks(x), &ranks(y))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeCorrelation<T> {
    pub kind: NodeKind,
    pub node: String,
    pub weighted_f1: T,
    pub correlation: Option<T>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationSummary<T> {
    pub kind: NodeKind,
    pub count: usize,
    pub missing: usize,
    /// Minimum, lower quartile, median, upper quartile, maximum.
    pub quantiles: Option<[T; 5]>,
}

/// Linear-interpolation quantiles of sorted data.
pub fn quantiles<T: Scalar>(values: &[T], probs: &[f64]) -> Vec<T> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    probs
        .iter()
        .map(|&p| {
            let h = p * (v.len() - 1) as f64;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * T::of(h - lo as f64)
        })
        .collect()
}

/// Correlation of each node's error-similarity vector with the reference
/// vector, plus per-kind quantile summaries (macro first, then micro).
pub fn similarity_correlation<T: Scalar>(
    nodes: &[NodeResult<T>],
    reference: &SimilarityVector<T>,
    method: Correlation,
) -> (Vec<NodeCorrelation<T>>, Vec<CorrelationSummary<T>>) {
    let per_node: Vec<NodeCorrelation<T>> = nodes
        .iter()
        .map(|n| {
            let v = error_similarity::<T>(&n.metrics.classes, &n.metrics.confusion);
            let correlation = if v.pairs != reference.pairs {
                None
            } else {
                match method {
                    Correlation::Pearson => pearson(&v.shares, &reference.shares),
                    Correlation::Spearman => spearman(&v.shares, &reference.shares),
                }
            };
            NodeCorrelation {
                kind: n.kind,
                node: n.label(),
                weighted_f1: n.weighted_f1,
                correlation,
            }
        })
        .collect();
    let summaries = [NodeKind::Macro, NodeKind::Micro]
        .into_iter()
        .map(|kind| {
            let of_kind: Vec<&NodeCorrelation<T>> = per_node.iter().filter(|c| c.kind == kind).collect();
            let present: Vec<T> = of_kind.iter().filter_map(|c| c.correlation).collect();
            CorrelationSummary {
                kind,
                count: of_kind.len(),
                missing: of_kind.len() - present.len(),
                quantiles: (!present.is_empty()).then(|| {
                    let q = quantiles(&present, &[0.0, 0.25, 0.5, 0.75, 1.0]);
                    [q[0], q[1], q[2], q[3], q[4]]
                }),
            }
        })
        .collect();
    (per_node, summaries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn classes(k: usize) -> Vec<String> {
        (0..k).map(|c| format!("c{c}")).collect()
    }

    #[test]
    fn hand_counted_pair() {
        let v = error_similarity::<f64>(&classes(3), &[vec![5, 1, 0], vec![2, 5, 0], vec![0, 0, 5]]);
        assert_eq!(v.pairs[0], ("c0".to_string(), "c1".to_string()));
        assert_eq!(v.shares, [1.0, 0.0, 0.0]);
        assert_eq!(v.errors, [3, 0, 0]);
        assert!(!v.no_errors);
    }

    #[test]
    fn diagonal_is_flagged() {
        let v = error_similarity::<f64>(&classes(3), &[vec![5, 0, 0], vec![0, 5, 0], vec![0, 0, 5]]);
        assert!(v.no_errors);
        assert!(v.shares.iter().all(|s| *s == 0.0));
    }

    #[test]
    fn shares_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let k = rng.gen_range(2..8);
            let conf: Vec<Vec<u64>> = (0..k).map(|_| (0..k).map(|_| rng.gen_range(0..20)).collect()).collect();
            let v = error_similarity::<f64>(&classes(k), &conf);
            if !v.no_errors {
                assert!((v.shares.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            assert_eq!(v.pairs.len(), k * (k - 1) / 2);
        }
    }

    #[test]
    fn pearson_basics() {
        let x = [0.1f64, 0.5, 0.2, 0.9];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(pearson(&[1.0, 0.0], &[0.0, 1.0]), Some(-1.0));
        assert_eq!(pearson(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]), None);
    }

    #[test]
    fn pearson_matches_textbook_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let n = rng.gen_range(3..30);
            let x: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
            let nf = n as f64;
            let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
            let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
            let sxx: f64 = x.iter().map(|a| a * a).sum();
            let syy: f64 = y.iter().map(|a| a * a).sum();
            let r = (nf * sxy - sx * sy) / ((nf * sxx - sx * sx).sqrt() * (nf * syy - sy * sy).sqrt());
            assert!((pearson(&x, &y).unwrap() - r).abs() < 1e-10);
        }
    }

    #[test]
    fn spearman_uses_ranks() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 200.0, 3000.0]), Some(1.0));
        let r: f64 = spearman(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((r - 0.866_025_403_784_438_6).abs() < 1e-12);
    }

    #[test]
    fn quantile_interpolation() {
        let q = quantiles(&[4.0, 1.0, 3.0, 2.0], &[0.0, 0.25, 0.5, 1.0]);
        assert_eq!(q, [1.0, 1.75, 2.5, 4.0]);
    }

    #[test]
    fn ranking_and_csv() {
        let v = error_similarity::<f64>(&classes(3), &[vec![5, 1, 3], vec![0, 5, 0], vec![1, 0, 5]]);
        assert_eq!(v.ranked(), [1, 0, 2]);
        assert!(v
            .to_csv()
            .starts_with("dialect_a,dialect_b,errors,share\nc0,c2,4,0.800000\n"));
    }
}
