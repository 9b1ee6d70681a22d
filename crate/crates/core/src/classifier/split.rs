use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::hashing::json_hash;

pub const TEST_FRACTION: f64 = 0.2;

/// A stratified train/test partition of sample indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Per-class `(train, test)` index lists.
    pub classes: BTreeMap<String, (Vec<usize>, Vec<usize>)>,
}

impl SplitSpec {
    pub fn hash(&self) -> String {
        json_hash(&(&self.train, &self.test))
    }
}

/// Each class sends `round(0.2·n)` samples to the test set, at least one and
/// never all of them. Classes are visited in label order from one seeded
/// stream, so the split depends only on the labels and the seed.
pub fn make_split(labels: &[String], seed: u64) -> Result<SplitSpec, ClassifierError> {
    if labels.is_empty() {
        return Err(ClassifierError::NoSamples);
    }
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = SplitSpec {
        seed,
        train: Vec::new(),
        test: Vec::new(),
        classes: BTreeMap::new(),
    };
    for (label, mut idx) in by_class {
        let n = idx.len();
        if n < 2 {
            return Err(ClassifierError::SingletonClass(label.to_string()));
        }
        idx.shuffle(&mut rng);
        let n_test = ((n as f64 * TEST_FRACTION).round() as usize).clamp(1, n - 1);
        let mut test = idx[..n_test].to_vec();
        let mut train = idx[n_test..].to_vec();
        test.sort_unstable();
        train.sort_unstable();
        spec.train.extend(&train);
        spec.test.extend(&test);
        spec.classes.insert(label.to_string(), (train, test));
    }
    spec.train.sort_unstable();
    spec.test.sort_unstable();
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn labels(spec: &[(&str, usize)]) -> Vec<String> {
        spec.iter()
            .flat_map(|(l, n)| std::iter::repeat_n(l.to_string(), *n))
            .collect()
    }

    #[test]
    fn ten_balanced() {
        let y = labels(&[("a", 5), ("b", 5)]);
        let s = make_split(&y, 1).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (8, 2));
        assert_eq!(s.classes["a"].1.len(), 1);
        assert_eq!(s.classes["b"].1.len(), 1);
        assert_eq!(s, make_split(&y, 1).unwrap());
        assert_eq!(s.hash(), make_split(&y, 1).unwrap().hash());
    }

    #[test]
    fn singleton_class_is_fatal() {
        let y = labels(&[("a", 5), ("b", 1)]);
        assert!(matches!(make_split(&y, 0), Err(ClassifierError::SingletonClass(c)) if c == "b"));
        assert!(matches!(make_split(&[], 0), Err(ClassifierError::NoSamples)));
    }

    #[test]
    fn random_labelings_stay_near_eighty_twenty() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..1000 {
            let k = rng.gen_range(1..6);
            let y: Vec<String> = (0..k)
                .flat_map(|c| std::iter::repeat_n(format!("c{c}"), rng.gen_range(2..40)))
                .collect();
            let s = make_split(&y, trial).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..y.len()).collect::<Vec<_>>());
            for (label, (train, test)) in &s.classes {
                let n = y.iter().filter(|l| *l == label).count() as f64;
                assert_eq!(train.len() + test.len(), n as usize);
                let frac = train.len() as f64 / n;
                assert!((frac - 0.8).abs() <= 1.0 / n + 1e-12, "{label}: {frac} of {n}");
                assert!(train.iter().chain(test).all(|&i| &y[i] == label));
            }
        }
    }
}
