//! Stand-in cluster induction for grammars without network annotations.
//!
//! Micro-clusters come from average-linkage agglomeration on token
//! similarity (Jaccard overlap of the strings each construction matches in a
//! reference corpus). Macro-clusters come from the same procedure applied to
//! representational similarity between micro-cluster medoids.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{ClusterId, Construction, ConstructionId, Grammar, GrammarError};
use crate::embeddings::Embeddings;
use crate::matcher::match_construction;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterParams {
    /// Minimum average token similarity for two micro-clusters to merge.
    pub micro_threshold: f64,
    /// Minimum average representational similarity for macro merges.
    pub macro_threshold: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            micro_threshold: 0.5,
            macro_threshold: 0.5,
        }
    }
}

/// Positional agreement: matching slots over the longer length.
pub fn representational_similarity(a: &Construction, b: &Construction) -> f64 {
    let longest = a.slots.len().max(b.slots.len());
    if longest == 0 {
        return 1.0;
    }
    let agree = a.slots.iter().zip(&b.slots).filter(|(x, y)| x == y).count();
    agree as f64 / longest as f64
}

/// Jaccard overlap; two empty sets have similarity 0.
pub fn token_jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterNetwork {
    pub ids: Vec<ConstructionId>,
    /// Row-major `n × n`, unit diagonal.
    pub token_similarity: Vec<f64>,
    /// Row-major `n × n`, unit diagonal.
    pub representational: Vec<f64>,
    /// Micro-cluster of each construction, numbered by first member.
    pub micro: Vec<ClusterId>,
    /// Macro-cluster of each micro-cluster.
    pub macro_of_micro: Vec<ClusterId>,
}

impl ClusterNetwork {
    pub fn assignment(&self, id: ConstructionId) -> Option<(ClusterId, ClusterId)> {
        let i = self.ids.iter().position(|&x| x == id)?;
        let micro = self.micro[i];
        Some((micro, self.macro_of_micro[micro as usize]))
    }
}

fn matrix(n: usize, f: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
        for j in i + 1..n {
            let s = f(i, j);
            m[i * n + j] = s;
            m[j * n + i] = s;
        }
    }
    m
}

/// Average-linkage agglomeration. Merges the most similar pair while its
/// similarity reaches `threshold`; ties go to the lowest index pair. Returns
/// a label per item, numbered in order of first appearance.
pub(crate) fn average_linkage(sim: &[f64], n: usize, threshold: f64) -> Vec<ClusterId> {
    let mut s = sim.to_vec();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut owner: Vec<usize> = (0..n).collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in i + 1..n {
                if active[j] && s[i * n + j] >= threshold && best.is_none_or(|(b, _, _)| s[i * n + j] > b) {
                    best = Some((s[i * n + j], i, j));
                }
            }
        }
        let Some((_, a, b)) = best else { break };
        let (wa, wb) = (size[a] as f64, size[b] as f64);
        for k in 0..n {
            if active[k] && k != a && k != b {
                let v = (wa * s[a * n + k] + wb * s[b * n + k]) / (wa + wb);
                s[a * n + k] = v;
                s[k * n + a] = v;
            }
        }
        size[a] += size[b];
        active[b] = false;
        owner.iter_mut().filter(|o| **o == b).for_each(|o| *o = a);
    }
    let mut labels = vec![0; n];
    let mut next = Vec::<usize>::new();
    for i in 0..n {
        let pos = match next.iter().position(|&o| o == owner[i]) {
            Some(p) => p,
            None => {
                next.push(owner[i]);
                next.len() - 1
            }
        };
        labels[i] = pos as ClusterId;
    }
    labels
}

/// Induce micro- and macro-clusters from slot structure and the token
/// strings each construction matches in `reference`.
pub fn compute_clusters<T: Scalar>(
    grammar: &Grammar,
    embeddings: &Embeddings<T>,
    reference: &[Vec<String>],
    params: &ClusterParams,
) -> Result<ClusterNetwork, GrammarError> {
    if reference.iter().all(|d| d.is_empty()) {
        return Err(GrammarError::EmptyReference);
    }
    let cs = grammar.constructions();
    let n = cs.len();
    let token_sets: Vec<BTreeSet<String>> = cs
        .iter()
        .map(|c| {
            reference
                .iter()
                .flat_map(|doc| {
                    match_construction(doc, c, embeddings)
                        .into_iter()
                        .map(move |span| doc[span.start..span.end].join(" "))
                })
                .collect()
        })
        .collect();
    let token_similarity = matrix(n, |i, j| token_jaccard(&token_sets[i], &token_sets[j]));
    let representational = matrix(n, |i, j| representational_similarity(&cs[i], &cs[j]));
    let micro = average_linkage(&token_similarity, n, params.micro_threshold);

    let micro_count = micro.iter().map(|&m| m as usize + 1).max().unwrap_or(0);
    let medoids: Vec<usize> = (0..micro_count)
        .map(|m| {
            let members: Vec<usize> = (0..n).filter(|&i| micro[i] as usize == m).collect();
            let score = |i: usize| members.iter().map(|&j| representational[i * n + j]).sum::<f64>();
            *members
                .iter()
                .reduce(|best, i| if score(*i) > score(*best) { i } else { best })
                .expect("every micro-cluster has a member")
        })
        .collect();
    let medoid_sim = matrix(micro_count, |a, b| representational[medoids[a] * n + medoids[b]]);
    let macro_of_micro = average_linkage(&medoid_sim, micro_count, params.macro_threshold);

    Ok(ClusterNetwork {
        ids: grammar.ids(),
        token_similarity,
        representational,
        micro,
        macro_of_micro,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{SlotConstraint, Stage};

    fn c(id: u32, slots: Vec<SlotConstraint>) -> Construction {
        Construction {
            id,
            stage: Stage::Late,
            micro: 0,
            macro_: 0,
            slots,
        }
    }

    fn lex(w: &str) -> SlotConstraint {
        SlotConstraint::Lex(w.into())
    }

    #[test]
    fn representational_examples() {
        let a = c(1, vec![lex("at"), lex("the"), SlotConstraint::Syn(1)]);
        assert_eq!(representational_similarity(&a, &a), 1.0);
        let b = c(2, vec![lex("at"), lex("a")]);
        assert!((representational_similarity(&a, &b) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(representational_similarity(&b, &a), representational_similarity(&a, &b));
        let d = c(3, vec![SlotConstraint::Syn(1), lex("at")]);
        assert_eq!(representational_similarity(&a, &d), 0.0);
    }

    #[test]
    fn jaccard_examples() {
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        assert_eq!(token_jaccard(&set(&["a b"]), &set(&["c d"])), 0.0);
        assert_eq!(token_jaccard(&set(&["a", "b"]), &set(&["b", "c"])), 1.0 / 3.0);
        assert_eq!(token_jaccard(&set(&[]), &set(&[])), 0.0);
    }

    #[test]
    fn average_linkage_groups() {
        // Two tight pairs, weakly linked.
        let n = 4;
        let sim = matrix(n, |i, j| if i / 2 == j / 2 { 0.9 } else { 0.1 });
        assert_eq!(average_linkage(&sim, n, 0.5), [0, 0, 1, 1]);
        assert_eq!(average_linkage(&sim, n, 0.05), [0, 0, 0, 0]);
        assert_eq!(average_linkage(&sim, n, 0.95), [0, 1, 2, 3]);
    }

    #[test]
    fn average_linkage_uses_mean_similarity() {
        // 0 and 1 merge first; then 2 joins only if the mean (0.6+0.2)/2 clears.
        let sim = vec![1.0, 0.9, 0.6, 0.9, 1.0, 0.2, 0.6, 0.2, 1.0];
        assert_eq!(average_linkage(&sim, 3, 0.45), [0, 0, 1]);
        assert_eq!(average_linkage(&sim, 3, 0.4), [0, 0, 0]);
    }
}
