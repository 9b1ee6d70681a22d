use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_labels, check_split, fit_and_score, majority_baseline, ExperimentError, Granularity};
use crate::classifier::{Metrics, SplitSpec, SvmConfig};
use crate::grammar::{ClusterId, Grammar, NodeId, Stage};
use crate::matcher::FeatureMatrix;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Full,
    Macro,
    Micro,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeResult<T> {
    pub kind: NodeKind,
    /// Cluster id; `None` for the full grammar.
    pub id: Option<ClusterId>,
    pub stage: Option<Stage>,
    pub constructions: usize,
    pub weighted_f1: T,
    pub metrics: Metrics<T>,
    /// No training row has a non-zero value in any of the node's columns;
    /// the result is that of the majority-class predictor.
    pub degenerate: bool,
}

impl<T> NodeResult<T> {
    pub fn label(&self) -> String {
        match (self.kind, self.id) {
            (NodeKind::Full, _) | (_, None) => "full".to_string(),
            (NodeKind::Macro, Some(c)) => format!("macro-{c}"),
            (NodeKind::Micro, Some(c)) => format!("micro-{c}"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeScan<T> {
    pub granularity: Granularity,
    pub split_hash: String,
    pub full: NodeResult<T>,
    /// Share of the largest training class among test samples, as accuracy.
    pub majority_share: T,
    pub majority_f1: T,
    /// Macro-clusters first, then micro-clusters, each in id order.
    pub nodes: Vec<NodeResult<T>>,
}

/// Retrain on each macro- and micro-cluster's columns alone, with the same
/// split as the full-grammar model.
pub fn node_scan<T: Scalar>(
    m: &FeatureMatrix<T>,
    split: &SplitSpec,
    grammar: &Grammar,
    granularity: Granularity,
    stage: Option<Stage>,
    svm: &SvmConfig,
) -> Result<NodeScan<T>, ExperimentError> {
    check_split(m, split)?;
    check_labels(m, granularity)?;
    let labels = granularity.labels(m);
    let columns_of = |ids: &[u32]| -> Result<Vec<usize>, ExperimentError> {
        ids.iter()
            .map(|id| {
                m.construction_ids
                    .binary_search(id)
                    .map_err(|_| ExperimentError::MissingColumn(*id))
            })
            .collect()
    };
    let all_columns = columns_of(&grammar.ids())?;
    let majority = majority_baseline::<T>(labels, &split.train, &split.test)?;

    let score = |kind: NodeKind, id: Option<ClusterId>, cols: &[usize]| -> Result<NodeResult<T>, ExperimentError> {
        let sub = m.select_columns(cols);
        let degenerate = split.train.iter().all(|&i| sub.row(i).iter().all(|x| *x == T::zero()));
        let metrics = if degenerate {
            majority.clone()
        } else {
            fit_and_score(&sub, labels, &split.train, &split.test, svm, &granularity.to_string())?.1
        };
        Ok(NodeResult {
            kind,
            id,
            stage,
            constructions: cols.len(),
            weighted_f1: metrics.weighted_f1,
            metrics,
            degenerate,
        })
    };

    let full = score(NodeKind::Full, None, &all_columns)?;
    let nodes: Vec<NodeId> = grammar.nodes();
    let mut ordered: Vec<NodeId> = nodes
        .iter()
        .copied()
        .filter(|n| matches!(n, NodeId::Macro(_)))
        .collect();
    ordered.extend(nodes.iter().copied().filter(|n| matches!(n, NodeId::Micro(_))));
    let results = ordered
        .par_iter()
        .map(|node| {
            let ids: Vec<u32> = grammar
                .node_columns(*node)
                .iter()
                .map(|&p| grammar.constructions()[p].id)
                .collect();
            let cols = columns_of(&ids)?;
            let (kind, id) = match node {
                NodeId::Macro(c) => (NodeKind::Macro, *c),
                NodeId::Micro(c) => (NodeKind::Micro, *c),
            };
            score(kind, Some(id), &cols)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(NodeScan {
        granularity,
        split_hash: split.hash(),
        full,
        majority_share: majority.accuracy,
        majority_f1: majority.weighted_f1,
        nodes: results,
    })
}
