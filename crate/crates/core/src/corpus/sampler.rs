use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{contains_keyword, tokenize, Document, KeywordSet};

/// Labels of the location whose documents are being sampled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocationLabels {
    pub area: String,
    pub country: String,
    pub region: String,
}

/// A lexically balanced sub-corpus: one document per keyword.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub area_label: String,
    pub country_label: String,
    pub region_label: String,
    /// Document ids, one per keyword, in keyword order.
    pub documents: Vec<String>,
    pub token_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardReason {
    NoKeyword,
    DuplicateId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discarded {
    pub id: String,
    pub reason: DiscardReason,
}

/// Result of sampling one location. Every input document ends up in exactly
/// one of `samples`, `discarded`, or `dropped_incomplete`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSet {
    pub samples: Vec<Sample>,
    pub discarded: Vec<Discarded>,
    pub dropped_incomplete: Vec<String>,
}

impl SampleSet {
    pub fn sampled_documents(&self) -> usize {
        self.samples.iter().map(|s| s.documents.len()).sum()
    }

    pub fn accounted_documents(&self) -> usize {
        self.sampled_documents() + self.discarded.len() + self.dropped_incomplete.len()
    }
}

struct OpenSample {
    slots: Vec<Option<String>>,
    arrival: Vec<String>,
    filled: usize,
    tokens: usize,
}

/// Greedy first-fit sample assembly over a single location's stream.
///
/// Each document is matched to its first keyword and placed in the oldest
/// open sample still missing that keyword (a new sample is opened when none
/// is). Samples are emitted as they complete; samples still open when the
/// stream ends are dropped.
pub fn build_samples<I>(docs: I, keywords: &KeywordSet, location: &LocationLabels) -> SampleSet
where
    I: IntoIterator<Item = Document>,
{
    let k = keywords.len();
    let mut out = SampleSet::default();
    let mut seen = HashSet::new();
    let mut open: Vec<Option<OpenSample>> = Vec::new();
    // For each keyword, open samples missing it, oldest first.
    let mut missing: Vec<VecDeque<usize>> = vec![VecDeque::new(); k];

    for doc in docs {
        if !seen.insert(doc.id.clone()) {
            out.discarded.push(Discarded {
                id: doc.id,
                reason: DiscardReason::DuplicateId,
            });
            continue;
        }
        let tokens = tokenize(&doc.text);
        let Some(kw) = contains_keyword(&tokens, keywords) else {
            out.discarded.push(Discarded {
                id: doc.id,
                reason: DiscardReason::NoKeyword,
            });
            continue;
        };

        let slot = match missing[kw].pop_front() {
            Some(s) => s,
            None => {
                let s = open.len();
                open.push(Some(OpenSample {
                    slots: vec![None; k],
                    arrival: Vec::new(),
                    filled: 0,
                    tokens: 0,
                }));
                for (other, queue) in missing.iter_mut().enumerate() {
                    if other != kw {
                        queue.push_back(s);
                    }
                }
                s
            }
        };

        let sample = open[slot].as_mut().expect("queued samples are open");
        sample.slots[kw] = Some(doc.id.clone());
        sample.arrival.push(doc.id);
        sample.filled += 1;
        sample.tokens += tokens.len();
        if sample.filled == k {
            let done = open[slot].take().expect("sample is open");
            out.samples.push(Sample {
                id: format!("{}-s{}", location.area, out.samples.len() + 1),
                area_label: location.area.clone(),
                country_label: location.country.clone(),
                region_label: location.region.clone(),
                documents: done.slots.into_iter().map(|d| d.expect("sample is full")).collect(),
                token_count: done.tokens,
            });
        }
    }

    for sample in open.into_iter().flatten() {
        out.dropped_incomplete.extend(sample.arrival);
    }
    out
}


/// One JSON record per sample.
pub fn manifest_to_jsonl(samples: &[Sample]) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(&serde_json::to_string(s).expect("samples serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_manifest(text: &str) -> Result<Vec<Sample>, super::CorpusError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| super::CorpusError::Manifest {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
