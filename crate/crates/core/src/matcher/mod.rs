//! Construction matching and construction-frequency features.
//!
//! A construction of `L` slots matches at token position `i` when token
//! `i + j` satisfies slot `j` for every `j`. All start positions count, and
//! overlapping matches of different constructions are all counted.

mod features;

pub use features::{build_matrix, FeatureConfig, FeatureMatrix, FeatureVector, MatrixMeta, Normalization};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::{satisfies, Embeddings};
use crate::grammar::{CategoryId, Construction, ConstructionId, Grammar, SlotConstraint};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum MatcherError {
    #[error("grammar has no constructions")]
    EmptyGrammar,
    #[error("sample {sample}: missing {granularity} label")]
    MissingLabel { sample: String, granularity: &'static str },
    #[error("sample {sample}: document {document} not found in the corpus")]
    MissingDocument { sample: String, document: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("feature matrix metadata: {0}")]
    Metadata(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MatchSpan {
    pub construction: ConstructionId,
    pub start: usize,
    /// Exclusive.
    pub end: usize,
}

/// Reference matcher: tries every start position against every slot.
pub fn match_construction<T: Scalar, S: AsRef<str>>(
    tokens: &[S],
    construction: &Construction,
    embeddings: &Embeddings<T>,
) -> Vec<MatchSpan> {
    let len = construction.slots.len();
    if len == 0 || tokens.len() < len {
        return Vec::new();
    }
    (0..=tokens.len() - len)
        .filter(|&i| {
            construction
                .slots
                .iter()
                .enumerate()
                .all(|(j, slot)| satisfies(tokens[i + j].as_ref(), slot, embeddings))
        })
        .map(|i| MatchSpan {
            construction: construction.id,
            start: i,
            end: i + len,
        })
        .collect()
}

/// Per-token-type cache: the token's lexeme id (when some LEX slot uses
/// it) and the grammar categories it belongs to.
#[derive(Debug, Default)]
pub struct Memo {
    types: HashMap<String, u32>,
    lexeme: Vec<Option<u32>>,
    categories: Vec<Box<[u32]>>,
}

impl Memo {
    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }
}

#[derive(Debug, Default)]
struct Node {
    /// Sorted by lexeme id.
    lex: Vec<(u32, u32)>,
    /// Sorted by dense category index.
    cat: Vec<(u32, u32)>,
    /// Constructions whose slots end here.
    complete: Vec<u32>,
}

/// Indexed matcher over one grammar: a prefix tree over slot constraints,
/// so constructions sharing leading slots are tested once. Construction
/// positions (column indices) are used internally; spans report ids.
pub struct Matcher<'a, T> {
    grammar: &'a Grammar,
    embeddings: &'a Embeddings<T>,
    lexicon: HashMap<&'a str, u32>,
    /// Category id to dense index, for categories the grammar uses.
    dense: HashMap<CategoryId, u32>,
    nodes: Vec<Node>,
}

impl<'a, T: Scalar> Matcher<'a, T> {
    pub fn new(grammar: &'a Grammar, embeddings: &'a Embeddings<T>) -> Self {
        let mut lexicon: HashMap<&str, u32> = HashMap::new();
        let mut dense: HashMap<CategoryId, u32> = HashMap::new();
        let mut children: Vec<HashMap<(bool, u32), u32>> = vec![HashMap::new()];
        let mut complete: Vec<Vec<u32>> = vec![Vec::new()];
        for (pos, c) in grammar.constructions().iter().enumerate() {
            let mut node = 0usize;
            for slot in &c.slots {
                let key = match slot {
                    SlotConstraint::Lex(w) => {
                        let next = lexicon.len() as u32;
                        (true, *lexicon.entry(w.as_str()).or_insert(next))
                    }
                    SlotConstraint::Syn(k) | SlotConstraint::Sem(k) => {
                        let next = dense.len() as u32;
                        (false, *dense.entry(*k).or_insert(next))
                    }
                };
                let fresh = children.len() as u32;
                let child = *children[node].entry(key).or_insert(fresh);
                if child == fresh {
                    children.push(HashMap::new());
                    complete.push(Vec::new());
                }
                node = child as usize;
            }
            complete[node].push(pos as u32);
        }
        let nodes = children
            .into_iter()
            .zip(complete)
            .map(|(edges, complete)| {
                let mut lex: Vec<(u32, u32)> = edges.iter().filter(|(k, _)| k.0).map(|(k, &c)| (k.1, c)).collect();
                let mut cat: Vec<(u32, u32)> = edges.iter().filter(|(k, _)| !k.0).map(|(k, &c)| (k.1, c)).collect();
                lex.sort_unstable();
                cat.sort_unstable();
                Node { lex, cat, complete }
            })
            .collect();
        Matcher {
            grammar,
            embeddings,
            lexicon,
            dense,
            nodes,
        }
    }

    pub fn grammar(&self) -> &Grammar {
        self.grammar
    }

    fn intern(&self, memo: &mut Memo, token: &str) -> u32 {
        if let Some(&t) = memo.types.get(token) {
            return t;
        }
        let mut categories: Vec<u32> = self
            .embeddings
            .categories_of(token)
            .into_iter()
            .filter_map(|k| self.dense.get(&k).copied())
            .collect();
        categories.sort_unstable();
        let t = memo.categories.len() as u32;
        memo.lexeme.push(self.lexicon.get(token).copied());
        memo.categories.push(categories.into_boxed_slice());
        memo.types.insert(token.to_string(), t);
        t
    }

    /// Visit every match as `(construction position, start)`.
    pub fn scan<S: AsRef<str>>(&self, tokens: &[S], memo: &mut Memo, mut visit: impl FnMut(usize, usize)) {
        let types: Vec<u32> = tokens.iter().map(|t| self.intern(memo, t.as_ref())).collect();
        let mut stack: Vec<(u32, usize)> = Vec::new();
        for start in 0..types.len() {
            stack.push((0, start));
            while let Some((node, k)) = stack.pop() {
                let node = &self.nodes[node as usize];
                for &pos in &node.complete {
                    visit(pos as usize, start);
                }
                let Some(&ty) = types.get(k) else { continue };
                if let Some(lex) = memo.lexeme[ty as usize] {
                    if let Ok(i) = node.lex.binary_search_by_key(&lex, |e| e.0) {
                        stack.push((node.lex[i].1, k + 1));
                    }
                }
                let cats = &memo.categories[ty as usize];
                if node.cat.len() <= cats.len() {
                    for &(cat, child) in &node.cat {
                        if cats.binary_search(&cat).is_ok() {
                            stack.push((child, k + 1));
                        }
                    }
                } else {
                    for cat in cats.iter() {
                        if let Ok(i) = node.cat.binary_search_by_key(cat, |e| e.0) {
                            stack.push((node.cat[i].1, k + 1));
                        }
                    }
                }
            }
        }
    }

    /// All matches in a token sequence, sorted by (start, construction id).
    pub fn spans<S: AsRef<str>>(&self, tokens: &[S], memo: &mut Memo) -> Vec<MatchSpan> {
        let constructions = self.grammar.constructions();
        let mut out = Vec::new();
        self.scan(tokens, memo, |pos, start| {
            let c = &constructions[pos];
            out.push(MatchSpan {
                construction: c.id,
                start,
                end: start + c.slots.len(),
            });
        });
        out.sort_unstable_by_key(|s| (s.start, s.construction));
        out
    }

    /// Add per-construction match counts for one document into `counts`.
    /// With `presence`, each construction counts at most once.
    pub fn count_into<S: AsRef<str>>(&self, tokens: &[S], memo: &mut Memo, presence: bool, counts: &mut [u64]) {
        if presence {
            let mut seen = vec![false; counts.len()];
            self.scan(tokens, memo, |pos, _| seen[pos] = true);
            for (c, s) in counts.iter_mut().zip(seen) {
                *c += s as u64;
            }
        } else {
            self.scan(tokens, memo, |pos, _| counts[pos] += 1);
        }
    }
}
