//! Constructions, grammars, and the micro/macro cluster network.
//!
//! Grammar files hold one construction per line:
//!
//! ```text
//! id<TAB>stage<TAB>micro<TAB>macro<TAB>slots
//! 17<TAB>late<TAB>4<TAB>1<TAB>SYN:12 LEX:the SEM:40
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Constructions are kept
//! in ascending id order, which is also the feature column order.

mod clusters;

pub use clusters::{compute_clusters, representational_similarity, token_jaccard, ClusterNetwork, ClusterParams};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::Space;

pub type CategoryId = u32;
pub type ConstructionId = u32;
pub type ClusterId = u32;

/// Resolves category ids to the embedding space they live in.
pub trait CategoryLookup {
    fn space_of(&self, id: CategoryId) -> Option<Space>;
}

impl CategoryLookup for BTreeMap<CategoryId, Space> {
    fn space_of(&self, id: CategoryId) -> Option<Space> {
        self.get(&id).copied()
    }
}

#[derive(Debug, Error)]
pub enum GrammarError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("no constructions")]
    NoConstructions,
    #[error("duplicate construction id {0}")]
    DuplicateId(ConstructionId),
    #[error("construction {construction}: category {category} not in the inventory")]
    UnresolvedCategory {
        construction: ConstructionId,
        category: CategoryId,
    },
    #[error("construction {construction}: category {category} belongs to {actual}, slot says {declared}")]
    SpaceMismatch {
        construction: ConstructionId,
        category: CategoryId,
        declared: Space,
        actual: Space,
    },
    #[error("construction {0}: early-stage constructions may only use SYN slots")]
    EarlyStageConstraint(ConstructionId),
    #[error("construction {0} has no slots")]
    NoSlots(ConstructionId),
    #[error("construction {construction}: LEX value {value:?} must be a non-empty lowercase token")]
    InvalidLexeme {
        construction: ConstructionId,
        value: String,
    },
    #[error("micro-cluster {micro} is assigned to macro-clusters {first} and {second}")]
    MicroInTwoMacros {
        micro: ClusterId,
        first: ClusterId,
        second: ClusterId,
    },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("reference corpus is empty; token similarity is undefined")]
    EmptyReference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SlotKind {
    Lex,
    Syn,
    Sem,
}

/// One slot of a construction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SlotConstraint {
    Lex(String),
    Syn(CategoryId),
    Sem(CategoryId),
}

impl SlotConstraint {
    pub fn kind(&self) -> SlotKind {
        match self {
            SlotConstraint::Lex(_) => SlotKind::Lex,
            SlotConstraint::Syn(_) => SlotKind::Syn,
            SlotConstraint::Sem(_) => SlotKind::Sem,
        }
    }

    pub fn category(&self) -> Option<CategoryId> {
        match self {
            SlotConstraint::Lex(_) => None,
            SlotConstraint::Syn(c) | SlotConstraint::Sem(c) => Some(*c),
        }
    }
}

impl fmt::Display for SlotConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotConstraint::Lex(w) => write!(f, "LEX:{w}"),
            SlotConstraint::Syn(c) => write!(f, "SYN:{c}"),
            SlotConstraint::Sem(c) => write!(f, "SEM:{c}"),
        }
    }
}

impl FromStr for SlotConstraint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| format!("slot {s:?} lacks KIND:value"))?;
        let category = || {
            value
                .parse::<CategoryId>()
                .map_err(|_| format!("slot {s:?}: bad category id"))
        };
        match kind.to_ascii_uppercase().as_str() {
            "LEX" => Ok(SlotConstraint::Lex(value.to_string())),
            "SYN" => Ok(SlotConstraint::Syn(category()?)),
            "SEM" => Ok(SlotConstraint::Sem(category()?)),
            _ => Err(format!("slot {s:?}: unknown kind {kind:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Early,
    Late,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Early => "early",
            Stage::Late => "late",
        })
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "early" => Ok(Stage::Early),
            "late" => Ok(Stage::Late),
            other => Err(format!("unknown stage {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Construction {
    pub id: ConstructionId,
    pub stage: Stage,
    pub micro: ClusterId,
    #[serde(rename = "macro")]
    pub macro_: ClusterId,
    pub slots: Vec<SlotConstraint>,
}

impl Construction {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Slots rendered with category display names, e.g.
    /// `[ SYN:determined-permitted -- LEX:to ]`.
    pub fn describe(&self, name: impl Fn(CategoryId) -> Option<String>) -> String {
        let parts: Vec<String> = self
            .slots
            .iter()
            .map(|s| match s {
                SlotConstraint::Lex(w) => format!("LEX:{w}"),
                SlotConstraint::Syn(c) | SlotConstraint::Sem(c) => {
                    let kind = if s.kind() == SlotKind::Syn { "SYN" } else { "SEM" };
                    format!("{kind}:{}", name(*c).unwrap_or_else(|| c.to_string()))
                }
            })
            .collect();
        format!("[ {} ]", parts.join(" -- "))
    }
}

/// A node of the grammar network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeId {
    Micro(ClusterId),
    Macro(ClusterId),
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Micro(c) => write!(f, "micro-{c}"),
            NodeId::Macro(c) => write!(f, "macro-{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct GrammarStats {
    pub total: usize,
    pub by_stage: BTreeMap<Stage, usize>,
    pub micro_sizes: BTreeMap<ClusterId, usize>,
    pub macro_sizes: BTreeMap<ClusterId, usize>,
    /// Number of micro-clusters inside each macro-cluster.
    pub micros_per_macro: BTreeMap<ClusterId, usize>,
}

impl GrammarStats {
    pub fn micro_count(&self) -> usize {
        self.micro_sizes.len()
    }

    pub fn macro_count(&self) -> usize {
        self.macro_sizes.len()
    }

    pub fn stage_count(&self, stage: Stage) -> usize {
        self.by_stage.get(&stage).copied().unwrap_or(0)
    }
}

/// An immutable, validated grammar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    constructions: Vec<Construction>,
    micro_to_macro: BTreeMap<ClusterId, ClusterId>,
}

impl Grammar {
    /// Validate and sort constructions by id.
    pub fn new(mut constructions: Vec<Construction>, categories: &impl CategoryLookup) -> Result<Self, GrammarError> {
        if constructions.is_empty() {
            return Err(GrammarError::NoConstructions);
        }
        constructions.sort_by_key(|c| c.id);
        for pair in constructions.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(GrammarError::DuplicateId(pair[0].id));
            }
        }
        let mut micro_to_macro = BTreeMap::new();
        for c in &constructions {
            validate(c, categories)?;
            match micro_to_macro.insert(c.micro, c.macro_) {
                Some(prev) if prev != c.macro_ => {
                    return Err(GrammarError::MicroInTwoMacros {
                        micro: c.micro,
                        first: prev.min(c.macro_),
                        second: prev.max(c.macro_),
                    })
                }
                _ => {}
            }
        }
        Ok(Grammar {
            constructions,
            micro_to_macro,
        })
    }

    pub fn parse(text: &str, categories: &impl CategoryLookup) -> Result<Self, GrammarError> {
        let mut constructions = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let syntax = |message: String| GrammarError::Syntax { line, message };
            let fields: Vec<&str> = raw.split('\t').collect();
            if fields.len() != 5 {
                return Err(syntax(format!(
                    "expected 5 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            let number = |name: &str, s: &str| -> Result<u32, GrammarError> {
                s.trim().parse().map_err(|_| GrammarError::Syntax {
                    line,
                    message: format!("bad {name} {s:?}"),
                })
            };
            let id = number("construction id", fields[0])?;
            let stage = fields[1].parse().map_err(syntax)?;
            let micro = number("micro-cluster", fields[2])?;
            let macro_ = number("macro-cluster", fields[3])?;
            let slots = fields[4]
                .split_whitespace()
                .map(|s| s.parse::<SlotConstraint>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|m| GrammarError::Syntax { line, message: m })?;
            constructions.push(Construction {
                id,
                stage,
                micro,
                macro_,
                slots,
            });
        }
        Self::new(constructions, categories)
    }

    pub fn load(path: impl AsRef<Path>, categories: &impl CategoryLookup) -> Result<Self, GrammarError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| GrammarError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, categories)
    }

    /// Canonical text form; `parse` of this output yields an equal grammar.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for c in &self.constructions {
            let slots: Vec<String> = c.slots.iter().map(|s| s.to_string()).collect();
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                c.id,
                c.stage,
                c.micro,
                c.macro_,
                slots.join(" ")
            ));
        }
        out
    }

    pub fn constructions(&self) -> &[Construction] {
        &self.constructions
    }

    pub fn len(&self) -> usize {
        self.constructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constructions.is_empty()
    }

    pub fn position(&self, id: ConstructionId) -> Option<usize> {
        self.constructions.binary_search_by_key(&id, |c| c.id).ok()
    }

    pub fn get(&self, id: ConstructionId) -> Option<&Construction> {
        self.position(id).map(|i| &self.constructions[i])
    }

    pub fn ids(&self) -> Vec<ConstructionId> {
        self.constructions.iter().map(|c| c.id).collect()
    }

    pub fn macro_of(&self, micro: ClusterId) -> Option<ClusterId> {
        self.micro_to_macro.get(&micro).copied()
    }

    pub fn micro_clusters(&self) -> Vec<ClusterId> {
        self.micro_to_macro.keys().copied().collect()
    }

    pub fn macro_clusters(&self) -> Vec<ClusterId> {
        self.micro_to_macro
            .values()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn nodes(&self) -> Vec<NodeId> {
        let mut nodes: Vec<NodeId> = self.micro_clusters().into_iter().map(NodeId::Micro).collect();
        nodes.extend(self.macro_clusters().into_iter().map(NodeId::Macro));
        nodes
    }

    pub fn stats(&self) -> GrammarStats {
        let mut s = GrammarStats {
            total: self.constructions.len(),
            ..Default::default()
        };
        for c in &self.constructions {
            *s.by_stage.entry(c.stage).or_default() += 1;
            *s.micro_sizes.entry(c.micro).or_default() += 1;
            *s.macro_sizes.entry(c.macro_).or_default() += 1;
        }
        for m in self.micro_to_macro.values() {
            *s.micros_per_macro.entry(*m).or_default() += 1;
        }
        s
    }

    fn restrict(&self, keep: impl Fn(&Construction) -> bool) -> Grammar {
        let constructions: Vec<Construction> = self.constructions.iter().filter(|c| keep(c)).cloned().collect();
        let micro_to_macro = constructions.iter().map(|c| (c.micro, c.macro_)).collect();
        Grammar {
            constructions,
            micro_to_macro,
        }
    }

    /// The sub-grammar of one stage. May be empty.
    pub fn filter_by_stage(&self, stage: Stage) -> Grammar {
        self.restrict(|c| c.stage == stage)
    }

    /// The constructions of one micro- or macro-cluster.
    pub fn filter_by_node(&self, node: NodeId) -> Result<Grammar, GrammarError> {
        let known = match node {
            NodeId::Micro(m) => self.micro_to_macro.contains_key(&m),
            NodeId::Macro(m) => self.micro_to_macro.values().any(|&x| x == m),
        };
        if !known {
            return Err(GrammarError::UnknownNode(node));
        }
        Ok(self.restrict(|c| match node {
            NodeId::Micro(m) => c.micro == m,
            NodeId::Macro(m) => c.macro_ == m,
        }))
    }

    /// Column positions (within this grammar) of a node's constructions.
    pub fn node_columns(&self, node: NodeId) -> Vec<usize> {
        self.constructions
            .iter()
            .enumerate()
            .filter(|(_, c)| match node {
                NodeId::Micro(m) => c.micro == m,
                NodeId::Macro(m) => c.macro_ == m,
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// Edge list of the network: construction to micro-cluster, then
    /// micro-cluster to macro-cluster.
    pub fn edge_list(&self) -> String {
        let mut out = String::from("source\ttarget\n");
        for c in &self.constructions {
            out.push_str(&format!("construction-{}\tmicro-{}\n", c.id, c.micro));
        }
        for (micro, macro_) in &self.micro_to_macro {
            out.push_str(&format!("micro-{micro}\tmacro-{macro_}\n"));
        }
        out
    }

    /// Replace cluster annotations, e.g. with the output of
    /// [`compute_clusters`]. `assign` maps a construction id to (micro, macro).
    pub fn with_clusters(
        &self,
        assign: impl Fn(ConstructionId) -> (ClusterId, ClusterId),
        categories: &impl CategoryLookup,
    ) -> Result<Grammar, GrammarError> {
        let constructions = self
            .constructions
            .iter()
            .map(|c| {
                let (micro, macro_) = assign(c.id);
                Construction {
                    micro,
                    macro_,
                    ..c.clone()
                }
            })
            .collect();
        Grammar::new(constructions, categories)
    }
}

fn validate(c: &Construction, categories: &impl CategoryLookup) -> Result<(), GrammarError> {
    if c.slots.is_empty() {
        return Err(GrammarError::NoSlots(c.id));
    }
    for slot in &c.slots {
        if c.stage == Stage::Early && slot.kind() != SlotKind::Syn {
            return Err(GrammarError::EarlyStageConstraint(c.id));
        }
        match slot {
            SlotConstraint::Lex(w) => {
                if w.is_empty() || w.to_lowercase() != *w || w.chars().any(char::is_whitespace) {
                    return Err(GrammarError::InvalidLexeme {
                        construction: c.id,
                        value: w.clone(),
                    });
                }
            }
            SlotConstraint::Syn(id) | SlotConstraint::Sem(id) => {
                let declared = if slot.kind() == SlotKind::Syn {
                    Space::Syn
                } else {
                    Space::Sem
                };
                match categories.space_of(*id) {
                    None => {
                        return Err(GrammarError::UnresolvedCategory {
                            construction: c.id,
                            category: *id,
                        })
                    }
                    Some(actual) if actual != declared => {
                        return Err(GrammarError::SpaceMismatch {
                            construction: c.id,
                            category: *id,
                            declared,
                            actual,
                        })
                    }
                    Some(_) => {}
                }
            }
        }
    }
    Ok(())
}
