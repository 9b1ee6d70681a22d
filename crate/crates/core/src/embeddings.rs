//! Embedding tables, category centroids, and slot-constraint satisfaction.
//!
//! Two spaces are used: a narrow-window space for syntactic categories and a
//! wide-window space for semantic ones. A category is a unit centroid plus a
//! cosine threshold; a token belongs to the category when its vector is close
//! enough to the centroid.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{CategoryId, CategoryLookup, SlotConstraint};
use crate::scalar::{dot, norm};
use crate::Scalar;

/// Default cosine threshold for categories that do not carry their own.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Space {
    #[serde(rename = "SYN")]
    Syn,
    #[serde(rename = "SEM")]
    Sem,
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Space::Syn => "SYN",
            Space::Sem => "SEM",
        })
    }
}

impl std::str::FromStr for Space {
    type Err = EmbeddingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SYN" => Ok(Space::Syn),
            "SEM" => Ok(Space::Sem),
            _ => Err(EmbeddingError::UnknownSpace(s.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: expected dimension {expected}, found {found}")]
    Dimension { line: usize, expected: usize, found: usize },
    #[error("line {line}: zero vector for {word:?} cannot be normalized")]
    ZeroVector { line: usize, word: String },
    #[error("embedding table is empty")]
    Empty,
    #[error("vectors have different dimensions ({0} vs {1})")]
    Mismatch(usize, usize),
    #[error("unknown embedding space {0:?}")]
    UnknownSpace(String),
    #[error("duplicate category id {0}")]
    DuplicateCategory(CategoryId),
    #[error("category {id}: threshold {threshold} outside [-1, 1]")]
    Threshold { id: CategoryId, threshold: f64 },
    #[error("category {id} has dimension {found}, the {space} table has {expected}")]
    CentroidDimension {
        id: CategoryId,
        space: Space,
        expected: usize,
        found: usize,
    },
}

fn normalize<T: Scalar>(v: &mut [T]) -> bool {
    let n = norm(v);
    if n == T::zero() || !n.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x = *x / n);
    true
}

fn parse_vector<T: Scalar>(fields: &str, line: usize) -> Result<Vec<T>, EmbeddingError> {
    fields
        .split_whitespace()
        .map(|f| {
            f.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(T::of)
                .ok_or_else(|| EmbeddingError::Syntax {
                    line,
                    message: format!("bad component {f:?}"),
                })
        })
        .collect()
}

/// Word vectors of one space, unit-normalized at load time.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<T> {
    space: Space,
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<T>,
}

impl<T: Scalar> EmbeddingTable<T> {
    /// Parse `word<TAB>f1 ... fD` lines. A leading fastText-style
    /// `count dim` header is skipped. Duplicate words keep the last vector.
    pub fn parse(text: &str, space: Space) -> Result<Self, EmbeddingError> {
        let mut table = EmbeddingTable {
            space,
            dim: 0,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        };
        let mut duplicates = 0usize;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let (word, rest) = match raw.split_once('\t') {
                Some(p) => p,
                None if i == 0 && raw.split_whitespace().count() == 2 => continue,
                None => raw.split_once(' ').ok_or_else(|| EmbeddingError::Syntax {
                    line: line_no,
                    message: "expected word followed by vector".into(),
                })?,
            };
            let word = word.trim().to_string();
            let mut v: Vec<T> = parse_vector(rest, line_no)?;
            if v.is_empty() {
                return Err(EmbeddingError::Syntax {
                    line: line_no,
                    message: format!("no vector for {word:?}"),
                });
            }
            if table.dim == 0 {
                table.dim = v.len();
            } else if v.len() != table.dim {
                return Err(EmbeddingError::Dimension {
                    line: line_no,
                    expected: table.dim,
                    found: v.len(),
                });
            }
            if !normalize(&mut v) {
                return Err(EmbeddingError::ZeroVector { line: line_no, word });
            }
            match table.index.get(&word) {
                Some(&row) => {
                    duplicates += 1;
                    table.data[row * table.dim..(row + 1) * table.dim].copy_from_slice(&v);
                }
                None => {
                    table.index.insert(word.clone(), table.words.len());
                    table.words.push(word);
                    table.data.extend(v);
                }
            }
        }
        if duplicates > 0 {
            log::warn!("{duplicates} duplicate words in {space} table; last occurrence kept");
        }
        if table.words.is_empty() {
            return Err(EmbeddingError::Empty);
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>, space: Space) -> Result<Self, EmbeddingError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| EmbeddingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, space)
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn vector(&self, word: &str) -> Option<&[T]> {
        let row = *self.index.get(word)?;
        Some(&self.data[row * self.dim..(row + 1) * self.dim])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[T])> {
        self.words
            .iter()
            .enumerate()
            .map(move |(i, w)| (w.as_str(), &self.data[i * self.dim..(i + 1) * self.dim]))
    }
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine<T: Scalar>(u: &[T], v: &[T]) -> Result<T, EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::Mismatch(u.len(), v.len()));
    }
    let denom = norm(u) * norm(v);
    if denom == T::zero() {
        return Ok(T::zero());
    }
    Ok((dot(u, v) / denom).max(-T::one()).min(T::one()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryCentroid<T> {
    pub id: CategoryId,
    pub space: Space,
    /// Unit-normalized.
    pub vector: Vec<T>,
    pub threshold: T,
    /// False when the inventory omitted the threshold and the default applies.
    pub explicit_threshold: bool,
    pub display_name: String,
}

impl<T: Scalar> CategoryCentroid<T> {
    pub fn new(
        id: CategoryId,
        space: Space,
        mut vector: Vec<T>,
        threshold: T,
        display_name: impl Into<String>,
    ) -> Result<Self, EmbeddingError> {
        if !normalize(&mut vector) {
            return Err(EmbeddingError::ZeroVector {
                line: 0,
                word: format!("category {id}"),
            });
        }
        check_threshold(id, threshold)?;
        Ok(CategoryCentroid {
            id,
            space,
            vector,
            threshold,
            explicit_threshold: true,
            display_name: display_name.into(),
        })
    }

    /// Whether a unit token vector falls inside the category.
    #[inline]
    pub fn accepts(&self, unit_vector: &[T]) -> bool {
        dot(unit_vector, &self.vector) >= self.threshold
    }
}

fn check_threshold<T: Scalar>(id: CategoryId, t: T) -> Result<(), EmbeddingError> {
    if !(t >= -T::one() && t <= T::one()) {
        return Err(EmbeddingError::Threshold {
            id,
            threshold: t.to_f64_lossless(),
        });
    }
    Ok(())
}

/// The category inventory: every SYN/SEM centroid referenced by a grammar.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryInventory<T> {
    centroids: BTreeMap<CategoryId, CategoryCentroid<T>>,
}

impl<T: Scalar> CategoryInventory<T> {
    pub fn new(centroids: impl IntoIterator<Item = CategoryCentroid<T>>) -> Result<Self, EmbeddingError> {
        let mut map = BTreeMap::new();
        for c in centroids {
            let id = c.id;
            if map.insert(id, c).is_some() {
                return Err(EmbeddingError::DuplicateCategory(id));
            }
        }
        Ok(CategoryInventory { centroids: map })
    }

    /// Parse `id<TAB>space<TAB>threshold<TAB>display_name<TAB>f1 ... fD`.
    /// An empty or `-` threshold takes `default_threshold`.
    pub fn parse(text: &str, default_threshold: T) -> Result<Self, EmbeddingError> {
        let mut centroids = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            let syntax = |message: String| EmbeddingError::Syntax { line, message };
            if fields.len() != 5 {
                return Err(syntax(format!(
                    "expected 5 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            let id: CategoryId = fields[0]
                .trim()
                .parse()
                .map_err(|e| syntax(format!("category id: {e}")))?;
            let space: Space = fields[1].parse()?;
            let (threshold, explicit) = match fields[2].trim() {
                "" | "-" => (default_threshold, false),
                t => (
                    T::of(t.parse::<f64>().map_err(|e| syntax(format!("threshold: {e}")))?),
                    true,
                ),
            };
            let vector = parse_vector(fields[4], line)?;
            let mut c = CategoryCentroid::new(id, space, vector, threshold, fields[3].trim())?;
            c.explicit_threshold = explicit;
            centroids.push(c);
        }
        Self::new(centroids)
    }

    pub fn load(path: impl AsRef<Path>, default_threshold: T) -> Result<Self, EmbeddingError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| EmbeddingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, default_threshold)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in self.centroids.values() {
            let threshold = if c.explicit_threshold {
                c.threshold.to_string()
            } else {
                "-".to_string()
            };
            let vector: Vec<String> = c.vector.iter().map(|x| x.to_string()).collect();
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                c.id,
                c.space,
                threshold,
                c.display_name,
                vector.join(" ")
            ));
        }
        out
    }

    pub fn get(&self, id: CategoryId) -> Option<&CategoryCentroid<T>> {
        self.centroids.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &CategoryCentroid<T>> {
        self.centroids.values()
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    /// Replace every threshold (explicit or not).
    pub fn with_threshold(mut self, threshold: T) -> Result<Self, EmbeddingError> {
        for c in self.centroids.values_mut() {
            check_threshold(c.id, threshold)?;
            c.threshold = threshold;
        }
        Ok(self)
    }
}

impl<T: Scalar> CategoryLookup for CategoryInventory<T> {
    fn space_of(&self, id: CategoryId) -> Option<Space> {
        self.get(id).map(|c| c.space)
    }
}

/// Both embedding tables and the category inventory.
#[derive(Debug, Clone)]
pub struct Embeddings<T> {
    pub syn: EmbeddingTable<T>,
    pub sem: EmbeddingTable<T>,
    pub categories: CategoryInventory<T>,
}

impl<T: Scalar> Embeddings<T> {
    pub fn new(
        syn: EmbeddingTable<T>,
        sem: EmbeddingTable<T>,
        categories: CategoryInventory<T>,
    ) -> Result<Self, EmbeddingError> {
        for c in categories.iter() {
            let expected = match c.space {
                Space::Syn => syn.dim(),
                Space::Sem => sem.dim(),
            };
            if c.vector.len() != expected {
                return Err(EmbeddingError::CentroidDimension {
                    id: c.id,
                    space: c.space,
                    expected,
                    found: c.vector.len(),
                });
            }
        }
        Ok(Embeddings { syn, sem, categories })
    }

    pub fn table(&self, space: Space) -> &EmbeddingTable<T> {
        match space {
            Space::Syn => &self.syn,
            Space::Sem => &self.sem,
        }
    }

    /// Whether `token` is in category `id`. Unknown categories and
    /// out-of-vocabulary tokens are never members.
    pub fn in_category(&self, token: &str, id: CategoryId) -> bool {
        let Some(c) = self.categories.get(id) else {
            return false;
        };
        self.table(c.space).vector(token).is_some_and(|v| c.accepts(v))
    }

    /// All categories containing `token`, in ascending id order.
    pub fn categories_of(&self, token: &str) -> Vec<CategoryId> {
        let syn = self.syn.vector(token);
        let sem = self.sem.vector(token);
        self.categories
            .iter()
            .filter(|c| {
                let v = match c.space {
                    Space::Syn => syn,
                    Space::Sem => sem,
                };
                v.is_some_and(|v| c.accepts(v))
            })
            .map(|c| c.id)
            .collect()
    }
}

/// Slot-constraint satisfaction: LEX compares strings exactly; SYN and SEM
/// test category membership in their embedding space.
pub fn satisfies<T: Scalar>(token: &str, constraint: &SlotConstraint, embeddings: &Embeddings<T>) -> bool {
    match constraint {
        SlotConstraint::Lex(word) => token == word,
        SlotConstraint::Syn(id) | SlotConstraint::Sem(id) => embeddings.in_category(token, *id),
    }
}

/// The `k` words nearest to a centroid, joined with `-`. Equal similarities
/// resolve alphabetically.
pub fn name_centroid<T: Scalar>(centroid: &CategoryCentroid<T>, table: &EmbeddingTable<T>, k: usize) -> String {
    let mut scored: Vec<(T, &str)> = table.iter().map(|(w, v)| (dot(v, &centroid.vector), w)).collect();
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.1.cmp(b.1))
    });
    scored.iter().take(k).map(|(_, w)| *w).collect::<Vec<_>>().join("-")
}
