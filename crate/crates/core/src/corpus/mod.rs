//! Corpus ingestion and lexically balanced sampling.
//!
//! Documents arrive as newline-delimited JSON records. Every document is
//! tokenized, matched against the keyword list, and then packed into samples
//! that contain exactly one document per keyword, so that every sample in
//! every location has the same keyword distribution.

mod ingest;
mod keywords;
mod sampler;
mod tokenize;

pub use ingest::{ingest, ingest_reader, Document, DocumentStream, SkipCounts};
pub use keywords::{contains_keyword, KeywordSet};
pub use sampler::{
    build_samples, manifest_to_jsonl, parse_manifest, DiscardReason, Discarded, LocationLabels, Sample, SampleSet,
};
pub use tokenize::tokenize;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("keyword file is empty")]
    NoKeywords,
    #[error("duplicate keyword {0:?}")]
    DuplicateKeyword(String),
    #[error("keyword {0:?} is not a single token")]
    InvalidKeyword(String),
    #[error("sample manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
}
