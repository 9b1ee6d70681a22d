//! Construction-grammar dialect variation toolkit.
//!
//! The crate covers the whole analysis pipeline: lexically balanced sampling of
//! geo-referenced text, airport-proxy dialect areas, construction matching over
//! embedding-defined slot constraints, one-vs-rest linear SVM dialect models,
//! and the node-level experiments (per-cluster scans, unmasking, error-based
//! dialect similarity).
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64` aliases
//! below are the concrete types the command-line tool uses.

pub mod classifier;
pub mod corpus;
pub mod embeddings;
pub mod experiments;
pub mod geo;
pub mod grammar;
pub mod hashing;
pub mod matcher;
pub mod scalar;
pub mod synthetic;

pub use scalar::Scalar;

pub type EmbeddingTable64 = embeddings::EmbeddingTable<f64>;
pub type CategoryInventory64 = embeddings::CategoryInventory<f64>;
pub type Embeddings64 = embeddings::Embeddings<f64>;
pub type FeatureMatrix64 = matcher::FeatureMatrix<f64>;
pub type FeatureVector64 = matcher::FeatureVector<f64>;
pub type LinearModel64 = classifier::LinearModel<f64>;
pub type Metrics64 = classifier::Metrics<f64>;
pub type NodeResult64 = experiments::NodeResult<f64>;
pub type UnmaskingCurve64 = experiments::UnmaskingCurve<f64>;
pub type SimilarityVector64 = experiments::SimilarityVector<f64>;

pub type EmbeddingTable32 = embeddings::EmbeddingTable<f32>;
pub type LinearModel32 = classifier::LinearModel<f32>;
