//! Within-document event coreference.
//!
//! Event mentions are scored pairwise from precomputed contextual embeddings
//! (a cosine threshold, a learned cosine transform, or a small joint-feature
//! logistic regressor), grouped by transitive closure and evaluated with
//! B³, MUC, CEAF-E, BLANC and the CoNLL average.
//!
//! The crate is organised bottom-up:
//!
//! - [`corpus`]: documents, event mentions and gold chains.
//! - [`embedding`]: mention embedding tables and their line-delimited file format.
//! - [`pairs`]: mention pair generation, gold labels and joint features.
//! - [`nn`]: the dense layers, losses, AdamW and finite-difference checker.
//! - [`scorer`]: the three pairwise scorers and checkpoint persistence.
//! - [`cluster`]: adjacency construction and connected components.
//! - [`metrics`]: coreference metrics, aggregation and error analysis.
//! - [`pipeline`]: configuration, threshold tuning, end-to-end runs and
//!   the synthetic corpus generator.

pub mod cluster;
pub mod corpus;
pub mod embedding;
mod error;
pub mod exec;
pub mod metrics;
pub mod nn;
pub mod pairs;
pub mod pipeline;
pub mod rng;
pub mod scorer;

pub use error::{Error, Result};
pub use exec::Exec;
