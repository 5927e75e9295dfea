//! The three pairwise coreference scorers.
//!
//! - [`CosineThresholdModel`]: coreferent when the (optionally transformed)
//!   cosine exceeds a tuned threshold.
//! - [`CosineTransformModel`]: a square linear map trained so coreferent
//!   cosines move towards 1 and non-coreferent ones towards −1.
//! - [`LogisticRegressorModel`]: a two-layer network over the joint feature
//!   `[e1, e2, e1 ∘ e2]`, optionally on top of a frozen cosine transform.

mod checkpoint;
mod cosine;
mod regressor;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};
pub use cosine::{
    compute_diagnostics, cosine_decide, diagnostics_of, pair_cosine, train_cosine_transform,
    CosineDecision, CosineDiagnostics, CosineThresholdModel, CosineTransformModel,
    TrainedTransform, TransformEpoch,
};
pub use regressor::{
    regressor_decide, train_logistic_regressor, LogisticRegressorModel, RegressorDecision,
    RegressorEpoch, TrainedRegressor, HIDDEN_UNITS,
};

use crate::embedding::EmbeddingTable;
use crate::pairs::MentionPair;
use crate::{Error, Result};

/// Embeddings of a labelled pair, borrowed from an [`EmbeddingTable`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabeledPair<'a> {
    pub e1: &'a [f32],
    pub e2: &'a [f32],
    pub label: bool,
}

pub fn embed_pairs<'a>(
    pairs: &[MentionPair],
    table: &'a EmbeddingTable,
) -> Result<Vec<LabeledPair<'a>>> {
    pairs
        .iter()
        .map(|p| {
            let label = p.label.ok_or_else(|| {
                Error::Validation(format!("pair ({}, {}) has no label", p.first, p.second))
            })?;
            Ok(LabeledPair {
                e1: table.lookup(&p.first)?,
                e2: table.lookup(&p.second)?,
                label,
            })
        })
        .collect()
}
