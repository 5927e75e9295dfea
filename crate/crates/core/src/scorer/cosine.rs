use crate::embedding::EmbeddingTable;
use crate::nn::{
    backward, cosine_similarity, forward, mse_cosine_loss, Activation, AdamWState, DenseLayer,
    LayerGrad, TrainConfig,
};
use crate::pairs::MentionPair;
use crate::{rng, Error, Result};

use super::LabeledPair;

/// A learned linear map applied to both mentions of a pair before taking
/// their cosine. Starts as the identity, so an untrained transform changes
/// nothing.
#[derive(Clone, Debug, PartialEq)]
pub struct CosineTransformModel {
    layer: DenseLayer,
}

impl CosineTransformModel {
    pub fn identity(dim: usize) -> Self {
        Self {
            layer: DenseLayer::identity(dim),
        }
    }

    pub fn from_layer(layer: DenseLayer) -> Result<Self> {
        if layer.rows() != layer.cols() || layer.activation != Activation::Identity {
            return Err(Error::Shape(format!(
                "cosine transform must be square with identity activation, got {}x{} {:?}",
                layer.rows(),
                layer.cols(),
                layer.activation
            )));
        }
        Ok(Self { layer })
    }

    pub fn dim(&self) -> usize {
        self.layer.cols()
    }

    pub fn layer(&self) -> &DenseLayer {
        &self.layer
    }

    pub fn apply<T: Copy + Into<f64>>(&self, x: &[T]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "transform of dim {} applied to a {}-vector",
                self.dim(),
                x.len()
            )));
        }
        let x: Vec<f64> = x.iter().map(|&v| v.into()).collect();
        self.layer.pre_activation(&x)
    }

    pub fn checksum(&self) -> u64 {
        self.layer.checksum()
    }
}

/// Cosine of the pair, after the transform when one is given.
pub fn pair_cosine(
    transform: Option<&CosineTransformModel>,
    e1: &[f32],
    e2: &[f32],
) -> Result<f64> {
    match transform {
        Some(t) => cosine_similarity(&t.apply(e1)?, &t.apply(e2)?),
        None => {
            let a: Vec<f64> = e1.iter().map(|&x| f64::from(x)).collect();
            let b: Vec<f64> = e2.iter().map(|&x| f64::from(x)).collect();
            cosine_similarity(&a, &b)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CosineThresholdModel {
    threshold: f64,
    pub transform: Option<CosineTransformModel>,
}

impl CosineThresholdModel {
    pub fn new(threshold: f64, transform: Option<CosineTransformModel>) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::Config(format!(
                "threshold {threshold} outside [0, 1]"
            )));
        }
        Ok(Self {
            threshold,
            transform,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn with_threshold(&self, threshold: f64) -> Result<Self> {
        Self::new(threshold, self.transform.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosineDecision {
    /// `None` when either vector is zero.
    pub score: Option<f64>,
    pub coreferent: bool,
}

/// Coreferent iff the cosine is strictly greater than the threshold. A zero
/// vector gives a non-coreferent decision.
pub fn cosine_decide(
    model: &CosineThresholdModel,
    e1: &[f32],
    e2: &[f32],
) -> Result<CosineDecision> {
    match pair_cosine(model.transform.as_ref(), e1, e2) {
        Ok(score) => Ok(CosineDecision {
            score: Some(score),
            coreferent: score > model.threshold,
        }),
        Err(Error::UndefinedSimilarity) => {
            log::warn!("zero vector in pair; treated as non-coreferent");
            Ok(CosineDecision {
                score: None,
                coreferent: false,
            })
        }
        Err(e) => Err(e),
    }
}

/// Mean cosine of coreferent (`cos_plus`) and non-coreferent (`cos_minus`)
/// pairs and their difference.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CosineDiagnostics {
    pub cos_plus: Option<f64>,
    pub cos_minus: Option<f64>,
    pub cos_delta: Option<f64>,
    pub positives: usize,
    pub negatives: usize,
    /// Pairs with a zero vector, left out of both means.
    pub skipped: usize,
}

pub fn diagnostics_of(
    pairs: &[LabeledPair<'_>],
    transform: Option<&CosineTransformModel>,
) -> Result<CosineDiagnostics> {
    if pairs.is_empty() {
        return Err(Error::Empty("no pairs for cosine diagnostics".into()));
    }
    let (mut sum_pos, mut sum_neg) = (0.0, 0.0);
    let mut d = CosineDiagnostics::default();
    for p in pairs {
        match pair_cosine(transform, p.e1, p.e2) {
            Ok(c) if p.label => {
                sum_pos += c;
                d.positives += 1;
            }
            Ok(c) => {
                sum_neg += c;
                d.negatives += 1;
            }
            Err(Error::UndefinedSimilarity) => d.skipped += 1,
            Err(e) => return Err(e),
        }
    }
    d.cos_plus = (d.positives > 0).then(|| sum_pos / d.positives as f64);
    d.cos_minus = (d.negatives > 0).then(|| sum_neg / d.negatives as f64);
    d.cos_delta = d.cos_plus.zip(d.cos_minus).map(|(p, m)| p - m);
    Ok(d)
}

pub fn compute_diagnostics(
    pairs: &[MentionPair],
    table: &EmbeddingTable,
    transform: Option<&CosineTransformModel>,
) -> Result<CosineDiagnostics> {
    diagnostics_of(&super::embed_pairs(pairs, table)?, transform)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct TransformEpoch {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train: CosineDiagnostics,
    pub dev: Option<CosineDiagnostics>,
}

#[derive(Clone, Debug)]
pub struct TrainedTransform {
    pub model: CosineTransformModel,
    pub initial_train: CosineDiagnostics,
    pub initial_dev: Option<CosineDiagnostics>,
    pub trace: Vec<TransformEpoch>,
}

/// Fits the transform so coreferent cosines approach 1 and the rest −1,
/// minimizing the mean of `(cos − y)²` with AdamW. Both members of a pair go
/// through the same matrix.
pub fn train_cosine_transform(
    pairs: &[LabeledPair<'_>],
    config: &TrainConfig,
    dev: Option<&[LabeledPair<'_>]>,
) -> Result<TrainedTransform> {
    config.validate()?;
    let dim = pairs
        .first()
        .map(|p| p.e1.len())
        .ok_or_else(|| Error::Empty("no training pairs for the cosine transform".into()))?;
    let mut model = CosineTransformModel::identity(dim);
    let initial_train = diagnostics_of(pairs, None)?;
    let initial_dev = dev.map(|d| diagnostics_of(d, None)).transpose()?;
    let mut opt = AdamWState::new(config.adamw(), &[dim * dim, dim]);
    let mut rng = rng::stream(config.seed, "cosine-transform-shuffle");
    let mut trace = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let mut epoch_loss = 0.0;
        for (step, batch) in config
            .batches(pairs.len(), &mut rng)
            .into_iter()
            .enumerate()
        {
            let layers = std::slice::from_ref(&model.layer);
            let mut grads = vec![LayerGrad::zeros_like(&model.layer)];
            for &i in &batch {
                let p = &pairs[i];
                let x1: Vec<f64> = p.e1.iter().map(|&v| f64::from(v)).collect();
                let x2: Vec<f64> = p.e2.iter().map(|&v| f64::from(v)).collect();
                let (t1, c1) = forward(layers, &x1)?;
                let (t2, c2) = forward(layers, &x2)?;
                let l = mse_cosine_loss(&t1, &t2, p.label).map_err(|e| match e {
                    Error::UndefinedSimilarity => Error::NonFinite(format!(
                        "zero transformed vector at epoch {epoch} step {step}"
                    )),
                    e => e,
                })?;
                if !l.loss.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "loss at epoch {epoch} step {step}"
                    )));
                }
                epoch_loss += l.loss;
                backward(layers, &c1, &l.grad_first, &mut grads)?;
                backward(layers, &c2, &l.grad_second, &mut grads)?;
            }
            grads[0].scale(1.0 / batch.len() as f64);
            let layer = &mut model.layer;
            opt.step(
                &mut [&mut layer.weights, &mut layer.bias],
                &[&grads[0].weights, &grads[0].bias],
            )
            .map_err(|e| Error::NonFinite(format!("epoch {epoch} step {step}: {e}")))?;
        }
        trace.push(TransformEpoch {
            epoch,
            mean_loss: epoch_loss / pairs.len() as f64,
            train: diagnostics_of(pairs, Some(&model))?,
            dev: dev.map(|d| diagnostics_of(d, Some(&model))).transpose()?,
        });
    }
    Ok(TrainedTransform {
        model,
        initial_train,
        initial_dev,
        trace,
    })
}
