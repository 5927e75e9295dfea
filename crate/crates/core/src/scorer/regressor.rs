use crate::nn::{
    backward, forward, nll_loss, Activation, AdamWState, DenseLayer, LayerGrad, TrainConfig,
};
use crate::pairs::{joint_vector, PairFeature};
use crate::{rng, Error, Result};

use super::{CosineTransformModel, LabeledPair};

pub const HIDDEN_UNITS: usize = 512;

/// Class index of the coreferent outcome.
const COREFERENT: usize = 1;

/// `joint (3·dim) → hidden (square) → 2 (log-softmax)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogisticRegressorModel {
    pub hidden: DenseLayer,
    pub output: DenseLayer,
    /// Applied to both embeddings before the joint feature; never trained
    /// together with the regressor.
    pub frozen_transform: Option<CosineTransformModel>,
}

impl LogisticRegressorModel {
    /// Weights uniform in `±1/√fan_in` from `rng`, biases zero.
    pub fn new(dim: usize, rng: &mut rng::Rng) -> Self {
        Self::with_hidden_units(dim, HIDDEN_UNITS, rng)
    }

    /// Same as [`LogisticRegressorModel::new`] with a custom hidden width, for
    /// small test networks.
    pub fn with_hidden_units(dim: usize, hidden: usize, rng: &mut rng::Rng) -> Self {
        Self {
            hidden: DenseLayer::uniform(hidden, 3 * dim, Activation::Square, rng),
            output: DenseLayer::uniform(2, hidden, Activation::LogSoftmax, rng),
            frozen_transform: None,
        }
    }

    pub fn zeroed(dim: usize) -> Self {
        Self {
            hidden: DenseLayer::zeros(HIDDEN_UNITS, 3 * dim, Activation::Square),
            output: DenseLayer::zeros(2, HIDDEN_UNITS, Activation::LogSoftmax),
            frozen_transform: None,
        }
    }

    pub fn from_layers(
        hidden: DenseLayer,
        output: DenseLayer,
        frozen_transform: Option<CosineTransformModel>,
    ) -> Result<Self> {
        if hidden.activation != Activation::Square || output.activation != Activation::LogSoftmax {
            return Err(Error::Shape(
                "regressor layers must be square then log-softmax".into(),
            ));
        }
        if !hidden.cols().is_multiple_of(3) || output.cols() != hidden.rows() || output.rows() != 2
        {
            return Err(Error::Shape(format!(
                "regressor shapes {}x{} → {}x{} are inconsistent",
                hidden.rows(),
                hidden.cols(),
                output.rows(),
                output.cols()
            )));
        }
        if let Some(t) = &frozen_transform {
            if 3 * t.dim() != hidden.cols() {
                return Err(Error::Shape(format!(
                    "frozen transform dim {} does not match regressor input {}",
                    t.dim(),
                    hidden.cols()
                )));
            }
        }
        Ok(Self {
            hidden,
            output,
            frozen_transform,
        })
    }

    pub fn with_frozen_transform(self, transform: CosineTransformModel) -> Result<Self> {
        Self::from_layers(self.hidden, self.output, Some(transform))
    }

    pub fn dim(&self) -> usize {
        self.hidden.cols() / 3
    }

    pub fn layers(&self) -> [DenseLayer; 2] {
        [self.hidden.clone(), self.output.clone()]
    }

    /// Joint feature of a pair, after the frozen transform if present.
    pub fn features(&self, e1: &[f32], e2: &[f32]) -> Result<Vec<f64>> {
        match &self.frozen_transform {
            Some(t) => joint_vector(&t.apply(e1)?, &t.apply(e2)?),
            None => joint_vector(e1, e2),
        }
    }

    pub fn log_probs(&self, joint: &[f64]) -> Result<[f64; 2]> {
        if joint.len() != self.hidden.cols() {
            return Err(Error::Dimension(format!(
                "regressor expects a {}-dim joint feature, got {}",
                self.hidden.cols(),
                joint.len()
            )));
        }
        let h = self.hidden.apply(joint)?;
        let out = self.output.apply(&h)?;
        Ok([out[0], out[1]])
    }

    pub fn decide_embeddings(&self, e1: &[f32], e2: &[f32]) -> Result<RegressorDecision> {
        Ok(RegressorDecision::from_log_probs(
            self.log_probs(&self.features(e1, e2)?)?,
        ))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegressorDecision {
    pub log_probs: [f64; 2],
    pub coreferent: bool,
}

impl RegressorDecision {
    /// Argmax; an exact tie is non-coreferent.
    pub fn from_log_probs(log_probs: [f64; 2]) -> Self {
        Self {
            log_probs,
            coreferent: log_probs[COREFERENT] > log_probs[0],
        }
    }
}

pub fn regressor_decide(
    model: &LogisticRegressorModel,
    feature: &PairFeature,
) -> Result<RegressorDecision> {
    let lp = match &model.frozen_transform {
        Some(t) => model.log_probs(&joint_vector(
            &t.apply(&feature.e1)?,
            &t.apply(&feature.e2)?,
        )?)?,
        None => model.log_probs(&feature.joint)?,
    };
    Ok(RegressorDecision::from_log_probs(lp))
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct RegressorEpoch {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Mean of dev B³ and MUC F1.
    pub dev_score: f64,
}

#[derive(Clone, Debug)]
pub struct TrainedRegressor {
    /// Parameters from the best dev epoch.
    pub model: LogisticRegressorModel,
    pub best_epoch: usize,
    pub trace: Vec<RegressorEpoch>,
}

/// Trains with NLL loss and AdamW, evaluating `dev_score` after every epoch
/// and keeping the parameters of the best-scoring epoch (earliest on ties).
pub fn train_logistic_regressor<F>(
    train: &[LabeledPair<'_>],
    config: &TrainConfig,
    frozen_transform: Option<CosineTransformModel>,
    hidden_units: usize,
    mut dev_score: F,
) -> Result<TrainedRegressor>
where
    F: FnMut(&LogisticRegressorModel) -> Result<f64>,
{
    config.validate()?;
    let dim = train
        .first()
        .map(|p| p.e1.len())
        .ok_or_else(|| Error::Empty("no training pairs for the regressor".into()))?;
    let mut init_rng = rng::stream(config.seed, "regressor-init");
    let mut model = LogisticRegressorModel::with_hidden_units(dim, hidden_units, &mut init_rng);
    if let Some(t) = frozen_transform {
        model = model.with_frozen_transform(t)?;
    }
    let mut opt = AdamWState::new(
        config.adamw(),
        &[
            model.hidden.weights.len(),
            model.hidden.bias.len(),
            model.output.weights.len(),
            model.output.bias.len(),
        ],
    );
    let mut shuffle_rng = rng::stream(config.seed, "regressor-shuffle");
    let mut best: Option<(f64, usize, LogisticRegressorModel)> = None;
    let mut trace = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let mut epoch_loss = 0.0;
        for (step, batch) in config
            .batches(train.len(), &mut shuffle_rng)
            .into_iter()
            .enumerate()
        {
            let layers = [model.hidden.clone(), model.output.clone()];
            let mut grads: Vec<LayerGrad> = layers.iter().map(LayerGrad::zeros_like).collect();
            for &i in &batch {
                let p = &train[i];
                let x = model.features(p.e1, p.e2)?;
                let (out, cache) = forward(&layers, &x)?;
                let target = usize::from(p.label);
                let (loss, _) = nll_loss(&out, target)?;
                if !loss.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "loss at epoch {epoch} step {step}"
                    )));
                }
                epoch_loss += loss;
                let mut grad_out = [0.0; 2];
                grad_out[target] = -1.0;
                backward(&layers, &cache, &grad_out, &mut grads)?;
            }
            let scale = 1.0 / batch.len() as f64;
            grads.iter_mut().for_each(|g| g.scale(scale));
            opt.step(
                &mut [
                    &mut model.hidden.weights,
                    &mut model.hidden.bias,
                    &mut model.output.weights,
                    &mut model.output.bias,
                ],
                &[
                    &grads[0].weights,
                    &grads[0].bias,
                    &grads[1].weights,
                    &grads[1].bias,
                ],
            )
            .map_err(|e| Error::NonFinite(format!("epoch {epoch} step {step}: {e}")))?;
        }
        let score = dev_score(&model)?;
        log::info!(
            "regressor epoch {epoch}: loss {:.6} dev {score:.4}",
            epoch_loss / train.len() as f64
        );
        trace.push(RegressorEpoch {
            epoch,
            mean_loss: epoch_loss / train.len() as f64,
            dev_score: score,
        });
        if best.as_ref().is_none_or(|(b, _, _)| score > *b) {
            best = Some((score, epoch, model.clone()));
        }
    }
    let (_, best_epoch, model) = best.expect("at least one epoch");
    Ok(TrainedRegressor {
        model,
        best_epoch,
        trace,
    })
}
