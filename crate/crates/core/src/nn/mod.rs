//! A minimal dense-network engine: exactly the layers, losses and optimizer
//! the scorers need, with backprop checked against finite differences.
//!
//! Parameters are stored as `f32`; every reduction (dot products, gradient
//! sums, optimizer moments) accumulates in `f64`.

mod gradcheck;
mod layer;
mod loss;
mod optim;

pub use gradcheck::{
    compare_with_finite_differences, finite_difference_check, relative_error, GradCheckReport,
    FD_STEP, REL_ERROR_FLOOR,
};
pub use layer::{backward, forward, Activation, DenseLayer, ForwardCache, LayerGrad};
pub use loss::{
    cosine_similarity, cosine_with_grads, log_softmax, mse_cosine_loss, nll_loss, CosineLoss,
};
pub use optim::{adamw_step, AdamWConfig, AdamWState};

/// f32 → f64 dot product with f64 accumulation.
pub(crate) fn dot_f32_f64(w: &[f32], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(&a, &b)| f64::from(a) * b).sum()
}

/// Training hyperparameters shared by the cosine transform and the regressor.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    /// `None` trains full-batch: one optimizer step per epoch.
    pub batch_size: Option<usize>,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            lr: 5e-6,
            weight_decay: 0.01,
            batch_size: None,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if self.epochs == 0 {
            return Err(crate::Error::Config("epochs must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(crate::Error::Config(format!(
                "learning rate {} must be positive",
                self.lr
            )));
        }
        if self.weight_decay.is_nan() || self.weight_decay < 0.0 {
            return Err(crate::Error::Config(
                "weight decay must be non-negative".into(),
            ));
        }
        if self.batch_size == Some(0) {
            return Err(crate::Error::Config("batch size must be positive".into()));
        }
        Ok(())
    }

    pub fn adamw(&self) -> AdamWConfig {
        AdamWConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            ..AdamWConfig::default()
        }
    }

    /// Sample order for each epoch's mini-batches.
    pub(crate) fn batches(&self, n: usize, rng: &mut crate::rng::Rng) -> Vec<Vec<usize>> {
        use rand::seq::SliceRandom;
        let mut order: Vec<usize> = (0..n).collect();
        if self.shuffle && self.batch_size.is_some() {
            order.shuffle(rng);
        }
        let size = self.batch_size.unwrap_or(n).max(1);
        order.chunks(size).map(<[usize]>::to_vec).collect()
    }
}
