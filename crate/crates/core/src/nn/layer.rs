use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::dot_f32_f64;
use super::loss::log_softmax;
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    /// Elementwise `x ↦ x²`.
    Square,
    LogSoftmax,
}

impl Activation {
    fn apply(self, pre: &[f64]) -> Vec<f64> {
        match self {
            Activation::Identity => pre.to_vec(),
            Activation::Square => pre.iter().map(|x| x * x).collect(),
            Activation::LogSoftmax => log_softmax(pre),
        }
    }
}

/// `out = act(W·x + b)` with `W` stored row-major, `rows × cols`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    rows: usize,
    cols: usize,
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(
        rows: usize,
        cols: usize,
        weights: Vec<f32>,
        bias: Vec<f32>,
        activation: Activation,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("layer shape {rows}x{cols}")));
        }
        if weights.len() != rows * cols || bias.len() != rows {
            return Err(Error::Shape(format!(
                "layer {rows}x{cols} given {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            weights,
            bias,
            activation,
        })
    }

    pub fn zeros(rows: usize, cols: usize, activation: Activation) -> Self {
        Self::new(
            rows,
            cols,
            vec![0.0; rows * cols],
            vec![0.0; rows],
            activation,
        )
        .expect("positive shape")
    }

    pub fn identity(dim: usize) -> Self {
        let mut layer = Self::zeros(dim, dim, Activation::Identity);
        for i in 0..dim {
            layer.weights[i * dim + i] = 1.0;
        }
        layer
    }

    /// Weights uniform in `±1/√cols`, zero bias.
    pub fn uniform(rows: usize, cols: usize, activation: Activation, rng: &mut Rng) -> Self {
        let bound = 1.0 / (cols as f64).sqrt();
        let weights = (0..rows * cols)
            .map(|_| rng.random_range(-bound..bound) as f32)
            .collect();
        Self::new(rows, cols, weights, vec![0.0; rows], activation).expect("positive shape")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.weights[r * self.cols..(r + 1) * self.cols]
    }

    pub fn pre_activation(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Shape(format!(
                "layer expects {} inputs, got {}",
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| dot_f32_f64(self.row(r), x) + f64::from(self.bias[r]))
            .collect())
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.activation.apply(&self.pre_activation(x)?))
    }

    /// Order-independent fingerprint of the exact parameter bits.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            h ^= x;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        };
        eat(self.rows as u64);
        eat(self.cols as u64);
        for w in self.weights.iter().chain(&self.bias) {
            eat(u64::from(w.to_bits()));
        }
        h
    }
}

#[derive(Clone, Debug, Default)]
pub struct ForwardCache {
    /// Input to each layer.
    pub inputs: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    pub pre: Vec<Vec<f64>>,
    /// Output of each layer.
    pub outputs: Vec<Vec<f64>>,
}

pub fn forward(layers: &[DenseLayer], x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
    let mut cache = ForwardCache::default();
    let mut cur = x.to_vec();
    for layer in layers {
        let pre = layer.pre_activation(&cur)?;
        let out = layer.activation.apply(&pre);
        cache.inputs.push(std::mem::replace(&mut cur, out.clone()));
        cache.pre.push(pre);
        cache.outputs.push(out);
    }
    Ok((cur, cache))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LayerGrad {
    pub fn zeros_like(layer: &DenseLayer) -> Self {
        Self {
            weights: vec![0.0; layer.weights.len()],
            bias: vec![0.0; layer.bias.len()],
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.weights
            .iter_mut()
            .chain(&mut self.bias)
            .for_each(|g| *g *= s);
    }
}

/// Accumulates parameter gradients of `layers` into `grads` given
/// `grad_out = ∂L/∂output` and returns `∂L/∂input`.
pub fn backward(
    layers: &[DenseLayer],
    cache: &ForwardCache,
    grad_out: &[f64],
    grads: &mut [LayerGrad],
) -> Result<Vec<f64>> {
    if grads.len() != layers.len() || cache.pre.len() != layers.len() {
        return Err(Error::Shape(
            "backward: layer/cache/grad count mismatch".into(),
        ));
    }
    let mut g = grad_out.to_vec();
    for (l, layer) in layers.iter().enumerate().rev() {
        let pre = &cache.pre[l];
        let input = &cache.inputs[l];
        if g.len() != layer.rows {
            return Err(Error::Shape(format!(
                "backward: layer {l} has {} outputs, gradient has {}",
                layer.rows,
                g.len()
            )));
        }
        let g_pre: Vec<f64> = match layer.activation {
            Activation::Identity => g,
            Activation::Square => pre.iter().zip(&g).map(|(p, gi)| 2.0 * p * gi).collect(),
            Activation::LogSoftmax => {
                let total: f64 = g.iter().sum();
                cache.outputs[l]
                    .iter()
                    .zip(&g)
                    .map(|(lp, gi)| gi - lp.exp() * total)
                    .collect()
            }
        };
        let grad = &mut grads[l];
        let mut g_in = vec![0.0; layer.cols];
        for (r, &gp) in g_pre.iter().enumerate() {
            grad.bias[r] += gp;
            if gp == 0.0 {
                continue;
            }
            let gw = &mut grad.weights[r * layer.cols..(r + 1) * layer.cols];
            for ((gwc, &xc), (gin, &w)) in gw
                .iter_mut()
                .zip(input)
                .zip(g_in.iter_mut().zip(layer.row(r)))
            {
                *gwc += gp * xc;
                *gin += gp * f64::from(w);
            }
        }
        g = g_in;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_layer_passes_through() {
        let layers = [DenseLayer::identity(2)];
        let (y, _) = forward(&layers, &[1.0, 2.0]).unwrap();
        assert_eq!(y, [1.0, 2.0]);
    }

    #[test]
    fn square_activation() {
        let mut l = DenseLayer::identity(2);
        l.activation = Activation::Square;
        assert_eq!(l.apply(&[2.0, -3.0]).unwrap(), [4.0, 9.0]);
    }

    #[test]
    fn log_softmax_of_equal_logits() {
        let mut l = DenseLayer::identity(2);
        l.activation = Activation::LogSoftmax;
        let y = l.apply(&[0.0, 0.0]).unwrap();
        for v in y {
            assert!((v + std::f64::consts::LN_2).abs() < 1e-15);
        }
    }

    #[test]
    fn shape_errors() {
        let l = DenseLayer::identity(3);
        assert!(matches!(l.apply(&[1.0]), Err(Error::Shape(_))));
        assert!(DenseLayer::new(2, 2, vec![0.0; 3], vec![0.0; 2], Activation::Identity).is_err());
        let chain = [
            DenseLayer::zeros(4, 3, Activation::Square),
            DenseLayer::zeros(2, 5, Activation::LogSoftmax),
        ];
        assert!(forward(&chain, &[0.0; 3]).is_err());
    }

    #[test]
    fn uniform_init_bounds() {
        let mut rng = crate::rng::stream(0, "t");
        let l = DenseLayer::uniform(16, 25, Activation::Square, &mut rng);
        assert!(l.weights.iter().all(|w| w.abs() <= 0.2));
        assert!(l.bias.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn checksum_tracks_bits() {
        let a = DenseLayer::identity(3);
        let mut b = a.clone();
        assert_eq!(a.checksum(), b.checksum());
        b.weights[4] = f32::from_bits(b.weights[4].to_bits() + 1);
        assert_ne!(a.checksum(), b.checksum());
    }

    proptest::proptest! {
        #[test]
        fn log_softmax_normalizes(logits in proptest::collection::vec(-500.0f64..500.0, 1..12)) {
            let total: f64 = log_softmax(&logits).iter().map(|x| x.exp()).sum();
            proptest::prop_assert!((total - 1.0).abs() < 1e-6);
        }
    }
}
