use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 5e-6,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// AdamW with decoupled weight decay:
/// `θ ← θ − lr·(m̂/(√v̂ + ε) + λ·θ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamWState {
    pub config: AdamWConfig,
    pub t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamWState {
    /// One moment buffer per parameter group of the given sizes.
    pub fn new(config: AdamWConfig, group_sizes: &[usize]) -> Self {
        Self {
            config,
            t: 0,
            m: group_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: group_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn first_moment(&self, group: usize) -> &[f64] {
        &self.m[group]
    }

    pub fn second_moment(&self, group: usize) -> &[f64] {
        &self.v[group]
    }

    pub fn step(&mut self, params: &mut [&mut [f32]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "optimizer has {} groups, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (g, (p, gr)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.m[g].len() || gr.len() != self.m[g].len() {
                return Err(Error::Shape(format!("parameter group {g} size mismatch")));
            }
            if let Some(i) = gr.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "gradient of group {g} index {i} is {} at step {}",
                    gr[i],
                    self.t + 1
                )));
            }
        }
        self.t += 1;
        let AdamWConfig {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let t = i32::try_from(self.t).unwrap_or(i32::MAX);
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (g, (p, gr)) in params.iter_mut().zip(grads).enumerate() {
            let m = &mut self.m[g];
            let v = &mut self.v[g];
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * gr[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * gr[i] * gr[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                let theta = f64::from(p[i]);
                p[i] = (theta - lr * (m_hat / (v_hat.sqrt() + eps) + weight_decay * theta)) as f32;
            }
        }
        Ok(())
    }
}

/// Single-group convenience wrapper around [`AdamWState::step`].
pub fn adamw_step(params: &mut [f32], grads: &[f64], state: &mut AdamWState) -> Result<()> {
    state.step(&mut [params], &[grads])
}
