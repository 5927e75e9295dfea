use crate::{Error, Result};

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

/// Negative log likelihood of `target` and its gradient with respect to the
/// logits that produced `log_probs` (`softmax − one_hot`).
pub fn nll_loss(log_probs: &[f64], target: usize) -> Result<(f64, Vec<f64>)> {
    if target >= log_probs.len() {
        return Err(Error::Shape(format!(
            "target class {target} out of range for {} classes",
            log_probs.len()
        )));
    }
    let grad = log_probs
        .iter()
        .enumerate()
        .map(|(k, lp)| lp.exp() - if k == target { 1.0 } else { 0.0 })
        .collect();
    Ok((-log_probs[target], grad))
}

fn norm_sq<T: Copy + Into<f64>>(v: &[T]) -> f64 {
    v.iter()
        .map(|&x| {
            let x: f64 = x.into();
            x * x
        })
        .sum()
}

pub fn cosine_similarity<T: Copy + Into<f64>>(u: &[T], v: &[T]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Dimension(format!(
            "cosine of vectors with dims {} and {}",
            u.len(),
            v.len()
        )));
    }
    let dot: f64 = u.iter().zip(v).map(|(&a, &b)| a.into() * b.into()).sum();
    let nu = norm_sq(u);
    let nv = norm_sq(v);
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::UndefinedSimilarity);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Cosine and its gradients
/// `∂cos/∂u = v/(‖u‖‖v‖) − cos·u/‖u‖²` (and symmetrically for `v`).
pub fn cosine_with_grads(u: &[f64], v: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if u.len() != v.len() {
        return Err(Error::Dimension(format!(
            "cosine of vectors with dims {} and {}",
            u.len(),
            v.len()
        )));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu2 = norm_sq(u);
    let nv2 = norm_sq(v);
    if nu2 == 0.0 || nv2 == 0.0 {
        return Err(Error::UndefinedSimilarity);
    }
    let denom = nu2.sqrt() * nv2.sqrt();
    let cos = dot / denom;
    let gu = u
        .iter()
        .zip(v)
        .map(|(a, b)| b / denom - cos * a / nu2)
        .collect();
    let gv = u
        .iter()
        .zip(v)
        .map(|(a, b)| a / denom - cos * b / nv2)
        .collect();
    Ok((cos, gu, gv))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CosineLoss {
    pub loss: f64,
    pub cosine: f64,
    pub grad_first: Vec<f64>,
    pub grad_second: Vec<f64>,
}

/// `(cos(t1, t2) − y)²` with `y = +1` for coreferent pairs and `−1` otherwise.
pub fn mse_cosine_loss(t1: &[f64], t2: &[f64], coreferent: bool) -> Result<CosineLoss> {
    let (cos, g1, g2) = cosine_with_grads(t1, t2)?;
    let target = if coreferent { 1.0 } else { -1.0 };
    let diff = cos - target;
    let scale = 2.0 * diff;
    Ok(CosineLoss {
        loss: diff * diff,
        cosine: cos,
        grad_first: g1.into_iter().map(|g| g * scale).collect(),
        grad_second: g2.into_iter().map(|g| g * scale).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

    #[test]
    fn nll_examples() {
        let (loss, grad) = nll_loss(&[-LN_2, -LN_2], 0).unwrap();
        assert!((loss - LN_2).abs() < 1e-15);
        // softmax(0,0) − onehot(0) = (−0.5, 0.5)
        assert!((grad[0] + 0.5).abs() < 1e-15 && (grad[1] - 0.5).abs() < 1e-15);

        let (loss, _) = nll_loss(&log_softmax(&[0.0, -800.0]), 0).unwrap();
        assert!(loss.abs() < 1e-300);

        assert!(matches!(nll_loss(&[-LN_2, -LN_2], 2), Err(Error::Shape(_))));
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine_similarity(&[3.0f32, -4.0], &[3.0, -4.0]).unwrap() - 1.0).abs() < 1e-15);
        let c = cosine_similarity(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((c - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(matches!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::UndefinedSimilarity)
        ));
        assert!(cosine_similarity(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn mse_cosine_examples() {
        let t = [0.3, -1.2, 2.0];
        let l = mse_cosine_loss(&t, &t, true).unwrap();
        assert!(l.loss.abs() < 1e-15);
        let l = mse_cosine_loss(&[1.0, 0.0], &[0.0, 1.0], false).unwrap();
        assert_eq!(l.loss, 1.0);
        assert!(mse_cosine_loss(&[0.0, 0.0], &[0.0, 1.0], false).is_err());
    }

    /// Central differences in f64 on random 8-dim inputs.
    #[test]
    fn mse_cosine_gradient_matches_central_differences() {
        use rand::Rng as _;
        let mut rng = crate::rng::stream(11, "mse-cos-fd");
        for case in 0..50 {
            let t1: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let t2: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let label = case % 2 == 0;
            let l = mse_cosine_loss(&t1, &t2, label).unwrap();
            let h = 1e-6;
            for (which, base, grad) in [(0, &t1, &l.grad_first), (1, &t2, &l.grad_second)] {
                for i in 0..8 {
                    let mut p = base.clone();
                    let mut m = base.clone();
                    p[i] += h;
                    m[i] -= h;
                    let eval = |x: &[f64]| {
                        if which == 0 {
                            mse_cosine_loss(x, &t2, label).unwrap().loss
                        } else {
                            mse_cosine_loss(&t1, x, label).unwrap().loss
                        }
                    };
                    let fd = (eval(&p) - eval(&m)) / (2.0 * h);
                    let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-6);
                    assert!(
                        rel < 1e-4,
                        "case {case} vec {which} idx {i}: fd {fd} vs {}",
                        grad[i]
                    );
                }
            }
        }
    }
}
