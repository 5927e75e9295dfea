use super::layer::{backward, forward, DenseLayer, LayerGrad};

/// Central-difference step applied to the `f32` parameter.
pub const FD_STEP: f32 = 1e-3;

/// Denominator floor for [`relative_error`]; below it errors are absolute.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_ERROR_FLOOR)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(layer, flat parameter index)` of the worst entry; biases follow weights.
    pub worst: Option<(usize, usize)>,
    pub checked: usize,
    pub tol: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= self.tol
    }
}

/// Compares `analytic` gradients of `loss` (a function of the layer
/// parameters) against central differences.
///
/// Each parameter is nudged by ±[`FD_STEP`] in `f32`; the difference quotient
/// divides by the step actually realised after rounding and the loss is
/// evaluated in `f64`.
pub fn compare_with_finite_differences<F>(
    layers: &[DenseLayer],
    analytic: &[LayerGrad],
    mut loss: F,
    tol: f64,
) -> GradCheckReport
where
    F: FnMut(&[DenseLayer]) -> f64,
{
    let mut work = layers.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
        tol,
    };
    for l in 0..layers.len() {
        let n_w = layers[l].weights.len();
        for k in 0..layers[l].num_params() {
            let original = if k < n_w {
                layers[l].weights[k]
            } else {
                layers[l].bias[k - n_w]
            };
            let plus = original + FD_STEP;
            let minus = original - FD_STEP;
            let mut eval_at = |value: f32| {
                if k < n_w {
                    work[l].weights[k] = value;
                } else {
                    work[l].bias[k - n_w] = value;
                }
                let v = loss(&work);
                if k < n_w {
                    work[l].weights[k] = original;
                } else {
                    work[l].bias[k - n_w] = original;
                }
                v
            };
            let fd = (eval_at(plus) - eval_at(minus)) / (f64::from(plus) - f64::from(minus));
            let an = if k < n_w {
                analytic[l].weights[k]
            } else {
                analytic[l].bias[k - n_w]
            };
            let err = relative_error(an, fd);
            report.checked += 1;
            if err > report.max_rel_error || err.is_nan() {
                report.max_rel_error = if err.is_nan() { f64::INFINITY } else { err };
                report.worst = Some((l, k));
            }
        }
    }
    report
}

/// Backprop versus central differences for `loss(network(x))`, where
/// `output_loss` returns the loss and its gradient with respect to the
/// network output.
pub fn finite_difference_check<F>(
    layers: &[DenseLayer],
    output_loss: F,
    x: &[f64],
    tol: f64,
) -> crate::Result<GradCheckReport>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let (out, cache) = forward(layers, x)?;
    let (_, grad_out) = output_loss(&out);
    let mut grads: Vec<LayerGrad> = layers.iter().map(LayerGrad::zeros_like).collect();
    backward(layers, &cache, &grad_out, &mut grads)?;
    Ok(compare_with_finite_differences(
        layers,
        &grads,
        |ls| {
            let (y, _) = forward(ls, x).expect("shapes checked above");
            output_loss(&y).0
        },
        tol,
    ))
}
