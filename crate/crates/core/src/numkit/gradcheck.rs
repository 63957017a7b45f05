use super::{loss_and_grad, network::cross_entropy, GradientBundle, Matrix, ParameterSet};
use crate::{Error, Result};

/// Central finite-difference gradient of the cross-entropy loss, in
/// [`ParameterSet::flat`] order.
pub fn numeric_gradient(
    params: &ParameterSet,
    batch: &Matrix,
    targets: &Matrix,
    h: f64,
) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::Input(format!("step h must be positive, got {h}")));
    }
    let mut probe = params.clone();
    let mut out = Vec::with_capacity(params.num_params());
    for i in 0..params.num_params() {
        let orig = *probe.param_mut(i);
        *probe.param_mut(i) = orig + h;
        let up = cross_entropy(&probe.logits(batch)?, targets)?;
        *probe.param_mut(i) = orig - h;
        let down = cross_entropy(&probe.logits(batch)?, targets)?;
        *probe.param_mut(i) = orig;
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

/// `max_i |a_i − n_i| / max(|a_i|, |n_i|, 1e-12)`.
pub fn max_relative_error(analytic: &GradientBundle, numeric: &[f64]) -> Result<f64> {
    let flat: Vec<f64> = analytic
        .layers
        .iter()
        .flat_map(|g| g.weights.data().iter().chain(&g.bias).copied())
        .collect();
    if flat.len() != numeric.len() {
        return Err(Error::Input(format!(
            "analytic gradient has {} entries, numeric {}",
            flat.len(),
            numeric.len()
        )));
    }
    Ok(flat
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-12))
        .fold(0.0, f64::max))
}

/// Largest relative error between backpropagated and finite-difference
/// gradients over all parameters.
pub fn grad_check(params: &ParameterSet, batch: &Matrix, targets: &Matrix, h: f64) -> Result<f64> {
    let analytic = loss_and_grad(params, batch, targets)?;
    let numeric = numeric_gradient(params, batch, targets, h)?;
    max_relative_error(&analytic, &numeric)
}
