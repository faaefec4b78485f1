use rand::Rng;

use super::seeded_rng;
use crate::{Error, Result};

/// Step used by the gradient checker unless a caller overrides it.
pub const GRAD_CHECK_EPS: f64 = 1e-5;

/// Seed of the random linear functional that turns vector outputs into a
/// scalar for checking.
const FUNCTIONAL_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

/// A differentiable map over a flat vector of inputs.
///
/// Trainable parameters are treated as inputs: an operator that owns
/// parameters exposes them through the same flat vector so that one
/// checker covers both input and parameter gradients.
pub trait DifferentiableOp {
    fn forward(&self, input: &[f64]) -> Result<Vec<f64>>;

    /// Vector-Jacobian product: given `∂L/∂output`, return `∂L/∂input`.
    fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>>;
}

impl<T: DifferentiableOp + ?Sized> DifferentiableOp for &T {
    fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        (**self).forward(input)
    }

    fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        (**self).backward(input, upstream)
    }
}

/// Compares the analytic gradient of `op` against central differences.
///
/// Vector-valued operators are composed with a fixed random linear
/// functional. Returns the worst coordinate of
/// `|analytic - numeric| / max(1e-8, |analytic| + |numeric|)`.
pub fn grad_check<O: DifferentiableOp + ?Sized>(op: &O, inputs: &[f64], eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1e-3) {
        return Err(Error::Input(format!(
            "grad_check eps {eps} outside (0, 1e-3]"
        )));
    }
    let out = op.forward(inputs)?;
    let weights: Vec<f64> = if out.len() == 1 {
        vec![1.0]
    } else {
        let mut rng = seeded_rng(FUNCTIONAL_SEED);
        (0..out.len())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect()
    };
    let scalar = |x: &[f64]| -> Result<f64> {
        let y = op.forward(x)?;
        let l: f64 = y.iter().zip(&weights).map(|(a, b)| a * b).sum();
        if !l.is_finite() {
            return Err(Error::Evaluation(format!(
                "non-finite loss {l} while probing"
            )));
        }
        Ok(l)
    };
    scalar(inputs)?;
    let analytic = op.backward(inputs, &weights)?;
    if analytic.len() != inputs.len() {
        return Err(Error::Evaluation(format!(
            "backward returned {} gradients for {} inputs",
            analytic.len(),
            inputs.len()
        )));
    }
    let mut x = inputs.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + eps;
        let plus = scalar(&x)?;
        x[i] = orig - eps;
        let minus = scalar(&x)?;
        x[i] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        let a = analytic[i];
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    Ok(worst)
}
