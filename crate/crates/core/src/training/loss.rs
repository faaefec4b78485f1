use crate::numerics::{sigmoid, softplus, DifferentiableOp};
use crate::{Error, Result};

/// Binary cross-entropy on a logit. Returns `(loss, ∂L/∂f)`.
pub fn bce(y: u8, f: f64) -> (f64, f64) {
    let loss = if y == 1 { softplus(-f) } else { softplus(f) };
    (loss, sigmoid(f) - y as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    /// `∂L/∂f_i` for every logit in the batch.
    pub grads: Vec<f64>,
}

/// `(1/N) Σ w_i BCE_i + λ · mean_{(p, n)} ln(1 + e^{f_n − f_p})`.
///
/// `weights` defaults to all ones. The pairwise term is zero when the batch
/// lacks either class.
pub fn combined_loss(
    logits: &[f64],
    labels: &[u8],
    weights: Option<&[f64]>,
    lambda: f64,
) -> Result<LossOutput> {
    let n = logits.len();
    if labels.len() != n || weights.is_some_and(|w| w.len() != n) {
        return Err(Error::Input(
            "logits, labels and weights differ in length".into(),
        ));
    }
    if n == 0 {
        return Ok(LossOutput {
            loss: 0.0,
            grads: Vec::new(),
        });
    }
    let inv = 1.0 / n as f64;
    let mut loss = 0.0;
    let mut grads = vec![0.0; n];
    for i in 0..n {
        let w = weights.map_or(1.0, |w| w[i]);
        let (l, g) = bce(labels[i], logits[i]);
        loss += w * l * inv;
        grads[i] = w * g * inv;
    }
    if lambda > 0.0 {
        let pos: Vec<usize> = (0..n).filter(|&i| labels[i] == 1).collect();
        let neg: Vec<usize> = (0..n).filter(|&i| labels[i] == 0).collect();
        if !pos.is_empty() && !neg.is_empty() {
            let scale = lambda / (pos.len() * neg.len()) as f64;
            for &p in &pos {
                for &q in &neg {
                    let d = logits[q] - logits[p];
                    loss += scale * softplus(d);
                    let s = scale * sigmoid(d);
                    grads[q] += s;
                    grads[p] -= s;
                }
            }
        }
    }
    Ok(LossOutput { loss, grads })
}

/// The combined loss as an operator over the batch logits.
#[derive(Debug, Clone)]
pub struct LossOp {
    pub labels: Vec<u8>,
    pub weights: Option<Vec<f64>>,
    pub lambda: f64,
}

impl DifferentiableOp for LossOp {
    fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![
            combined_loss(input, &self.labels, self.weights.as_deref(), self.lambda)?.loss,
        ])
    }

    fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        let out = combined_loss(input, &self.labels, self.weights.as_deref(), self.lambda)?;
        Ok(out.grads.into_iter().map(|g| g * upstream[0]).collect())
    }
}
