use crate::numerics::{masked_softmax, DifferentiableOp, Matrix};
use crate::{Error, Result};

/// Gate forward: `g = softmax(W·z + b)` over experts, where `z` is the
/// detached concatenation of expert outputs, and `h = (1/E) Σ g_e h_e`.
pub fn gate_forward(w: &Matrix, b: &[f64], z: &[f64], hs: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
    let logits: Vec<f64> = w.matvec(z).iter().zip(b).map(|(a, c)| a + c).collect();
    let g = masked_softmax(&logits, None);
    (g.clone(), combine(&g, hs))
}

pub fn combine(g: &[f64], hs: &[&[f64]]) -> Vec<f64> {
    let e = hs.len() as f64;
    let mut h = vec![0.0; hs.first().map_or(0, |v| v.len())];
    for (gi, hi) in g.iter().zip(hs) {
        crate::numerics::axpy(&mut h, gi / e, hi);
    }
    h
}

/// Returns `(∂/∂h_e per expert, ∂/∂gate logits)` from `∂L/∂h`.
pub fn gate_backward(g: &[f64], hs: &[&[f64]], dh: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let e = hs.len() as f64;
    let dhs = g
        .iter()
        .map(|gi| dh.iter().map(|d| d * gi / e).collect())
        .collect();
    let dg: Vec<f64> = hs.iter().map(|h| crate::numerics::dot(h, dh) / e).collect();
    let mean: f64 = g.iter().zip(&dg).map(|(a, b)| a * b).sum();
    let dlogit = g.iter().zip(&dg).map(|(a, d)| a * (d - mean)).collect();
    (dhs, dlogit)
}

/// Gate over flat `[W (E × |z|) | b (E) | h_1 … h_E]`, with `z` fixed.
#[derive(Debug, Clone)]
pub struct GateOp {
    pub n_experts: usize,
    pub dim: usize,
    /// Detached gate input.
    pub z: Vec<f64>,
}

impl GateOp {
    fn split<'a>(&self, x: &'a [f64]) -> Result<(Matrix, &'a [f64], Vec<&'a [f64]>)> {
        let (e, zl, d) = (self.n_experts, self.z.len(), self.dim);
        if x.len() != e * zl + e + e * d {
            return Err(Error::Input("gate op input length".into()));
        }
        let w = Matrix::from_vec(e, zl, x[..e * zl].to_vec())?;
        let b = &x[e * zl..e * zl + e];
        let hs = x[e * zl + e..].chunks(d).collect();
        Ok((w, b, hs))
    }
}

impl DifferentiableOp for GateOp {
    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (w, b, hs) = self.split(x)?;
        Ok(gate_forward(&w, b, &self.z, &hs).1)
    }

    fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        let (w, b, hs) = self.split(x)?;
        let (g, _) = gate_forward(&w, b, &self.z, &hs);
        let (dhs, dlogit) = gate_backward(&g, &hs, upstream);
        let mut out = Vec::with_capacity(x.len());
        for d in &dlogit {
            out.extend(self.z.iter().map(|z| d * z));
        }
        out.extend(&dlogit);
        for d in dhs {
            out.extend(d);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{grad_check, normal, seeded_rng, GRAD_CHECK_EPS};

    #[test]
    fn gate_grad_check_and_simplex() {
        for seed in 0..25 {
            let mut rng = seeded_rng(seed);
            let op = GateOp {
                n_experts: 3,
                dim: 4,
                z: (0..12).map(|_| normal(&mut rng)).collect(),
            };
            let x: Vec<f64> = (0..3 * 12 + 3 + 12).map(|_| normal(&mut rng)).collect();
            assert!(grad_check(&op, &x, GRAD_CHECK_EPS).unwrap() < 1e-4);
            let (w, b, hs) = op.split(&x).unwrap();
            let (g, _) = gate_forward(&w, b, &op.z, &hs);
            assert!(g.iter().all(|&v| v >= 0.0));
            assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
