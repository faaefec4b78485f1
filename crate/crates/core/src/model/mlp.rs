use super::params::{BlockId, ParamStore};
use crate::numerics::{DifferentiableOp, Matrix, SeededRng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `out × in`
    pub w: BlockId,
    /// `1 × out`
    pub b: BlockId,
    pub in_dim: usize,
    pub out_dim: usize,
}

/// Dense layers; ReLU after every layer except the last, or nowhere in
/// linear mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
    pub linear: bool,
}

#[derive(Debug, Clone, Default)]
pub struct MlpTrace {
    /// Input of each layer followed by the final output.
    pub acts: Vec<Vec<f64>>,
}

impl MlpTrace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map_or(&[], |v| v)
    }
}

impl Mlp {
    /// `dims = [in, h_1, …, out]`. Weights are He-initialised.
    pub fn build(
        store: &mut ParamStore,
        prefix: &str,
        dims: &[usize],
        linear: bool,
        rng: &mut SeededRng,
    ) -> Self {
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(l, d)| {
                let std = (2.0 / d[0].max(1) as f64).sqrt();
                let w = store.add(
                    format!("{prefix}/l{l}/w"),
                    Matrix::random_normal(d[1], d[0], std, rng),
                    false,
                );
                let b = store.add(format!("{prefix}/l{l}/b"), Matrix::zeros(1, d[1]), false);
                Layer {
                    w,
                    b,
                    in_dim: d[0],
                    out_dim: d[1],
                }
            })
            .collect();
        Mlp { layers, linear }
    }

    pub fn in_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    fn relu_after(&self, l: usize) -> bool {
        !self.linear && l + 1 < self.layers.len()
    }

    pub fn forward(&self, store: &ParamStore, x: &[f64]) -> MlpTrace {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for (l, layer) in self.layers.iter().enumerate() {
            let w = store.value(layer.w);
            let b = store.value(layer.b).as_slice();
            let input = acts.last().expect("non-empty");
            let mut y = w.matvec(input);
            for (v, bi) in y.iter_mut().zip(b) {
                *v += bi;
                if self.relu_after(l) && *v < 0.0 {
                    *v = 0.0;
                }
            }
            acts.push(y);
        }
        MlpTrace { acts }
    }

    /// Accumulates parameter gradients and returns `∂L/∂x`. When
    /// `input_grad` is false the input gradient is skipped (returns empty).
    pub fn backward(
        &self,
        store: &mut ParamStore,
        trace: &MlpTrace,
        dout: &[f64],
        input_grad: bool,
    ) -> Vec<f64> {
        let mut delta = dout.to_vec();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            if self.relu_after(l) {
                for (d, &a) in delta.iter_mut().zip(&trace.acts[l + 1]) {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let input = &trace.acts[l];
            {
                let bb = store.block_mut(layer.b);
                for (g, d) in bb.grad.as_mut_slice().iter_mut().zip(&delta) {
                    *g += d;
                }
            }
            let wb = store.block_mut(layer.w);
            let need_dx = l > 0 || input_grad;
            let mut dx = if need_dx {
                vec![0.0; layer.in_dim]
            } else {
                Vec::new()
            };
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let grow = &mut wb.grad.as_mut_slice()[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (g, x) in grow.iter_mut().zip(input) {
                    *g += d * x;
                }
                if need_dx {
                    let wrow = wb.value.row(o);
                    for (a, w) in dx.iter_mut().zip(wrow) {
                        *a += d * w;
                    }
                }
            }
            delta = dx;
        }
        delta
    }
}

/// An MLP over flat `[x | parameters]` for gradient checking.
#[derive(Debug, Clone)]
pub struct MlpOp {
    pub dims: Vec<usize>,
    pub linear: bool,
}

impl MlpOp {
    fn build(&self, input: &[f64]) -> Result<(Mlp, ParamStore, Vec<f64>)> {
        let mut store = ParamStore::new();
        let mut rng = crate::numerics::seeded_rng(0);
        let mlp = Mlp::build(&mut store, "m", &self.dims, self.linear, &mut rng);
        let n_in = self.dims[0];
        if input.len() != n_in + store.total_len() {
            return Err(Error::Input("mlp op input length".into()));
        }
        store.unflatten(&input[n_in..])?;
        Ok((mlp, store, input[..n_in].to_vec()))
    }
}

impl DifferentiableOp for MlpOp {
    fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let (mlp, store, x) = self.build(input)?;
        Ok(mlp.forward(&store, &x).output().to_vec())
    }

    fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        let (mlp, mut store, x) = self.build(input)?;
        let trace = mlp.forward(&store, &x);
        let mut out = mlp.backward(&mut store, &trace, upstream, true);
        out.extend(store.flatten_grads());
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{grad_check, normal, seeded_rng, GRAD_CHECK_EPS};

    #[test]
    fn mlp_grad_check() {
        for seed in 0..25 {
            let mut rng = seeded_rng(seed);
            for linear in [false, true] {
                let op = MlpOp {
                    dims: vec![5, 7, 3],
                    linear,
                };
                let n = 5 + 7 * 5 + 7 + 3 * 7 + 3;
                let x: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
                let err = grad_check(&op, &x, GRAD_CHECK_EPS).unwrap();
                assert!(err < 1e-4, "seed {seed}: {err}");
            }
        }
    }

    #[test]
    fn zero_weights_give_bias() {
        let mut store = ParamStore::new();
        let mut rng = seeded_rng(1);
        let mlp = Mlp::build(&mut store, "t", &[3, 4, 1], false, &mut rng);
        for b in store.blocks_mut() {
            b.value.as_mut_slice().fill(0.0);
        }
        let last = mlp.layers[1].b;
        store.value_mut(last).as_mut_slice()[0] = 0.7;
        assert_eq!(mlp.forward(&store, &[1.0, 2.0, 3.0]).output(), &[0.7]);
    }
}
