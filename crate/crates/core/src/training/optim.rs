use crate::model::ParamStore;
use crate::numerics::Matrix;

/// One Adagrad update: `acc ← acc + g²`, then `p ← p − lr·g/√(acc + eps)`.
pub fn adagrad_step(params: &mut [f64], grads: &[f64], acc: &mut [f64], lr: f64, eps: f64) {
    for ((p, &g), a) in params.iter_mut().zip(grads).zip(acc.iter_mut()) {
        if g == 0.0 {
            continue;
        }
        *a += g * g;
        *p -= lr * g / (*a + eps).sqrt();
    }
}

/// Adagrad over a parameter store. Sparse blocks only visit rows that
/// received gradient.
#[derive(Debug, Clone)]
pub struct Adagrad {
    pub lr: f64,
    pub eps: f64,
    acc: Vec<Matrix>,
}

impl Adagrad {
    pub fn new(store: &ParamStore, lr: f64, eps: f64) -> Self {
        let acc = store
            .blocks()
            .iter()
            .map(|b| Matrix::zeros(b.value.rows(), b.value.cols()))
            .collect();
        Adagrad { lr, eps, acc }
    }

    pub fn step(&mut self, store: &mut ParamStore) {
        for (b, acc) in store.blocks_mut().iter_mut().zip(&mut self.acc) {
            if b.is_sparse() {
                for r in b.active_rows() {
                    adagrad_step(
                        b.value.row_mut(r),
                        b.grad.row(r),
                        acc.row_mut(r),
                        self.lr,
                        self.eps,
                    );
                }
            } else {
                adagrad_step(
                    b.value.as_mut_slice(),
                    b.grad.as_slice(),
                    acc.as_mut_slice(),
                    self.lr,
                    self.eps,
                );
            }
        }
    }
}
