use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::{Error, Result};

/// Singular values, sorted non-increasing, all non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum(Vec<f64>);

impl Spectrum {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Input(
                "singular values must be finite and non-negative".into(),
            ));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Spectrum(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0.first().copied().unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Thin SVD `m = u · diag(s) · vᵀ` with `k = min(rows, cols)` components.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Spectrum,
    pub v: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        let k = self.s.len();
        let mut us = self.u.clone();
        for r in 0..us.rows() {
            for c in 0..k {
                us[(r, c)] *= self.s.values()[c];
            }
        }
        us.matmul(&self.v.transpose()).expect("conforming factors")
    }
}

const MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd(m: &Matrix) -> Result<Svd> {
    if !m.is_finite() {
        return Err(Error::Input("svd: matrix has non-finite entries".into()));
    }
    if m.rows() < m.cols() {
        let t = svd(&m.transpose())?;
        return Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        });
    }
    let (rows, cols) = m.shape();
    // Work column-major: a[j] is column j.
    let mut a: Vec<Vec<f64>> = (0..cols).map(|j| m.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| {
            let mut e = vec![0.0; cols];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = a[p].iter().map(|x| x * x).sum();
                let beta: f64 = a[q].iter().map(|x| x * x).sum();
                let gamma: f64 = a[p].iter().zip(&a[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = a
        .iter()
        .enumerate()
        .map(|(j, col)| (col.iter().map(|x| x * x).sum::<f64>().sqrt(), j))
        .collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));

    let scale = order.first().map_or(0.0, |o| o.0);
    let tiny = f64::EPSILON * scale.max(f64::MIN_POSITIVE) * rows as f64;
    let mut u = Matrix::zeros(rows, cols);
    let mut vm = Matrix::zeros(cols, cols);
    let mut sing = Vec::with_capacity(cols);
    let mut missing = Vec::new();
    for (k, &(sigma, j)) in order.iter().enumerate() {
        for r in 0..cols {
            vm[(r, k)] = v[j][r];
        }
        if sigma > tiny {
            for r in 0..rows {
                u[(r, k)] = a[j][r] / sigma;
            }
            sing.push(sigma);
        } else {
            sing.push(0.0);
            missing.push(k);
        }
    }
    complete_basis(&mut u, &missing);
    Ok(Svd {
        u,
        s: Spectrum::new(sing)?,
        v: vm,
    })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Fill the listed (zero) columns of `u` with unit vectors orthogonal to
/// every other column, via Gram-Schmidt over the standard basis.
fn complete_basis(u: &mut Matrix, missing: &[usize]) {
    let rows = u.rows();
    let mut candidate = 0;
    for &k in missing {
        while candidate < rows {
            let mut e = vec![0.0; rows];
            e[candidate] = 1.0;
            candidate += 1;
            // two passes of modified Gram-Schmidt for stability
            for _ in 0..2 {
                for j in 0..u.cols() {
                    if j == k {
                        continue;
                    }
                    let col = u.col(j);
                    let proj: f64 = col.iter().zip(&e).map(|(a, b)| a * b).sum();
                    for (x, c) in e.iter_mut().zip(&col) {
                        *x -= proj * c;
                    }
                }
            }
            let n = e.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-6 {
                for r in 0..rows {
                    u[(r, k)] = e[r] / n;
                }
                break;
            }
        }
    }
}
