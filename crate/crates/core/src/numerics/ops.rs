//! Elementary differentiable operators over flat inputs.
//!
//! Each operator documents how its flat input vector is laid out.

use super::{DifferentiableOp, Matrix};
use crate::{Error, Result};

fn expect_len(input: &[f64], n: usize, what: &str) -> Result<()> {
    if input.len() != n {
        return Err(Error::Input(format!(
            "{what}: expected {n} inputs, got {}",
            input.len()
        )));
    }
    Ok(())
}

/// `A · B` with input `[A (m×k, row-major) | B (k×n)]`.
#[derive(Debug, Clone, Copy)]
pub struct MatMul {
    pub m: usize,
    pub k: usize,
    pub n: usize,
}

impl MatMul {
    fn split(&self, input: &[f64]) -> Result<(Matrix, Matrix)> {
        expect_len(input, self.m * self.k + self.k * self.n, "matmul")?;
        let (a, b) = input.split_at(self.m * self.k);
        Ok((
            Matrix::from_vec(self.m, self.k, a.to_vec())?,
            Matrix::from_vec(self.k, self.n, b.to_vec())?,
        ))
    }
}

impl DifferentiableOp for MatMul {
    fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let (a, b) = self.split(input)?;
        Ok(a.matmul(&b)?.into_vec())
    }

    fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        let (a, b) = self.split(input)?;
        let g = Matrix::from_vec(self.m, self.n, upstream.to_vec())?;
        let ga = g.matmul(&b.transpose())?;
        let gb = a.transpose().matmul(&g)?;
        let mut out = ga.into_vec();
        out.extend(gb.into_vec());
        Ok(out)
    }
}

/// Element-wise `a + b` with input `[a | b]`.
#[derive(Debug, Clone, Copy)]
pub struct Add {
    pub len: usize,
}

impl DifferentiableOp for Add {
    fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        expect_len(input, 2 * self.len, "add")?;
        let (a, b) = input.split_at(self.len);
        Ok(a.iter().zip(b).map(|(x, y)| x + y).collect())
    }

    fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        expect_len(input, 2 * self.len, "add")?;
        Ok([upstream, upstream].concat())
    }
}

/// Element-wise `a ⊙ b` with input `[a | b]`.
#[derive(Debug, Clone, Copy)]
pub struct Hadamard {
    pub len: usize,
}

impl DifferentiableOp for Hadamard {
    fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        expect_len(input, 2 * self.len, "hadamard")?;
        let (a, b) = input.split_at(self.len);
        Ok(a.iter().zip(b).map(|(x, y)| x * y).collect())
    }

    fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        expect_len(input, 2 * self.len, "hadamard")?;
        let (a, b) = input.split_at(self.len);
        let mut out: Vec<f64> = b.iter().zip(upstream).map(|(x, g)| x * g).collect();
        out.extend(a.iter().zip(upstream).map(|(x, g)| x * g));
        Ok(out)
    }
}

/// Concatenation of consecutive input segments. Forward is the identity
/// on the flat layout; it exists so the segment bookkeeping is checked.
#[derive(Debug, Clone)]
pub struct Concat {
    pub lens: Vec<usize>,
}

impl DifferentiableOp for Concat {
    fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        expect_len(input, self.lens.iter().sum(), "concat")?;
        Ok(input.to_vec())
    }

    fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        expect_len(input, self.lens.iter().sum(), "concat")?;
        Ok(upstream.to_vec())
    }
}

/// Mean over the rows of a `rows × cols` input.
#[derive(Debug, Clone, Copy)]
pub struct MeanPool {
    pub rows: usize,
    pub cols: usize,
}

impl DifferentiableOp for MeanPool {
    fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        expect_len(input, self.rows * self.cols, "mean_pool")?;
        Ok(Matrix::from_vec(self.rows, self.cols, input.to_vec())?.mean_rows())
    }

    fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        expect_len(input, self.rows * self.cols, "mean_pool")?;
        let inv = 1.0 / self.rows as f64;
        Ok((0..self.rows)
            .flat_map(|_| upstream.iter().map(move |g| g * inv))
            .collect())
    }
}
