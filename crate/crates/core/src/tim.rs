//! Temporal interest module: target-aware temporal encoding, target-aware
//! attention and target-aware representation over a behavior sequence.
//!
//! For behaviors `e_i` with temporal buckets `b_i` and a target `v`:
//!
//! ```text
//! ẽ_i = e_i + p[b_i]          ṽ = v + p[0]
//! α   = softmax_i(⟨ẽ_i, ṽ⟩ / √K)   (padding masked out)
//! u   = Σ_i α_i · (ẽ_i ⊙ ṽ)
//! ```
//!
//! The target sits at temporal distance zero from itself, hence `p[0]`.

use serde::{Deserialize, Serialize};

use crate::encoding::TemporalMode;
use crate::numerics::{axpy, dot, masked_softmax, DifferentiableOp, Matrix};
use crate::{Error, Result};

/// One temporal embedding table, indexed by bucket id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalTable {
    pub mode: TemporalMode,
    pub table: Matrix,
}

impl TemporalTable {
    pub fn zeros(mode: TemporalMode, dim: usize) -> Self {
        TemporalTable {
            mode,
            table: Matrix::zeros(mode.bucket_count(), dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.table.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimOutput {
    pub u: Vec<f64>,
    /// Attention per behavior; zero on padding.
    pub alpha: Vec<f64>,
}

/// Cached forward state for the backward pass.
#[derive(Debug, Clone)]
pub struct TimCache {
    e_tilde: Vec<Vec<f64>>,
    v_tilde: Vec<f64>,
    buckets: Vec<usize>,
    mask: Vec<bool>,
    pub output: TimOutput,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimGrads {
    pub behaviors: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    /// Gradient rows for the temporal table, as `(bucket, row)` pairs.
    pub table_rows: Vec<(usize, Vec<f64>)>,
}

fn check_inputs(
    behaviors: &[Vec<f64>],
    buckets: &[usize],
    target: &[f64],
    table: Option<&Matrix>,
    mask: Option<&[bool]>,
) -> Result<()> {
    let k = target.len();
    if behaviors.len() != buckets.len() {
        return Err(Error::Input("one bucket per behavior required".into()));
    }
    if mask.is_some_and(|m| m.len() != behaviors.len()) {
        return Err(Error::Input(
            "mask length differs from sequence length".into(),
        ));
    }
    if behaviors.iter().any(|e| e.len() != k) {
        return Err(Error::Input("behavior and target dims differ".into()));
    }
    if let Some(t) = table {
        if t.cols() != k {
            return Err(Error::Input(
                "temporal table dim differs from target dim".into(),
            ));
        }
        if let Some(&b) = buckets.iter().find(|&&b| b >= t.rows()) {
            return Err(Error::Input(format!("bucket {b} outside temporal table")));
        }
    }
    Ok(())
}

/// Forward pass. `table = None` disables temporal encoding (ablation).
/// An empty (or fully masked) sequence yields a zero vector and empty
/// attention.
pub fn tim_forward(
    behaviors: &[Vec<f64>],
    buckets: &[usize],
    target: &[f64],
    table: Option<&TemporalTable>,
    mask: Option<&[bool]>,
) -> Result<TimCache> {
    tim_forward_matrix(behaviors, buckets, target, table.map(|t| &t.table), mask)
}

/// [`tim_forward`] over a bare bucket-embedding matrix.
pub fn tim_forward_matrix(
    behaviors: &[Vec<f64>],
    buckets: &[usize],
    target: &[f64],
    table: Option<&Matrix>,
    mask: Option<&[bool]>,
) -> Result<TimCache> {
    check_inputs(behaviors, buckets, target, table, mask)?;
    let k = target.len();
    let mask: Vec<bool> = mask.map_or_else(|| vec![true; behaviors.len()], <[bool]>::to_vec);
    let add_row = |e: &[f64], b: usize| -> Vec<f64> {
        match table {
            Some(t) => e.iter().zip(t.row(b)).map(|(x, p)| x + p).collect(),
            None => e.to_vec(),
        }
    };
    let v_tilde = add_row(target, 0);
    let e_tilde: Vec<Vec<f64>> = behaviors
        .iter()
        .zip(buckets)
        .map(|(e, &b)| add_row(e, b))
        .collect();
    let scale = 1.0 / (k as f64).sqrt();
    let logits: Vec<f64> = e_tilde.iter().map(|e| dot(e, &v_tilde) * scale).collect();
    let alpha = masked_softmax(&logits, Some(&mask));
    let mut u = vec![0.0; k];
    for (e, &a) in e_tilde.iter().zip(&alpha) {
        if a == 0.0 {
            continue;
        }
        for ((ui, ei), vi) in u.iter_mut().zip(e).zip(&v_tilde) {
            *ui += a * ei * vi;
        }
    }
    Ok(TimCache {
        e_tilde,
        v_tilde,
        buckets: buckets.to_vec(),
        mask,
        output: TimOutput { u, alpha },
    })
}

/// Backward pass from `∂L/∂u`.
pub fn tim_backward(cache: &TimCache, upstream: &[f64], with_table: bool) -> TimGrads {
    let k = cache.v_tilde.len();
    let n = cache.e_tilde.len();
    let scale = 1.0 / (k as f64).sqrt();
    let alpha = &cache.output.alpha;
    let v = &cache.v_tilde;
    let g_v: Vec<f64> = upstream.iter().zip(v).map(|(g, x)| g * x).collect();
    // ∂L/∂α_i = ⟨g, ẽ_i ⊙ ṽ⟩
    let d_alpha: Vec<f64> = cache.e_tilde.iter().map(|e| dot(e, &g_v)).collect();
    let mean: f64 = alpha.iter().zip(&d_alpha).map(|(a, d)| a * d).sum();
    let d_logit: Vec<f64> = alpha
        .iter()
        .zip(&d_alpha)
        .map(|(a, d)| a * (d - mean))
        .collect();

    let mut behaviors = vec![vec![0.0; k]; n];
    let mut target = vec![0.0; k];
    for i in 0..n {
        if !cache.mask[i] {
            continue;
        }
        let ge = &mut behaviors[i];
        axpy(ge, alpha[i], &g_v);
        axpy(ge, d_logit[i] * scale, v);
        for ((t, g), e) in target.iter_mut().zip(upstream).zip(&cache.e_tilde[i]) {
            *t += alpha[i] * g * e;
        }
        axpy(&mut target, d_logit[i] * scale, &cache.e_tilde[i]);
    }
    let table_rows = if with_table {
        let mut rows: Vec<(usize, Vec<f64>)> = Vec::with_capacity(n + 1);
        rows.push((0, target.clone()));
        for i in 0..n {
            if cache.mask[i] {
                rows.push((cache.buckets[i], behaviors[i].clone()));
            }
        }
        rows
    } else {
        Vec::new()
    };
    TimGrads {
        behaviors,
        target,
        table_rows,
    }
}

/// Position-mode and interval-mode instances run side by side; the output
/// is `[u_position | u_interval]`.
pub fn tim_dual(
    behaviors: &[Vec<f64>],
    position_buckets: &[usize],
    interval_buckets: &[usize],
    target: &[f64],
    position_table: &TemporalTable,
    interval_table: &TemporalTable,
    mask: Option<&[bool]>,
) -> Result<(TimCache, TimCache, Vec<f64>)> {
    let p = tim_forward(
        behaviors,
        position_buckets,
        target,
        Some(position_table),
        mask,
    )?;
    let i = tim_forward(
        behaviors,
        interval_buckets,
        target,
        Some(interval_table),
        mask,
    )?;
    let mut out = p.output.u.clone();
    out.extend_from_slice(&i.output.u);
    Ok((p, i, out))
}

/// TIM as a differentiable function of `[behaviors | target | table]`
/// (all flattened row-major) for gradient checking.
#[derive(Debug, Clone)]
pub struct TimOp {
    pub len: usize,
    pub dim: usize,
    pub buckets: Vec<usize>,
    pub mode: TemporalMode,
    pub mask: Option<Vec<bool>>,
}

impl TimOp {
    fn unpack(&self, x: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>, TemporalTable)> {
        let k = self.dim;
        let rows = self.mode.bucket_count();
        if x.len() != self.len * k + k + rows * k {
            return Err(Error::Input("TimOp input length mismatch".into()));
        }
        let behaviors = x[..self.len * k].chunks(k).map(<[f64]>::to_vec).collect();
        let target = x[self.len * k..self.len * k + k].to_vec();
        let table = Matrix::from_vec(rows, k, x[self.len * k + k..].to_vec())?;
        Ok((
            behaviors,
            target,
            TemporalTable {
                mode: self.mode,
                table,
            },
        ))
    }
}

impl DifferentiableOp for TimOp {
    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (b, t, table) = self.unpack(x)?;
        Ok(
            tim_forward(&b, &self.buckets, &t, Some(&table), self.mask.as_deref())?
                .output
                .u,
        )
    }

    fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        let (b, t, table) = self.unpack(x)?;
        let cache = tim_forward(&b, &self.buckets, &t, Some(&table), self.mask.as_deref())?;
        let g = tim_backward(&cache, upstream, true);
        let mut table_grad = Matrix::zeros(table.table.rows(), self.dim);
        for (r, row) in &g.table_rows {
            axpy(table_grad.row_mut(*r), 1.0, row);
        }
        let mut out: Vec<f64> = g.behaviors.concat();
        out.extend(g.target);
        out.extend(table_grad.into_vec());
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{grad_check, normal, seeded_rng, SeededRng, GRAD_CHECK_EPS};

    fn rand_vec(k: usize, rng: &mut SeededRng) -> Vec<f64> {
        (0..k).map(|_| normal(rng)).collect()
    }

    fn random_table(mode: TemporalMode, k: usize, rng: &mut SeededRng) -> TemporalTable {
        TemporalTable {
            mode,
            table: Matrix::random_normal(mode.bucket_count(), k, 0.5, rng),
        }
    }

    #[test]
    fn singleton_sequence() {
        let mut rng = seeded_rng(1);
        let mode = TemporalMode::Position { max_len: 4 };
        let t = random_table(mode, 3, &mut rng);
        let e = rand_vec(3, &mut rng);
        let v = rand_vec(3, &mut rng);
        let c = tim_forward(&[e.clone()], &[2], &v, Some(&t), None).unwrap();
        assert_eq!(c.output.alpha, vec![1.0]);
        for j in 0..3 {
            let et = e[j] + t.table[(2, j)];
            let vt = v[j] + t.table[(0, j)];
            assert!((c.output.u[j] - et * vt).abs() < 1e-14);
        }
    }

    #[test]
    fn identical_behaviors_split_attention() {
        let e = vec![0.4, -0.3];
        let c = tim_forward(&[e.clone(), e], &[1, 1], &[1.0, 2.0], None, None).unwrap();
        assert_eq!(c.output.alpha, vec![0.5, 0.5]);
    }

    #[test]
    fn empty_sequence_gives_zero() {
        let c = tim_forward(&[], &[], &[1.0, 2.0], None, None).unwrap();
        assert_eq!(c.output.u, vec![0.0, 0.0]);
        assert!(c.output.alpha.is_empty());
    }

    #[test]
    fn padding_gets_no_attention() {
        let mut rng = seeded_rng(4);
        let b: Vec<Vec<f64>> = (0..3).map(|_| rand_vec(4, &mut rng)).collect();
        let v = rand_vec(4, &mut rng);
        let c = tim_forward(&b, &[1, 2, 3], &v, None, Some(&[true, false, true])).unwrap();
        assert_eq!(c.output.alpha[1], 0.0);
        assert!((c.output.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let d = tim_forward(&[b[0].clone(), b[2].clone()], &[1, 3], &v, None, None).unwrap();
        for (x, y) in c.output.u.iter().zip(&d.output.u) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_upstream_zero_grads() {
        let mut rng = seeded_rng(2);
        let mode = TemporalMode::Interval;
        let t = random_table(mode, 4, &mut rng);
        let b: Vec<Vec<f64>> = (0..3).map(|_| rand_vec(4, &mut rng)).collect();
        let c = tim_forward(&b, &[0, 3, 7], &rand_vec(4, &mut rng), Some(&t), None).unwrap();
        let g = tim_backward(&c, &[0.0; 4], true);
        assert!(g.target.iter().all(|&v| v == 0.0));
        assert!(g.behaviors.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn singleton_target_gradient_is_hadamard() {
        // |H| = 1: α ≡ 1 so ∂u/∂ṽ = diag(ẽ_1)
        let e = vec![0.5, -1.5, 2.0];
        let c = tim_forward(&[e.clone()], &[1], &[0.3, 0.2, -0.1], None, None).unwrap();
        let g = tim_backward(&c, &[1.0, 2.0, 3.0], false);
        assert_eq!(g.target, vec![0.5, -3.0, 6.0]);
    }

    #[test]
    fn grad_check_random_instances() {
        for seed in 0..25u64 {
            let mut rng = seeded_rng(100 + seed);
            let len = 1 + (seed as usize % 6);
            let k = 2 + (seed as usize % 7);
            let mode = if seed % 2 == 0 {
                TemporalMode::Interval
            } else {
                TemporalMode::Position { max_len: 8 }
            };
            let buckets: Vec<usize> = (0..len)
                .map(|i| (i * 3 + seed as usize) % mode.bucket_count())
                .collect();
            let mask = (seed % 3 == 0 && len > 1).then(|| (0..len).map(|i| i != 0).collect());
            let op = TimOp {
                len,
                dim: k,
                buckets,
                mode,
                mask,
            };
            let n = len * k + k + mode.bucket_count() * k;
            let x: Vec<f64> = (0..n).map(|_| 0.7 * normal(&mut rng)).collect();
            let err = grad_check(&op, &x, GRAD_CHECK_EPS).unwrap();
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn dual_concatenates_position_then_interval() {
        let mut rng = seeded_rng(9);
        let pt = random_table(TemporalMode::Position { max_len: 5 }, 3, &mut rng);
        let it = random_table(TemporalMode::Interval, 3, &mut rng);
        let b: Vec<Vec<f64>> = (0..2).map(|_| rand_vec(3, &mut rng)).collect();
        let v = rand_vec(3, &mut rng);
        let (_, _, out) = tim_dual(&b, &[1, 2], &[4, 9], &v, &pt, &it, None).unwrap();
        let p = tim_forward(&b, &[1, 2], &v, Some(&pt), None)
            .unwrap()
            .output
            .u;
        let i = tim_forward(&b, &[4, 9], &v, Some(&it), None)
            .unwrap()
            .output
            .u;
        assert_eq!(out, [p, i].concat());
    }
}
