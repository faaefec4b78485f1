use super::{add_hadamard, check_features};
use crate::numerics::{Matrix, SeededRng};
use crate::{Error, Result};

/// `(e_i · M) ⊙ e_j`, with `e_i` a row vector.
pub fn projected_pair(e_i: &[f64], e_j: &[f64], m: &Matrix) -> Result<Vec<f64>> {
    let k = e_j.len();
    if e_i.len() != m.rows() || m.cols() != k {
        return Err(Error::Input(format!(
            "projected pair shapes: {} · {:?} ⊙ {k}",
            e_i.len(),
            m.shape()
        )));
    }
    let a = m.vecmat(e_i);
    Ok(a.iter().zip(e_j).map(|(x, y)| x * y).collect())
}

/// Adds the gradients of `s · ⟨upstream, projected_pair⟩` into the
/// provided buffers.
pub fn projected_pair_backward(
    e_i: &[f64],
    e_j: &[f64],
    m: &Matrix,
    upstream: &[f64],
    s: f64,
    g_i: &mut [f64],
    g_j: &mut [f64],
    g_m: &mut Matrix,
) {
    let a = m.vecmat(e_i);
    add_hadamard(g_j, s, upstream, &a);
    let ge: Vec<f64> = upstream.iter().zip(e_j).map(|(g, e)| s * g * e).collect();
    crate::numerics::axpy(g_i, 1.0, &m.matvec(&ge));
    for (l, &ei) in e_i.iter().enumerate() {
        if ei != 0.0 {
            crate::numerics::axpy(g_m.row_mut(l), ei, &ge);
        }
    }
}

/// One `K × K` projection per unordered pair of distinct fields, applied
/// from the lower field id to the higher one.
#[derive(Debug, Clone, PartialEq)]
pub struct Projections {
    n_fields: usize,
    k: usize,
    mats: Vec<Matrix>,
}

impl Projections {
    /// Identity plus `N(0, noise²)` entries.
    pub fn near_identity(n_fields: usize, k: usize, noise: f64, rng: &mut SeededRng) -> Self {
        let count = n_fields * n_fields.saturating_sub(1) / 2;
        let mats = (0..count)
            .map(|_| {
                Matrix::identity(k)
                    .add(&Matrix::random_normal(k, k, noise, rng))
                    .expect("same shape")
            })
            .collect();
        Projections { n_fields, k, mats }
    }

    pub fn zeros(n_fields: usize, k: usize) -> Self {
        let count = n_fields * n_fields.saturating_sub(1) / 2;
        Projections {
            n_fields,
            k,
            mats: vec![Matrix::zeros(k, k); count],
        }
    }

    pub fn n_fields(&self) -> usize {
        self.n_fields
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.mats
    }

    pub fn matrices_mut(&mut self) -> &mut [Matrix] {
        &mut self.mats
    }

    /// Slot of the pair `(lo, hi)` with `lo < hi`.
    pub fn slot(&self, lo: usize, hi: usize) -> usize {
        debug_assert!(lo < hi && hi < self.n_fields);
        lo * (2 * self.n_fields - lo - 1) / 2 + (hi - lo - 1)
    }

    pub fn get(&self, lo: usize, hi: usize) -> &Matrix {
        &self.mats[self.slot(lo, hi)]
    }

    pub fn get_mut(&mut self, lo: usize, hi: usize) -> &mut Matrix {
        let s = self.slot(lo, hi);
        &mut self.mats[s]
    }
}

fn check(fields: &[usize], x: &[f64], emb: &[&[f64]], proj: &Projections) -> Result<()> {
    check_features(x, emb, proj.k)?;
    if fields.len() != x.len() {
        return Err(Error::Input("one field id per feature required".into()));
    }
    for (i, &f) in fields.iter().enumerate() {
        if f >= proj.n_fields {
            return Err(Error::Config(format!("field {f} outside projection set")));
        }
        if fields[..i].contains(&f) {
            return Err(Error::Input(format!(
                "projected interaction needs distinct fields; field {f} repeats"
            )));
        }
    }
    Ok(())
}

/// Orders a feature pair so the lower field id is projected.
#[inline]
fn orient(fields: &[usize], i: usize, j: usize) -> (usize, usize) {
    if fields[i] < fields[j] {
        (i, j)
    } else {
        (j, i)
    }
}

/// `Σ_{i<j} x_i x_j (e_a M_{F(a)→F(b)}) ⊙ e_b` with `F(a) < F(b)`.
pub fn projected_vector(
    fields: &[usize],
    x: &[f64],
    emb: &[&[f64]],
    proj: &Projections,
) -> Result<Vec<f64>> {
    check(fields, x, emb, proj)?;
    let mut out = vec![0.0; proj.k];
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let (a, b) = orient(fields, i, j);
            let m = proj.get(fields[a], fields[b]);
            let p = m.vecmat(emb[a]);
            add_hadamard(&mut out, x[i] * x[j], &p, emb[b]);
        }
    }
    Ok(out)
}

/// Returns `∂/∂e` per feature and accumulates `∂/∂M` into `grad_proj`.
pub fn projected_backward(
    fields: &[usize],
    x: &[f64],
    emb: &[&[f64]],
    proj: &Projections,
    upstream: &[f64],
    grad_proj: &mut Projections,
) -> Vec<Vec<f64>> {
    let k = proj.k;
    let mut ge = vec![vec![0.0; k]; emb.len()];
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let (a, b) = orient(fields, i, j);
            let slot = proj.slot(fields[a], fields[b]);
            let (ga, gb) = if a < b {
                let (lo, hi) = ge.split_at_mut(b);
                (&mut lo[a], &mut hi[0])
            } else {
                let (lo, hi) = ge.split_at_mut(a);
                (&mut hi[0], &mut lo[b])
            };
            projected_pair_backward(
                emb[a],
                emb[b],
                &proj.mats[slot],
                upstream,
                x[i] * x[j],
                ga,
                gb,
                &mut grad_proj.mats[slot],
            );
        }
    }
    ge
}

impl Projections {
    /// Builds from matrices listed in slot order.
    pub fn from_matrices(n_fields: usize, k: usize, mats: Vec<Matrix>) -> Result<Self> {
        let count = n_fields * n_fields.saturating_sub(1) / 2;
        if mats.len() != count || mats.iter().any(|m| m.shape() != (k, k)) {
            return Err(Error::Input(format!(
                "{count} projections of shape {k}x{k} expected"
            )));
        }
        Ok(Projections { n_fields, k, mats })
    }
}
