use super::{add_hadamard, PairWeights};
use crate::{Error, Result};

/// Output mode of the group-weighted part-aware interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduce {
    /// Element-wise accumulated `K`-vector (feeds an expert MLP).
    Vector,
    /// Sum of inner products.
    Scalar,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Interaction {
    Vector(Vec<f64>),
    Scalar(f64),
}

impl Interaction {
    pub fn scalar(&self) -> f64 {
        match self {
            Interaction::Vector(v) => v.iter().sum(),
            Interaction::Scalar(s) => *s,
        }
    }
}

/// Part and group assignment of each active feature.
#[derive(Debug, Clone, PartialEq)]
pub struct GwpfmLayout {
    pub parts: Vec<usize>,
    pub groups: Vec<usize>,
    pub n_parts: usize,
    /// Width of a single part copy.
    pub k: usize,
}

impl GwpfmLayout {
    fn check(&self, x: &[f64], emb: &[&[f64]], r: &PairWeights) -> Result<()> {
        let n = x.len();
        if self.parts.len() != n || self.groups.len() != n || emb.len() != n {
            return Err(Error::Input(
                "layout, values and embeddings differ in length".into(),
            ));
        }
        if let Some(p) = self.parts.iter().find(|&&p| p >= self.n_parts) {
            return Err(Error::Config(format!(
                "part id {p} >= {} parts",
                self.n_parts
            )));
        }
        if let Some(g) = self.groups.iter().find(|&&g| g >= r.n()) {
            return Err(Error::Config(format!("group id {g} >= {} groups", r.n())));
        }
        if let Some(e) = emb.iter().find(|e| e.len() != self.n_parts * self.k) {
            return Err(Error::Input(format!(
                "part-aware embedding of width {}, expected {}",
                e.len(),
                self.n_parts * self.k
            )));
        }
        Ok(())
    }

    #[inline]
    fn copy<'a>(&self, e: &'a [f64], part: usize) -> &'a [f64] {
        &e[part * self.k..(part + 1) * self.k]
    }
}

/// `Σ_{i<j} x_i x_j r_{G(i),G(j)} (e_{i,P(j)} ⊙ e_{j,P(i)})`, or its
/// coordinate sum in scalar mode.
pub fn gwpfm_interaction(
    layout: &GwpfmLayout,
    x: &[f64],
    emb: &[&[f64]],
    r: &PairWeights,
    reduce: Reduce,
) -> Result<Interaction> {
    layout.check(x, emb, r)?;
    let mut out = vec![0.0; layout.k];
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let w = x[i] * x[j] * r.get(layout.groups[i], layout.groups[j]);
            add_hadamard(
                &mut out,
                w,
                layout.copy(emb[i], layout.parts[j]),
                layout.copy(emb[j], layout.parts[i]),
            );
        }
    }
    Ok(match reduce {
        Reduce::Vector => Interaction::Vector(out),
        Reduce::Scalar => Interaction::Scalar(out.iter().sum()),
    })
}

/// Gradients of `⟨upstream, vector form⟩` (pass a constant vector for the
/// scalar form). Returns `(∂/∂emb per feature, ∂/∂r packed)`.
pub fn gwpfm_backward(
    layout: &GwpfmLayout,
    x: &[f64],
    emb: &[&[f64]],
    r: &PairWeights,
    upstream: &[f64],
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let k = layout.k;
    let mut ge: Vec<Vec<f64>> = emb.iter().map(|e| vec![0.0; e.len()]).collect();
    let mut gr = vec![0.0; r.as_slice().len()];
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let (pi, pj) = (layout.parts[i], layout.parts[j]);
            let (gi, gj) = (layout.groups[i], layout.groups[j]);
            let a = layout.copy(emb[i], pj);
            let b = layout.copy(emb[j], pi);
            let s = x[i] * x[j];
            let w = s * r.get(gi, gj);
            add_hadamard(&mut ge[i][pj * k..(pj + 1) * k], w, upstream, b);
            add_hadamard(&mut ge[j][pi * k..(pi + 1) * k], w, upstream, a);
            let pair: f64 = (0..k).map(|d| upstream[d] * a[d] * b[d]).sum();
            gr[r.index(gi, gj)] += s * pair;
        }
    }
    (ge, gr)
}
