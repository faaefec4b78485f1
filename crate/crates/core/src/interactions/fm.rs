use super::{add_hadamard, check_features, PairWeights};
use crate::{Error, Result};

fn width(emb: &[&[f64]]) -> usize {
    emb.first().map_or(0, |e| e.len())
}

/// `Σ_{i<j} x_i x_j (e_i ⊙ e_j)`, computed in `O(NK)` as
/// `½[(Σ x e)² − Σ (x e)²]`.
pub fn fm_vector(x: &[f64], emb: &[&[f64]]) -> Result<Vec<f64>> {
    let k = width(emb);
    check_features(x, emb, k)?;
    let mut sum = vec![0.0; k];
    let mut sq = vec![0.0; k];
    for (&xi, e) in x.iter().zip(emb) {
        for d in 0..k {
            let v = xi * e[d];
            sum[d] += v;
            sq[d] += v * v;
        }
    }
    Ok(sum
        .iter()
        .zip(&sq)
        .map(|(s, q)| 0.5 * (s * s - q))
        .collect())
}

pub fn fm_score(x: &[f64], emb: &[&[f64]]) -> Result<f64> {
    Ok(fm_vector(x, emb)?.iter().sum())
}

/// Gradient of `⟨upstream, fm_vector⟩` with respect to each embedding.
pub fn fm_backward(x: &[f64], emb: &[&[f64]], upstream: &[f64]) -> Vec<Vec<f64>> {
    let k = upstream.len();
    let mut sum = vec![0.0; k];
    for (&xi, e) in x.iter().zip(emb) {
        crate::numerics::axpy(&mut sum, xi, e);
    }
    x.iter()
        .zip(emb)
        .map(|(&xi, e)| {
            (0..k)
                .map(|d| upstream[d] * xi * (sum[d] - xi * e[d]))
                .collect()
        })
        .collect()
}

fn ffm_copy<'a>(e: &'a [f64], field: usize, k: usize, feature: usize) -> Result<&'a [f64]> {
    e.get(field * k..(field + 1) * k).ok_or_else(|| {
        Error::Config(format!(
            "feature {feature} has no embedding copy for field {field}"
        ))
    })
}

/// Field-aware pairs: `Σ_{i<j} x_i x_j (e_{i,F(j)} ⊙ e_{j,F(i)})`.
/// `emb[i]` holds one `k`-wide copy per field id.
pub fn ffm_vector(fields: &[usize], x: &[f64], emb: &[&[f64]], k: usize) -> Result<Vec<f64>> {
    if fields.len() != x.len() || x.len() != emb.len() {
        return Err(Error::Input(
            "fields, values and embeddings differ in length".into(),
        ));
    }
    let mut out = vec![0.0; k];
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let a = ffm_copy(emb[i], fields[j], k, i)?;
            let b = ffm_copy(emb[j], fields[i], k, j)?;
            add_hadamard(&mut out, x[i] * x[j], a, b);
        }
    }
    Ok(out)
}

pub fn ffm_score(fields: &[usize], x: &[f64], emb: &[&[f64]], k: usize) -> Result<f64> {
    Ok(ffm_vector(fields, x, emb, k)?.iter().sum())
}

pub fn ffm_backward(
    fields: &[usize],
    x: &[f64],
    emb: &[&[f64]],
    k: usize,
    upstream: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let mut grads: Vec<Vec<f64>> = emb.iter().map(|e| vec![0.0; e.len()]).collect();
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let (fi, fj) = (fields[i], fields[j]);
            let a = ffm_copy(emb[i], fj, k, i)?;
            let b = ffm_copy(emb[j], fi, k, j)?;
            let s = x[i] * x[j];
            add_hadamard(&mut grads[i][fj * k..(fj + 1) * k], s, upstream, b);
            add_hadamard(&mut grads[j][fi * k..(fi + 1) * k], s, upstream, a);
        }
    }
    Ok(grads)
}

/// Field-weighted pairs: `Σ_{i<j} x_i x_j r_{F(i),F(j)} (e_i ⊙ e_j)`.
pub fn fwfm_vector(
    fields: &[usize],
    x: &[f64],
    emb: &[&[f64]],
    r: &PairWeights,
) -> Result<Vec<f64>> {
    let k = width(emb);
    check_features(x, emb, k)?;
    if fields.len() != x.len() {
        return Err(Error::Input("one field id per feature required".into()));
    }
    if let Some(f) = fields.iter().find(|&&f| f >= r.n()) {
        return Err(Error::Config(format!(
            "field {f} outside field-pair weights"
        )));
    }
    let mut out = vec![0.0; k];
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            add_hadamard(
                &mut out,
                x[i] * x[j] * r.get(fields[i], fields[j]),
                emb[i],
                emb[j],
            );
        }
    }
    Ok(out)
}

pub fn fwfm_score(fields: &[usize], x: &[f64], emb: &[&[f64]], r: &PairWeights) -> Result<f64> {
    Ok(fwfm_vector(fields, x, emb, r)?.iter().sum())
}

/// Returns `(∂/∂e_i, ∂/∂r packed)`.
pub fn fwfm_backward(
    fields: &[usize],
    x: &[f64],
    emb: &[&[f64]],
    r: &PairWeights,
    upstream: &[f64],
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut ge: Vec<Vec<f64>> = emb.iter().map(|e| vec![0.0; e.len()]).collect();
    let mut gr = vec![0.0; r.as_slice().len()];
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let w = r.get(fields[i], fields[j]);
            let s = x[i] * x[j];
            add_hadamard(&mut ge[i], s * w, upstream, emb[j]);
            add_hadamard(&mut ge[j], s * w, upstream, emb[i]);
            let pair: f64 = (0..upstream.len())
                .map(|d| upstream[d] * emb[i][d] * emb[j][d])
                .sum();
            gr[r.index(fields[i], fields[j])] += s * pair;
        }
    }
    (ge, gr)
}
