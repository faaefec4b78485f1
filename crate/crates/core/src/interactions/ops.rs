//! Interaction operators as [`DifferentiableOp`]s over flat inputs.
//!
//! Features, their values and field/part assignments are fixed per
//! operator; the flat input holds the embeddings back to back followed by
//! any interaction parameters.

use super::*;
use crate::numerics::{DifferentiableOp, Matrix};
use crate::{Error, Result};

fn split_emb(input: &[f64], n: usize, w: usize) -> Result<Vec<&[f64]>> {
    if input.len() < n * w {
        return Err(Error::Input(format!("expected at least {} inputs", n * w)));
    }
    Ok(input[..n * w].chunks(w).collect())
}

fn expect(input: &[f64], n: usize) -> Result<()> {
    if input.len() != n {
        return Err(Error::Input(format!(
            "expected {n} inputs, got {}",
            input.len()
        )));
    }
    Ok(())
}

fn reduce(v: Vec<f64>, r: Reduce) -> Vec<f64> {
    match r {
        Reduce::Vector => v,
        Reduce::Scalar => vec![v.iter().sum()],
    }
}

fn upstream_vec(up: &[f64], k: usize, r: Reduce) -> Vec<f64> {
    match r {
        Reduce::Vector => up.to_vec(),
        Reduce::Scalar => vec![up[0]; k],
    }
}

/// FM. Input: `[e_1 | … | e_N]`, each `k` wide.
#[derive(Debug, Clone)]
pub struct FmOp {
    pub x: Vec<f64>,
    pub k: usize,
    pub reduce: Reduce,
}

impl DifferentiableOp for FmOp {
    fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        expect(input, self.x.len() * self.k)?;
        let emb = split_emb(input, self.x.len(), self.k)?;
        Ok(reduce(fm_vector(&self.x, &emb)?, self.reduce))
    }

    fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        let emb = split_emb(input, self.x.len(), self.k)?;
        let up = upstream_vec(upstream, self.k, self.reduce);
        Ok(fm_backward(&self.x, &emb, &up).concat())
    }
}

/// FFM. Input: `[e_1 | … | e_N]`, each `n_fields · k` wide.
#[derive(Debug, Clone)]
pub struct FfmOp {
    pub fields: Vec<usize>,
    pub x: Vec<f64>,
    pub n_fields: usize,
    pub k: usize,
    pub reduce: Reduce,
}

impl DifferentiableOp for FfmOp {
    fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let w = self.n_fields * self.k;
        expect(input, self.x.len() * w)?;
        let emb = split_emb(input, self.x.len(), w)?;
        Ok(reduce(
            ffm_vector(&self.fields, &self.x, &emb, self.k)?,
            self.reduce,
        ))
    }

    fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        let emb = split_emb(input, self.x.len(), self.n_fields * self.k)?;
        let up = upstream_vec(upstream, self.k, self.reduce);
        Ok(ffm_backward(&self.fields, &self.x, &emb, self.k, &up)?.concat())
    }
}

/// FwFM. Input: `[e_1 | … | e_N | r packed]`.
#[derive(Debug, Clone)]
pub struct FwfmOp {
    pub fields: Vec<usize>,
    pub x: Vec<f64>,
    pub n_fields: usize,
    pub k: usize,
    pub reduce: Reduce,
}

impl FwfmOp {
    fn parts<'a>(&self, input: &'a [f64]) -> Result<(Vec<&'a [f64]>, PairWeights)> {
        let n = self.x.len() * self.k;
        let r_len = self.n_fields * (self.n_fields + 1) / 2;
        expect(input, n + r_len)?;
        let r = PairWeights::from_packed(self.n_fields, input[n..].to_vec())
            .ok_or_else(|| Error::Input("bad pair weights".into()))?;
        Ok((split_emb(input, self.x.len(), self.k)?, r))
    }
}

impl DifferentiableOp for FwfmOp {
    fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let (emb, r) = self.parts(input)?;
        Ok(reduce(
            fwfm_vector(&self.fields, &self.x, &emb, &r)?,
            self.reduce,
        ))
    }

    fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        let (emb, r) = self.parts(input)?;
        let up = upstream_vec(upstream, self.k, self.reduce);
        let (ge, gr) = fwfm_backward(&self.fields, &self.x, &emb, &r, &up);
        let mut out = ge.concat();
        out.extend(gr);
        Ok(out)
    }
}

/// GwPFM. Input: `[e_1 | … | e_N | r packed]`, embeddings `n_parts · k`
/// wide, `r` over `n_groups`.
#[derive(Debug, Clone)]
pub struct GwpfmOp {
    pub layout: GwpfmLayout,
    pub x: Vec<f64>,
    pub n_groups: usize,
    pub reduce: Reduce,
}

impl GwpfmOp {
    fn parts<'a>(&self, input: &'a [f64]) -> Result<(Vec<&'a [f64]>, PairWeights)> {
        let w = self.layout.n_parts * self.layout.k;
        let n = self.x.len() * w;
        let r_len = self.n_groups * (self.n_groups + 1) / 2;
        expect(input, n + r_len)?;
        let r = PairWeights::from_packed(self.n_groups, input[n..].to_vec())
            .ok_or_else(|| Error::Input("bad pair weights".into()))?;
        Ok((split_emb(input, self.x.len(), w)?, r))
    }
}

impl DifferentiableOp for GwpfmOp {
    fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let (emb, r) = self.parts(input)?;
        Ok(
            match gwpfm_interaction(&self.layout, &self.x, &emb, &r, self.reduce)? {
                Interaction::Vector(v) => v,
                Interaction::Scalar(s) => vec![s],
            },
        )
    }

    fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        let (emb, r) = self.parts(input)?;
        let up = upstream_vec(upstream, self.layout.k, self.reduce);
        let (ge, gr) = gwpfm_backward(&self.layout, &self.x, &emb, &r, &up);
        let mut out = ge.concat();
        out.extend(gr);
        Ok(out)
    }
}

/// Projected interaction. Input: `[e_1 | … | e_N | M slots row-major]`.
#[derive(Debug, Clone)]
pub struct ProjectedOp {
    pub fields: Vec<usize>,
    pub x: Vec<f64>,
    pub n_fields: usize,
    pub k: usize,
    pub reduce: Reduce,
}

impl ProjectedOp {
    fn parts<'a>(&self, input: &'a [f64]) -> Result<(Vec<&'a [f64]>, Projections)> {
        let n = self.x.len() * self.k;
        let count = self.n_fields * self.n_fields.saturating_sub(1) / 2;
        let kk = self.k * self.k;
        expect(input, n + count * kk)?;
        let mats = input[n..]
            .chunks(kk)
            .map(|c| Matrix::from_vec(self.k, self.k, c.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Ok((
            split_emb(input, self.x.len(), self.k)?,
            Projections::from_matrices(self.n_fields, self.k, mats)?,
        ))
    }
}

impl DifferentiableOp for ProjectedOp {
    fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let (emb, proj) = self.parts(input)?;
        Ok(reduce(
            projected_vector(&self.fields, &self.x, &emb, &proj)?,
            self.reduce,
        ))
    }

    fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        let (emb, proj) = self.parts(input)?;
        let up = upstream_vec(upstream, self.k, self.reduce);
        let mut gp = Projections::zeros(self.n_fields, self.k);
        let ge = projected_backward(&self.fields, &self.x, &emb, &proj, &up, &mut gp);
        let mut out = ge.concat();
        for m in gp.matrices() {
            out.extend_from_slice(m.as_slice());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{grad_check, normal, seeded_rng, SeededRng, GRAD_CHECK_EPS};
    use rand::Rng;

    fn randv(rng: &mut SeededRng, n: usize) -> Vec<f64> {
        (0..n).map(|_| normal(rng)).collect()
    }

    fn values(rng: &mut SeededRng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(0.5..1.5)).collect()
    }

    #[test]
    fn fm_of_two_vectors_is_their_product() {
        let e1 = [1.0, 2.0];
        let e2 = [3.0, 4.0];
        let v = fm_vector(&[1.0, 1.0], &[&e1, &e2]).unwrap();
        assert_eq!(v, vec![3.0, 8.0]);
        assert_eq!(fm_score(&[1.0, 1.0], &[&e1, &e2]).unwrap(), 11.0);
    }

    #[test]
    fn fm_matches_brute_force() {
        let mut rng = seeded_rng(3);
        for n in 0..7 {
            let embs: Vec<Vec<f64>> = (0..n).map(|_| randv(&mut rng, 4)).collect();
            let refs: Vec<&[f64]> = embs.iter().map(|e| e.as_slice()).collect();
            let x = values(&mut rng, n);
            let mut want = vec![0.0; 4];
            for i in 0..n {
                for j in i + 1..n {
                    for d in 0..4 {
                        want[d] += x[i] * x[j] * embs[i][d] * embs[j][d];
                    }
                }
            }
            let got = if n == 0 {
                vec![0.0; 4]
            } else {
                fm_vector(&x, &refs).unwrap()
            };
            for d in 0..4 {
                assert!((got[d] - want[d]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gwpfm_reduces_to_fm_ffm_fwfm() {
        let mut rng = seeded_rng(5);
        let (n, k, nf) = (5, 3, 3);
        let fields = vec![0, 1, 2, 0, 1];
        let x = values(&mut rng, n);

        // one part, one group, r = 1 -> FM
        let embs: Vec<Vec<f64>> = (0..n).map(|_| randv(&mut rng, k)).collect();
        let refs: Vec<&[f64]> = embs.iter().map(|e| e.as_slice()).collect();
        let layout = GwpfmLayout {
            parts: vec![0; n],
            groups: vec![0; n],
            n_parts: 1,
            k,
        };
        let r1 = PairWeights::filled(1, 1.0);
        let g = gwpfm_interaction(&layout, &x, &refs, &r1, Reduce::Vector).unwrap();
        let f = fm_vector(&x, &refs).unwrap();
        assert!(
            matches!(g, Interaction::Vector(ref v) if v.iter().zip(&f).all(|(a, b)| (a - b).abs() < 1e-10))
        );

        // parts = fields, groups collapsed -> FFM
        let wide: Vec<Vec<f64>> = (0..n).map(|_| randv(&mut rng, nf * k)).collect();
        let wrefs: Vec<&[f64]> = wide.iter().map(|e| e.as_slice()).collect();
        let layout = GwpfmLayout {
            parts: fields.clone(),
            groups: vec![0; n],
            n_parts: nf,
            k,
        };
        let g = gwpfm_interaction(&layout, &x, &wrefs, &r1, Reduce::Scalar)
            .unwrap()
            .scalar();
        let f = ffm_score(&fields, &x, &wrefs, k).unwrap();
        assert!((g - f).abs() < 1e-10);

        // one part, groups = fields -> FwFM
        let mut r = PairWeights::filled(nf, 0.0);
        for v in r.as_mut_slice() {
            *v = rng.random_range(-1.0..1.0);
        }
        let layout = GwpfmLayout {
            parts: vec![0; n],
            groups: fields.clone(),
            n_parts: 1,
            k,
        };
        let g = gwpfm_interaction(&layout, &x, &refs, &r, Reduce::Scalar)
            .unwrap()
            .scalar();
        let f = fwfm_score(&fields, &x, &refs, &r).unwrap();
        assert!((g - f).abs() < 1e-10);
    }

    #[test]
    fn gwpfm_rejects_bad_ids() {
        let e = vec![0.0; 2];
        let layout = GwpfmLayout {
            parts: vec![0, 2],
            groups: vec![0, 0],
            n_parts: 2,
            k: 1,
        };
        let r = PairWeights::filled(1, 1.0);
        assert!(matches!(
            gwpfm_interaction(&layout, &[1.0, 1.0], &[&e, &e], &r, Reduce::Scalar),
            Err(Error::Config(_))
        ));
        let layout = GwpfmLayout {
            parts: vec![0, 1],
            groups: vec![0, 3],
            n_parts: 2,
            k: 1,
        };
        assert!(matches!(
            gwpfm_interaction(&layout, &[1.0, 1.0], &[&e, &e], &r, Reduce::Scalar),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn ffm_missing_field_copy_is_config_error() {
        let e = vec![0.0; 2];
        let err = ffm_vector(&[0, 3], &[1.0, 1.0], &[&e, &e], 1).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn projected_matches_brute_force_and_identity_is_fm() {
        let mut rng = seeded_rng(8);
        let (k, nf) = (3, 4);
        let fields = vec![2, 0, 3];
        let x = values(&mut rng, 3);
        let embs: Vec<Vec<f64>> = (0..3).map(|_| randv(&mut rng, k)).collect();
        let refs: Vec<&[f64]> = embs.iter().map(|e| e.as_slice()).collect();
        let proj = Projections::near_identity(nf, k, 0.3, &mut rng);
        let got = projected_vector(&fields, &x, &refs, &proj).unwrap();
        let mut want = vec![0.0; k];
        for i in 0..3 {
            for j in i + 1..3 {
                let (a, b) = if fields[i] < fields[j] {
                    (i, j)
                } else {
                    (j, i)
                };
                let m = proj.get(fields[a], fields[b]);
                for d in 0..k {
                    let p: f64 = (0..k).map(|l| embs[a][l] * m[(l, d)]).sum();
                    want[d] += x[i] * x[j] * p * embs[b][d];
                }
            }
        }
        for d in 0..k {
            assert!((got[d] - want[d]).abs() < 1e-10);
        }
        let ident = Projections::near_identity(nf, k, 0.0, &mut rng);
        let p = projected_vector(&fields, &x, &refs, &ident).unwrap();
        let f = fm_vector(&x, &refs).unwrap();
        assert!(p.iter().zip(&f).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn projected_rejects_repeated_field() {
        let mut rng = seeded_rng(1);
        let proj = Projections::near_identity(3, 2, 0.0, &mut rng);
        let e = vec![1.0, 1.0];
        assert!(projected_vector(&[1, 1], &[1.0, 1.0], &[&e, &e], &proj).is_err());
    }

    #[test]
    fn all_interaction_ops_pass_grad_check() {
        for seed in 0..25u64 {
            let mut rng = seeded_rng(100 + seed);
            let k = 3;
            let n = 4;
            let x = values(&mut rng, n);
            for reduce in [Reduce::Vector, Reduce::Scalar] {
                let op = FmOp {
                    x: x.clone(),
                    k,
                    reduce,
                };
                let inp = randv(&mut rng, n * k);
                assert!(grad_check(&op, &inp, GRAD_CHECK_EPS).unwrap() < 1e-6);

                let fields = vec![0, 1, 2, 1];
                let op = FfmOp {
                    fields: fields.clone(),
                    x: x.clone(),
                    n_fields: 3,
                    k,
                    reduce,
                };
                let inp = randv(&mut rng, n * 3 * k);
                assert!(grad_check(&op, &inp, GRAD_CHECK_EPS).unwrap() < 1e-6);

                let op = FwfmOp {
                    fields: fields.clone(),
                    x: x.clone(),
                    n_fields: 3,
                    k,
                    reduce,
                };
                let inp = randv(&mut rng, n * k + 6);
                assert!(grad_check(&op, &inp, GRAD_CHECK_EPS).unwrap() < 1e-6);

                let layout = GwpfmLayout {
                    parts: vec![0, 0, 1, 1],
                    groups: vec![0, 1, 2, 2],
                    n_parts: 2,
                    k,
                };
                let op = GwpfmOp {
                    layout,
                    x: x.clone(),
                    n_groups: 3,
                    reduce,
                };
                let inp = randv(&mut rng, n * 2 * k + 6);
                assert!(grad_check(&op, &inp, GRAD_CHECK_EPS).unwrap() < 1e-6);

                let op = ProjectedOp {
                    fields: vec![3, 0, 2, 1],
                    x: x.clone(),
                    n_fields: 4,
                    k,
                    reduce,
                };
                let inp = randv(&mut rng, n * k + 6 * k * k);
                assert!(grad_check(&op, &inp, GRAD_CHECK_EPS).unwrap() < 1e-6);
            }
        }
    }
}
