use super::{gwpfm_interaction, GwpfmLayout, PairWeights, Reduce};
use crate::numerics::dot;
use crate::{Error, Result};

/// Mean of the Part-1 feature embeddings that share a group.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledGroup {
    pub group: usize,
    pub part: usize,
    /// Part-aware embedding, `n_parts · k` wide.
    pub emb: Vec<f64>,
}

/// Request-side (user/context) state shared by all candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct PartPooledRequest {
    pub n_parts: usize,
    pub k: usize,
    pub groups: Vec<PooledGroup>,
}

impl PartPooledRequest {
    /// Average-pools `(group, part, embedding)` features by group. Groups
    /// come out in ascending id order.
    pub fn pool(features: &[(usize, usize, Vec<f64>)], n_parts: usize, k: usize) -> Result<Self> {
        let mut groups: Vec<(PooledGroup, usize)> = Vec::new();
        for (g, p, e) in features {
            if e.len() != n_parts * k {
                return Err(Error::Input("pooled feature has wrong width".into()));
            }
            match groups.iter_mut().find(|(pg, _)| pg.group == *g) {
                Some((pg, n)) => {
                    if pg.part != *p {
                        return Err(Error::Config(format!("group {g} spans several parts")));
                    }
                    crate::numerics::axpy(&mut pg.emb, 1.0, e);
                    *n += 1;
                }
                None => groups.push((
                    PooledGroup {
                        group: *g,
                        part: *p,
                        emb: e.clone(),
                    },
                    1,
                )),
            }
        }
        let mut groups: Vec<PooledGroup> = groups
            .into_iter()
            .map(|(mut pg, n)| {
                pg.emb.iter_mut().for_each(|v| *v /= n as f64);
                pg
            })
            .collect();
        groups.sort_by_key(|g| g.group);
        Ok(PartPooledRequest { n_parts, k, groups })
    }
}

/// A candidate's own features as `(group, part, embedding)`.
pub type CandidateFeatures = Vec<(usize, usize, Vec<f64>)>;

/// Scores many candidates against one pooled request. Part-1 pair terms
/// and the Part-1 side of cross terms are computed once at construction.
#[derive(Debug, Clone)]
pub struct CandidateScorer<'a> {
    request: &'a PartPooledRequest,
    r: &'a PairWeights,
    part1_total: f64,
    /// `cross[(g2 · P + p2) · P + p1]`: `Σ_{h: P(h)=p1} r_{h,g2} e_{h,p2}`.
    cross: Vec<Vec<f64>>,
    part1_pair_evaluations: usize,
}

impl<'a> CandidateScorer<'a> {
    pub fn new(request: &'a PartPooledRequest, r: &'a PairWeights) -> Result<Self> {
        let (p, k) = (request.n_parts, request.k);
        for g in &request.groups {
            if g.group >= r.n() || g.part >= p || g.emb.len() != p * k {
                return Err(Error::Config(format!(
                    "pooled group {} out of range",
                    g.group
                )));
            }
        }
        let copy = |e: &'a [f64], part: usize| &e[part * k..(part + 1) * k];
        let mut part1_total = 0.0;
        let mut evals = 0;
        let gs = &request.groups;
        for a in 0..gs.len() {
            for b in a + 1..gs.len() {
                part1_total += r.get(gs[a].group, gs[b].group)
                    * dot(copy(&gs[a].emb, gs[b].part), copy(&gs[b].emb, gs[a].part));
                evals += 1;
            }
        }
        let mut cross = vec![vec![0.0; k]; r.n() * p * p];
        for g2 in 0..r.n() {
            for p2 in 0..p {
                for h in gs {
                    let slot = (g2 * p + p2) * p + h.part;
                    crate::numerics::axpy(&mut cross[slot], r.get(h.group, g2), copy(&h.emb, p2));
                }
            }
        }
        Ok(CandidateScorer {
            request,
            r,
            part1_total,
            cross,
            part1_pair_evaluations: evals,
        })
    }

    /// Number of Part-1 group-pair inner products evaluated so far.
    pub fn part1_pair_evaluations(&self) -> usize {
        self.part1_pair_evaluations
    }

    pub fn score(&self, candidate: &[(usize, usize, Vec<f64>)]) -> Result<f64> {
        let (p, k) = (self.request.n_parts, self.request.k);
        for (g, part, e) in candidate {
            if *g >= self.r.n() || *part >= p || e.len() != p * k {
                return Err(Error::Config(format!(
                    "candidate feature group {g} out of range"
                )));
            }
        }
        let copy = |e: &[f64], part: usize| e[part * k..(part + 1) * k].to_vec();
        let mut total = self.part1_total;
        for (g2, p2, e) in candidate {
            for p1 in 0..p {
                total += dot(&self.cross[(g2 * p + p2) * p + p1], &copy(e, p1));
            }
        }
        for a in 0..candidate.len() {
            for b in a + 1..candidate.len() {
                let (ga, pa, ea) = &candidate[a];
                let (gb, pb, eb) = &candidate[b];
                total += self.r.get(*ga, *gb) * dot(&copy(ea, *pb), &copy(eb, *pa));
            }
        }
        Ok(total)
    }
}

/// Scores each candidate; equals running the scalar interaction over
/// `[pooled groups…, candidate features…]` per candidate.
pub fn gwpfm_score_candidates(
    request: &PartPooledRequest,
    candidates: &[CandidateFeatures],
    r: &PairWeights,
) -> Result<(Vec<f64>, usize)> {
    let scorer = CandidateScorer::new(request, r)?;
    let scores = candidates
        .iter()
        .map(|c| scorer.score(c))
        .collect::<Result<Vec<_>>>()?;
    Ok((scores, scorer.part1_pair_evaluations()))
}

/// The per-candidate reference path used to validate the scorer.
pub fn naive_candidate_score(
    request: &PartPooledRequest,
    candidate: &[(usize, usize, Vec<f64>)],
    r: &PairWeights,
) -> Result<f64> {
    let mut parts = Vec::new();
    let mut groups = Vec::new();
    let mut emb: Vec<&[f64]> = Vec::new();
    for g in &request.groups {
        parts.push(g.part);
        groups.push(g.group);
        emb.push(&g.emb);
    }
    for (g, p, e) in candidate {
        parts.push(*p);
        groups.push(*g);
        emb.push(e);
    }
    let x = vec![1.0; emb.len()];
    let layout = GwpfmLayout {
        parts,
        groups,
        n_parts: request.n_parts,
        k: request.k,
    };
    Ok(gwpfm_interaction(&layout, &x, &emb, r, Reduce::Scalar)?.scalar())
}
