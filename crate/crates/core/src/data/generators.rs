//! Synthetic datasets with known label models.
//!
//! Every generator is a pure function of `(seed, n, cfg)` and labels are
//! Bernoulli draws from a logistic model, so ground-truth probabilities
//! are available for checks.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Behavior, Dataset, FieldSchema, FieldSpec, FieldValue, Manifest, Sample};
use crate::numerics::{seeded_rng, sigmoid, Matrix, SeededRng};
use crate::{Error, Result};

const EPOCH: i64 = 1_600_000_000;

/// Finds `b` with `mean σ(b + s_i) = rate` by bisection.
pub fn calibrate_bias(scores: &[f64], rate: f64) -> f64 {
    if scores.is_empty() {
        return (rate / (1.0 - rate)).ln();
    }
    let mean = |b: f64| scores.iter().map(|s| sigmoid(b + s)).sum::<f64>() / scores.len() as f64;
    let (mut lo, mut hi) = (-60.0, 60.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(mid) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::Config(format!("{name} = {v} must lie in (0, 1)")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticCtrConfig {
    pub n_categories: usize,
    pub seq_len: usize,
    pub n_users: usize,
    pub base_rate: f64,
    /// Logit boost per behavior whose category matches the target.
    pub beta_s: f64,
    /// Decay of that boost per interval bucket.
    pub beta_t: f64,
    /// Chance that a behavior copies the target category.
    pub match_prob: f64,
}

impl Default for SyntheticCtrConfig {
    fn default() -> Self {
        SyntheticCtrConfig {
            n_categories: 10,
            seq_len: 8,
            n_users: 100,
            base_rate: 0.1,
            beta_s: 1.5,
            beta_t: 0.5,
            match_prob: 0.2,
        }
    }
}

impl SyntheticCtrConfig {
    pub fn validate(&self) -> Result<()> {
        check_rate("base_rate", self.base_rate)?;
        if !(0.0..=1.0).contains(&self.match_prob) {
            return Err(Error::Config("match_prob must lie in [0, 1]".into()));
        }
        if !self.beta_s.is_finite() || !(self.beta_t.is_finite() && self.beta_t >= 0.0) {
            return Err(Error::Config("beta_s must be finite and beta_t ≥ 0".into()));
        }
        if self.n_categories < 2 || self.n_users < 1 {
            return Err(Error::Config("need ≥ 2 categories and ≥ 1 user".into()));
        }
        if self.seq_len == 0 || self.seq_len > 32 {
            return Err(Error::Config("seq_len must lie in 1..=32".into()));
        }
        Ok(())
    }

    pub fn schema(&self) -> FieldSchema {
        FieldSchema::new(
            vec!["click".into()],
            vec![
                FieldSpec::categorical("user", self.n_users),
                FieldSpec::categorical("ad_category", self.n_categories).with_part_group(1, 1),
                FieldSpec::sequence(
                    "behaviors",
                    self.n_categories,
                    self.seq_len,
                    Some("ad_category"),
                ),
            ],
        )
        .expect("generator schema is valid")
    }
}

/// Behaviour `i` (0 = most recent) is `2^i − 1 ≤ age < 2^{i+1} − 1` seconds
/// old, so its interval bucket is exactly `i`. The label logit is
/// `b + β_s Σ_i [c_i = c_t] e^{−β_t i}` with `b` calibrated to the base rate.
pub fn gen_synthetic_ctr(
    seed: u64,
    n: usize,
    cfg: &SyntheticCtrConfig,
) -> Result<(Dataset, Manifest)> {
    cfg.validate()?;
    let mut rng = seeded_rng(seed);
    let mut samples = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);
    for idx in 0..n {
        let ts = EPOCH + 60 * idx as i64;
        let user = rng.random_range(0..cfg.n_users);
        let target = rng.random_range(0..cfg.n_categories);
        let mut seq = Vec::with_capacity(cfg.seq_len);
        let mut score = 0.0;
        for i in 0..cfg.seq_len {
            let item = if rng.random::<f64>() < cfg.match_prob {
                target
            } else {
                rng.random_range(0..cfg.n_categories)
            };
            let lo = (1i64 << i) - 1;
            let hi = (1i64 << (i + 1)) - 1;
            let age = rng.random_range(lo..hi);
            if item == target {
                score += cfg.beta_s * (-cfg.beta_t * i as f64).exp();
            }
            seq.push(Behavior { item, ts: ts - age });
        }
        scores.push(score);
        samples.push(Sample {
            values: vec![
                FieldValue::Category(user),
                FieldValue::Category(target),
                FieldValue::Sequence(seq),
            ],
            labels: vec![0],
            timestamp: ts,
            user_id: user as u64,
            ad_id: target as u64,
            repeat_count: None,
            last_repeat_gap: None,
        });
    }
    let b = calibrate_bias(&scores, cfg.base_rate);
    for (s, score) in samples.iter_mut().zip(&scores) {
        s.labels[0] = u8::from(rng.random::<f64>() < sigmoid(b + score));
    }
    let ds = Dataset::new(cfg.schema(), samples)?;
    let mut m = Manifest::describe(&ds);
    m.generator = Some("synthetic_ctr".into());
    m.seed = Some(seed);
    m.config = serde_json::json!({ "cfg": cfg, "bias": b });
    Ok((ds, m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContradictoryConfig {
    pub n_users: usize,
    pub n_items: usize,
    /// Fraction of the user-item pair universe that is contradictory.
    pub q: f64,
    pub latent_dim: usize,
    pub affinity_scale: f64,
    /// Logit offset of planted pairs: `+contrast` for task A, `−contrast` for B.
    pub contrast: f64,
    pub base_logit: f64,
    /// Users and items are split into this many random clusters and whole
    /// cluster blocks are planted; 0 plants individual pairs.
    pub clusters: usize,
}

impl Default for ContradictoryConfig {
    fn default() -> Self {
        ContradictoryConfig {
            n_users: 100,
            n_items: 100,
            q: 0.4,
            latent_dim: 4,
            affinity_scale: 1.5,
            contrast: 3.0,
            base_logit: -1.0,
            clusters: 5,
        }
    }
}

impl ContradictoryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.q) {
            return Err(Error::Config(format!("q = {} must lie in [0, 1)", self.q)));
        }
        if self.n_users == 0 || self.n_items == 0 || self.latent_dim == 0 {
            return Err(Error::Config(
                "vocabularies and latent_dim must be positive".into(),
            ));
        }
        if ![self.affinity_scale, self.contrast, self.base_logit]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::Config("non-finite generator parameter".into()));
        }
        Ok(())
    }

    pub fn schema(&self) -> FieldSchema {
        FieldSchema::new(
            vec!["a".into(), "b".into()],
            vec![
                FieldSpec::categorical("user", self.n_users),
                FieldSpec::categorical("item", self.n_items).with_part_group(1, 1),
            ],
        )
        .expect("generator schema is valid")
    }
}

/// Two tasks sharing one latent affinity `s⟨u, v⟩`, except on a planted
/// fraction `q` of user-item pairs (or of cluster blocks) where task A is
/// pushed up and task B down. Planted pairs are listed in the manifest.
pub fn gen_two_task_contradictory(
    seed: u64,
    n: usize,
    cfg: &ContradictoryConfig,
) -> Result<(Dataset, Manifest)> {
    cfg.validate()?;
    let mut rng = seeded_rng(seed);
    let scale = cfg.affinity_scale / (cfg.latent_dim as f64).sqrt();
    let users = Matrix::random_normal(cfg.n_users, cfg.latent_dim, 1.0, &mut rng);
    let items = Matrix::random_normal(cfg.n_items, cfg.latent_dim, 1.0, &mut rng);
    let universe = cfg.n_users * cfg.n_items;
    let mut planted_flag = vec![false; universe];
    if cfg.clusters == 0 {
        let n_planted = (cfg.q * universe as f64).round() as usize;
        let mut ids: Vec<usize> = (0..universe).collect();
        ids.shuffle(&mut rng);
        for &i in &ids[..n_planted] {
            planted_flag[i] = true;
        }
    } else {
        let c = cfg.clusters;
        let uc: Vec<usize> = (0..cfg.n_users).map(|_| rng.random_range(0..c)).collect();
        let ic: Vec<usize> = (0..cfg.n_items).map(|_| rng.random_range(0..c)).collect();
        let mut blocks: Vec<usize> = (0..c * c).collect();
        blocks.shuffle(&mut rng);
        let mut block_flag = vec![false; c * c];
        for &b in &blocks[..(cfg.q * (c * c) as f64).round() as usize] {
            block_flag[b] = true;
        }
        for u in 0..cfg.n_users {
            for v in 0..cfg.n_items {
                planted_flag[u * cfg.n_items + v] = block_flag[uc[u] * c + ic[v]];
            }
        }
    }
    let mut samples = Vec::with_capacity(n);
    for idx in 0..n {
        let u = rng.random_range(0..cfg.n_users);
        let v = rng.random_range(0..cfg.n_items);
        let aff = cfg.base_logit + scale * crate::numerics::dot(users.row(u), items.row(v));
        let (la, lb) = if planted_flag[u * cfg.n_items + v] {
            (aff + cfg.contrast, aff - cfg.contrast)
        } else {
            (aff, aff)
        };
        let ya = u8::from(rng.random::<f64>() < sigmoid(la));
        let yb = u8::from(rng.random::<f64>() < sigmoid(lb));
        samples.push(Sample {
            values: vec![FieldValue::Category(u), FieldValue::Category(v)],
            labels: vec![ya, yb],
            timestamp: EPOCH + idx as i64,
            user_id: u as u64,
            ad_id: v as u64,
            repeat_count: None,
            last_repeat_gap: None,
        });
    }
    let ds = Dataset::new(cfg.schema(), samples)?;
    let mut m = Manifest::describe(&ds);
    m.generator = Some("two_task_contradictory".into());
    m.seed = Some(seed);
    m.planted_pairs = (0..universe)
        .filter(|&i| planted_flag[i])
        .map(|i| ((i / cfg.n_items) as u64, (i % cfg.n_items) as u64))
        .collect();
    m.config = serde_json::to_value(cfg)?;
    Ok((ds, m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollapseProbeConfig {
    pub low_cardinality: usize,
    pub high_cardinality: usize,
    /// Third field interacting with the high-cardinality one; 0 omits it.
    pub context_cardinality: usize,
    /// Scale of the low × high preference table.
    pub low_scale: f64,
    /// Scale of the high × context preference table.
    pub context_scale: f64,
    pub base_rate: f64,
}

impl Default for CollapseProbeConfig {
    fn default() -> Self {
        CollapseProbeConfig {
            low_cardinality: 2,
            high_cardinality: 1000,
            context_cardinality: 0,
            low_scale: 2.0,
            context_scale: 1.0,
            base_rate: 0.3,
        }
    }
}

impl CollapseProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.low_cardinality < 2 || self.high_cardinality < 2 {
            return Err(Error::Config("cardinalities must be ≥ 2".into()));
        }
        if self.context_cardinality == 1 {
            return Err(Error::Config("context_cardinality must be 0 or ≥ 2".into()));
        }
        check_rate("base_rate", self.base_rate)?;
        if !(self.low_scale.is_finite() && self.context_scale.is_finite()) {
            return Err(Error::Config("non-finite table scale".into()));
        }
        Ok(())
    }

    pub fn schema(&self) -> FieldSchema {
        let mut fields = vec![
            FieldSpec::categorical("low", self.low_cardinality),
            FieldSpec::categorical("high", self.high_cardinality).with_part_group(1, 1),
        ];
        if self.context_cardinality > 0 {
            fields.push(FieldSpec::categorical("context", self.context_cardinality));
        }
        FieldSchema::new(vec!["click".into()], fields).expect("generator schema is valid")
    }
}

/// Random Gaussian preference tables (full rank almost surely).
pub fn collapse_probe_tables(seed: u64, cfg: &CollapseProbeConfig) -> (Matrix, Option<Matrix>) {
    let mut rng = seeded_rng(seed);
    let low = Matrix::random_normal(cfg.low_cardinality, cfg.high_cardinality, 1.0, &mut rng);
    let ctx = (cfg.context_cardinality > 0).then(|| {
        Matrix::random_normal(cfg.high_cardinality, cfg.context_cardinality, 1.0, &mut rng)
    });
    (low, ctx)
}

/// Labels from `b + s_l T[low, high] (+ s_c U[high, context])`.
pub fn gen_collapse_probe(
    seed: u64,
    n: usize,
    cfg: &CollapseProbeConfig,
) -> Result<(Dataset, Manifest)> {
    cfg.validate()?;
    let (low_t, ctx_t) = collapse_probe_tables(seed, cfg);
    let mut rng: SeededRng = seeded_rng(seed ^ 0x5eed);
    let mut samples = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);
    for idx in 0..n {
        let a = rng.random_range(0..cfg.low_cardinality);
        let h = rng.random_range(0..cfg.high_cardinality);
        let mut values = vec![FieldValue::Category(a), FieldValue::Category(h)];
        let mut score = cfg.low_scale * low_t[(a, h)];
        if let Some(t) = &ctx_t {
            let c = rng.random_range(0..cfg.context_cardinality);
            score += cfg.context_scale * t[(h, c)];
            values.push(FieldValue::Category(c));
        }
        scores.push(score);
        samples.push(Sample {
            values,
            labels: vec![0],
            timestamp: EPOCH + idx as i64,
            user_id: a as u64,
            ad_id: h as u64,
            repeat_count: None,
            last_repeat_gap: None,
        });
    }
    let b = calibrate_bias(&scores, cfg.base_rate);
    for (s, score) in samples.iter_mut().zip(&scores) {
        s.labels[0] = u8::from(rng.random::<f64>() < sigmoid(b + score));
    }
    let ds = Dataset::new(cfg.schema(), samples)?;
    let mut m = Manifest::describe(&ds);
    m.generator = Some("collapse_probe".into());
    m.seed = Some(seed);
    m.config = serde_json::json!({ "cfg": cfg, "bias": b });
    Ok((ds, m))
}
