use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::{Error, Result};

/// Weighting of repeated-exposure negatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewConfig {
    /// Mix between the count and recency weights.
    pub alpha: f64,
    /// Half-life in seconds of past exposures in the decayed count.
    pub count_half_life: f64,
    /// Upper bound on the count part, `w_count ≤ 1 + count_cap`.
    pub count_cap: f64,
    /// Seconds over which the recency weight relaxes back to 1.
    pub recency_scale: f64,
}

impl Default for RewConfig {
    fn default() -> Self {
        RewConfig {
            alpha: 0.5,
            count_half_life: 86_400.0,
            count_cap: 4.0,
            recency_scale: 3_600.0,
        }
    }
}

impl RewConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!(
                "rew.alpha {} outside [0, 1]",
                self.alpha
            )));
        }
        for (name, v) in [
            ("count_half_life", self.count_half_life),
            ("recency_scale", self.recency_scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("rew.{name} must be positive")));
            }
        }
        if !(self.count_cap >= 0.0) {
            return Err(Error::Config("rew.count_cap must be non-negative".into()));
        }
        Ok(())
    }
}

/// `Σ 2^{−age/half_life}` over the ages of earlier exposures.
pub fn decayed_exposure_count(ages: &[f64], half_life: f64) -> f64 {
    ages.iter().map(|a| (-a.max(0.0) / half_life).exp2()).sum()
}

/// `α·w_count + (1 − α)·w_recency` with `w_count = 1 + min(count, cap)` and
/// `w_recency = 1 + e^{−gap/scale}`. Negative stats are treated as zero.
pub fn rew_weight(count: f64, gap: f64, cfg: &RewConfig) -> f64 {
    let w_count = 1.0 + count.max(0.0).min(cfg.count_cap);
    let w_recency = 1.0 + (-gap.max(0.0) / cfg.recency_scale).exp();
    cfg.alpha * w_count + (1.0 - cfg.alpha) * w_recency
}

/// Mean `w_rep` over the negatives; 1 when there are none.
pub fn debias_weight(labels: &[u8], w_rep: &[f64]) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for (&y, &w) in labels.iter().zip(w_rep) {
        if y == 0 {
            sum += w;
            n += 1;
        }
    }
    if n == 0 {
        1.0
    } else {
        sum / n as f64
    }
}

/// Per-sample loss weights for one task over a batch. Negatives carry
/// `w_rep` (1 without repeat statistics), positives carry `w_debias`.
pub fn sample_weights(samples: &[&Sample], task: usize, cfg: &RewConfig) -> Vec<f64> {
    let labels: Vec<u8> = samples.iter().map(|s| s.labels[task]).collect();
    let w_rep: Vec<f64> = samples
        .iter()
        .map(|s| match (s.repeat_count, s.last_repeat_gap) {
            (None, None) => 1.0,
            (c, g) => rew_weight(c.unwrap_or(0.0), g.unwrap_or(f64::INFINITY), cfg),
        })
        .collect();
    let debias = debias_weight(&labels, &w_rep);
    labels
        .iter()
        .zip(&w_rep)
        .map(|(&y, &w)| if y == 1 { debias } else { w })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_repetition_means_no_upweight() {
        let cfg = RewConfig::default();
        assert_eq!(rew_weight(0.0, f64::INFINITY, &cfg), 1.0);
    }

    #[test]
    fn formula_arithmetic() {
        let cfg = RewConfig {
            alpha: 0.5,
            ..Default::default()
        };
        // w_count = 2, w_recency = 1
        assert!((rew_weight(1.0, f64::INFINITY, &cfg) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn monotone_in_count_and_at_least_one() {
        let cfg = RewConfig::default();
        for gap in [0.0, 10.0, 1e4, f64::INFINITY] {
            let mut last = 0.0;
            for i in 0..100 {
                let w = rew_weight(i as f64 * 0.1, gap, &cfg);
                assert!(w >= 1.0 && w >= last);
                last = w;
            }
        }
    }

    #[test]
    fn decayed_count_halves() {
        assert!((decayed_exposure_count(&[0.0, 10.0], 10.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn debias_examples() {
        assert_eq!(debias_weight(&[0, 1, 0], &[1.0, 1.0, 1.0]), 1.0);
        assert_eq!(debias_weight(&[0, 1, 0], &[1.0, 5.0, 3.0]), 2.0);
        assert_eq!(debias_weight(&[1, 1], &[2.0, 3.0]), 1.0);
    }

    #[test]
    fn removing_rew_lowers_weight_on_repeated_negatives() {
        let cfg = RewConfig::default();
        let mk = |y: u8, c: Option<f64>| Sample {
            values: vec![],
            labels: vec![y],
            timestamp: 0,
            user_id: 0,
            ad_id: 0,
            repeat_count: c,
            last_repeat_gap: c.map(|_| 60.0),
        };
        let batch = [mk(0, Some(2.0)), mk(0, None), mk(1, None), mk(0, Some(0.5))];
        let refs: Vec<&Sample> = batch.iter().collect();
        let w = sample_weights(&refs, 0, &cfg);
        let repeated = w[0] + w[3];
        assert!(repeated > 2.0);
        assert_eq!(w[1], 1.0);
        assert!((w[2] - (w[0] + w[1] + w[3]) / 3.0).abs() < 1e-15);
    }
}
