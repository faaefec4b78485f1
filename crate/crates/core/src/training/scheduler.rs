use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::numerics::seeded_rng;
use crate::{Error, Result};

/// Rolling conversion statistics over the most recent reporting window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackWindowStats {
    pub observed_cvr: f64,
    pub historical_cvr: f64,
    /// Variance of the per-interval CVR inside the window.
    pub variance: f64,
    /// Number of intervals in the window.
    pub window: usize,
}

impl FeedbackWindowStats {
    /// Mean and population variance of `cvrs` against a reference rate.
    pub fn from_window(cvrs: &[f64], historical_cvr: f64) -> Result<Self> {
        if cvrs.is_empty() {
            return Err(Error::Scheduler("empty feedback window".into()));
        }
        let n = cvrs.len() as f64;
        // Shifted by the first value so a constant window gives its value back exactly.
        let mean = cvrs[0] + cvrs.iter().map(|c| c - cvrs[0]).sum::<f64>() / n;
        let variance = cvrs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n;
        Ok(FeedbackWindowStats {
            observed_cvr: mean,
            historical_cvr,
            variance,
            window: cvrs.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchedulerConfig {
    pub min_wait: f64,
    pub max_wait: f64,
    /// Relative deviation at which the wait saturates at `max_wait`.
    pub threshold: f64,
    pub eps: f64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            min_wait: 0.0,
            max_wait: 3_600.0,
            threshold: 1.0,
            eps: 1e-9,
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_wait >= 0.0 && self.max_wait >= self.min_wait && self.max_wait.is_finite()) {
            return Err(Error::Config(
                "scheduler needs 0 ≤ min_wait ≤ max_wait < ∞".into(),
            ));
        }
        if !(self.threshold > 0.0 && self.eps > 0.0) {
            return Err(Error::Config(
                "scheduler threshold and eps must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Seconds to hold samples before training on them.
///
/// The deviation `√(var + (obs − hist)²) / hist` is mapped linearly onto
/// `[min_wait, max_wait]`, saturating at `threshold`.
pub fn delayed_feedback_wait(stats: &FeedbackWindowStats, cfg: &SchedulerConfig) -> Result<f64> {
    if stats.window == 0 {
        return Err(Error::Scheduler("empty feedback window".into()));
    }
    if !(stats.variance >= 0.0
        && stats.observed_cvr.is_finite()
        && stats.historical_cvr.is_finite())
    {
        return Err(Error::Scheduler(format!(
            "invalid window statistics {stats:?}"
        )));
    }
    let gap = stats.observed_cvr - stats.historical_cvr;
    let dev = (stats.variance + gap * gap).sqrt() / stats.historical_cvr.abs().max(cfg.eps);
    let z = (dev / cfg.threshold).clamp(0.0, 1.0);
    Ok(cfg.min_wait + (cfg.max_wait - cfg.min_wait) * z)
}

/// A conversion stream where one advertiser withholds reports and then
/// dumps them in a single interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeedbackSimConfig {
    pub intervals: usize,
    pub impressions: u64,
    pub cvr: f64,
    pub window: usize,
    /// Interval at which the withheld conversions arrive.
    pub burst_at: Option<usize>,
    /// Intervals of silence before the burst.
    pub withheld: usize,
    pub seed: u64,
}

impl Default for FeedbackSimConfig {
    fn default() -> Self {
        FeedbackSimConfig {
            intervals: 200,
            impressions: 10_000,
            cvr: 0.02,
            window: 10,
            burst_at: Some(120),
            withheld: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackStep {
    pub interval: usize,
    pub conversions: u64,
    pub stats: Option<FeedbackWindowStats>,
    pub wait: Option<f64>,
}

/// Replays the stream and reports the wait after every interval once the
/// window is full. The historical rate is the mean over all earlier
/// intervals.
pub fn simulate_feedback(
    sim: &FeedbackSimConfig,
    cfg: &SchedulerConfig,
) -> Result<Vec<FeedbackStep>> {
    cfg.validate()?;
    if sim.window == 0 || sim.impressions == 0 || !(0.0..=1.0).contains(&sim.cvr) {
        return Err(Error::Config(
            "simulation needs window > 0, impressions > 0, cvr in [0, 1]".into(),
        ));
    }
    let mut rng = seeded_rng(sim.seed);
    let binom =
        Binomial::new(sim.impressions, sim.cvr).map_err(|e| Error::Config(e.to_string()))?;
    let mut conversions: Vec<u64> = (0..sim.intervals).map(|_| binom.sample(&mut rng)).collect();
    if let Some(b) = sim.burst_at.filter(|&b| b < sim.intervals) {
        let start = b.saturating_sub(sim.withheld);
        let held: u64 = conversions[start..b].iter().sum();
        conversions[start..b].fill(0);
        conversions[b] += held;
    }
    let imp = sim.impressions as f64;
    let cvrs: Vec<f64> = conversions.iter().map(|&c| c as f64 / imp).collect();
    let mut out = Vec::with_capacity(sim.intervals);
    for i in 0..sim.intervals {
        let (stats, wait) = if i + 1 > sim.window {
            let win = &cvrs[i + 1 - sim.window..=i];
            let hist = cvrs[..i + 1 - sim.window].iter().sum::<f64>() / (i + 1 - sim.window) as f64;
            let s = FeedbackWindowStats::from_window(win, hist)?;
            (Some(s), Some(delayed_feedback_wait(&s, cfg)?))
        } else {
            (None, None)
        };
        out.push(FeedbackStep {
            interval: i,
            conversions: conversions[i],
            stats,
            wait,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(obs: f64, hist: f64, var: f64) -> FeedbackWindowStats {
        FeedbackWindowStats {
            observed_cvr: obs,
            historical_cvr: hist,
            variance: var,
            window: 10,
        }
    }

    #[test]
    fn calm_stream_waits_minimum() {
        let cfg = SchedulerConfig {
            min_wait: 30.0,
            ..Default::default()
        };
        assert_eq!(
            delayed_feedback_wait(&stats(0.02, 0.02, 0.0), &cfg).unwrap(),
            30.0
        );
    }

    #[test]
    fn constant_window_has_exact_mean_and_zero_variance() {
        let s = FeedbackWindowStats::from_window(&[0.02; 10], 0.02).unwrap();
        assert_eq!((s.observed_cvr, s.variance), (0.02, 0.0));
        assert_eq!(
            delayed_feedback_wait(
                &s,
                &SchedulerConfig {
                    min_wait: 30.0,
                    ..Default::default()
                }
            )
            .unwrap(),
            30.0
        );
    }

    #[test]
    fn spike_waits_maximum() {
        let cfg = SchedulerConfig::default();
        assert_eq!(
            delayed_feedback_wait(&stats(0.2, 0.02, 1e-3), &cfg).unwrap(),
            cfg.max_wait
        );
    }

    #[test]
    fn monotone_sweeps() {
        let cfg = SchedulerConfig::default();
        let mut last = 0.0;
        for i in 0..200 {
            let w = delayed_feedback_wait(&stats(0.02, 0.02, i as f64 * 1e-6), &cfg).unwrap();
            assert!(w >= last);
            last = w;
        }
        last = 0.0;
        for i in 0..200 {
            let w =
                delayed_feedback_wait(&stats(0.02 + i as f64 * 1e-4, 0.02, 1e-6), &cfg).unwrap();
            assert!(w >= last);
            last = w;
        }
        for i in 1..100 {
            let s = stats(0.02 + i as f64 * 2e-4, 0.02, 1e-6);
            let t = 0.05 * i as f64;
            let a = delayed_feedback_wait(
                &s,
                &SchedulerConfig {
                    threshold: t,
                    ..cfg.clone()
                },
            )
            .unwrap();
            let b = delayed_feedback_wait(
                &s,
                &SchedulerConfig {
                    threshold: 2.0 * t,
                    ..cfg.clone()
                },
            )
            .unwrap();
            assert!(b <= a);
        }
    }

    #[test]
    fn empty_window_is_an_error() {
        let s = FeedbackWindowStats {
            window: 0,
            ..stats(0.1, 0.1, 0.0)
        };
        assert!(matches!(
            delayed_feedback_wait(&s, &SchedulerConfig::default()),
            Err(Error::Scheduler(_))
        ));
        assert!(FeedbackWindowStats::from_window(&[], 0.1).is_err());
    }

    #[test]
    fn burst_stream_saturates() {
        let cfg = SchedulerConfig {
            threshold: 0.5,
            ..Default::default()
        };
        let trace = simulate_feedback(&FeedbackSimConfig::default(), &cfg).unwrap();
        let at = trace[120].wait.unwrap();
        assert_eq!(at, cfg.max_wait);
        let calm = trace[60].wait.unwrap();
        assert!(calm < 0.5 * cfg.max_wait, "calm wait {calm}");
    }
}
