use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gp::gp_fit_counts;
use super::KernelConfig;
use crate::numerics::{normal, seeded_rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Policy {
    /// GP Thompson sampling over the arm feature vectors.
    Ts,
    EpsilonGreedy {
        epsilon: f64,
    },
    /// Plays each arm once in index order, then the best empirical mean.
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BanditConfig {
    /// True click-through rate per arm.
    pub arms: Vec<f64>,
    /// Feature vector per arm; one-hot ids when absent.
    #[serde(default)]
    pub features: Option<Vec<Vec<f64>>>,
    pub policy: Policy,
    pub rounds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "ts_kernel")]
    pub kernel: KernelConfig,
}

/// Wide logit prior and short lengthscale: one-hot arms are nearly
/// independent a priori.
fn ts_kernel() -> KernelConfig {
    KernelConfig {
        lengthscale: 0.5,
        variance: 4.0,
        ..Default::default()
    }
}

impl BanditConfig {
    pub fn new(arms: Vec<f64>, policy: Policy, rounds: usize, seed: u64) -> Self {
        BanditConfig {
            arms,
            features: None,
            policy,
            rounds,
            seed,
            kernel: ts_kernel(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditTrace {
    pub choices: Vec<usize>,
    pub rewards: Vec<u8>,
    /// Cumulative expected regret against the best arm after each round.
    pub regret: Vec<f64>,
}

impl BanditTrace {
    pub fn final_regret(&self) -> f64 {
        self.regret.last().copied().unwrap_or(0.0)
    }
}

pub fn one_hot_arms(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Plays `rounds` Bernoulli pulls under `policy`. Deterministic per seed.
pub fn bandit_simulate(cfg: &BanditConfig) -> Result<BanditTrace> {
    let k = cfg.arms.len();
    if k < 2 {
        return Err(Error::Config("a bandit needs at least two arms".into()));
    }
    if cfg.arms.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Config("arm CTRs must lie in [0, 1]".into()));
    }
    if let Policy::EpsilonGreedy { epsilon } = cfg.policy {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Config(format!("epsilon {epsilon} outside [0, 1]")));
        }
    }
    let features = cfg.features.clone().unwrap_or_else(|| one_hot_arms(k));
    if features.len() != k {
        return Err(Error::Config("one feature vector per arm required".into()));
    }
    cfg.kernel.validate()?;
    let best = cfg.arms.iter().cloned().fold(f64::MIN, f64::max);
    let mut rng = seeded_rng(cfg.seed);
    let mut pulls = vec![0.0; k];
    let mut clicks = vec![0.0; k];
    let mut trace = BanditTrace {
        choices: Vec::with_capacity(cfg.rounds),
        rewards: Vec::with_capacity(cfg.rounds),
        regret: Vec::with_capacity(cfg.rounds),
    };
    let mut regret = 0.0;
    for round in 0..cfg.rounds {
        let means = |pulls: &[f64], clicks: &[f64]| -> Vec<f64> {
            pulls
                .iter()
                .zip(clicks)
                .map(|(n, c)| if *n > 0.0 { c / n } else { 0.0 })
                .collect::<Vec<_>>()
        };
        let arm = match cfg.policy {
            Policy::Greedy if round < k => round,
            Policy::Greedy => argmax(&means(&pulls, &clicks)),
            Policy::EpsilonGreedy { epsilon } => {
                if rng.random::<f64>() < epsilon {
                    rng.random_range(0..k)
                } else {
                    argmax(&means(&pulls, &clicks))
                }
            }
            Policy::Ts => {
                let seen: Vec<usize> = (0..k).filter(|&i| pulls[i] > 0.0).collect();
                let gp = gp_fit_counts(
                    seen.iter().map(|&i| features[i].clone()).collect(),
                    seen.iter().map(|&i| pulls[i]).collect(),
                    seen.iter().map(|&i| clicks[i]).collect(),
                    &cfg.kernel,
                )?;
                let draws: Vec<f64> = features
                    .iter()
                    .map(|x| {
                        let (mu, var) = gp.predict(x);
                        mu + var.sqrt() * normal(&mut rng)
                    })
                    .collect();
                argmax(&draws)
            }
        };
        let reward = u8::from(rng.random::<f64>() < cfg.arms[arm]);
        pulls[arm] += 1.0;
        clicks[arm] += reward as f64;
        regret += best - cfg.arms[arm];
        trace.choices.push(arm);
        trace.rewards.push(reward);
        trace.regret.push(regret);
    }
    Ok(trace)
}
