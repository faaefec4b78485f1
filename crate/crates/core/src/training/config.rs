use serde::{Deserialize, Serialize};

use super::{RewConfig, SchedulerConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    Bce,
    BcePlusRank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossConfig {
    pub mode: LossMode,
    /// Weight of the pairwise ranking term; ignored in `bce` mode.
    pub lambda: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            mode: LossMode::Bce,
            lambda: 1.0,
        }
    }
}

impl LossConfig {
    pub fn effective_lambda(&self) -> f64 {
        match self.mode {
            LossMode::Bce => 0.0,
            LossMode::BcePlusRank => self.lambda,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub loss: LossConfig,
    pub lr: f64,
    pub adagrad_eps: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub shuffle: bool,
    pub rew: Option<RewConfig>,
    pub scheduler: Option<SchedulerConfig>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss: LossConfig::default(),
            lr: 0.05,
            adagrad_eps: 1e-8,
            epochs: 1,
            batch_size: 256,
            seed: 0,
            shuffle: true,
            rew: None,
            scheduler: None,
        }
    }
}

impl TrainConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: TrainConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.loss.lambda.is_finite() && self.loss.lambda >= 0.0) {
            return Err(Error::Config(format!(
                "loss.lambda {} must be finite and ≥ 0",
                self.loss.lambda
            )));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::Config(format!(
                "lr {} must be finite and ≥ 0",
                self.lr
            )));
        }
        if !(self.adagrad_eps >= 0.0) {
            return Err(Error::Config("adagrad_eps must be ≥ 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if let Some(r) = &self.rew {
            r.validate()?;
        }
        if let Some(s) = &self.scheduler {
            s.validate()?;
        }
        Ok(())
    }
}
