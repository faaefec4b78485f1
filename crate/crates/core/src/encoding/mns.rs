use std::fmt;

use serde::{Deserialize, Serialize};

use crate::numerics::{DifferentiableOp, Matrix, SeededRng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumeralSystem {
    pub base: u32,
    /// Number of digit positions `K_n`.
    pub length: u32,
}

impl NumeralSystem {
    /// Largest value representable with `length` digits, saturating at `u64::MAX`.
    pub fn max_value(&self) -> u64 {
        (self.base as u128)
            .checked_pow(self.length)
            .map_or(u64::MAX, |p| u64::try_from(p - 1).unwrap_or(u64::MAX))
    }

    /// Shortest system in `base` that covers `max_value`.
    pub fn covering(base: u32, max_value: u64) -> Self {
        let mut length = 1;
        while (NumeralSystem { base, length }).max_value() < max_value {
            length += 1;
        }
        NumeralSystem { base, length }
    }

    pub fn rows(&self) -> usize {
        (self.base * self.length) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnsConfig {
    pub systems: Vec<NumeralSystem>,
    /// Embedding width per code.
    pub dim: usize,
}

impl MnsConfig {
    pub fn new(systems: Vec<NumeralSystem>, dim: usize) -> Result<Self> {
        let cfg = MnsConfig { systems, dim };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Binary, ternary and decimal systems sized to cover `max_value`.
    pub fn default_for(max_value: u64, dim: usize) -> Self {
        MnsConfig {
            systems: [2, 3, 10]
                .into_iter()
                .map(|b| NumeralSystem::covering(b, max_value))
                .collect(),
            dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.systems.is_empty() {
            return Err(Error::Config("MNS config needs at least one system".into()));
        }
        for s in &self.systems {
            if s.base < 2 {
                return Err(Error::Config(format!("numeral base {} < 2", s.base)));
            }
            if s.length < 1 {
                return Err(Error::Config(format!("base {} has zero length", s.base)));
            }
        }
        if self.dim == 0 {
            return Err(Error::Config("MNS embedding dim must be positive".into()));
        }
        Ok(())
    }

    /// Width of the concatenated encoding.
    pub fn output_dim(&self) -> usize {
        self.dim * self.systems.len()
    }

    /// Largest value every configured system can represent.
    pub fn max_value(&self) -> u64 {
        self.systems
            .iter()
            .map(NumeralSystem::max_value)
            .min()
            .unwrap_or(0)
    }
}

/// Digits of one value in one base, most significant position first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemCode {
    pub base: u32,
    /// `(position k, digit)` pairs for `k = K_n, …, 1`.
    pub digits: Vec<(u32, u32)>,
}

impl SystemCode {
    /// Row of the code table selected by position `k` and its digit.
    pub fn rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.digits
            .iter()
            .map(move |&(k, d)| (self.base * (k - 1) + d) as usize)
    }
}

impl fmt::Display for SystemCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .digits
            .iter()
            .map(|(k, d)| format!("{k}_{d}"))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MnsCodes {
    pub value: u64,
    pub systems: Vec<SystemCode>,
}

/// Expands `v` in every configured base.
pub fn mns_codes(v: u64, cfg: &MnsConfig) -> Result<MnsCodes> {
    cfg.validate()?;
    let mut systems = Vec::with_capacity(cfg.systems.len());
    for s in &cfg.systems {
        if v > s.max_value() {
            return Err(Error::Encode(format!(
                "value {v} overflows base {} with {} digits (max {})",
                s.base,
                s.length,
                s.max_value()
            )));
        }
        let mut rest = v;
        let mut low_first = Vec::with_capacity(s.length as usize);
        for k in 1..=s.length {
            low_first.push((k, (rest % s.base as u64) as u32));
            rest /= s.base as u64;
        }
        low_first.reverse();
        systems.push(SystemCode {
            base: s.base,
            digits: low_first,
        });
    }
    Ok(MnsCodes { value: v, systems })
}

/// Trainable code embeddings: one `base·K_n × dim` table per system.
#[derive(Debug, Clone, PartialEq)]
pub struct MnsTables {
    pub tables: Vec<Matrix>,
}

impl MnsTables {
    pub fn zeros(cfg: &MnsConfig) -> Self {
        MnsTables {
            tables: cfg
                .systems
                .iter()
                .map(|s| Matrix::zeros(s.rows(), cfg.dim))
                .collect(),
        }
    }

    pub fn random(cfg: &MnsConfig, std: f64, rng: &mut SeededRng) -> Self {
        MnsTables {
            tables: cfg
                .systems
                .iter()
                .map(|s| Matrix::random_normal(s.rows(), cfg.dim, std, rng))
                .collect(),
        }
    }

    fn check(&self, cfg: &MnsConfig) -> Result<()> {
        let ok = self.tables.len() == cfg.systems.len()
            && self
                .tables
                .iter()
                .zip(&cfg.systems)
                .all(|(t, s)| t.shape() == (s.rows(), cfg.dim));
        if ok {
            Ok(())
        } else {
            Err(Error::Config("MNS tables do not match config".into()))
        }
    }

    /// Sum-pooled code rows per system, concatenated in configured order.
    pub fn encode_codes(&self, codes: &MnsCodes) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.tables.iter().map(Matrix::cols).sum());
        for (table, code) in self.tables.iter().zip(&codes.systems) {
            let mut acc = vec![0.0; table.cols()];
            for r in code.rows() {
                crate::numerics::axpy(&mut acc, 1.0, table.row(r));
            }
            out.extend(acc);
        }
        out
    }

    /// Adds `∂L/∂tables` for an encoding whose upstream gradient is `upstream`.
    pub fn accumulate_grad(&self, codes: &MnsCodes, upstream: &[f64], grads: &mut MnsTables) {
        let mut offset = 0;
        for ((table, code), g) in self
            .tables
            .iter()
            .zip(&codes.systems)
            .zip(&mut grads.tables)
        {
            let d = table.cols();
            let up = &upstream[offset..offset + d];
            for r in code.rows() {
                crate::numerics::axpy(g.row_mut(r), 1.0, up);
            }
            offset += d;
        }
    }
}

/// Encodes `v` against trainable code tables.
pub fn mns_encode(v: u64, cfg: &MnsConfig, tables: &MnsTables) -> Result<Vec<f64>> {
    let codes = mns_codes(v, cfg)?;
    tables.check(cfg)?;
    Ok(tables.encode_codes(&codes))
}

/// `mns_encode` as a differentiable function of the flattened tables.
#[derive(Debug, Clone)]
pub struct MnsLookupOp {
    pub cfg: MnsConfig,
    pub value: u64,
}

impl MnsLookupOp {
    fn unflatten(&self, flat: &[f64]) -> Result<MnsTables> {
        let mut tables = Vec::new();
        let mut offset = 0;
        for s in &self.cfg.systems {
            let n = s.rows() * self.cfg.dim;
            let chunk = flat
                .get(offset..offset + n)
                .ok_or_else(|| Error::Input("flattened MNS tables too short".into()))?;
            tables.push(Matrix::from_vec(s.rows(), self.cfg.dim, chunk.to_vec())?);
            offset += n;
        }
        Ok(MnsTables { tables })
    }
}

impl DifferentiableOp for MnsLookupOp {
    fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        mns_encode(self.value, &self.cfg, &self.unflatten(input)?)
    }

    fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        let tables = self.unflatten(input)?;
        let mut grads = MnsTables::zeros(&self.cfg);
        tables.accumulate_grad(&mns_codes(self.value, &self.cfg)?, upstream, &mut grads);
        Ok(grads
            .tables
            .into_iter()
            .flat_map(Matrix::into_vec)
            .collect())
    }
}
