use serde::{Deserialize, Serialize};

use super::{mns_encode, MnsConfig, MnsTables};
use crate::numerics::{dot, norm};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityConfig {
    /// Quantization levels for the cosine score.
    pub levels: u64,
    pub mns: MnsConfig,
}

impl SimilarityConfig {
    pub fn new(levels: u64, dim: usize) -> Result<Self> {
        if levels < 2 {
            return Err(Error::Config("need at least 2 similarity levels".into()));
        }
        Ok(SimilarityConfig {
            levels,
            mns: MnsConfig::default_for(levels - 1, dim),
        })
    }
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig::new(256, 8).expect("valid default")
    }
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Input(format!(
            "cosine of vectors with dims {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Input(
            "cosine similarity of a zero-norm vector".into(),
        ));
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// `round((w + 1) / 2 · (levels − 1))`.
pub fn quantize_similarity(w: f64, levels: u64) -> u64 {
    let w = w.clamp(-1.0, 1.0);
    ((w + 1.0) / 2.0 * (levels - 1) as f64).round() as u64
}

/// Encodes the similarity of two frozen pre-trained vectors as an ordinal
/// value through the numeral-system encoder. Only `tables` are trainable.
pub fn similarity_encode(
    e_user: &[f64],
    e_item: &[f64],
    cfg: &SimilarityConfig,
    tables: &MnsTables,
) -> Result<Vec<f64>> {
    let w = cosine_similarity(e_user, e_item)?;
    mns_encode(quantize_similarity(w, cfg.levels), &cfg.mns, tables)
}
