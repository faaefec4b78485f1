use serde::{Deserialize, Serialize};

use crate::numerics::{dot, norm, normal, seeded_rng};
use crate::{Error, Result};

/// Random-hyperplane hash producing ids of `n_bits` bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LshConfig {
    pub n_bits: usize,
    pub seed: u64,
    /// Unit-norm normals, one per bit. Fixed once created.
    pub hyperplanes: Vec<Vec<f64>>,
}

impl LshConfig {
    pub fn new(n_bits: usize, input_dim: usize, seed: u64) -> Result<Self> {
        if n_bits == 0 || n_bits > 63 {
            return Err(Error::Config(format!("n_bits {n_bits} outside 1..=63")));
        }
        if input_dim == 0 {
            return Err(Error::Config("LSH input dim must be positive".into()));
        }
        let mut rng = seeded_rng(seed);
        let hyperplanes = (0..n_bits)
            .map(|_| loop {
                let h: Vec<f64> = (0..input_dim).map(|_| normal(&mut rng)).collect();
                let n = norm(&h);
                if n > 1e-12 {
                    break h.into_iter().map(|v| v / n).collect();
                }
            })
            .collect();
        Ok(LshConfig {
            n_bits,
            seed,
            hyperplanes,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.hyperplanes.first().map_or(0, Vec::len)
    }
}

/// Bit `b` is set iff `⟨x, h_b⟩ ≥ 0`. The id is used downstream as an
/// ordinal value (e.g. fed to the numeral-system encoder).
pub fn lsh_semantic_id(x: &[f64], cfg: &LshConfig) -> Result<u64> {
    if x.len() != cfg.input_dim() {
        return Err(Error::Encode(format!(
            "vector has dim {}, hyperplanes have dim {}",
            x.len(),
            cfg.input_dim()
        )));
    }
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::Encode("cannot hash the zero vector".into()));
    }
    Ok(cfg
        .hyperplanes
        .iter()
        .enumerate()
        .filter(|(_, h)| dot(x, h) >= 0.0)
        .fold(0u64, |code, (b, _)| code | (1 << b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hyperplanes_are_unit() {
        let cfg = LshConfig::new(16, 8, 3).unwrap();
        for h in &cfg.hyperplanes {
            assert!((norm(h) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn first_hyperplane_sets_bit_zero() {
        let cfg = LshConfig::new(8, 5, 1).unwrap();
        let id = lsh_semantic_id(&cfg.hyperplanes[0].clone(), &cfg).unwrap();
        assert_eq!(id & 1, 1);
    }

    #[test]
    fn zero_vector_rejected() {
        let cfg = LshConfig::new(4, 3, 1).unwrap();
        assert!(matches!(
            lsh_semantic_id(&[0.0; 3], &cfg),
            Err(Error::Encode(_))
        ));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let cfg = LshConfig::new(4, 3, 1).unwrap();
        assert!(lsh_semantic_id(&[1.0; 4], &cfg).is_err());
    }

    proptest! {
        #[test]
        fn negation_complements_bits(x in proptest::collection::vec(-1.0f64..1.0, 6), seed in 0u64..50) {
            prop_assume!(x.iter().any(|v| v.abs() > 1e-3));
            let cfg = LshConfig::new(12, 6, seed).unwrap();
            // Exact zeros of ⟨x,h⟩ map both signs to 1; negligible for random input.
            prop_assume!(cfg.hyperplanes.iter().all(|h| dot(&x, h) != 0.0));
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let a = lsh_semantic_id(&x, &cfg).unwrap();
            let b = lsh_semantic_id(&neg, &cfg).unwrap();
            prop_assert_eq!(a ^ b, (1u64 << 12) - 1);
        }

        #[test]
        fn positive_scaling_invariant(x in proptest::collection::vec(-1.0f64..1.0, 6), c in 1e-3f64..1e3) {
            prop_assume!(x.iter().any(|v| v.abs() > 1e-3));
            let cfg = LshConfig::new(12, 6, 7).unwrap();
            let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
            prop_assert_eq!(lsh_semantic_id(&x, &cfg).unwrap(), lsh_semantic_id(&scaled, &cfg).unwrap());
        }
    }
}
