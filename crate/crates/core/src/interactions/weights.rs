use serde::{Deserialize, Serialize};

/// Symmetric `n × n` weights stored as the packed upper triangle
/// (diagonal included), so `r[a][b]` and `r[b][a]` are one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairWeights {
    n: usize,
    values: Vec<f64>,
}

impl PairWeights {
    pub fn filled(n: usize, value: f64) -> Self {
        PairWeights {
            n,
            values: vec![value; n * (n + 1) / 2],
        }
    }

    pub fn from_packed(n: usize, values: Vec<f64>) -> Option<Self> {
        (values.len() == n * (n + 1) / 2).then_some(PairWeights { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn index(&self, a: usize, b: usize) -> usize {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        debug_assert!(hi < self.n);
        lo * self.n - lo * (lo + 1) / 2 + hi
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[self.index(a, b)]
    }

    pub fn set(&mut self, a: usize, b: usize, v: f64) {
        let i = self.index(a, b);
        self.values[i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_index_is_a_bijection() {
        let w = PairWeights::filled(5, 0.0);
        let mut seen = vec![false; 15];
        for a in 0..5 {
            for b in a..5 {
                let i = w.index(a, b);
                assert!(!seen[i]);
                seen[i] = true;
                assert_eq!(w.index(b, a), i);
            }
        }
        assert!(seen.iter().all(|&s| s));
    }
}
