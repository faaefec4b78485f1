use serde::{Deserialize, Serialize};

use crate::numerics::Matrix;
use crate::{Error, Result};

pub const HISTOGRAM_BINS: usize = 50;

/// Pairs (by index) in the bottom `pctl` of `dist_a` and the top `pctl` of
/// `dist_b`. Bands hold `⌊pctl·n⌋` pairs each, ordered by `(distance, id)`.
pub fn contradictory_pairs(dist_a: &[f64], dist_b: &[f64], pctl: f64) -> Result<Vec<usize>> {
    if dist_a.is_empty() {
        return Err(Error::Input("empty pair universe".into()));
    }
    if dist_a.len() != dist_b.len() {
        return Err(Error::Input(
            "distance maps cover different pair sets".into(),
        ));
    }
    if !(pctl > 0.0 && pctl <= 0.5) {
        return Err(Error::Input(format!("percentile {pctl} outside (0, 0.5]")));
    }
    let n = dist_a.len();
    let band = (pctl * n as f64).floor() as usize;
    let order = |d: &[f64]| {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));
        idx
    };
    let mut low_a = vec![false; n];
    for &i in &order(dist_a)[..band] {
        low_a[i] = true;
    }
    let mut out: Vec<usize> = order(dist_b)[n - band..]
        .iter()
        .copied()
        .filter(|&i| low_a[i])
        .collect();
    out.sort_unstable();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Equal-width bins over `[0, max]`; the last bin is closed.
    pub fn fixed(values: &[f64], max: f64, bins: usize) -> Self {
        let width = max / bins as f64;
        let edges = (0..=bins).map(|i| i as f64 * width).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let b = if width > 0.0 {
                ((v / width).floor() as usize).min(bins - 1)
            } else {
                0
            };
            counts[b] += 1;
        }
        Histogram { edges, counts }
    }

    /// `bin_left,bin_right,count` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_left,bin_right,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            s += &format!("{:?},{:?},{c}\n", self.edges[i], self.edges[i + 1]);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSummary {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl DistanceSummary {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            if v.is_empty() {
                return 0.0;
            }
            let pos = p * (v.len() - 1) as f64;
            let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
            v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
        };
        DistanceSummary {
            count: v.len(),
            mean: if v.is_empty() {
                0.0
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            },
            min: v.first().copied().unwrap_or(0.0),
            q25: q(0.25),
            median: q(0.5),
            q75: q(0.75),
            max: v.last().copied().unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceDistribution {
    pub distances: Vec<f64>,
    pub histogram: Histogram,
    pub summary: DistanceSummary,
}

/// Euclidean distances `‖left[i] − right[j]‖` for each `(i, j)`, with a
/// 50-bin histogram over `[0, max]`.
pub fn distance_distribution(
    pairs: &[(usize, usize)],
    left: &Matrix,
    right: &Matrix,
) -> Result<DistanceDistribution> {
    if left.cols() != right.cols() {
        return Err(Error::Input("embedding widths differ".into()));
    }
    let distances = pairs
        .iter()
        .map(|&(i, j)| {
            if i >= left.rows() || j >= right.rows() {
                return Err(Error::Input(format!("pair ({i}, {j}) has no embedding")));
            }
            Ok(left
                .row(i)
                .iter()
                .zip(right.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt())
        })
        .collect::<Result<Vec<_>>>()?;
    let max = distances.iter().copied().fold(0.0, f64::max);
    Ok(DistanceDistribution {
        histogram: Histogram::fixed(&distances, max, HISTOGRAM_BINS),
        summary: DistanceSummary::of(&distances),
        distances,
    })
}
