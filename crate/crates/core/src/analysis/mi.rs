use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FieldKind};
use crate::encoding::{temporal_bucket, TemporalMode};
use crate::{Error, Result};

/// Cells backed by fewer samples are reported as null.
pub const MIN_SUPPORT: usize = 100;

/// Plug-in mutual information in nats.
pub fn mutual_information<X, Y>(x: &[X], y: &[Y]) -> Result<f64>
where
    X: Hash + Eq + Copy,
    Y: Hash + Eq + Copy,
{
    if x.len() != y.len() {
        return Err(Error::Input(format!(
            "series lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::Input("mutual information of empty series".into()));
    }
    let n = x.len() as f64;
    let mut joint: HashMap<(X, Y), usize> = HashMap::new();
    let mut px: HashMap<X, usize> = HashMap::new();
    let mut py: HashMap<Y, usize> = HashMap::new();
    for (&a, &b) in x.iter().zip(y) {
        *joint.entry((a, b)).or_default() += 1;
        *px.entry(a).or_default() += 1;
        *py.entry(b).or_default() += 1;
    }
    // Sorted summation keeps the result independent of hash order.
    let mut terms: Vec<f64> = joint
        .iter()
        .map(|((a, b), &c)| {
            let pxy = c as f64 / n;
            pxy * (c as f64 * n / (px[a] as f64 * py[b] as f64)).ln()
        })
        .collect();
    terms.sort_by(f64::total_cmp);
    Ok(terms.iter().sum::<f64>().max(0.0))
}

/// Optional restriction on the behaviour category, its bucket and the
/// target category.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub behavior_category: Option<usize>,
    pub bucket: Option<usize>,
    pub target_category: Option<usize>,
}

/// MI values indexed `[category][bucket]`; `None` where support is short.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationGrid {
    pub target_category: usize,
    pub categories: Vec<usize>,
    pub buckets: Vec<usize>,
    pub support: usize,
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationGrid {
    pub fn row(&self, category: usize) -> Option<&[Option<f64>]> {
        let i = self.categories.iter().position(|&c| c == category)?;
        Some(&self.values[i])
    }
}

/// For each `(c_i, p)`, restricts to samples whose target is `c_t` and
/// measures MI between the indicator "some behaviour in bucket `p` has
/// category `c_i`" and the task label. Position buckets count from 1
/// (most recent behaviour); interval buckets come from the behaviour age.
pub fn semantic_temporal_correlation(
    ds: &Dataset,
    sequence_field: &str,
    target_field: &str,
    task: usize,
    c_t: usize,
    categories: &[usize],
    buckets: &[usize],
    mode: TemporalMode,
    min_support: usize,
) -> Result<CorrelationGrid> {
    let sf = ds
        .schema
        .field_id(sequence_field)
        .filter(|&i| ds.schema.fields[i].kind == FieldKind::Sequence)
        .ok_or_else(|| Error::Input(format!("no sequence field {sequence_field}")))?;
    let tf = ds
        .schema
        .field_id(target_field)
        .filter(|&i| ds.schema.fields[i].kind == FieldKind::Categorical)
        .ok_or_else(|| Error::Input(format!("no categorical field {target_field}")))?;
    if task >= ds.schema.tasks.len() {
        return Err(Error::Input(format!("task {task} out of range")));
    }
    let vocab = ds.schema.fields[tf].cardinality;
    if c_t >= vocab || categories.iter().any(|&c| c >= vocab) {
        return Err(Error::Input(
            "constraint category outside vocabulary".into(),
        ));
    }
    let rows: Vec<_> = ds
        .samples
        .iter()
        .filter(|s| s.values[tf].category() == Some(c_t))
        .collect();
    let y: Vec<u8> = rows.iter().map(|s| s.labels[task]).collect();
    let support = rows.len();
    let mut values = Vec::with_capacity(categories.len());
    for &c in categories {
        let mut row = Vec::with_capacity(buckets.len());
        for &p in buckets {
            if support < min_support.max(1) {
                row.push(None);
                continue;
            }
            let x: Vec<bool> = rows
                .iter()
                .map(|s| {
                    let seq = s.values[sf].sequence().unwrap_or(&[]);
                    seq.iter().enumerate().any(|(i, b)| {
                        let bucket = match mode {
                            TemporalMode::Position { .. } => temporal_bucket(i as i64 + 1, mode),
                            TemporalMode::Interval => temporal_bucket(s.timestamp - b.ts, mode),
                        };
                        bucket == p && b.item == c
                    })
                })
                .collect();
            row.push(Some(mutual_information(&x, &y)?));
        }
        values.push(row);
    }
    Ok(CorrelationGrid {
        target_category: c_t,
        categories: categories.to_vec(),
        buckets: buckets.to_vec(),
        support,
        values,
    })
}
