use serde::{Deserialize, Serialize};

use super::{FieldKind, FieldSchema};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Behavior {
    pub item: usize,
    pub ts: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FieldValue {
    Category(usize),
    Numeric(f64),
    /// Most recent first.
    Sequence(Vec<Behavior>),
    Vector(Vec<f64>),
}

impl FieldValue {
    pub fn category(&self) -> Option<usize> {
        match self {
            FieldValue::Category(c) => Some(*c),
            _ => None,
        }
    }

    pub fn sequence(&self) -> Option<&[Behavior]> {
        match self {
            FieldValue::Sequence(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// One value per schema field, in schema order.
    pub values: Vec<FieldValue>,
    /// One label per task.
    pub labels: Vec<u8>,
    pub timestamp: i64,
    pub user_id: u64,
    pub ad_id: u64,
    pub repeat_count: Option<f64>,
    pub last_repeat_gap: Option<f64>,
}

impl Sample {
    pub fn check(&self, schema: &FieldSchema) -> std::result::Result<(), String> {
        if self.values.len() != schema.fields.len() {
            return Err(format!(
                "{} values for {} fields",
                self.values.len(),
                schema.fields.len()
            ));
        }
        if self.labels.len() != schema.tasks.len() {
            return Err(format!(
                "{} labels for {} tasks",
                self.labels.len(),
                schema.tasks.len()
            ));
        }
        if let Some(l) = self.labels.iter().find(|&&l| l > 1) {
            return Err(format!("label {l} not in {{0,1}}"));
        }
        for (v, f) in self.values.iter().zip(&schema.fields) {
            match (f.kind, v) {
                (FieldKind::Categorical, FieldValue::Category(c)) => {
                    if *c >= f.cardinality {
                        return Err(format!(
                            "{}: index {c} >= cardinality {}",
                            f.name, f.cardinality
                        ));
                    }
                }
                (FieldKind::Numeric, FieldValue::Numeric(x)) => {
                    if !x.is_finite() {
                        return Err(format!("{}: non-finite value", f.name));
                    }
                }
                (FieldKind::Sequence, FieldValue::Sequence(s)) => {
                    if s.len() > f.max_len.unwrap_or(0) {
                        return Err(format!("{}: {} behaviors exceed max_len", f.name, s.len()));
                    }
                    for b in s {
                        if b.item >= f.cardinality {
                            return Err(format!("{}: item {} out of range", f.name, b.item));
                        }
                        if b.ts > self.timestamp {
                            return Err(format!("{}: behavior after the sample time", f.name));
                        }
                    }
                }
                (FieldKind::PretrainedEmbedding, FieldValue::Vector(v)) => {
                    if Some(v.len()) != f.dim || v.iter().any(|x| !x.is_finite()) {
                        return Err(format!("{}: bad embedding vector", f.name));
                    }
                }
                _ => return Err(format!("{}: value does not match field kind", f.name)),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: FieldSchema,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(schema: FieldSchema, samples: Vec<Sample>) -> Result<Self> {
        schema.validate()?;
        for (i, s) in samples.iter().enumerate() {
            s.check(&schema)
                .map_err(|m| Error::Input(format!("sample {i}: {m}")))?;
        }
        Ok(Dataset { schema, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn tasks(&self) -> &[String] {
        &self.schema.tasks
    }

    pub fn labels(&self, task: usize) -> Vec<u8> {
        self.samples.iter().map(|s| s.labels[task]).collect()
    }

    pub fn positive_rate(&self, task: usize) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples
            .iter()
            .map(|s| s.labels[task] as f64)
            .sum::<f64>()
            / self.len() as f64
    }

    /// Keeps only the named tasks, in the given order.
    pub fn select_tasks(&self, tasks: &[String]) -> Result<Dataset> {
        let idx = tasks
            .iter()
            .map(|t| {
                self.schema
                    .tasks
                    .iter()
                    .position(|x| x == t)
                    .ok_or_else(|| Error::Config(format!("dataset has no task {t}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut schema = self.schema.clone();
        schema.tasks = tasks.to_vec();
        let samples = self
            .samples
            .iter()
            .map(|s| Sample {
                labels: idx.iter().map(|&i| s.labels[i]).collect(),
                ..s.clone()
            })
            .collect();
        Dataset::new(schema, samples)
    }

    /// Splits off the last `fraction` of samples as a holdout.
    pub fn split(&self, fraction: f64) -> (Dataset, Dataset) {
        let cut = ((1.0 - fraction) * self.len() as f64).round() as usize;
        let cut = cut.min(self.len());
        (
            Dataset {
                schema: self.schema.clone(),
                samples: self.samples[..cut].to_vec(),
            },
            Dataset {
                schema: self.schema.clone(),
                samples: self.samples[cut..].to_vec(),
            },
        )
    }

    /// Per-field means: category index, numeric value, sequence length or
    /// vector entry, matching the manifest convention.
    pub fn field_means(&self) -> Vec<f64> {
        (0..self.schema.fields.len())
            .map(|f| {
                let mut total = 0.0;
                let mut count = 0.0;
                for s in &self.samples {
                    match &s.values[f] {
                        FieldValue::Category(c) => total += *c as f64,
                        FieldValue::Numeric(x) => total += x,
                        FieldValue::Sequence(b) => total += b.len() as f64,
                        FieldValue::Vector(v) => {
                            total += v.iter().sum::<f64>();
                            count += v.len() as f64;
                            continue;
                        }
                    }
                    count += 1.0;
                }
                if count == 0.0 {
                    0.0
                } else {
                    total / count
                }
            })
            .collect()
    }
}
