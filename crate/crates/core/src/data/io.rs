//! CSV datasets with a TOML schema and a JSON manifest sidecar.
//!
//! Columns: `timestamp`, one `label_<task>` per task and one column per
//! field are required; `user_id`, `ad_id`, `repeat_count` and
//! `last_repeat_gap` are optional. Sequences are written `item@ts;item@ts`
//! (most recent first), pre-trained vectors `v1|v2|…`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Behavior, Dataset, FieldKind, FieldSchema, FieldValue, Sample};
use crate::{Error, Result};

const META: [&str; 5] = [
    "timestamp",
    "user_id",
    "ad_id",
    "repeat_count",
    "last_repeat_gap",
];

fn label_column(task: &str) -> String {
    format!("label_{task}")
}

pub fn load_dataset(data_path: &Path, schema_path: &Path) -> Result<Dataset> {
    let schema = FieldSchema::load(schema_path)?;
    let file = std::fs::File::open(data_path).map_err(|e| Error::io(data_path, e))?;
    read_csv(file, schema)
}

pub fn read_csv<R: std::io::Read>(reader: R, schema: FieldSchema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let load = |line: usize, message: String| Error::Load { line, message };
    let header = rdr.headers().map_err(|e| load(1, e.to_string()))?.clone();
    let mut col: HashMap<String, usize> = HashMap::new();
    for (i, h) in header.iter().enumerate() {
        let known = META.contains(&h)
            || schema.field(h).is_some()
            || schema.tasks.iter().any(|t| label_column(t) == h);
        if !known {
            return Err(load(1, format!("unknown column {h:?}")));
        }
        if col.insert(h.to_string(), i).is_some() {
            return Err(load(1, format!("duplicate column {h:?}")));
        }
    }
    let mut required = vec!["timestamp".to_string()];
    required.extend(schema.tasks.iter().map(|t| label_column(t)));
    required.extend(schema.fields.iter().map(|f| f.name.clone()));
    if let Some(m) = required.iter().find(|r| !col.contains_key(*r)) {
        return Err(load(1, format!("missing column {m:?}")));
    }

    let mut samples = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            load(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let get = |name: &str| col.get(name).map(|&i| rec.get(i).unwrap_or(""));
        let int = |name: &str| -> Result<i64> {
            let v = get(name).unwrap_or("0");
            v.trim()
                .parse()
                .map_err(|_| load(line, format!("{name}: bad integer {v:?}")))
        };
        let opt = |name: &str| -> Result<Option<f64>> {
            match get(name).map(str::trim) {
                None | Some("") => Ok(None),
                Some(v) => v
                    .parse()
                    .map(Some)
                    .map_err(|_| load(line, format!("{name}: bad number {v:?}"))),
            }
        };
        let timestamp = int("timestamp")?;
        let labels = schema
            .tasks
            .iter()
            .map(|t| {
                let c = label_column(t);
                match get(&c).map(str::trim) {
                    Some("0") => Ok(0),
                    Some("1") => Ok(1),
                    v => Err(load(line, format!("{c}: label {v:?} not 0/1"))),
                }
            })
            .collect::<Result<Vec<u8>>>()?;
        let values = schema
            .fields
            .iter()
            .map(|f| {
                parse_value(f.kind, get(&f.name).unwrap_or(""))
                    .map_err(|m| load(line, format!("{}: {m}", f.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        let sample = Sample {
            values,
            labels,
            timestamp,
            user_id: int("user_id")? as u64,
            ad_id: int("ad_id")? as u64,
            repeat_count: opt("repeat_count")?,
            last_repeat_gap: opt("last_repeat_gap")?,
        };
        sample.check(&schema).map_err(|m| load(line, m))?;
        samples.push(sample);
    }
    Ok(Dataset { schema, samples })
}

fn parse_value(kind: FieldKind, raw: &str) -> std::result::Result<FieldValue, String> {
    let raw = raw.trim();
    match kind {
        FieldKind::Categorical => raw
            .parse()
            .map(FieldValue::Category)
            .map_err(|_| format!("bad category index {raw:?}")),
        FieldKind::Numeric => raw
            .parse()
            .map(FieldValue::Numeric)
            .map_err(|_| format!("bad number {raw:?}")),
        FieldKind::Sequence => {
            if raw.is_empty() {
                return Ok(FieldValue::Sequence(Vec::new()));
            }
            raw.split(';')
                .map(|b| {
                    let (item, ts) = b
                        .split_once('@')
                        .ok_or_else(|| format!("malformed behavior {b:?}"))?;
                    Ok(Behavior {
                        item: item
                            .parse()
                            .map_err(|_| format!("malformed behavior {b:?}"))?,
                        ts: ts
                            .parse()
                            .map_err(|_| format!("malformed behavior {b:?}"))?,
                    })
                })
                .collect::<std::result::Result<Vec<_>, String>>()
                .map(FieldValue::Sequence)
        }
        FieldKind::PretrainedEmbedding => raw
            .split('|')
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| format!("bad vector entry {v:?}"))
            })
            .collect::<std::result::Result<Vec<_>, String>>()
            .map(FieldValue::Vector),
    }
}

fn format_value(v: &FieldValue) -> String {
    match v {
        FieldValue::Category(c) => c.to_string(),
        FieldValue::Numeric(x) => format!("{x:?}"),
        FieldValue::Sequence(s) => s
            .iter()
            .map(|b| format!("{}@{}", b.item, b.ts))
            .collect::<Vec<_>>()
            .join(";"),
        FieldValue::Vector(v) => v
            .iter()
            .map(|x| format!("{x:?}"))
            .collect::<Vec<_>>()
            .join("|"),
    }
}

pub fn write_csv<W: std::io::Write>(ds: &Dataset, writer: W) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Input(format!("csv write: {e}"));
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = META.iter().map(|s| s.to_string()).collect();
    header.extend(ds.schema.tasks.iter().map(|t| label_column(t)));
    header.extend(ds.schema.fields.iter().map(|f| f.name.clone()));
    w.write_record(&header).map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:?}"));
    for s in &ds.samples {
        let mut row = vec![
            s.timestamp.to_string(),
            s.user_id.to_string(),
            s.ad_id.to_string(),
            opt(s.repeat_count),
            opt(s.last_repeat_gap),
        ];
        row.extend(s.labels.iter().map(|l| l.to_string()));
        row.extend(s.values.iter().map(format_value));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::Input(format!("csv write: {e}")))?;
    Ok(())
}

/// Writes `data_path` and the schema next to it.
pub fn save_dataset(ds: &Dataset, data_path: &Path, schema_path: &Path) -> Result<()> {
    let file = std::fs::File::create(data_path).map_err(|e| Error::io(data_path, e))?;
    write_csv(ds, std::io::BufWriter::new(file))?;
    std::fs::write(schema_path, ds.schema.to_toml()).map_err(|e| Error::io(schema_path, e))
}

/// Sidecar summary written next to every generated or bundled dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub rows: usize,
    pub field_means: BTreeMap<String, f64>,
    pub label_rates: BTreeMap<String, f64>,
    /// FNV-1a 64 of the data file bytes, hex.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checksum: Option<String>,
    /// Planted `(user_id, ad_id)` pairs, for generators that plant any.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub planted_pairs: Vec<(u64, u64)>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub config: serde_json::Value,
}

impl Manifest {
    pub fn describe(ds: &Dataset) -> Self {
        let means = ds.field_means();
        Manifest {
            generator: None,
            seed: None,
            rows: ds.len(),
            field_means: ds
                .schema
                .fields
                .iter()
                .zip(means)
                .map(|(f, m)| (f.name.clone(), m))
                .collect(),
            label_rates: ds
                .schema
                .tasks
                .iter()
                .enumerate()
                .map(|(t, name)| (name.clone(), ds.positive_rate(t)))
                .collect(),
            checksum: None,
            planted_pairs: Vec::new(),
            config: serde_json::Value::Null,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
