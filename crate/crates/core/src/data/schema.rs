use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Categorical,
    Numeric,
    Sequence,
    PretrainedEmbedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub name: String,
    pub kind: FieldKind,
    /// Category vocabulary; for sequences, the item vocabulary.
    #[serde(default)]
    pub cardinality: usize,
    #[serde(default)]
    pub part: usize,
    #[serde(default)]
    pub group: usize,
    /// Sequences only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_len: Option<usize>,
    /// Sequences only: the categorical field whose table embeds the items.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    /// Pre-trained embeddings only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

/// Ordered field list; a field's id is its position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSchema {
    pub tasks: Vec<String>,
    #[serde(rename = "field")]
    pub fields: Vec<FieldSpec>,
}

impl FieldSchema {
    pub fn new(tasks: Vec<String>, fields: Vec<FieldSpec>) -> Result<Self> {
        let s = FieldSchema { tasks, fields };
        s.validate()?;
        Ok(s)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: FieldSchema = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("schema serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::Config("schema declares no tasks".into()));
        }
        let mut names = HashSet::new();
        for t in &self.tasks {
            if !names.insert(format!("task:{t}")) {
                return Err(Error::Config(format!("duplicate task {t}")));
            }
        }
        for f in &self.fields {
            if !names.insert(f.name.clone()) {
                return Err(Error::Config(format!("duplicate field {}", f.name)));
            }
            match f.kind {
                FieldKind::Categorical if f.cardinality == 0 => {
                    return Err(Error::Config(format!(
                        "field {} needs a cardinality",
                        f.name
                    )));
                }
                FieldKind::Sequence => {
                    if f.cardinality == 0 || f.max_len.unwrap_or(0) == 0 {
                        return Err(Error::Config(format!(
                            "sequence {} needs cardinality and max_len",
                            f.name
                        )));
                    }
                    if let Some(t) = &f.target {
                        let tf = self.field(t).ok_or_else(|| {
                            Error::Config(format!("sequence {} targets unknown field {t}", f.name))
                        })?;
                        if tf.kind != FieldKind::Categorical || tf.cardinality != f.cardinality {
                            return Err(Error::Config(format!(
                                "sequence {} must target a categorical field of equal cardinality",
                                f.name
                            )));
                        }
                    }
                }
                FieldKind::PretrainedEmbedding if f.dim.unwrap_or(0) == 0 => {
                    return Err(Error::Config(format!("field {} needs dim", f.name)));
                }
                _ => {}
            }
        }
        check_dense("part", self.fields.iter().map(|f| f.part))?;
        check_dense("group", self.fields.iter().map(|f| f.group))?;
        Ok(())
    }

    pub fn field(&self, name: &str) -> Option<&FieldSpec> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn field_id(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn n_parts(&self) -> usize {
        self.fields.iter().map(|f| f.part + 1).max().unwrap_or(0)
    }

    pub fn n_groups(&self) -> usize {
        self.fields.iter().map(|f| f.group + 1).max().unwrap_or(0)
    }

    /// Ids of the categorical fields, in order.
    pub fn categorical_ids(&self) -> Vec<usize> {
        (0..self.fields.len())
            .filter(|&i| self.fields[i].kind == FieldKind::Categorical)
            .collect()
    }
}

fn check_dense(what: &str, ids: impl Iterator<Item = usize>) -> Result<()> {
    let seen: HashSet<usize> = ids.collect();
    let n = seen.len();
    if (0..n).any(|i| !seen.contains(&i)) {
        return Err(Error::Config(format!("{what} ids are not dense from 0")));
    }
    Ok(())
}

impl FieldSpec {
    pub fn categorical(name: &str, cardinality: usize) -> Self {
        FieldSpec {
            name: name.into(),
            kind: FieldKind::Categorical,
            cardinality,
            part: 0,
            group: 0,
            max_len: None,
            target: None,
            dim: None,
        }
    }

    pub fn sequence(name: &str, cardinality: usize, max_len: usize, target: Option<&str>) -> Self {
        FieldSpec {
            kind: FieldKind::Sequence,
            max_len: Some(max_len),
            target: target.map(str::to_string),
            ..Self::categorical(name, cardinality)
        }
    }

    pub fn numeric(name: &str) -> Self {
        FieldSpec {
            kind: FieldKind::Numeric,
            ..Self::categorical(name, 0)
        }
    }

    pub fn with_part_group(mut self, part: usize, group: usize) -> Self {
        self.part = part;
        self.group = group;
        self
    }
}
