use serde::{Deserialize, Serialize};

use crate::data::{FieldKind, FieldSchema};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpertKind {
    Fm,
    Fwfm,
    Gwpfm,
    Projected,
    /// Concatenated embeddings (FlatDNN).
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimSetting {
    /// Sequence fields are ignored.
    None,
    /// Attention without temporal encoding.
    Plain,
    Position,
    Interval,
    /// Position and interval instances side by side.
    Dual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateMode {
    Learned,
    /// `g = 1/E` (diagnostics).
    Uniform,
}

/// How a tower is wired to an expert.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Both,
    /// Read in the forward pass; no gradient flows back from this tower.
    ForwardOnly,
    /// Not read at all.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    pub name: String,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertSpec {
    pub name: String,
    pub table: usize,
    pub kind: ExpertKind,
    pub tim: TimSetting,
    pub hidden: Vec<usize>,
    pub out_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerSpec {
    pub name: String,
    /// Index into the schema's task list.
    pub task: usize,
    pub hidden: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub tables: Vec<TableSpec>,
    pub experts: Vec<ExpertSpec>,
    pub towers: Vec<TowerSpec>,
    /// `routes[tower][expert]`
    pub routes: Vec<Vec<Route>>,
    pub gate: GateMode,
    pub linear_experts: bool,
    pub init_std: f64,
    pub projection_noise: f64,
}

impl GraphSpec {
    pub fn validate(&self, schema: &FieldSchema) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.tables.is_empty() || self.experts.is_empty() || self.towers.is_empty() {
            return cfg("graph needs at least one table, expert and tower".into());
        }
        if let Some(t) = self.tables.iter().find(|t| t.dim == 0) {
            return cfg(format!("table {} has zero width", t.name));
        }
        let out = self.experts[0].out_dim;
        for e in &self.experts {
            if e.table >= self.tables.len() {
                return cfg(format!("expert {} reads missing table {}", e.name, e.table));
            }
            if e.out_dim == 0 || e.out_dim != out {
                return cfg("experts must share one non-zero output width".into());
            }
            if e.kind == ExpertKind::Gwpfm && schema.n_parts() == 0 {
                return cfg("gwpfm expert without part ids".into());
            }
            if e.tim != TimSetting::None {
                let seqs: Vec<_> = schema
                    .fields
                    .iter()
                    .filter(|f| f.kind == FieldKind::Sequence)
                    .collect();
                if seqs.is_empty() {
                    return cfg(format!(
                        "expert {} enables TIM but the schema has no sequence",
                        e.name
                    ));
                }
                if seqs.iter().any(|f| f.target.is_none()) {
                    return cfg("TIM needs every sequence field to name its target field".into());
                }
            }
        }
        if schema.categorical_ids().is_empty() {
            return cfg("schema has no categorical fields".into());
        }
        if self.routes.len() != self.towers.len()
            || self.routes.iter().any(|r| r.len() != self.experts.len())
        {
            return cfg("routing matrix must be towers × experts".into());
        }
        for (t, tower) in self.towers.iter().enumerate() {
            if tower.task >= schema.tasks.len() {
                return cfg(format!(
                    "tower {} predicts missing task {}",
                    tower.name, tower.task
                ));
            }
            if self.routes[t].iter().all(|&r| r == Route::None) {
                return cfg(format!("tower {} reads no expert", tower.name));
            }
        }
        if !self.init_std.is_finite() || self.init_std < 0.0 || !self.projection_noise.is_finite() {
            return cfg("init scales must be finite and non-negative".into());
        }
        Ok(())
    }
}
