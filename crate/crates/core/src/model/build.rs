use serde::{Deserialize, Serialize};

use super::spec::{
    ExpertKind, ExpertSpec, GateMode, GraphSpec, Route, TableSpec, TimSetting, TowerSpec,
};
use super::ModelGraph;
use crate::data::FieldSchema;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Paradigm {
    /// Multi-embedding: T tables, one expert each, all towers train all.
    Me,
    /// One shared table and expert read by every tower.
    Shared,
    /// Shared plus task-specific tables, all-forward task-specific-backward.
    Stem,
    /// Shared tables of asymmetric widths, routed only by gates.
    Ame,
    /// Main table for the main task plus a shared table.
    StemAl,
}

/// Model section of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub paradigm: Paradigm,
    pub expert: ExpertKind,
    /// Table widths. `me`/`ame`: one per table; `shared`/`stem`/`stem_al`:
    /// a single width used by every table (or one per table).
    pub dims: Vec<usize>,
    pub tim: TimSetting,
    pub expert_hidden: Vec<usize>,
    pub expert_out: usize,
    pub tower_hidden: Vec<usize>,
    pub gate: GateMode,
    pub linear_experts: bool,
    pub init_std: f64,
    pub projection_noise: f64,
    /// `stem_al` only; defaults to the first task.
    pub main_task: Option<String>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            paradigm: Paradigm::Me,
            expert: ExpertKind::Fm,
            dims: vec![8],
            tim: TimSetting::None,
            expert_hidden: vec![32],
            expert_out: 16,
            tower_hidden: vec![64, 32],
            gate: GateMode::Learned,
            linear_experts: false,
            init_std: 0.05,
            projection_noise: 0.01,
            main_task: None,
        }
    }
}

/// A built graph with any builder warnings.
#[derive(Debug, Clone)]
pub struct Built {
    pub graph: ModelGraph,
    pub warnings: Vec<String>,
}

impl ModelConfig {
    fn expert(&self, name: String, table: usize) -> ExpertSpec {
        ExpertSpec {
            name,
            table,
            kind: self.expert,
            tim: self.tim,
            hidden: self.expert_hidden.clone(),
            out_dim: self.expert_out,
        }
    }

    fn tower(&self, name: &str, task: usize) -> TowerSpec {
        TowerSpec {
            name: name.to_string(),
            task,
            hidden: self.tower_hidden.clone(),
        }
    }

    fn dim(&self, i: usize) -> Result<usize> {
        match self.dims.as_slice() {
            [] => Err(Error::Config("model.dims is empty".into())),
            [d] => Ok(*d),
            ds => ds
                .get(i)
                .copied()
                .ok_or_else(|| Error::Config(format!("model.dims has no entry for table {i}"))),
        }
    }

    fn spec(
        &self,
        tables: Vec<TableSpec>,
        experts: Vec<ExpertSpec>,
        towers: Vec<TowerSpec>,
        routes: Vec<Vec<Route>>,
    ) -> GraphSpec {
        GraphSpec {
            tables,
            experts,
            towers,
            routes,
            gate: self.gate,
            linear_experts: self.linear_experts,
            init_std: self.init_std,
            projection_noise: self.projection_noise,
        }
    }

    pub fn build(&self, schema: &FieldSchema, seed: u64) -> Result<Built> {
        let tasks = &schema.tasks;
        let mut warnings = Vec::new();
        let spec = match self.paradigm {
            Paradigm::Me | Paradigm::Ame | Paradigm::Shared => {
                let n = if self.paradigm == Paradigm::Shared {
                    1
                } else {
                    self.dims.len()
                };
                if n == 0 {
                    return Err(Error::Config("model.dims is empty".into()));
                }
                if self.paradigm == Paradigm::Ame {
                    let mut d = self.dims.clone();
                    d.sort_unstable();
                    d.dedup();
                    if d.len() < 2 {
                        warnings.push(
                            "AME with equal table sizes degenerates to symmetric ME-MMoE".into(),
                        );
                    }
                    if tasks.len() == 1 {
                        warnings.push("single-tower AME is atypical".into());
                    }
                }
                let tables = (0..n)
                    .map(|t| {
                        Ok(TableSpec {
                            name: format!("t{t}"),
                            dim: self.dim(t)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let experts = (0..n).map(|t| self.expert(format!("e{t}"), t)).collect();
                let towers = tasks
                    .iter()
                    .enumerate()
                    .map(|(i, t)| self.tower(t, i))
                    .collect();
                let routes = vec![vec![Route::Both; n]; tasks.len()];
                self.spec(tables, experts, towers, routes)
            }
            Paradigm::Stem => {
                let mut tables = vec![TableSpec {
                    name: "shared".into(),
                    dim: self.dim(0)?,
                }];
                for (i, t) in tasks.iter().enumerate() {
                    tables.push(TableSpec {
                        name: format!("task_{t}"),
                        dim: self.dim(i + 1)?,
                    });
                }
                let experts = tables
                    .iter()
                    .enumerate()
                    .map(|(i, t)| self.expert(t.name.clone(), i))
                    .collect();
                let towers = tasks
                    .iter()
                    .enumerate()
                    .map(|(i, t)| self.tower(t, i))
                    .collect();
                let routes = (0..tasks.len())
                    .map(|tau| {
                        (0..=tasks.len())
                            .map(|e| {
                                if e == 0 || e == tau + 1 {
                                    Route::Both
                                } else {
                                    Route::ForwardOnly
                                }
                            })
                            .collect()
                    })
                    .collect();
                self.spec(tables, experts, towers, routes)
            }
            Paradigm::StemAl => {
                let main = match &self.main_task {
                    Some(m) => tasks
                        .iter()
                        .position(|t| t == m)
                        .ok_or_else(|| Error::Config(format!("main task {m} not in schema")))?,
                    None => 0,
                };
                if tasks.len() < 2 {
                    return Err(Error::Config(
                        "stem_al needs at least one auxiliary task".into(),
                    ));
                }
                let tables = vec![
                    TableSpec {
                        name: "main".into(),
                        dim: self.dim(0)?,
                    },
                    TableSpec {
                        name: "shared".into(),
                        dim: self.dim(1)?,
                    },
                ];
                let experts = vec![
                    self.expert("main".into(), 0),
                    self.expert("shared".into(), 1),
                ];
                let mut order = vec![main];
                order.extend((0..tasks.len()).filter(|&t| t != main));
                let towers = order.iter().map(|&t| self.tower(&tasks[t], t)).collect();
                let routes = order
                    .iter()
                    .map(|&t| {
                        if t == main {
                            vec![Route::Both, Route::Both]
                        } else {
                            vec![Route::None, Route::Both]
                        }
                    })
                    .collect();
                self.spec(tables, experts, towers, routes)
            }
        };
        Ok(Built {
            graph: ModelGraph::new(schema.clone(), spec, seed)?,
            warnings,
        })
    }
}

/// `ame_build`: asymmetric shared tables over `n_towers` synthetic tasks.
pub fn ame_build(
    schema: &FieldSchema,
    table_sizes: &[usize],
    cfg: &ModelConfig,
    seed: u64,
) -> Result<Built> {
    let cfg = ModelConfig {
        paradigm: Paradigm::Ame,
        dims: table_sizes.to_vec(),
        ..cfg.clone()
    };
    cfg.build(schema, seed)
}

/// `stem_al_build`: main task plus auxiliary tasks, by name.
pub fn stem_al_build(
    schema: &FieldSchema,
    main_task: &str,
    cfg: &ModelConfig,
    seed: u64,
) -> Result<Built> {
    let cfg = ModelConfig {
        paradigm: Paradigm::StemAl,
        main_task: Some(main_task.to_string()),
        ..cfg.clone()
    };
    cfg.build(schema, seed)
}

/// Maps conversion types onto task groups (towers).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskGroupMap {
    groups: std::collections::BTreeMap<String, usize>,
    n_towers: usize,
}

impl TaskGroupMap {
    pub fn new(groups: std::collections::BTreeMap<String, usize>, n_towers: usize) -> Result<Self> {
        if n_towers == 0 || n_towers > groups.len() {
            return Err(Error::Config("need between 1 and #types towers".into()));
        }
        if let Some((t, g)) = groups.iter().find(|(_, &g)| g >= n_towers) {
            return Err(Error::Config(format!(
                "type {t} mapped to missing tower {g}"
            )));
        }
        if (0..n_towers).any(|i| !groups.values().any(|&g| g == i)) {
            return Err(Error::Config("a tower has no conversion type".into()));
        }
        Ok(TaskGroupMap { groups, n_towers })
    }

    pub fn tower_of(&self, conversion_type: &str) -> Result<usize> {
        self.groups
            .get(conversion_type)
            .copied()
            .ok_or_else(|| Error::Input(format!("unmapped conversion type {conversion_type}")))
    }

    pub fn n_towers(&self) -> usize {
        self.n_towers
    }
}
