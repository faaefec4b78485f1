//! Multi-embedding, multi-task model graphs with gradient routing.

mod build;
mod checkpoint;
mod equivalence;
mod gate;
mod graph;
mod mlp;
mod ops;
mod params;
mod spec;

pub use build::{ame_build, stem_al_build, Built, ModelConfig, Paradigm, TaskGroupMap};
pub use checkpoint::{load_checkpoint, save_checkpoint, MANIFEST};
pub use equivalence::{me_equivalence_check, single_embedding_equivalent};
pub use gate::{combine, gate_backward, gate_forward, GateOp};
pub use graph::{random_sample, ModelGraph, Trace};
pub use mlp::{Layer, Mlp, MlpOp, MlpTrace};
pub use ops::ModelOp;
pub use params::{Block, BlockId, BlockInfo, ParamStore};
pub use spec::{
    ExpertKind, ExpertSpec, GateMode, GraphSpec, Route, TableSpec, TimSetting, TowerSpec,
};
