//! Field schemas, samples, CSV ingestion and the synthetic generators.

mod dataset;
pub mod generators;
mod io;
mod schema;

pub use dataset::{Behavior, Dataset, FieldValue, Sample};
pub use generators::{
    gen_collapse_probe, gen_synthetic_ctr, gen_two_task_contradictory, CollapseProbeConfig,
    ContradictoryConfig, SyntheticCtrConfig,
};
pub use io::{fnv1a64, load_dataset, read_csv, save_dataset, write_csv, Manifest};
pub use schema::{FieldKind, FieldSchema, FieldSpec};
