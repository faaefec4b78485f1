use std::path::Path;

use serde::{Deserialize, Serialize};

use super::spec::GraphSpec;
use super::ModelGraph;
use crate::data::FieldSchema;
use crate::numerics::io::{read_binary, write_binary};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BlockEntry {
    name: String,
    file: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CheckpointManifest {
    schema: FieldSchema,
    spec: GraphSpec,
    blocks: Vec<BlockEntry>,
}

pub const MANIFEST: &str = "manifest.json";

/// One binary matrix file per parameter block plus `manifest.json`.
pub fn save_checkpoint(graph: &ModelGraph, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut blocks = Vec::new();
    for (i, b) in graph.store.blocks().iter().enumerate() {
        let file = format!("block_{i:04}.cmx");
        write_binary(&b.value, &dir.join(&file))?;
        blocks.push(BlockEntry {
            name: b.name.clone(),
            file,
            rows: b.value.rows(),
            cols: b.value.cols(),
        });
    }
    let m = CheckpointManifest {
        schema: graph.schema.clone(),
        spec: graph.spec.clone(),
        blocks,
    };
    let path = dir.join(MANIFEST);
    std::fs::write(&path, serde_json::to_string_pretty(&m)? + "\n").map_err(|e| Error::io(&path, e))
}

pub fn load_checkpoint(dir: &Path) -> Result<ModelGraph> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let m: CheckpointManifest = serde_json::from_str(&text)?;
    let mut g = ModelGraph::new(m.schema, m.spec, 0)?;
    if m.blocks.len() != g.store.len() {
        return Err(Error::Config(
            "checkpoint block count does not match its graph".into(),
        ));
    }
    for entry in &m.blocks {
        let id = g
            .store
            .find(&entry.name)
            .ok_or_else(|| Error::Config(format!("unknown block {}", entry.name)))?;
        let value = read_binary(&dir.join(&entry.file))?;
        if value.shape() != g.store.value(id).shape() || value.shape() != (entry.rows, entry.cols) {
            return Err(Error::Config(format!(
                "block {} has the wrong shape",
                entry.name
            )));
        }
        *g.store.value_mut(id) = value;
    }
    Ok(g)
}
