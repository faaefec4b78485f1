use std::path::{Path, PathBuf};

use collapsar::data::{
    fnv1a64, gen_collapse_probe, gen_synthetic_ctr, gen_two_task_contradictory, load_dataset,
    save_dataset, CollapseProbeConfig, ContradictoryConfig, Dataset, Manifest, SyntheticCtrConfig,
};
use collapsar::encoding::{mns_codes, MnsConfig, NumeralSystem};
use collapsar::model::{load_checkpoint, save_checkpoint, ModelConfig, ModelGraph};
use collapsar::training::{evaluate, train as fit, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::config::{resolve, write_snapshot};
use crate::{ensure_dir, to_json, write_file, CliError, Common, GenKind};

pub const DATA_FILE: &str = "data.csv";
pub const SCHEMA_FILE: &str = "schema.toml";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn load_dir(dir: &Path) -> Result<Dataset, CliError> {
    Ok(load_dataset(&dir.join(DATA_FILE), &dir.join(SCHEMA_FILE))?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GenConfig {
    seed: u64,
    n: usize,
    synthetic_ctr: SyntheticCtrConfig,
    contradictory: ContradictoryConfig,
    collapse_probe: CollapseProbeConfig,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            n: 10_000,
            synthetic_ctr: Default::default(),
            contradictory: Default::default(),
            collapse_probe: Default::default(),
        }
    }
}

pub fn gen(kind: GenKind, common: &Common) -> Result<(), CliError> {
    let cfg: GenConfig = resolve(common.table(Some("seed"))?)?;
    let (ds, manifest): (Dataset, Manifest) = match kind {
        GenKind::SyntheticCtr => gen_synthetic_ctr(cfg.seed, cfg.n, &cfg.synthetic_ctr)?,
        GenKind::Contradictory => gen_two_task_contradictory(cfg.seed, cfg.n, &cfg.contradictory)?,
        GenKind::CollapseProbe => gen_collapse_probe(cfg.seed, cfg.n, &cfg.collapse_probe)?,
    };
    let out = &common.out;
    let data_path = out.join(DATA_FILE);
    save_dataset(&ds, &data_path, &out.join(SCHEMA_FILE))?;
    let bytes = std::fs::read(&data_path).map_err(|e| collapsar::Error::io(&data_path, e))?;
    let manifest = Manifest {
        checksum: Some(format!("{:016x}", fnv1a64(&bytes))),
        ..manifest
    };
    manifest.save(&out.join(MANIFEST_FILE))?;
    let name = format!("{kind:?}").to_lowercase();
    write_snapshot(out, &["gen", &name], &cfg)?;
    println!(
        "{}",
        serde_json::json!({ "rows": ds.len(), "label_rates": manifest.label_rates, "out": out })
    );
    Ok(())
}

fn default_validation() -> f64 {
    0.2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DataSection {
    /// Directory holding `data.csv` and `schema.toml`.
    path: PathBuf,
    #[serde(default = "default_validation")]
    validation_fraction: f64,
    /// Train on a subset of the dataset's tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tasks: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainRun {
    data: DataSection,
    #[serde(default)]
    model: ModelConfig,
    #[serde(default)]
    train: TrainConfig,
}

pub fn train(common: &Common) -> Result<(), CliError> {
    let cfg: TrainRun = resolve(common.table(Some("train.seed"))?)?;
    cfg.train.validate()?;
    if !(0.0..1.0).contains(&cfg.data.validation_fraction) {
        return Err(CliError::Usage(
            "data.validation_fraction must lie in [0, 1)".into(),
        ));
    }
    let mut ds = load_dir(&cfg.data.path)?;
    if let Some(tasks) = &cfg.data.tasks {
        ds = ds.select_tasks(tasks)?;
    }
    let (tr, va) = ds.split(cfg.data.validation_fraction);
    let built = cfg.model.build(&ds.schema, cfg.train.seed)?;
    for w in &built.warnings {
        eprintln!("warning: {w}");
    }
    let mut graph = built.graph;
    let valid = (!va.is_empty()).then_some(&va);
    let history = fit(&mut graph, &tr, valid, &cfg.train)?;
    let out = &common.out;
    save_checkpoint(&graph, &out.join("checkpoint"))?;
    write_file(&out.join("history.jsonl"), &history.to_jsonl()?)?;
    let last = history.last().map(|r| &r.tasks);
    write_file(&out.join("metrics.json"), &to_json(&last)?)?;
    write_snapshot(out, &["train"], &cfg)?;
    if let Some(r) = history.last() {
        println!(
            "{}",
            serde_json::to_string(r).map_err(collapsar::Error::from)?
        );
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalRun {
    checkpoint: PathBuf,
    data: PathBuf,
}

/// Restricts `ds` to the model's tasks after checking the field layout.
pub fn align(graph: &ModelGraph, ds: Dataset) -> Result<Dataset, CliError> {
    if graph.schema.fields != ds.schema.fields {
        return Err(CliError::Usage(
            "dataset fields differ from the model's schema".into(),
        ));
    }
    if graph.schema.tasks == ds.schema.tasks {
        return Ok(ds);
    }
    Ok(ds.select_tasks(&graph.schema.tasks)?)
}

pub fn eval(
    checkpoint: Option<PathBuf>,
    data: Option<PathBuf>,
    common: &Common,
) -> Result<(), CliError> {
    let mut table = common.table(None)?;
    for (k, v) in [("checkpoint", checkpoint), ("data", data)] {
        if let Some(v) = v {
            table.insert(k.into(), toml::Value::String(v.display().to_string()));
        }
    }
    let cfg: EvalRun = resolve(table)?;
    let graph = load_checkpoint(&cfg.checkpoint)?;
    let ds = align(&graph, load_dir(&cfg.data)?)?;
    let metrics = evaluate(&graph, &ds)?;
    let text = to_json(&metrics)?;
    write_file(&common.out.join("metrics.json"), &text)?;
    write_snapshot(&common.out, &["eval"], &cfg)?;
    print!("{text}");
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EncodeRun {
    value: u64,
    systems: Vec<NumeralSystem>,
}

pub fn encode(value: u64, bases: &[u32], lengths: &[u32], common: &Common) -> Result<(), CliError> {
    if !lengths.is_empty() && lengths.len() != bases.len() {
        return Err(CliError::Usage(
            "--lengths needs one entry per system".into(),
        ));
    }
    let systems: Vec<NumeralSystem> = bases
        .iter()
        .enumerate()
        .map(|(i, &base)| match lengths.get(i) {
            Some(&length) => NumeralSystem { base, length },
            None => NumeralSystem::covering(base.max(2), value),
        })
        .collect();
    let cfg = MnsConfig::new(systems.clone(), 1)?;
    let codes = mns_codes(value, &cfg)?;
    ensure_dir(&common.out)?;
    write_file(&common.out.join("codes.json"), &to_json(&codes)?)?;
    write_snapshot(&common.out, &["encode"], &EncodeRun { value, systems })?;
    for s in &codes.systems {
        println!("{s}");
    }
    Ok(())
}
