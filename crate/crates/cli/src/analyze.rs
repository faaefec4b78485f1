use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use collapsar::analysis::{
    entanglement_report, information_abundance, semantic_temporal_correlation, singular_spectrum,
    AnalysisReport, PairEmbeddings, Panel, Provenance, ReportKind, MIN_SUPPORT,
};
use collapsar::data::FieldKind;
use collapsar::encoding::TemporalMode;
use collapsar::model::{load_checkpoint, ModelGraph};
use collapsar::Matrix;
use serde::{Deserialize, Serialize};

use crate::config::{apply_set, resolve, write_snapshot};
use crate::run::load_dir;
use crate::{write_file, AnalyzeKind, CliError, Common};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum GridMode {
    Interval,
    Position,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct MiSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    sequence_field: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    task: Option<String>,
    target_category: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    categories: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    buckets: Option<Vec<usize>>,
    mode: GridMode,
    min_support: usize,
}

impl Default for MiSection {
    fn default() -> Self {
        MiSection {
            sequence_field: None,
            task: None,
            target_category: 0,
            categories: None,
            buckets: None,
            mode: GridMode::Interval,
            min_support: MIN_SUPPORT,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct EntangleSection {
    /// `single_a`, `single_b`, `shared` and `stem` checkpoints.
    models: BTreeMap<String, PathBuf>,
    user_field: String,
    item_field: String,
    pctl: f64,
}

impl Default for EntangleSection {
    fn default() -> Self {
        EntangleSection {
            models: BTreeMap::new(),
            user_field: "user".into(),
            item_field: "item".into(),
            pctl: 0.4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalyzeRun {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    checkpoint: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    data: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default)]
    mi: MiSection,
    #[serde(default)]
    entangle: EntangleSection,
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, CliError> {
    p.as_deref()
        .ok_or_else(|| CliError::Usage(format!("analysis needs --{what}")))
}

/// Per categorical field, the embedding table of every model table.
fn field_tables(
    graph: &ModelGraph,
) -> Result<BTreeMap<String, BTreeMap<String, Matrix>>, CliError> {
    let mut out = BTreeMap::new();
    for id in graph.schema.categorical_ids() {
        let field = &graph.schema.fields[id].name;
        let mut per = BTreeMap::new();
        for (t, spec) in graph.spec.tables.iter().enumerate() {
            per.insert(spec.name.clone(), graph.field_table(t, field)?.clone());
        }
        out.insert(field.clone(), per);
    }
    Ok(out)
}

fn spectrum_report(graph: &ModelGraph, prov: Provenance) -> Result<AnalysisReport, CliError> {
    let mut payload = BTreeMap::new();
    for (field, tables) in field_tables(graph)? {
        let mut per = BTreeMap::new();
        for (name, m) in tables {
            per.insert(name, singular_spectrum(&m)?.values().to_vec());
        }
        payload.insert(field, per);
    }
    Ok(AnalysisReport::new(
        ReportKind::Spectrum,
        serde_json::json!({ "fields": payload }),
        prov,
    )?)
}

#[derive(Serialize)]
struct FieldIa {
    tables: BTreeMap<String, f64>,
    /// IA of the tables placed side by side.
    #[serde(skip_serializing_if = "Option::is_none")]
    concatenated: Option<f64>,
    cardinality: usize,
}

fn ia_report(graph: &ModelGraph, prov: Provenance) -> Result<AnalysisReport, CliError> {
    let mut payload = BTreeMap::new();
    for (field, tables) in field_tables(graph)? {
        let mut ia = BTreeMap::new();
        let mut cat: Option<Matrix> = None;
        let mut rows = 0;
        for (name, m) in &tables {
            ia.insert(name.clone(), information_abundance(m)?);
            rows = m.rows();
            cat = Some(match cat {
                None => m.clone(),
                Some(c) => c.hconcat(m)?,
            });
        }
        let concatenated = match (tables.len() > 1, cat) {
            (true, Some(c)) => Some(information_abundance(&c)?),
            _ => None,
        };
        payload.insert(
            field,
            FieldIa {
                tables: ia,
                concatenated,
                cardinality: rows,
            },
        );
    }
    Ok(AnalysisReport::new(
        ReportKind::Ia,
        serde_json::json!({ "fields": payload }),
        prov,
    )?)
}

fn mi_report(run: &AnalyzeRun, prov: Provenance) -> Result<AnalysisReport, CliError> {
    let ds = load_dir(required(&run.data, "data")?)?;
    let cfg = &run.mi;
    let seq = match &cfg.sequence_field {
        Some(s) => s.clone(),
        None => ds
            .schema
            .fields
            .iter()
            .find(|f| f.kind == FieldKind::Sequence)
            .map(|f| f.name.clone())
            .ok_or_else(|| CliError::Usage("dataset has no sequence field".into()))?,
    };
    let spec = ds
        .schema
        .field(&seq)
        .ok_or_else(|| CliError::Usage(format!("no field {seq}")))?;
    let target = spec
        .target
        .clone()
        .ok_or_else(|| CliError::Usage(format!("sequence field {seq} has no target field")))?;
    let max_len = spec.max_len.unwrap_or(1);
    let card = spec.cardinality;
    let task = match &cfg.task {
        Some(t) => ds
            .tasks()
            .iter()
            .position(|x| x == t)
            .ok_or_else(|| CliError::Usage(format!("no task {t}")))?,
        None => 0,
    };
    let categories = cfg
        .categories
        .clone()
        .unwrap_or_else(|| (0..card).collect());
    let (mode, default_buckets): (TemporalMode, Vec<usize>) = match cfg.mode {
        GridMode::Interval => (TemporalMode::Interval, (0..max_len).collect()),
        GridMode::Position => (TemporalMode::Position { max_len }, (1..=max_len).collect()),
    };
    let buckets = cfg.buckets.clone().unwrap_or(default_buckets);
    let grid = semantic_temporal_correlation(
        &ds,
        &seq,
        &target,
        task,
        cfg.target_category,
        &categories,
        &buckets,
        mode,
        cfg.min_support,
    )?;
    Ok(AnalysisReport::new(ReportKind::Mi, grid, prov)?)
}

fn embeddings(
    graph: &ModelGraph,
    table: &str,
    run: &EntangleSection,
) -> Result<PairEmbeddings, CliError> {
    let t = graph
        .spec
        .tables
        .iter()
        .position(|s| s.name == table)
        .ok_or_else(|| CliError::Usage(format!("checkpoint has no table {table}")))?;
    Ok(PairEmbeddings {
        users: graph.field_table(t, &run.user_field)?.clone(),
        items: graph.field_table(t, &run.item_field)?.clone(),
    })
}

fn entangle_report(
    run: &AnalyzeRun,
    prov: Provenance,
    out: &Path,
) -> Result<AnalysisReport, CliError> {
    let cfg = &run.entangle;
    let mut sources = BTreeMap::new();
    for (name, dir) in &cfg.models {
        let graph = load_checkpoint(dir)?;
        let first = graph.spec.tables[0].name.clone();
        match name.as_str() {
            "single_a" | "single_b" | "shared" => {
                sources.insert(name.clone(), embeddings(&graph, &first, cfg)?);
            }
            "stem" => {
                let tasks = graph.schema.tasks.clone();
                if tasks.len() != 2 {
                    return Err(CliError::Usage(
                        "the stem model must have exactly two tasks".into(),
                    ));
                }
                sources.insert(
                    "stem_a".into(),
                    embeddings(&graph, &format!("task_{}", tasks[0]), cfg)?,
                );
                sources.insert(
                    "stem_b".into(),
                    embeddings(&graph, &format!("task_{}", tasks[1]), cfg)?,
                );
                sources.insert("stem_shared".into(), embeddings(&graph, "shared", cfg)?);
            }
            other => {
                return Err(CliError::Usage(format!(
                    "unknown entanglement model {other}"
                )))
            }
        }
    }
    let report = entanglement_report(&sources, cfg.pctl, prov)?;
    let panels: Vec<Panel> =
        serde_json::from_value(report.payload["panels"].clone()).map_err(collapsar::Error::from)?;
    for p in panels {
        write_file(
            &out.join(format!("hist_{}_contradictory.csv", p.name)),
            &p.contradictory.histogram.to_csv(),
        )?;
        write_file(
            &out.join(format!("hist_{}_all.csv", p.name)),
            &p.all.histogram.to_csv(),
        )?;
    }
    Ok(report)
}

pub fn analyze(
    kind: AnalyzeKind,
    checkpoint: Option<PathBuf>,
    data: Option<PathBuf>,
    models: &[String],
    common: &Common,
) -> Result<(), CliError> {
    let mut table = common.table(Some("seed"))?;
    for (k, v) in [("checkpoint", checkpoint), ("data", data)] {
        if let Some(v) = v {
            table.insert(k.into(), toml::Value::String(v.display().to_string()));
        }
    }
    for m in models {
        let (name, dir) = m
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--model expects name=dir, got {m:?}")))?;
        apply_set(
            &mut table,
            &format!(
                "entangle.models.{name}={}",
                toml::Value::String(dir.to_string())
            ),
        )?;
    }
    let run: AnalyzeRun = resolve(table)?;
    let prov = Provenance {
        dataset: run.data.as_ref().map(|p| p.display().to_string()),
        model: run.checkpoint.as_ref().map(|p| p.display().to_string()),
        seed: run.seed,
    };
    let out = &common.out;
    let report = match kind {
        AnalyzeKind::Spectrum => spectrum_report(
            &load_checkpoint(required(&run.checkpoint, "checkpoint")?)?,
            prov,
        )?,
        AnalyzeKind::Ia => ia_report(
            &load_checkpoint(required(&run.checkpoint, "checkpoint")?)?,
            prov,
        )?,
        AnalyzeKind::Mi => mi_report(&run, prov)?,
        AnalyzeKind::Entangle => entangle_report(&run, prov, out)?,
    };
    report.save(&out.join("report.json"))?;
    let name = format!("{kind:?}").to_lowercase();
    write_snapshot(out, &["analyze", &name], &run)?;
    println!("{}", out.join("report.json").display());
    Ok(())
}
