use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::CliError;

/// Reads a TOML config file, or an empty table without one.
pub fn load_table(path: Option<&Path>) -> Result<toml::Table, CliError> {
    let Some(path) = path else {
        return Ok(toml::Table::new());
    };
    let text = std::fs::read_to_string(path).map_err(|e| collapsar::Error::io(path, e))?;
    text.parse::<toml::Table>()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies a dotted `key=value` override. Values parse as TOML literals and
/// fall back to bare strings.
pub fn apply_set(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got {assignment:?}")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Usage(format!("bad override key {key:?}")));
    }
    let mut cur = table;
    for part in &path[..path.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| {
            CliError::Usage(format!("override {key:?} descends into a non-table"))
        })?;
    }
    cur.insert(path[path.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

pub fn resolve<T: DeserializeOwned>(table: toml::Table) -> Result<T, CliError> {
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Usage(format!("config: {}", e.message())))
}

/// Writes `resolved.toml` with the command line that produced the run.
pub fn write_snapshot<T: Serialize>(out: &Path, command: &[&str], cfg: &T) -> Result<(), CliError> {
    let mut table = match toml::Value::try_from(cfg).map_err(|e| CliError::Usage(e.to_string()))? {
        toml::Value::Table(t) => t,
        other => {
            let mut t = toml::Table::new();
            t.insert("value".into(), other);
            t
        }
    };
    table.insert(
        "command".into(),
        toml::Value::Array(
            command
                .iter()
                .map(|s| toml::Value::String(s.to_string()))
                .collect(),
        ),
    );
    let text = toml::to_string(&table).map_err(|e| CliError::Usage(e.to_string()))?;
    crate::write_file(&out.join("resolved.toml"), &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_nest_and_type() {
        let mut t = toml::Table::new();
        apply_set(&mut t, "train.lr=0.5").unwrap();
        apply_set(&mut t, "model.dims=[4, 4]").unwrap();
        apply_set(&mut t, "data.path=runs/x").unwrap();
        assert_eq!(t["train"]["lr"].as_float(), Some(0.5));
        assert_eq!(t["model"]["dims"].as_array().unwrap().len(), 2);
        assert_eq!(t["data"]["path"].as_str(), Some("runs/x"));
        assert!(apply_set(&mut t, "noequals").is_err());
        assert!(apply_set(&mut t, "train.lr.x=1").is_err());
    }
}
