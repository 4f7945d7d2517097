//! Provenance headers and atomic output files.

use std::fmt::Display;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::experiment::{Format, Outcome, Resolved};

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// `false` for `n + m <= 2`, where the theorems are not claimed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem_mode: Option<bool>,
    pub config: Value,
}

impl Provenance {
    /// The recorded config leaves out the output path, so reruns elsewhere match byte for byte.
    pub fn new(r: &Resolved) -> Result<Self> {
        let mut config = r.config.clone();
        config.output = None;
        Ok(Provenance {
            tool: "diolab",
            version: env!("CARGO_PKG_VERSION"),
            config_hash: r.hash.clone(),
            seed: r.config.task_seed(),
            theorem_mode: r.problem.as_ref().map(|p| p.theorem_mode()),
            config: serde_json::to_value(&config)?,
        })
    }
}

/// Rows of a CSV output with `# key: value` notes after the provenance lines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    pub fn rows(mut self, rows: impl IntoIterator<Item = Vec<String>>) -> Self {
        self.rows.extend(rows);
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn note(mut self, key: &str, value: impl Display) -> Self {
        self.notes.push((key.to_string(), value.to_string()));
        self
    }
}

pub fn render_csv(prov: &Provenance, table: &Table) -> Result<String> {
    let mut out = String::new();
    out.push_str(&format!("# {} {}\n", prov.tool, prov.version));
    out.push_str(&format!("# config_hash: {}\n", prov.config_hash));
    if let Some(seed) = prov.seed {
        out.push_str(&format!("# seed: {seed}\n"));
    }
    if let Some(t) = prov.theorem_mode {
        out.push_str(&format!("# theorem_mode: {t}\n"));
    }
    out.push_str(&format!("# config: {}\n", serde_json::to_string(&prov.config)?));
    for (k, v) in &table.notes {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    out.push_str(std::str::from_utf8(&w.into_inner()?)?);
    Ok(out)
}

pub fn render_json(prov: &Provenance, result: &Value) -> Result<String> {
    let doc = serde_json::json!({ "provenance": prov, "result": result });
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

/// Picks the format from `format`, else from the extension (`.csv` or JSON).
pub fn choose_format(path: &Path, format: Option<Format>) -> Format {
    format.unwrap_or(if path.extension().is_some_and(|e| e == "csv") {
        Format::Csv
    } else {
        Format::Json
    })
}

pub fn render(format: Format, prov: &Provenance, outcome: &Outcome) -> Result<String> {
    match format {
        Format::Json => render_json(prov, &outcome.result),
        Format::Csv => match &outcome.table {
            Some(t) => render_csv(prov, t),
            None => bail!("this task has no CSV form; use --format json"),
        },
    }
}

pub fn write_output(path: &Path, format: Option<Format>, prov: &Provenance, outcome: &Outcome) -> Result<()> {
    let text = render(choose_format(path, format), prov, outcome)?;
    write_atomic(path, text.as_bytes())
}

/// Writes through a temporary file in the same directory, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
