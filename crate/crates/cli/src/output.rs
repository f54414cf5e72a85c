//! Run directories, reports, CSV tables and the registry of past runs.

use crate::config::RunConfig;
use crate::error::CliError;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub const SCHEMA: u32 = 1;
pub const CONFIG_FILE: &str = "config.resolved";
pub const REPORT_FILE: &str = "report.json";
pub const CSV_SCHEMA_FILE: &str = "csv_schema.txt";

/// A CSV table with documented columns.
#[derive(Clone, Debug)]
pub struct Table {
    pub name: &'static str,
    pub about: &'static str,
    /// `(column, description)`
    pub columns: Vec<(&'static str, &'static str)>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, about: &'static str, columns: &[(&'static str, &'static str)]) -> Self {
        Table { name, about, columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push<I: IntoIterator<Item = Cell>>(&mut self, row: I) {
        let row: Vec<String> = row.into_iter().map(|c| c.0).collect();
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    fn to_csv(&self) -> String {
        let mut s = self.columns.iter().map(|c| c.0).collect::<Vec<_>>().join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// One CSV field.
pub struct Cell(String);

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell(if v.is_finite() { format!("{v:e}") } else { v.to_string() })
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell(v.to_string())
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell(v.to_string())
    }
}

/// Result of one stage: headline numbers, the full serialised result and
/// tables.
pub struct Outcome {
    pub headline: Map<String, Value>,
    pub result: Value,
    pub tables: Vec<Table>,
}

impl Outcome {
    pub fn new<T: Serialize>(result: &T) -> Result<Self, CliError> {
        let result = serde_json::to_value(result).map_err(|e| CliError::other(e.to_string()))?;
        Ok(Outcome { headline: Map::new(), result, tables: Vec::new() })
    }

    pub fn headline(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.headline.insert(key.to_string(), v.into());
        self
    }

    pub fn table(mut self, t: Table) -> Self {
        self.tables.push(t);
        self
    }
}

pub fn config_hash(cfg: &RunConfig) -> String {
    let digest = Sha256::digest(cfg.identity_text().as_bytes());
    digest.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn report_json(cfg: &RunConfig, hash: &str, out: &Outcome) -> String {
    let v = json!({
        "schema": SCHEMA,
        "command": cfg.command.name(),
        "stage": cfg.stage,
        "seed": cfg.seed,
        "config_hash": hash,
        "headline": Value::Object(out.headline.clone()),
        "result": out.result,
        "tables": out.tables.iter().map(|t| format!("{}.csv", t.name)).collect::<Vec<_>>(),
    });
    let mut s = serde_json::to_string_pretty(&v).expect("JSON values serialise");
    s.push('\n');
    s
}

fn csv_schema(tables: &[Table]) -> String {
    let mut s = String::new();
    for t in tables {
        let _ = writeln!(s, "{}.csv: {}", t.name, t.about);
        for (c, d) in &t.columns {
            let _ = writeln!(s, "  {c}: {d}");
        }
        s.push('\n');
    }
    s
}

/// Writes the resolved config first, then the report and tables, into
/// `root/<hash>/`. Returns the run directory.
pub fn write_run(root: &Path, cfg: &RunConfig, out: &Outcome) -> Result<PathBuf, CliError> {
    let hash = config_hash(cfg);
    let dir = root.join(&hash);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join(CONFIG_FILE), cfg.render())?;
    fs::write(dir.join(REPORT_FILE), report_json(cfg, &hash, out))?;
    for t in &out.tables {
        fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv())?;
    }
    fs::write(dir.join(CSV_SCHEMA_FILE), csv_schema(&out.tables))?;
    Ok(dir)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Entry {
    Run { hash: String, seed: u64, command: String, stage: String, headline: Map<String, Value> },
    Corrupt { dir: String, reason: String },
}

/// Every run directory under `root`, sorted by name. Unreadable entries are
/// listed as corrupt.
pub fn registry(root: &Path) -> Result<Vec<Entry>, CliError> {
    let mut dirs: Vec<PathBuf> = match fs::read_dir(root) {
        Ok(rd) => rd.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.is_dir()).collect(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    dirs.sort();
    Ok(dirs.iter().map(|d| read_entry(d)).collect())
}

fn read_entry(dir: &Path) -> Entry {
    let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let corrupt = |reason: String| Entry::Corrupt { dir: name.clone(), reason };
    if !dir.join(CONFIG_FILE).is_file() {
        return corrupt(format!("missing {CONFIG_FILE}"));
    }
    let text = match fs::read_to_string(dir.join(REPORT_FILE)) {
        Ok(t) => t,
        Err(e) => return corrupt(format!("{REPORT_FILE}: {e}")),
    };
    let v: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => return corrupt(format!("{REPORT_FILE}: {e}")),
    };
    let field = |k: &str| v.get(k).cloned();
    match (field("schema"), field("config_hash"), field("seed"), field("command"), field("stage"), field("headline")) {
        (
            Some(Value::Number(s)),
            Some(Value::String(hash)),
            Some(Value::Number(seed)),
            Some(Value::String(command)),
            Some(Value::String(stage)),
            Some(Value::Object(headline)),
        ) if s.as_u64() == Some(SCHEMA as u64) => {
            if hash != name {
                return corrupt(format!("hash {hash} does not match its directory"));
            }
            Entry::Run { hash, seed: seed.as_u64().unwrap_or(0), command, stage, headline }
        }
        _ => corrupt("report lacks schema 1 fields".into()),
    }
}

pub fn format_entry(e: &Entry) -> String {
    match e {
        Entry::Run { hash, seed, command, stage, headline } => {
            let nums: Vec<String> = headline.iter().map(|(k, v)| format!("{k}={v}")).collect();
            format!("{hash}  seed={seed}  {command} {stage}  {}", nums.join(" "))
        }
        Entry::Corrupt { dir, reason } => format!("{dir}  CORRUPT  {reason}"),
    }
}
