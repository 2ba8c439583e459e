//! One-parameter sweeps over a base scenario, tabulated as CSV.

use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use super::report::{format_float, Report};
use super::run::execute;
use super::scenario::{load_text, BundledKind, Output, Scenario, SCHEMA_VERSION};
use super::CliError;
use crate::states::Basis;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Bundled scenario name, or a path relative to the sweep file.
    pub base: String,
    /// Dotted path into the scenario tree, e.g. `state.tau`.
    pub parameter: String,
    pub values: Vec<toml::Value>,
    pub columns: Vec<String>,
}

/// A scalar extracted from each point's report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Entropy(Basis),
    /// Entry `(row, col)` of the density matrix, real or imaginary part.
    Density { basis: Basis, row: usize, col: usize, imag: bool },
    /// Eigenvalue in descending order.
    Eigenvalue { basis: Basis, index: usize },
}

fn parse_basis(s: &str) -> Option<Basis> {
    match s {
        "spin" => Some(Basis::Spin),
        "helicity" => Some(Basis::Helicity),
        _ => None,
    }
}

impl std::str::FromStr for Column {
    type Err = String;

    /// Accepts `spin_entropy`, `helicity_density.m01.re`, `spin_eigenvalue.0`.
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || {
            format!("unknown column `{s}`; expected <basis>_entropy, <basis>_density.mIJ.re|im or <basis>_eigenvalue.N")
        };
        let mut parts = s.split('.');
        let head = parts.next().ok_or_else(bad)?;
        let (basis, what) = head.split_once('_').ok_or_else(bad)?;
        let basis = parse_basis(basis).ok_or_else(bad)?;
        let rest: Vec<&str> = parts.collect();
        let col = match (what, rest.as_slice()) {
            ("entropy", []) => Column::Entropy(basis),
            ("density", [m, part]) => {
                let idx = m.strip_prefix('m').filter(|i| i.len() == 2).ok_or_else(bad)?;
                let digit = |c: char| c.to_digit(10).filter(|d| *d < 2).map(|d| d as usize).ok_or_else(bad);
                let mut chars = idx.chars();
                let row = digit(chars.next().ok_or_else(bad)?)?;
                let col = digit(chars.next().ok_or_else(bad)?)?;
                let imag = match *part {
                    "re" => false,
                    "im" => true,
                    _ => return Err(bad()),
                };
                Column::Density { basis, row, col, imag }
            }
            ("eigenvalue", [n]) => match *n {
                "0" => Column::Eigenvalue { basis, index: 0 },
                "1" => Column::Eigenvalue { basis, index: 1 },
                _ => return Err(bad()),
            },
            _ => return Err(bad()),
        };
        Ok(col)
    }
}

impl Column {
    fn required_output(self) -> Output {
        match self {
            Column::Density { basis: Basis::Spin, .. } => Output::SpinDensity,
            Column::Density { basis: Basis::Helicity, .. } => Output::HelicityDensity,
            Column::Entropy(Basis::Spin) | Column::Eigenvalue { basis: Basis::Spin, .. } => Output::SpinEntropy,
            Column::Entropy(Basis::Helicity) | Column::Eigenvalue { basis: Basis::Helicity, .. } => Output::HelicityEntropy,
        }
    }

    fn extract(self, report: &Report) -> Option<f64> {
        match self {
            Column::Entropy(b) => report.entropy(b).map(|e| e.entropy_bits),
            Column::Eigenvalue { basis, index } => report.entropy(basis).map(|e| e.eigenvalues[index]),
            Column::Density { basis, row, col, imag } => report.density(basis).map(|d| d.matrix[row][col][imag as usize]),
        }
    }
}

impl SweepFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let file: SweepFile = toml::from_str(text).map_err(|e| CliError::Input(format!("{origin}: {e}")))?;
        file.validate().map_err(|e| CliError::Input(format!("{origin}: {e}")))?;
        Ok(file)
    }

    fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!("field `schema_version`: unsupported version {}", self.schema_version));
        }
        if self.values.is_empty() {
            return Err("field `values`: the value list is empty".into());
        }
        if self.columns.is_empty() {
            return Err("field `columns`: at least one column is required".into());
        }
        if self.parameter.split('.').any(str::is_empty) {
            return Err(format!("field `parameter`: malformed path `{}`", self.parameter));
        }
        self.parsed_columns().map(|_| ())
    }

    pub fn parsed_columns(&self) -> Result<Vec<Column>, String> {
        self.columns.iter().map(|c| c.parse().map_err(|e| format!("field `columns`: {e}"))).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    /// Parameter value as written in the table.
    pub parameter: String,
    pub x: Option<f64>,
    pub cells: Vec<Option<f64>>,
    /// `ok`, or the error that stopped this point.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub parameter: String,
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let mut header = vec!["index".to_owned(), self.parameter.clone()];
        header.extend(self.columns.iter().cloned());
        header.push("status".into());
        w.write_record(&header).expect("in-memory write");
        for r in &self.rows {
            let mut rec = vec![r.index.to_string(), r.parameter.clone()];
            rec.extend(r.cells.iter().map(|c| c.map(format_float).unwrap_or_default()));
            rec.push(r.status.clone());
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
    }

    /// Reads a table written by [`SweepTable::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = r.headers().map_err(|e| e.to_string())?.iter().map(str::to_owned).collect();
        if header.len() < 4 || header[0] != "index" || header.last().map(String::as_str) != Some("status") {
            return Err("expected header `index,<parameter>,<columns...>,status`".into());
        }
        let columns = header[2..header.len() - 1].to_vec();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let index = field(0).parse().map_err(|e| format!("row {}: index: {e}", rows.len()))?;
            let num = |s: &str| if s.is_empty() { None } else { s.parse::<f64>().ok() };
            rows.push(SweepRow {
                index,
                parameter: field(1).to_owned(),
                x: num(field(1)),
                cells: (0..columns.len()).map(|k| num(field(k + 2))).collect(),
                status: field(header.len() - 1).to_owned(),
            });
        }
        Ok(Self { parameter: header[1].clone(), columns, rows })
    }
}

fn format_value(v: &toml::Value) -> String {
    match v {
        toml::Value::Float(f) => format_float(*f),
        toml::Value::Integer(i) => i.to_string(),
        other => other.to_string(),
    }
}

fn numeric(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Float(f) => Some(*f),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

/// Replaces the value at `path`, keeping float fields float when given integers.
fn set_path(tree: &mut toml::Value, path: &str, value: &toml::Value) -> Result<(), String> {
    let keys: Vec<&str> = path.split('.').collect();
    let (last, parents) = keys.split_last().expect("validated non-empty");
    let mut node = tree;
    for k in parents {
        node = node
            .get_mut(*k)
            .filter(|n| n.is_table())
            .ok_or_else(|| format!("parameter `{path}`: no table `{k}` in the base scenario"))?;
    }
    let table = node.as_table_mut().expect("checked above");
    let existing = table.get(*last).ok_or_else(|| format!("parameter `{path}`: field `{last}` is not set in the base scenario"))?;
    let replacement = match (existing, value) {
        (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(*i as f64),
        _ => value.clone(),
    };
    table.insert((*last).to_owned(), replacement);
    Ok(())
}

/// Runs every point (in parallel); rows stay in value order.
pub fn run_sweep(file: &SweepFile, base_dir: Option<&Path>) -> Result<SweepTable, CliError> {
    let columns = file.parsed_columns().map_err(CliError::Input)?;
    let base_spec = match base_dir {
        Some(dir) if dir.join(&file.base).exists() => dir.join(&file.base).display().to_string(),
        _ => file.base.clone(),
    };
    let (text, origin) = load_text(&base_spec, BundledKind::Scenario)?;
    // Parse once up front so a broken base is an input error, not N failed rows.
    Scenario::parse(&text, &origin)?;
    let mut base: toml::Value = toml::from_str(&text).map_err(|e| CliError::Input(format!("{origin}: {e}")))?;
    if let Some(t) = base.as_table_mut() {
        t.remove("checks");
        t.remove("mc");
        let mut outputs: Vec<Output> = t
            .get("outputs")
            .cloned()
            .and_then(|o| o.try_into().ok())
            .unwrap_or_default();
        for c in &columns {
            if !outputs.contains(&c.required_output()) {
                outputs.push(c.required_output());
            }
        }
        let list = outputs.iter().map(|o| toml::Value::String(o.as_str().to_owned())).collect();
        t.insert("outputs".into(), toml::Value::Array(list));
    }
    // Probe the path against the base before fanning out.
    set_path(&mut base.clone(), &file.parameter, &file.values[0]).map_err(CliError::Input)?;

    let rows = file
        .values
        .par_iter()
        .enumerate()
        .map(|(index, value)| {
            let outcome = (|| {
                let mut tree = base.clone();
                set_path(&mut tree, &file.parameter, value).map_err(CliError::Input)?;
                let scenario = Scenario::from_value(tree, &format!("{origin} [{} = {}]", file.parameter, value))?;
                execute(&scenario)
            })();
            let (cells, status) = match outcome {
                Ok(report) => (columns.iter().map(|c| c.extract(&report)).collect(), "ok".to_owned()),
                Err(e) => (vec![None; columns.len()], e.to_string()),
            };
            SweepRow { index, parameter: format_value(value), x: numeric(value), cells, status }
        })
        .collect();
    Ok(SweepTable { parameter: file.parameter.clone(), columns: file.columns.clone(), rows })
}
