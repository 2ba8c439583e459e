//! Plot-ready `x,y` series. Data only; rendering is left to external tools.

use std::path::Path;

use super::report::format_float;
use super::sweep::SweepTable;
use super::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(["x", "y"]).expect("in-memory write");
        for (x, y) in &self.points {
            w.write_record([format_float(*x), format_float(*y)]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
    }
}

/// One series per column; rows that failed or have a non-numeric parameter are skipped.
pub fn series_from_table(table: &SweepTable) -> Vec<Series> {
    table
        .columns
        .iter()
        .enumerate()
        .map(|(k, name)| Series {
            name: name.clone(),
            points: table.rows.iter().filter_map(|r| Some((r.x?, r.cells[k]?))).collect(),
        })
        .collect()
}

/// Single-row series (at `x = 0`) for every entropy in a report.
pub fn series_from_report(report: &serde_json::Value) -> Result<Vec<Series>, String> {
    let entropies = report
        .get("entropies")
        .and_then(|e| e.as_array())
        .ok_or("report has no `entropies` array")?;
    entropies
        .iter()
        .map(|e| {
            let basis = e.get("basis").and_then(|b| b.as_str()).ok_or("entropy entry without `basis`")?;
            let y = e.get("entropy_bits").and_then(|b| b.as_f64()).ok_or("entropy entry without `entropy_bits`")?;
            Ok(Series { name: format!("{basis}_entropy"), points: vec![(0.0, y)] })
        })
        .collect()
}

pub fn write_series(series: &[Series], dir: &Path) -> Result<(), CliError> {
    let io = |e: std::io::Error, p: &Path| CliError::Io(format!("{}: {e}", p.display()));
    std::fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
    for s in series {
        let path = dir.join(format!("{}.csv", s.name));
        std::fs::write(&path, s.to_csv()).map_err(|e| io(e, &path))?;
    }
    Ok(())
}

/// `input` is a sweep CSV or a report JSON, told apart by the extension.
pub fn plot_command(input: &Path, out_dir: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(input).map_err(|e| CliError::Input(format!("{}: {e}", input.display())))?;
    let bad = |e: String| CliError::Input(format!("{}: {e}", input.display()));
    let series = if input.extension().is_some_and(|e| e == "json") {
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        series_from_report(&value).map_err(bad)?
    } else {
        series_from_table(&SweepTable::from_csv(&text).map_err(bad)?)
    };
    write_series(&series, out_dir)
}
