use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Rows of already formatted cells under a fixed header.
#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: AsRef<str>>(headers: &[S]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    fn write<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(&self.headers)?;
        for r in &self.rows {
            wtr.write_record(r)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

/// `results.csv` + `criteria` → `results.criteria.csv`.
pub fn side_path(out: &Path, name: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{name}.csv"))
}

/// Write the main table to `out` (or stdout) and each side table next to it.
/// Side tables are skipped when writing to stdout.
pub fn emit_csv(out: Option<&Path>, main: &CsvTable, side: &[(&str, CsvTable)]) -> Result<()> {
    main.write(sink(out)?)?;
    if let Some(p) = out {
        for (name, t) in side {
            let path = side_path(p, name);
            t.write(BufWriter::new(
                File::create(&path).with_context(|| format!("cannot create {}", path.display()))?,
            ))?;
        }
    }
    Ok(())
}

pub fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn side_files_sit_next_to_the_output() {
        assert_eq!(
            side_path(Path::new("/tmp/a/res.csv"), "criteria"),
            PathBuf::from("/tmp/a/res.criteria.csv")
        );
        assert_eq!(side_path(Path::new("res"), "x"), PathBuf::from("res.x.csv"));
    }

    #[test]
    fn number_formatting_round_trips() {
        let v = 0.1 + 0.2;
        assert_eq!(num(v).parse::<f64>().unwrap(), v);
        assert_eq!(opt(None), "");
    }
}
