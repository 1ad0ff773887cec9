use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::DMatrix;

/// A CSV table of reals with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn parse_cell(cell: &str, row: usize, col: &str) -> Result<f64> {
    let t = cell.trim();
    if t.is_empty() {
        bail!("row {row}: missing value in column `{col}`");
    }
    t.parse::<f64>()
        .map_err(|_| anyhow!("row {row}: cannot parse `{t}` in column `{col}` as a number"))
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .with_context(|| format!("cannot open {}", path.display()))?;
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if headers.is_empty() {
            bail!("{}: no header row", path.display());
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.with_context(|| format!("{}: malformed CSV", path.display()))?;
            let row = rec
                .iter()
                .zip(&headers)
                .map(|(c, h)| parse_cell(c, i + 1, h))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            bail!("{}: no data rows", path.display());
        }
        Ok(Self { headers, rows })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("no column named `{name}`"))
    }

    /// Response and design matrices, each with a leading intercept column.
    pub fn model_data(&self, response: &str, quantile: &[String], dispersion: &[String]) -> Result<ModelData> {
        let yi = self.column(response)?;
        let y: Vec<f64> = self.rows.iter().map(|r| r[yi]).collect();
        if let Some(i) = y.iter().position(|v| !(*v > 0.0)) {
            bail!("row {}: response must be strictly positive, got {}", i + 1, y[i]);
        }
        let design = |names: &[String]| -> Result<DMatrix<f64>> {
            let idx = names.iter().map(|n| self.column(n)).collect::<Result<Vec<_>>>()?;
            Ok(DMatrix::from_fn(self.rows.len(), idx.len() + 1, |i, j| {
                if j == 0 {
                    1.0
                } else {
                    self.rows[i][idx[j - 1]]
                }
            }))
        };
        let names = |cols: &[String]| {
            std::iter::once("(intercept)".to_string())
                .chain(cols.iter().cloned())
                .collect()
        };
        Ok(ModelData {
            y,
            x: design(quantile)?,
            w: design(dispersion)?,
            x_names: names(quantile),
            w_names: names(dispersion),
        })
    }
}

#[derive(Debug, Clone)]
pub struct ModelData {
    pub y: Vec<f64>,
    pub x: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub x_names: Vec<String>,
    pub w_names: Vec<String>,
}

/// Write `y` and the non-intercept design columns with 17 significant digits.
pub fn write_dataset(path: &Path, y: &[f64], x: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<()> {
    let mut out = std::io::BufWriter::new(
        std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    );
    let mut header = vec!["y".to_string()];
    header.extend((1..x.ncols()).map(|j| format!("x{j}")));
    header.extend((1..w.ncols()).map(|j| format!("w{j}")));
    writeln!(out, "{}", header.join(","))?;
    for i in 0..y.len() {
        let mut cells = vec![format!("{:.16e}", y[i])];
        cells.extend((1..x.ncols()).map(|j| format!("{:.16e}", x[(i, j)])));
        cells.extend((1..w.ncols()).map(|j| format!("{:.16e}", w[(i, j)])));
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let y = vec![0.1 + 0.2, std::f64::consts::PI, 1e-300, 123456.789];
        let x = DMatrix::from_fn(4, 2, |i, j| if j == 0 { 1.0 } else { (i as f64).sqrt() / 3.0 });
        let w = DMatrix::from_element(4, 1, 1.0);
        write_dataset(&path, &y, &x, &w).unwrap();
        let t = Table::read(&path).unwrap();
        assert_eq!(t.headers, vec!["y", "x1"]);
        let md = t.model_data("y", &["x1".into()], &[]).unwrap();
        assert_eq!(md.y, y);
        assert_eq!(md.x, x);
    }

    #[test]
    fn bad_cells_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "y,a\n1,2\n,3\n").unwrap();
        assert!(Table::read(&path).unwrap_err().to_string().contains("missing"));
        std::fs::write(&path, "y,a\n1,2\nabc,3\n").unwrap();
        assert!(Table::read(&path).is_err());
        std::fs::write(&path, "y,a\n1,2\n1,2,3\n").unwrap();
        assert!(Table::read(&path).is_err());
        std::fs::write(&path, "y,a\n1,2\n-1,3\n").unwrap();
        let t = Table::read(&path).unwrap();
        assert!(t.model_data("y", &[], &[]).is_err());
        assert!(t.model_data("z", &[], &[]).is_err());
        std::fs::write(&path, "y,a\n1.5e0,2E-1\n").unwrap();
        assert_eq!(Table::read(&path).unwrap().rows[0], vec![1.5, 0.2]);
    }
}
