//! Response/design data and CSV ingestion.

use nalgebra::{DMatrix, DVector};
use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};

/// A response vector with its design matrix and column metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    pub column_names: Vec<String>,
    /// Set when one design column is an explicit all-ones intercept; that
    /// column is excluded from the L1 budget by default.
    pub has_intercept_column: bool,
}

impl Dataset {
    pub fn new(y: DVector<f64>, x: DMatrix<f64>, column_names: Vec<String>) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(Error::Data(format!(
                "response has {} rows but design has {}",
                y.len(),
                x.nrows()
            )));
        }
        if y.is_empty() {
            return Err(Error::Data("empty dataset".into()));
        }
        if column_names.len() != x.ncols() {
            return Err(Error::Data(format!(
                "{} column names for {} design columns",
                column_names.len(),
                x.ncols()
            )));
        }
        let unique: BTreeSet<&String> = column_names.iter().collect();
        if unique.len() != column_names.len() {
            return Err(Error::Data("duplicate column names".into()));
        }
        if y.iter().any(|v| !v.is_finite()) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite entry in dataset".into()));
        }
        Ok(Self {
            y,
            x,
            column_names,
            has_intercept_column: false,
        })
    }

    /// Marks the named column as an explicit intercept column. The column
    /// must be identically one.
    pub fn mark_intercept_column(&mut self, name: &str) -> Result<()> {
        let j = self
            .column_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Data(format!("no column named '{name}'")))?;
        if (0..self.n()).any(|i| self.x[(i, j)] != 1.0) {
            return Err(Error::Data(format!(
                "column '{name}' is not identically 1 and cannot serve as intercept"
            )));
        }
        self.has_intercept_column = true;
        Ok(())
    }

    /// Index of the explicit intercept column, when marked.
    pub fn intercept_column(&self) -> Option<usize> {
        if !self.has_intercept_column {
            return None;
        }
        (0..self.p()).find(|&j| (0..self.n()).all(|i| self.x[(i, j)] == 1.0))
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Row-subset copy (indices may repeat, e.g. bootstrap resamples).
    pub fn subset(&self, rows: &[usize]) -> Self {
        let y = DVector::from_fn(rows.len(), |i, _| self.y[rows[i]]);
        let x = DMatrix::from_fn(rows.len(), self.p(), |i, j| self.x[(rows[i], j)]);
        Self {
            y,
            x,
            column_names: self.column_names.clone(),
            has_intercept_column: self.has_intercept_column,
        }
    }

    /// All rows except `leave_out`.
    pub fn without_row(&self, leave_out: usize) -> Self {
        let rows: Vec<usize> = (0..self.n()).filter(|&i| i != leave_out).collect();
        self.subset(&rows)
    }
}

/// Reads a UTF-8 CSV with a header row; the named response column becomes
/// `y` and the remaining columns become `x` in header order.
pub fn read_csv(path: &Path, response_column: &str) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    read_csv_str(&text, response_column)
}

/// Same as [`read_csv`] for in-memory text.
pub fn read_csv_str(text: &str, response_column: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Data(format!("bad header row: {e}")))?
        .iter()
        .map(|s| s.to_string())
        .collect();
    if headers.is_empty() {
        return Err(Error::Data("empty file".into()));
    }
    let response_idx = headers
        .iter()
        .position(|h| h == response_column)
        .ok_or_else(|| Error::Data(format!("response column '{response_column}' not found")))?;

    let mut y = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (rec_no, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("row {}: {e}", rec_no + 2)))?;
        if record.len() != headers.len() {
            return Err(Error::Data(format!(
                "row {} has {} cells, expected {}",
                rec_no + 2,
                record.len(),
                headers.len()
            )));
        }
        let mut row = Vec::with_capacity(headers.len() - 1);
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| {
                Error::Data(format!(
                    "non-numeric cell '{cell}' at row {}, column '{}'",
                    rec_no + 2,
                    headers[col]
                ))
            })?;
            if !value.is_finite() {
                return Err(Error::Data(format!(
                    "non-finite cell '{cell}' at row {}, column '{}'",
                    rec_no + 2,
                    headers[col]
                )));
            }
            if col == response_idx {
                y.push(value);
            } else {
                row.push(value);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Data("no data rows".into()));
    }
    let n = rows.len();
    let p = headers.len() - 1;
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let column_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != response_idx)
        .map(|(_, h)| h.clone())
        .collect();
    Dataset::new(DVector::from_vec(y), x, column_names)
}

/// Writes a dataset back to CSV (used by the scenario generator).
pub fn write_csv(path: &Path, data: &Dataset, response_name: &str) -> Result<()> {
    let mut out = String::new();
    out.push_str(response_name);
    for name in &data.column_names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..data.n() {
        out.push_str(&format!("{}", data.y[i]));
        for j in 0..data.p() {
            out.push_str(&format!(",{}", data.x[(i, j)]));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn read_small_csv() {
        let text = "y,a,b\n1,2,3\n4,5,6\n7,8,9\n";
        let d = read_csv_str(text, "y").unwrap();
        assert_eq!(d.n(), 3);
        assert_eq!(d.p(), 2);
        assert_eq!(d.column_names, vec!["a", "b"]);
        assert_eq!(d.y[1], 4.0);
        assert_eq!(d.x[(2, 1)], 9.0);
    }

    #[test]
    fn missing_response_named() {
        let err = read_csv_str("y,a\n1,2\n", "target").unwrap_err();
        assert!(err.to_string().contains("target"));
    }

    #[test]
    fn nan_cell_rejected_with_location() {
        let err = read_csv_str("y,a\n1,NaN\n", "y").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2") && msg.contains("'a'"), "{msg}");
    }

    #[test]
    fn non_numeric_cell_located() {
        let err = read_csv_str("y,a,b\n1,2,3\n4,oops,6\n", "y").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("oops") && msg.contains("row 3"), "{msg}");
    }

    #[test]
    fn empty_file_rejected() {
        assert!(read_csv_str("", "y").is_err());
        assert!(read_csv_str("y,a\n", "y").is_err());
    }

    #[test]
    fn duplicate_columns_rejected() {
        let err = read_csv_str("y,a,a\n1,2,3\n", "y").unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn intercept_column_marking() {
        let text = "y,const,a\n1,1,2\n2,1,3\n";
        let mut d = read_csv_str(text, "y").unwrap();
        d.mark_intercept_column("const").unwrap();
        assert_eq!(d.intercept_column(), Some(0));
        let mut d2 = read_csv_str("y,c,a\n1,1,2\n2,0,3\n", "y").unwrap();
        assert!(d2.mark_intercept_column("c").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let text = "y,a,b\n1.5,2,3\n4,5.25,6\n";
        let d = read_csv_str(text, "y").unwrap();
        let dir = std::env::temp_dir().join("classo_data_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rt.csv");
        write_csv(&path, &d, "y").unwrap();
        let d2 = read_csv(&path, "y").unwrap();
        assert_eq!(d, d2);
    }
}
