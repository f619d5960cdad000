//! Delimited text matrices with one header row and one header column.
//!
//! ```text
//! intermediate_use,AG@AFG,FI@AFG,...
//! AG@AFG,1.2500000000000000e1,0.0000000000000000e0,...
//! ```
//!
//! Values are written with 17 significant digits, which reproduces every
//! finite `f64` exactly when read back.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

pub const DELIMITER: u8 = b',';

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledMatrix {
    pub corner: String,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub data: Array2<f64>,
}

impl LabeledMatrix {
    /// Fails unless the labels equal the expected ones, in order.
    pub fn expect_labels(&self, path: &Path, rows: &[String], cols: &[String]) -> Result<()> {
        let found = self.data.dim();
        if found != (rows.len(), cols.len()) {
            return Err(Error::Shape {
                array: path.display().to_string(),
                expected: (rows.len(), cols.len()),
                found,
            });
        }
        if let Some(i) = (0..rows.len()).find(|&i| self.row_labels[i] != rows[i]) {
            return Err(Error::Parse {
                path: path.into(),
                line: i + 2,
                msg: format!("row label {:?}, expected {:?}", self.row_labels[i], rows[i]),
            });
        }
        if let Some(j) = (0..cols.len()).find(|&j| self.col_labels[j] != cols[j]) {
            return Err(Error::Parse {
                path: path.into(),
                line: 1,
                msg: format!(
                    "column label {:?}, expected {:?}",
                    self.col_labels[j], cols[j]
                ),
            });
        }
        Ok(())
    }
}

pub fn write_matrix(
    path: &Path,
    corner: &str,
    row_labels: &[String],
    col_labels: &[String],
    data: ArrayView2<f64>,
) -> Result<()> {
    assert_eq!(data.dim(), (row_labels.len(), col_labels.len()));
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut wtr = csv::WriterBuilder::new()
        .delimiter(DELIMITER)
        .from_writer(BufWriter::new(file));
    let mut header = Vec::with_capacity(col_labels.len() + 1);
    header.push(corner);
    header.extend(col_labels.iter().map(String::as_str));
    wtr.write_record(&header)?;
    let mut record: Vec<String> = Vec::with_capacity(col_labels.len() + 1);
    for (label, row) in row_labels.iter().zip(data.rows()) {
        record.clear();
        record.push(label.clone());
        record.extend(row.iter().map(|&v| format_value(v)));
        wtr.write_record(&record)?;
    }
    let mut inner = wtr
        .into_inner()
        .map_err(|e| Error::io(path.display().to_string(), e.into_error()))?;
    inner
        .flush()
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_matrix(path: &Path) -> Result<LabeledMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(DELIMITER)
        .has_headers(true)
        .flexible(true)
        .from_reader(BufReader::new(file));
    let header = rdr.headers()?.clone();
    if header.is_empty() {
        return Err(Error::Parse {
            path: path.into(),
            line: 1,
            msg: "empty header".into(),
        });
    }
    let corner = header[0].to_string();
    let col_labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let ncols = col_labels.len();

    let mut row_labels = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != ncols + 1 {
            return Err(Error::Parse {
                path: path.into(),
                line,
                msg: format!("expected {} fields, found {}", ncols + 1, rec.len()),
            });
        }
        row_labels.push(rec[0].to_string());
        for (j, field) in rec.iter().skip(1).enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                path: path.into(),
                line,
                msg: format!("column {}: cannot parse {field:?} as a number", j + 2),
            })?;
            values.push(v);
        }
    }
    let data = Array2::from_shape_vec((row_labels.len(), ncols), values)
        .expect("row lengths checked above");
    Ok(LabeledMatrix {
        corner,
        row_labels,
        col_labels,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_value(0.1), "1.0000000000000001e-1");
        assert_eq!(format_value(0.0), "0.0000000000000000e0");
        assert_eq!(format_value(-2.5), "-2.5000000000000000e0");
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let data = array![
            [0.1, 1.0 / 3.0],
            [f64::MAX, 5e-324],
            [-0.0, 123456789.123456789]
        ];
        let rows = vec!["a".to_string(), "b,c".to_string(), "d".to_string()];
        let cols = vec!["x".to_string(), "y".to_string()];
        write_matrix(&path, "corner", &rows, &cols, data.view()).unwrap();
        let m = read_matrix(&path).unwrap();
        assert_eq!(m.corner, "corner");
        assert_eq!(m.row_labels, rows);
        assert_eq!(m.col_labels, cols);
        for (a, b) in m.data.iter().zip(data.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        m.expect_labels(&path, &rows, &cols).unwrap();
        assert!(m.expect_labels(&path, &cols, &rows).is_err());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "c,x,y\na,1,2\nb,3,oops\n").unwrap();
        match read_matrix(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        std::fs::write(&path, "c,x,y\na,1\n").unwrap();
        assert!(matches!(
            read_matrix(&path),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn non_finite_values_parse_for_later_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nan.csv");
        std::fs::write(&path, "c,x\na,NaN\nb,inf\n").unwrap();
        let m = read_matrix(&path).unwrap();
        assert!(m.data[[0, 0]].is_nan());
        assert!(m.data[[1, 0]].is_infinite());
    }
}
