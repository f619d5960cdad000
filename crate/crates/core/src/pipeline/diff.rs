//! Comparison of two run directories.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FileDiff {
    pub file: String,
    /// Largest absolute difference between numeric cells.
    pub max_abs: f64,
    /// Non-numeric cells or bytes that differ.
    pub text_differences: usize,
    /// For ranking tables, `(rank, code in a, code in b)` where they differ.
    pub ranking_changes: Vec<(usize, String, String)>,
    pub shape_mismatch: Option<String>,
}

impl FileDiff {
    fn new(file: &str) -> Self {
        FileDiff {
            file: file.to_string(),
            max_abs: 0.0,
            text_differences: 0,
            ranking_changes: Vec::new(),
            shape_mismatch: None,
        }
    }

    pub fn is_identical(&self) -> bool {
        self.max_abs == 0.0
            && self.text_differences == 0
            && self.ranking_changes.is_empty()
            && self.shape_mismatch.is_none()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DiffReport {
    pub files: Vec<FileDiff>,
    pub only_in_a: Vec<String>,
    pub only_in_b: Vec<String>,
}

impl DiffReport {
    pub fn is_identical(&self) -> bool {
        self.only_in_a.is_empty()
            && self.only_in_b.is_empty()
            && self.files.iter().all(FileDiff::is_identical)
    }

    pub fn file(&self, name: &str) -> Option<&FileDiff> {
        self.files.iter().find(|f| f.file == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in &self.files {
            let _ = write!(out, "{}: max_abs {:e}", f.file, f.max_abs);
            if f.text_differences > 0 {
                let _ = write!(out, ", {} text differences", f.text_differences);
            }
            if let Some(m) = &f.shape_mismatch {
                let _ = write!(out, ", shape {m}");
            }
            out.push('\n');
            for (rank, a, b) in &f.ranking_changes {
                let _ = writeln!(out, "  rank {rank}: {a} -> {b}");
            }
        }
        for name in &self.only_in_a {
            let _ = writeln!(out, "{name}: missing in second run");
        }
        for name in &self.only_in_b {
            let _ = writeln!(out, "{name}: missing in first run");
        }
        out
    }
}

fn file_names(dir: &Path) -> Result<BTreeSet<String>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let mut names = BTreeSet::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir.display().to_string(), e))?;
        if entry.path().is_file() {
            names.insert(entry.file_name().to_string_lossy().into_owned());
        }
    }
    Ok(names)
}

fn compare_cells(a: &str, b: &str, diff: &mut FileDiff) {
    match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
        (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => {
            diff.max_abs = diff.max_abs.max((x - y).abs());
        }
        _ if a != b => diff.text_differences += 1,
        _ => {}
    }
}

fn read_table(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    rdr.records()
        .map(|r| Ok(r?.iter().map(str::to_string).collect()))
        .collect()
}

fn diff_csv(a: &Path, b: &Path, diff: &mut FileDiff) -> Result<()> {
    let (ta, tb) = (read_table(a)?, read_table(b)?);
    let shape = |t: &[Vec<String>]| (t.len(), t.first().map_or(0, Vec::len));
    if shape(&ta) != shape(&tb) {
        diff.shape_mismatch = Some(format!("{:?} vs {:?}", shape(&ta), shape(&tb)));
    }
    for (ra, rb) in ta.iter().zip(&tb) {
        for (ca, cb) in ra.iter().zip(rb) {
            compare_cells(ca, cb, diff);
        }
    }
    let header = ta.first().cloned().unwrap_or_default();
    let col = |name: &str| header.iter().position(|h| h == name);
    if let (Some(r), Some(c)) = (col("rank"), col("code")) {
        for (ra, rb) in ta.iter().zip(&tb).skip(1) {
            if ra.get(c) != rb.get(c) {
                let rank = ra.get(r).and_then(|s| s.parse().ok()).unwrap_or(0);
                diff.ranking_changes.push((
                    rank,
                    ra.get(c).cloned().unwrap_or_default(),
                    rb.get(c).cloned().unwrap_or_default(),
                ));
            }
        }
    }
    Ok(())
}

fn diff_json_values(a: &Value, b: &Value, diff: &mut FileDiff) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (
                x.as_f64().unwrap_or(f64::NAN),
                y.as_f64().unwrap_or(f64::NAN),
            );
            if x.is_finite() && y.is_finite() {
                diff.max_abs = diff.max_abs.max((x - y).abs());
            } else if x.to_bits() != y.to_bits() {
                diff.text_differences += 1;
            }
        }
        (Value::Array(xs), Value::Array(ys)) => {
            if xs.len() != ys.len() {
                diff.text_differences += 1;
            }
            for (x, y) in xs.iter().zip(ys) {
                diff_json_values(x, y, diff);
            }
        }
        (Value::Object(xs), Value::Object(ys)) => {
            for (k, x) in xs {
                match ys.get(k) {
                    Some(y) => diff_json_values(x, y, diff),
                    None => diff.text_differences += 1,
                }
            }
            diff.text_differences += ys.keys().filter(|k| !xs.contains_key(*k)).count();
        }
        (x, y) if x != y => diff.text_differences += 1,
        _ => {}
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Compares every file present in either directory. Missing files are
/// listed in the report rather than treated as errors.
pub fn diff_runs(a: &Path, b: &Path) -> Result<DiffReport> {
    let (names_a, names_b) = (file_names(a)?, file_names(b)?);
    let mut report = DiffReport {
        only_in_a: names_a.difference(&names_b).cloned().collect(),
        only_in_b: names_b.difference(&names_a).cloned().collect(),
        ..Default::default()
    };
    for name in names_a.intersection(&names_b) {
        let (pa, pb) = (a.join(name), b.join(name));
        let mut diff = FileDiff::new(name);
        if name.ends_with(".csv") {
            diff_csv(&pa, &pb, &mut diff)?;
        } else if name.ends_with(".json") {
            diff_json_values(&read_json(&pa)?, &read_json(&pb)?, &mut diff);
        } else {
            let read = |p: &Path| fs::read(p).map_err(|e| Error::io(p.display().to_string(), e));
            if read(&pa)? != read(&pb)? {
                diff.text_differences = 1;
            }
        }
        report.files.push(diff);
    }
    Ok(report)
}
