//! Canonical on-disk dataset format.
//!
//! A dataset directory holds a TOML manifest plus one delimited text file
//! per array (see [`format`]) and two label files (`index,code,name`, with
//! 1-based indices). Flat axes are labelled `SECTOR@ECONOMY`.

pub mod eora;
pub mod format;
pub mod synth;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    validate_dataset, DatasetInfo, EconomyId, EnergySemantics, MrioDataset, SectorId,
    ValidationReport,
};

pub use format::{read_matrix, write_matrix, LabeledMatrix};
pub use synth::synth_dataset;

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestFiles {
    pub sectors: PathBuf,
    pub economies: PathBuf,
    pub intermediate_use: PathBuf,
    pub total_output: PathBuf,
    pub final_demand: PathBuf,
    pub energy_satellite: PathBuf,
}

impl Default for ManifestFiles {
    fn default() -> Self {
        ManifestFiles {
            sectors: "sectors.csv".into(),
            economies: "economies.csv".into(),
            intermediate_use: "intermediate_use.csv".into(),
            total_output: "total_output.csv".into(),
            final_demand: "final_demand.csv".into(),
            energy_satellite: "energy_satellite.csv".into(),
        }
    }
}

fn default_clamp() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub n_sectors: usize,
    pub n_economies: usize,
    pub year: i32,
    pub currency: String,
    pub energy_unit: String,
    pub energy_semantics: EnergySemantics,
    #[serde(default = "default_clamp")]
    pub clamp_negatives: bool,
    #[serde(default)]
    pub files: ManifestFiles,
}

impl DatasetManifest {
    pub fn for_dataset(d: &MrioDataset) -> Self {
        DatasetManifest {
            n_sectors: d.sectors.len(),
            n_economies: d.economies.len(),
            year: d.info.year,
            currency: d.info.currency.clone(),
            energy_unit: d.info.energy_unit.clone(),
            energy_semantics: d.info.energy_semantics,
            clamp_negatives: true,
            files: ManifestFiles::default(),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        toml::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Manifest(e.to_string()))?;
        fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn info(&self) -> DatasetInfo {
        DatasetInfo {
            year: self.year,
            currency: self.currency.clone(),
            energy_unit: self.energy_unit.clone(),
            energy_semantics: self.energy_semantics,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    /// Negative entries replaced by zero, per array.
    pub clamped: BTreeMap<String, usize>,
    pub validation: ValidationReport,
}

impl LoadReport {
    pub fn clamped_total(&self) -> usize {
        self.clamped.values().sum()
    }
}

#[derive(Clone, Debug)]
pub struct LoadedDataset {
    pub dataset: MrioDataset,
    pub manifest: DatasetManifest,
    pub report: LoadReport,
}

/// Reads and validates the dataset described by a manifest.
///
/// Negative entries are zeroed and counted when the manifest enables
/// clamping and are an error otherwise. Non-finite values, shape or label
/// mismatches are always errors.
pub fn load_dataset(manifest_path: &Path) -> Result<LoadedDataset> {
    let manifest = DatasetManifest::read(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &Path| -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };
    let files = &manifest.files;

    let sectors: Vec<SectorId> = read_labels(&resolve(&files.sectors))?
        .into_iter()
        .map(|(index, code, name)| SectorId { index, code, name })
        .collect();
    let economies: Vec<EconomyId> = read_labels(&resolve(&files.economies))?
        .into_iter()
        .map(|(index, code, name)| EconomyId { index, code, name })
        .collect();
    if sectors.len() != manifest.n_sectors || economies.len() != manifest.n_economies {
        return Err(Error::Manifest(format!(
            "manifest declares {}x{} sectors x economies, label files have {}x{}",
            manifest.n_sectors,
            manifest.n_economies,
            sectors.len(),
            economies.len()
        )));
    }

    let flat: Vec<String> = (0..sectors.len() * economies.len())
        .map(|h| crate::model::flat_label(&sectors, &economies, h))
        .collect();
    let sector_codes: Vec<String> = sectors.iter().map(|s| s.code.clone()).collect();
    let economy_codes: Vec<String> = economies.iter().map(|e| e.code.clone()).collect();

    let u_path = resolve(&files.intermediate_use);
    let o_path = resolve(&files.total_output);
    let f_path = resolve(&files.final_demand);
    let c_path = resolve(&files.energy_satellite);
    let (u, (o, (f, c))) = rayon::join(
        || read_matrix(&u_path),
        || {
            rayon::join(
                || read_matrix(&o_path),
                || rayon::join(|| read_matrix(&f_path), || read_matrix(&c_path)),
            )
        },
    );
    let (u, o, f, c) = (u?, o?, f?, c?);
    u.expect_labels(&u_path, &flat, &flat)?;
    o.expect_labels(
        &o_path,
        &flat,
        &[o.col_labels.first().cloned().unwrap_or_default()],
    )?;
    f.expect_labels(&f_path, &flat, &economy_codes)?;
    c.expect_labels(&c_path, &sector_codes, &economy_codes)?;

    let mut arrays = [
        ("intermediate_use", u.data),
        ("total_output", o.data),
        ("final_demand", f.data),
        ("energy_satellite", c.data),
    ];

    for (name, a) in &arrays {
        if let Some(((r, col), _)) = a.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                array: (*name).into(),
                location: format!("row {}, column {}", r + 1, col + 1),
            });
        }
    }

    let mut report = LoadReport::default();
    for (name, a) in arrays.iter_mut() {
        let count = a.iter().filter(|&&v| v < 0.0).count();
        if count == 0 {
            continue;
        }
        if !manifest.clamp_negatives {
            return Err(Error::NegativeEntries {
                array: format!("{name} (clamp_negatives = false)"),
                count,
            });
        }
        a.mapv_inplace(|v| if v < 0.0 { 0.0 } else { v });
        warn!("{name}: clamped {count} negative entries to zero");
        report.clamped.insert((*name).into(), count);
    }

    let [(_, u), (_, o), (_, f), (_, c)] = arrays;
    let dataset = MrioDataset {
        sectors,
        economies,
        intermediate_use: u,
        total_output: o.index_axis_move(Axis(1), 0),
        final_demand: f,
        energy_satellite: c,
        info: manifest.info(),
    };
    report.validation = validate_dataset(&dataset).into_result()?;
    for w in report.validation.warnings() {
        warn!("{}", w.message);
    }
    info!(
        "loaded dataset: {} sectors x {} economies",
        dataset.sectors.len(),
        dataset.economies.len()
    );
    Ok(LoadedDataset {
        dataset,
        manifest,
        report,
    })
}

/// Writes the canonical files and a manifest into `dir`, creating it if needed.
pub fn write_dataset(d: &MrioDataset, dir: &Path) -> Result<DatasetManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let manifest = DatasetManifest::for_dataset(d);
    let files = &manifest.files;

    write_labels(
        &dir.join(&files.sectors),
        d.sectors.iter().map(|s| (s.code.as_str(), s.name.as_str())),
    )?;
    write_labels(
        &dir.join(&files.economies),
        d.economies
            .iter()
            .map(|e| (e.code.as_str(), e.name.as_str())),
    )?;

    let flat = d.flat_labels();
    let sector_codes: Vec<String> = d.sectors.iter().map(|s| s.code.clone()).collect();
    let economy_codes: Vec<String> = d.economies.iter().map(|e| e.code.clone()).collect();
    write_matrix(
        &dir.join(&files.intermediate_use),
        "intermediate_use",
        &flat,
        &flat,
        d.intermediate_use.view(),
    )?;
    let o: Array2<f64> = d.total_output.clone().insert_axis(Axis(1));
    write_matrix(
        &dir.join(&files.total_output),
        "flat",
        &flat,
        &["total_output".to_string()],
        o.view(),
    )?;
    write_matrix(
        &dir.join(&files.final_demand),
        "final_demand",
        &flat,
        &economy_codes,
        d.final_demand.view(),
    )?;
    write_matrix(
        &dir.join(&files.energy_satellite),
        "energy_satellite",
        &sector_codes,
        &economy_codes,
        d.energy_satellite.view(),
    )?;
    manifest.write(&dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

pub fn read_labels(path: &Path) -> Result<Vec<(usize, String, String)>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::io(path.display().to_string(), e.into_io()),
        _ => Error::Csv(e),
    })?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse_err = |msg: String| Error::Parse {
            path: path.into(),
            line: i + 2,
            msg,
        };
        if rec.len() < 2 {
            return Err(parse_err("expected index,code,name".into()));
        }
        let index: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad index {:?}", &rec[0])))?;
        if index != i + 1 {
            return Err(parse_err(format!("index {index}, expected {}", i + 1)));
        }
        let code = rec[1].trim().to_string();
        let name = rec
            .get(2)
            .map(|s| s.trim().to_string())
            .unwrap_or_else(|| code.clone());
        out.push((i, code, name));
    }
    Ok(out)
}

fn write_labels<'a>(path: &Path, items: impl Iterator<Item = (&'a str, &'a str)>) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::io(path.display().to_string(), e.into_io()),
        _ => Error::Csv(e),
    })?;
    wtr.write_record(["index", "code", "name"])?;
    for (i, (code, name)) in items.enumerate() {
        wtr.write_record([(i + 1).to_string().as_str(), code, name])?;
    }
    wtr.flush()
        .map_err(|e| Error::io(path.display().to_string(), e))
}

trait IntoIo {
    fn into_io(self) -> std::io::Error;
}

impl IntoIo for csv::Error {
    fn into_io(self) -> std::io::Error {
        match self.into_kind() {
            csv::ErrorKind::Io(e) => e,
            other => std::io::Error::other(format!("{other:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::numbered_labels;
    use ndarray::Array1;

    fn tiny() -> MrioDataset {
        let (sectors, economies) = numbered_labels(3, 2);
        MrioDataset {
            sectors,
            economies,
            intermediate_use: Array2::from_shape_fn((6, 6), |(r, c)| (r + 2 * c) as f64 / 7.0),
            total_output: Array1::from_elem(6, 40.0),
            final_demand: Array2::from_shape_fn((6, 2), |(r, c)| (r * c) as f64 + 0.1),
            energy_satellite: Array2::from_elem((3, 2), 0.3),
            info: DatasetInfo {
                year: 2016,
                ..DatasetInfo::default()
            },
        }
    }

    fn edit(dir: &Path, file: &str, from: &str, to: &str) {
        let p = dir.join(file);
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.contains(from), "{from} not in {file}");
        fs::write(&p, text.replacen(from, to, 1)).unwrap();
    }

    #[test]
    fn round_trip_preserves_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let d = tiny();
        let manifest = write_dataset(&d, dir.path()).unwrap();
        assert_eq!(manifest.n_sectors, 3);
        let loaded = load_dataset(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(loaded.dataset, d);
        assert_eq!(loaded.report.clamped_total(), 0);
        assert_eq!(loaded.manifest, manifest);
    }

    #[test]
    fn negative_entry_is_clamped_and_counted() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&tiny(), dir.path()).unwrap();
        edit(
            dir.path(),
            "intermediate_use.csv",
            "S1@E1,0.0000000000000000e0",
            "S1@E1,-1.0",
        );
        let loaded = load_dataset(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(loaded.dataset.intermediate_use[[0, 0]], 0.0);
        assert_eq!(loaded.report.clamped.get("intermediate_use"), Some(&1));
        assert_eq!(loaded.report.clamped_total(), 1);
    }

    #[test]
    fn negative_entry_without_clamping_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&tiny(), dir.path()).unwrap();
        edit(
            dir.path(),
            "intermediate_use.csv",
            "S1@E1,0.0000000000000000e0",
            "S1@E1,-1.0",
        );
        edit(
            dir.path(),
            MANIFEST_FILE,
            "clamp_negatives = true",
            "clamp_negatives = false",
        );
        assert!(matches!(
            load_dataset(&dir.path().join(MANIFEST_FILE)),
            Err(Error::NegativeEntries { count: 1, .. })
        ));
    }

    #[test]
    fn nan_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&tiny(), dir.path()).unwrap();
        edit(dir.path(), "energy_satellite.csv", "S2,", "S2,NaN,");
        // the edit adds one field; fix the shape by dropping the last value
        let p = dir.path().join("energy_satellite.csv");
        let text: Vec<String> = fs::read_to_string(&p)
            .unwrap()
            .lines()
            .map(|l| {
                if l.starts_with("S2,") {
                    l.rsplit_once(',').unwrap().0.to_string()
                } else {
                    l.to_string()
                }
            })
            .collect();
        fs::write(&p, text.join("\n")).unwrap();
        assert!(matches!(
            load_dataset(&dir.path().join(MANIFEST_FILE)),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn label_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&tiny(), dir.path()).unwrap();
        edit(dir.path(), "final_demand.csv", "S2@E1,", "S9@E1,");
        assert!(matches!(
            load_dataset(&dir.path().join(MANIFEST_FILE)),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn unwritable_target_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("not_a_dir");
        fs::write(&file, "x").unwrap();
        assert!(matches!(
            write_dataset(&tiny(), &file.join("sub")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn missing_manifest_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_dataset(&dir.path().join(MANIFEST_FILE)),
            Err(Error::Io { .. })
        ));
    }
}
