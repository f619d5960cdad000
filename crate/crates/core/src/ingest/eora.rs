//! Adapter from an EORA26 text export to the canonical dataset format.
//!
//! Expected input directory contents (names as distributed by EORA):
//!
//! * `*_T.txt`  – transaction matrix, tab separated, no headers;
//! * `*_FD.txt` – final demand, one column per (destination economy, category);
//! * `*_Q.txt`  – satellite accounts, one row per indicator;
//! * `labels_T.txt`, `labels_FD.txt`, `labels_Q.txt` – tab separated labels,
//!   `country name, country code, block, sector/category` for T and FD and
//!   the indicator description for Q.
//!
//! Mapping rules:
//!
//! * rows and columns whose country code is `ROW` (the statistical
//!   discrepancy account) are dropped;
//! * total output is `T·1 + FD·1`, taken over the full matrices before
//!   anything is dropped;
//! * the final-demand categories of each destination economy are summed
//!   into a single column (the six EORA categories are not kept apart);
//! * the energy satellite is the sum of the energy-use rows for coal,
//!   natural gas, petroleum, nuclear, biomass and waste, hydroelectric and
//!   the other renewables (geothermal, wind, solar, tide and wave). Rows
//!   labelled as totals are skipped. The result is stored as totals in TJ;
//! * with 26 sectors per economy the reference sector codes are used,
//!   otherwise codes are derived from the sector names.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{write_dataset, DatasetManifest};
use crate::model::{DatasetInfo, EconomyId, EnergySemantics, MrioDataset, SectorId};
use crate::reference;

const DISCREPANCY_CODE: &str = "ROW";

const ENERGY_CARRIERS: &[&str] = &[
    "coal",
    "natural gas",
    "petroleum",
    "nuclear",
    "biomass",
    "hydro",
    "geothermal",
    "wind",
    "solar",
    "tide",
    "wave",
];

#[derive(Clone, Debug, Serialize)]
pub struct EoraReport {
    pub year: Option<i32>,
    pub n_sectors: usize,
    pub n_economies: usize,
    pub dropped_rows: usize,
    pub final_demand_categories: Vec<String>,
    pub energy_rows: Vec<String>,
}

/// True for satellite rows that enter the energy account.
pub fn is_energy_row(label: &str) -> bool {
    let l = label.to_lowercase();
    if !l.contains("energy") || l.contains("total") {
        return false;
    }
    ENERGY_CARRIERS.iter().any(|c| l.contains(c))
}

struct Paths {
    t: PathBuf,
    fd: PathBuf,
    q: PathBuf,
    labels_t: PathBuf,
    labels_fd: PathBuf,
    labels_q: PathBuf,
}

fn locate(dir: &Path) -> Result<Paths> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let find = |suffix: &str| -> Result<PathBuf> {
        names
            .iter()
            .find(|n| n.ends_with(suffix) && !n.starts_with("labels_"))
            .map(|n| dir.join(n))
            .ok_or_else(|| Error::Manifest(format!("no *{suffix} file in {}", dir.display())))
    };
    let label = |name: &str| -> Result<PathBuf> {
        let p = dir.join(name);
        if p.exists() {
            Ok(p)
        } else {
            Err(Error::Manifest(format!("missing {}", p.display())))
        }
    };
    Ok(Paths {
        t: find("_T.txt")?,
        fd: find("_FD.txt")?,
        q: find("_Q.txt")?,
        labels_t: label("labels_T.txt")?,
        labels_fd: label("labels_FD.txt")?,
        labels_q: label("labels_Q.txt")?,
    })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn read_numeric(path: &Path) -> Result<Array2<f64>> {
    let text = read_text(path)?;
    let mut rows = 0;
    let mut cols = None;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for field in line.split(['\t', ' ', ',']).filter(|s| !s.is_empty()) {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                path: path.into(),
                line: i + 1,
                msg: format!("cannot parse {field:?}"),
            })?;
            values.push(v);
        }
        let n = values.len() - before;
        match cols {
            None => cols = Some(n),
            Some(c) if c != n => {
                return Err(Error::Parse {
                    path: path.into(),
                    line: i + 1,
                    msg: format!("expected {c} values, found {n}"),
                })
            }
            _ => {}
        }
        rows += 1;
    }
    Ok(Array2::from_shape_vec((rows, cols.unwrap_or(0)), values).expect("checked row lengths"))
}

/// `(country name, country code, last field)` per non-empty line.
fn read_block_labels(path: &Path) -> Result<Vec<(String, String, String)>> {
    let text = read_text(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let fields: Vec<&str> = l.split('\t').map(str::trim).collect();
            if fields.len() < 3 {
                return Err(Error::Parse {
                    path: path.into(),
                    line: i + 1,
                    msg: "expected tab-separated country name, code and item".into(),
                });
            }
            Ok((
                fields[0].to_string(),
                fields[1].to_string(),
                fields[fields.len() - 1].to_string(),
            ))
        })
        .collect()
}

fn derive_code(name: &str) -> String {
    let code: String = name
        .split(|c: char| !c.is_alphanumeric())
        .filter_map(|w| w.chars().next())
        .map(|c| c.to_ascii_uppercase())
        .collect();
    if code.is_empty() {
        "X".into()
    } else {
        code
    }
}

fn sector_ids(names: &[String]) -> Vec<SectorId> {
    if names.len() == 26 {
        return reference::sectors();
    }
    let mut out: Vec<SectorId> = Vec::new();
    for (index, name) in names.iter().enumerate() {
        let mut code = derive_code(name);
        if out.iter().any(|s| s.code == code) {
            code = format!("{code}{}", index + 1);
        }
        out.push(SectorId {
            index,
            code,
            name: name.clone(),
        });
    }
    out
}

fn year_from(path: &Path) -> Option<i32> {
    let name = path.file_name()?.to_string_lossy();
    name.split(|c: char| !c.is_ascii_digit())
        .filter(|s| s.len() == 4)
        .filter_map(|s| s.parse().ok())
        .find(|y| (1900..2200).contains(y))
}

/// Converts the EORA export in `input` into a canonical dataset in `output`.
pub fn adapt_eora(input: &Path, output: &Path) -> Result<(DatasetManifest, EoraReport)> {
    let paths = locate(input)?;
    let (dataset, report) = convert(&paths)?;
    let manifest = write_dataset(&dataset, output)?;
    info!(
        "adapted EORA export: {} sectors x {} economies, {} energy rows",
        report.n_sectors,
        report.n_economies,
        report.energy_rows.len()
    );
    Ok((manifest, report))
}

fn convert(paths: &Paths) -> Result<(MrioDataset, EoraReport)> {
    let labels_t = read_block_labels(&paths.labels_t)?;
    let labels_fd = read_block_labels(&paths.labels_fd)?;
    let labels_q: Vec<String> = read_text(&paths.labels_q)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split('\t').map(str::trim).collect::<Vec<_>>().join(" "))
        .collect();

    let t = read_numeric(&paths.t)?;
    let fd = read_numeric(&paths.fd)?;
    let q = read_numeric(&paths.q)?;
    let n_all = labels_t.len();
    let shape_err = |array: &str, expected: (usize, usize), found: (usize, usize)| Error::Shape {
        array: array.into(),
        expected,
        found,
    };
    if t.dim() != (n_all, n_all) {
        return Err(shape_err("T", (n_all, n_all), t.dim()));
    }
    if fd.dim() != (n_all, labels_fd.len()) {
        return Err(shape_err("FD", (n_all, labels_fd.len()), fd.dim()));
    }
    if q.dim() != (labels_q.len(), n_all) {
        return Err(shape_err("Q", (labels_q.len(), n_all), q.dim()));
    }

    // economy-major blocks of identical sector sequences
    let kept: Vec<usize> = (0..n_all)
        .filter(|&h| labels_t[h].1 != DISCREPANCY_CODE)
        .collect();
    let mut economies: Vec<EconomyId> = Vec::new();
    for &h in &kept {
        let (name, code, _) = &labels_t[h];
        if economies.last().map(|e| &e.code) != Some(code) {
            if economies.iter().any(|e| &e.code == code) {
                return Err(Error::Parse {
                    path: paths.labels_t.clone(),
                    line: h + 1,
                    msg: format!("economy {code} is not contiguous"),
                });
            }
            economies.push(EconomyId {
                index: economies.len(),
                code: code.clone(),
                name: name.clone(),
            });
        }
    }
    let n_economies = economies.len();
    if n_economies == 0 || !kept.len().is_multiple_of(n_economies) {
        return Err(Error::Parse {
            path: paths.labels_t.clone(),
            line: 1,
            msg: "economies do not share one sector list".into(),
        });
    }
    let n_sectors = kept.len() / n_economies;
    let sector_names: Vec<String> = kept[..n_sectors]
        .iter()
        .map(|&h| labels_t[h].2.clone())
        .collect();
    for (pos, &h) in kept.iter().enumerate() {
        if labels_t[h].2 != sector_names[pos % n_sectors]
            || labels_t[h].1 != economies[pos / n_sectors].code
        {
            return Err(Error::Parse {
                path: paths.labels_t.clone(),
                line: h + 1,
                msg: "sector blocks differ between economies".into(),
            });
        }
    }

    let output: Array1<f64> =
        Array1::from_iter(kept.iter().map(|&h| t.row(h).sum() + fd.row(h).sum()));

    let nl = kept.len();
    let mut u = Array2::zeros((nl, nl));
    for (r, &h) in kept.iter().enumerate() {
        for (c, &k) in kept.iter().enumerate() {
            u[[r, c]] = t[[h, k]];
        }
    }

    let mut categories: Vec<String> = Vec::new();
    let mut f = Array2::zeros((nl, n_economies));
    for (col, (_, code, category)) in labels_fd.iter().enumerate() {
        let Some(dest) = economies.iter().position(|e| &e.code == code) else {
            continue;
        };
        if !categories.contains(category) {
            categories.push(category.clone());
        }
        for (r, &h) in kept.iter().enumerate() {
            f[[r, dest]] += fd[[h, col]];
        }
    }

    let energy_rows: Vec<usize> = (0..labels_q.len())
        .filter(|&r| is_energy_row(&labels_q[r]))
        .collect();
    let mut c = Array2::zeros((n_sectors, n_economies));
    for (pos, &h) in kept.iter().enumerate() {
        let total: f64 = energy_rows.iter().map(|&r| q[[r, h]]).sum();
        c[[pos % n_sectors, pos / n_sectors]] = total;
    }

    let year = year_from(&paths.t);
    let dataset = MrioDataset {
        sectors: sector_ids(&sector_names),
        economies,
        intermediate_use: u,
        total_output: output,
        final_demand: f,
        energy_satellite: c,
        info: DatasetInfo {
            year: year.unwrap_or(0),
            currency: "kUSD".into(),
            energy_unit: "TJ".into(),
            energy_semantics: EnergySemantics::Total,
        },
    };
    let report = EoraReport {
        year,
        n_sectors,
        n_economies,
        dropped_rows: n_all - nl,
        final_demand_categories: categories,
        energy_rows: energy_rows.iter().map(|&r| labels_q[r].clone()).collect(),
    };
    Ok((dataset, report))
}
