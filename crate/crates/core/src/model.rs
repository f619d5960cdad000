//! Domain types for multi-region input-output datasets and the mapping
//! between (sector, economy) pairs and supradjacency indices.

use std::collections::HashSet;
use std::fmt;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectorId {
    pub index: usize,
    pub code: String,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EconomyId {
    pub index: usize,
    pub code: String,
    pub name: String,
}

/// Zero-based position in the supradjacency matrix: `n_sectors * economy + sector`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlatIndex(pub(crate) usize);

impl FlatIndex {
    pub fn value(self) -> usize {
        self.0
    }
}

impl fmt::Display for FlatIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Number of sectors (nodes per layer) and economies (layers).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n_sectors: usize,
    pub n_economies: usize,
}

impl Dims {
    pub fn new(n_sectors: usize, n_economies: usize) -> Self {
        Dims {
            n_sectors,
            n_economies,
        }
    }

    /// Order of the supradjacency matrix.
    pub fn size(self) -> usize {
        self.n_sectors * self.n_economies
    }

    pub fn flatten(self, sector: usize, economy: usize) -> Result<FlatIndex> {
        if sector >= self.n_sectors {
            return Err(Error::OutOfRange {
                what: "sector",
                index: sector,
                limit: self.n_sectors,
            });
        }
        if economy >= self.n_economies {
            return Err(Error::OutOfRange {
                what: "economy",
                index: economy,
                limit: self.n_economies,
            });
        }
        Ok(FlatIndex(self.n_sectors * economy + sector))
    }

    /// Inverse of [`Dims::flatten`]; returns `(sector, economy)`.
    pub fn unflatten(self, h: FlatIndex) -> Result<(usize, usize)> {
        self.unflatten_raw(h.0)
    }

    pub fn unflatten_raw(self, h: usize) -> Result<(usize, usize)> {
        if h >= self.size() {
            return Err(Error::OutOfRange {
                what: "flat",
                index: h,
                limit: self.size(),
            });
        }
        Ok((h % self.n_sectors, h / self.n_sectors))
    }

    pub fn flat_index(self, h: usize) -> Result<FlatIndex> {
        if h >= self.size() {
            return Err(Error::OutOfRange {
                what: "flat",
                index: h,
                limit: self.size(),
            });
        }
        Ok(FlatIndex(h))
    }
}

/// Single-economy form of the index mapping, checked only against the sector count.
pub fn flatten(sector: usize, economy: usize, n_sectors: usize) -> Result<FlatIndex> {
    if sector >= n_sectors {
        return Err(Error::OutOfRange {
            what: "sector",
            index: sector,
            limit: n_sectors,
        });
    }
    Ok(FlatIndex(n_sectors * economy + sector))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergySemantics {
    /// Energy per monetary unit of output.
    Intensity,
    /// Total energy use of the sector.
    #[default]
    Total,
}

impl fmt::Display for EnergySemantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergySemantics::Intensity => f.write_str("intensity"),
            EnergySemantics::Total => f.write_str("total"),
        }
    }
}

/// Descriptive metadata carried along with a dataset. Recorded, never used to
/// convert values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub year: i32,
    pub currency: String,
    pub energy_unit: String,
    pub energy_semantics: EnergySemantics,
}

impl Default for DatasetInfo {
    fn default() -> Self {
        DatasetInfo {
            year: 0,
            currency: "USD".into(),
            energy_unit: "TJ".into(),
            energy_semantics: EnergySemantics::Total,
        }
    }
}

/// A multi-region input-output table with an energy satellite account.
///
/// Row/column `h` of `intermediate_use`, entry `h` of `total_output` and row
/// `h` of `final_demand` refer to the (sector, economy) pair
/// `dims().unflatten_raw(h)`. `energy_satellite` is sectors × economies.
///
/// Fields are public so that inconsistent datasets can be represented and
/// reported on by [`validate_dataset`].
#[derive(Clone, Debug, PartialEq)]
pub struct MrioDataset {
    pub sectors: Vec<SectorId>,
    pub economies: Vec<EconomyId>,
    pub intermediate_use: Array2<f64>,
    pub total_output: Array1<f64>,
    pub final_demand: Array2<f64>,
    pub energy_satellite: Array2<f64>,
    pub info: DatasetInfo,
}

impl MrioDataset {
    pub fn dims(&self) -> Dims {
        Dims::new(self.sectors.len(), self.economies.len())
    }

    /// `SECTOR@ECONOMY` label of flat index `h`.
    pub fn flat_label(&self, h: usize) -> String {
        flat_label(&self.sectors, &self.economies, h)
    }

    pub fn flat_labels(&self) -> Vec<String> {
        (0..self.dims().size())
            .map(|h| self.flat_label(h))
            .collect()
    }

    pub fn sector_by_code(&self, code: &str) -> Option<&SectorId> {
        self.sectors.iter().find(|s| s.code == code)
    }

    pub fn economy_by_code(&self, code: &str) -> Option<&EconomyId> {
        self.economies.iter().find(|e| e.code == code)
    }
}

pub fn flat_label(sectors: &[SectorId], economies: &[EconomyId], h: usize) -> String {
    let n = sectors.len();
    format!("{}@{}", sectors[h % n].code, economies[h / n].code)
}

/// Builds label lists with codes `S1..` / `E1..` and matching names.
pub fn numbered_labels(n_sectors: usize, n_economies: usize) -> (Vec<SectorId>, Vec<EconomyId>) {
    let sectors = (0..n_sectors)
        .map(|i| SectorId {
            index: i,
            code: format!("S{}", i + 1),
            name: format!("Sector {}", i + 1),
        })
        .collect();
    let economies = (0..n_economies)
        .map(|a| EconomyId {
            index: a,
            code: format!("E{}", a + 1),
            name: format!("Economy {}", a + 1),
        })
        .collect();
    (sectors, economies)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Fatal,
    Warning,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    DimensionMismatch,
    LabelMismatch,
    NonFinite,
    Negative,
    ZeroOutputColumn,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub kind: FindingKind,
    pub array: String,
    pub count: usize,
    /// First few offending positions, 1-based with labels where available.
    pub locations: Vec<String>,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_accepted(&self) -> bool {
        !self.findings.iter().any(|f| f.severity == Severity::Fatal)
    }

    pub fn fatal(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Fatal)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Warning)
    }

    /// `Err(InvalidDataset)` summarising the fatal findings, if any.
    pub fn into_result(self) -> Result<Self> {
        if self.is_accepted() {
            Ok(self)
        } else {
            let msg = self
                .fatal()
                .map(|f| f.message.clone())
                .collect::<Vec<_>>()
                .join("; ");
            Err(Error::InvalidDataset(msg))
        }
    }
}

const MAX_LOCATIONS: usize = 10;

/// Structural checks on a dataset. Pure: the same input always yields the
/// same report.
pub fn validate_dataset(d: &MrioDataset) -> ValidationReport {
    let mut findings = Vec::new();
    let dims = d.dims();
    let nl = dims.size();

    check_labels(d, &mut findings);

    let shapes: [(&str, (usize, usize), (usize, usize)); 4] = [
        ("intermediate_use", d.intermediate_use.dim(), (nl, nl)),
        ("total_output", (d.total_output.len(), 1), (nl, 1)),
        ("final_demand", d.final_demand.dim(), (nl, dims.n_economies)),
        (
            "energy_satellite",
            d.energy_satellite.dim(),
            (dims.n_sectors, dims.n_economies),
        ),
    ];
    let mut shapes_ok = true;
    for (array, found, expected) in shapes {
        if found != expected {
            shapes_ok = false;
            findings.push(Finding {
                severity: Severity::Fatal,
                kind: FindingKind::DimensionMismatch,
                array: array.into(),
                count: 1,
                locations: vec![],
                message: format!("{array} has shape {found:?}, expected {expected:?}"),
            });
        }
    }

    let label = |array: &str, r: usize, c: usize| -> String {
        if !shapes_ok || dims.n_sectors == 0 {
            return format!("({}, {})", r + 1, c + 1);
        }
        match array {
            "intermediate_use" => format!("({}, {})", d.flat_label(r), d.flat_label(c)),
            "total_output" => d.flat_label(r),
            "final_demand" => format!("({}, {})", d.flat_label(r), d.economies[c].code),
            _ => format!("({}, {})", d.sectors[r].code, d.economies[c].code),
        }
    };

    let mut scan = |array: &str, rows: usize, cols: usize, get: &dyn Fn(usize, usize) -> f64| {
        let mut non_finite = Vec::new();
        let mut n_non_finite = 0;
        let mut negative = Vec::new();
        let mut n_negative = 0;
        for r in 0..rows {
            for c in 0..cols {
                let v = get(r, c);
                if !v.is_finite() {
                    n_non_finite += 1;
                    if non_finite.len() < MAX_LOCATIONS {
                        non_finite.push(label(array, r, c));
                    }
                } else if v < 0.0 {
                    n_negative += 1;
                    if negative.len() < MAX_LOCATIONS {
                        negative.push(label(array, r, c));
                    }
                }
            }
        }
        if n_non_finite > 0 {
            findings.push(Finding {
                severity: Severity::Fatal,
                kind: FindingKind::NonFinite,
                array: array.into(),
                count: n_non_finite,
                locations: non_finite,
                message: format!("{array} has {n_non_finite} non-finite entries"),
            });
        }
        if n_negative > 0 {
            findings.push(Finding {
                severity: Severity::Fatal,
                kind: FindingKind::Negative,
                array: array.into(),
                count: n_negative,
                locations: negative,
                message: format!("{array} has {n_negative} negative entries"),
            });
        }
    };

    let u = &d.intermediate_use;
    scan("intermediate_use", u.nrows(), u.ncols(), &|r, c| u[[r, c]]);
    let o = &d.total_output;
    scan("total_output", o.len(), 1, &|r, _| o[r]);
    let f = &d.final_demand;
    scan("final_demand", f.nrows(), f.ncols(), &|r, c| f[[r, c]]);
    let e = &d.energy_satellite;
    scan("energy_satellite", e.nrows(), e.ncols(), &|r, c| e[[r, c]]);

    if shapes_ok {
        let zero: Vec<usize> = (0..nl).filter(|&k| d.total_output[k] == 0.0).collect();
        if !zero.is_empty() {
            findings.push(Finding {
                severity: Severity::Warning,
                kind: FindingKind::ZeroOutputColumn,
                array: "total_output".into(),
                count: zero.len(),
                locations: zero
                    .iter()
                    .take(MAX_LOCATIONS)
                    .map(|&k| format!("{} ({})", d.flat_label(k), k + 1))
                    .collect(),
                message: format!(
                    "{} zero-output column(s); their coefficients are set to zero",
                    zero.len()
                ),
            });
        }
    }

    ValidationReport { findings }
}

fn check_labels(d: &MrioDataset, findings: &mut Vec<Finding>) {
    fn check<'a>(
        array: &str,
        items: impl Iterator<Item = (usize, usize, &'a str)>,
        findings: &mut Vec<Finding>,
    ) {
        let mut seen = HashSet::new();
        let mut bad = Vec::new();
        for (pos, index, code) in items {
            if index != pos {
                bad.push(format!("position {} has index {}", pos + 1, index + 1));
            }
            if code.is_empty() {
                bad.push(format!("position {} has an empty code", pos + 1));
            } else if !seen.insert(code.to_string()) {
                bad.push(format!("duplicate code {code}"));
            }
        }
        if !bad.is_empty() {
            findings.push(Finding {
                severity: Severity::Fatal,
                kind: FindingKind::LabelMismatch,
                array: array.into(),
                count: bad.len(),
                message: format!("{array}: {}", bad.join(", ")),
                locations: bad.into_iter().take(MAX_LOCATIONS).collect(),
            });
        }
    }
    check(
        "sectors",
        d.sectors
            .iter()
            .enumerate()
            .map(|(p, s)| (p, s.index, s.code.as_str())),
        findings,
    );
    check(
        "economies",
        d.economies
            .iter()
            .enumerate()
            .map(|(p, e)| (p, e.index, e.code.as_str())),
        findings,
    );
}
