//! Embodied energy flows and the supradjacency matrix `W`.
//!
//! The flow from sector `i` of economy `α` to sector `j` of economy `β` is
//!
//! ```text
//! q[i, j, α, β] = (Σ_ε c[i, ε] · l[(i, ε), (j, α)]) · f[(j, α), β]
//! ```
//!
//! and becomes entry `w[(i, α), (j, β)]` when positive. The bracketed sum is
//! the embodied intensity `m[i, (j, α)]`, computed once for all pairs.

use std::path::Path;

use log::{debug, warn};
use ndarray::{s, Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::format::{read_matrix, write_matrix};
use crate::leontief::{InverseRepr, LeontiefSystem};
use crate::matrix::SupraMatrix;
use crate::model::{flat_label, Dims, EconomyId, MrioDataset, SectorId};

const FLOWS_CORNER: &str = "flows";

#[derive(Clone, Debug, PartialEq)]
pub struct SupraNetwork {
    pub w: SupraMatrix,
    pub sectors: Vec<SectorId>,
    pub economies: Vec<EconomyId>,
    pub total_flow: f64,
    /// Strictly negative flows replaced by zero during construction.
    pub clamped_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub total_flow: f64,
    pub nnz: usize,
    pub density: f64,
    pub sparse: bool,
    pub clamped_count: usize,
}

impl SupraNetwork {
    /// Wraps an existing matrix, rejecting negative or non-finite entries.
    pub fn new(w: Array2<f64>, sectors: Vec<SectorId>, economies: Vec<EconomyId>) -> Result<Self> {
        let n = sectors.len() * economies.len();
        if w.dim() != (n, n) {
            return Err(Error::Shape {
                array: "W".into(),
                expected: (n, n),
                found: w.dim(),
            });
        }
        if let Some(((r, c), v)) = w.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                array: "W".into(),
                location: format!(
                    "{} -> {} ({v})",
                    flat_label(&sectors, &economies, r),
                    flat_label(&sectors, &economies, c)
                ),
            });
        }
        let negative = w.iter().filter(|&&v| v < 0.0).count();
        if negative > 0 {
            return Err(Error::NegativeEntries {
                array: "W".into(),
                count: negative,
            });
        }
        let w = SupraMatrix::from_dense_auto(w);
        let total_flow = w.sum();
        Ok(SupraNetwork {
            w,
            sectors,
            economies,
            total_flow,
            clamped_count: 0,
        })
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.sectors.len(), self.economies.len())
    }

    pub fn flat_labels(&self) -> Vec<String> {
        (0..self.dims().size())
            .map(|h| flat_label(&self.sectors, &self.economies, h))
            .collect()
    }

    pub fn summary(&self) -> FlowSummary {
        FlowSummary {
            total_flow: self.total_flow,
            nnz: self.w.nnz(),
            density: self.w.density(),
            sparse: self.w.is_sparse(),
            clamped_count: self.clamped_count,
        }
    }

    pub fn economy_index(&self, code: &str) -> Result<usize> {
        self.economies
            .iter()
            .position(|e| e.code == code)
            .ok_or_else(|| Error::Parameter(format!("unknown economy code {code:?}")))
    }
}

fn check_shapes(d: &MrioDataset, ls: &LeontiefSystem) -> Result<Dims> {
    let dims = d.dims();
    let (n, l, nl) = (dims.n_sectors, dims.n_economies, dims.size());
    let checks = [
        ("leontief_inverse", (ls.dim(), ls.dim()), (nl, nl)),
        ("final_demand", d.final_demand.dim(), (nl, l)),
        ("energy_satellite", d.energy_satellite.dim(), (n, l)),
    ];
    for (array, found, expected) in checks {
        if found != expected {
            return Err(Error::Shape {
                array: array.into(),
                expected,
                found,
            });
        }
    }
    Ok(dims)
}

fn check_index(what: &'static str, index: usize, limit: usize) -> Result<()> {
    if index >= limit {
        return Err(Error::OutOfRange { what, index, limit });
    }
    Ok(())
}

/// `q` for one (source sector, target sector, source economy, target economy).
///
/// Solves a single Leontief column, so it is meant for spot checks rather
/// than for building the whole network.
pub fn embodied_flow(
    d: &MrioDataset,
    ls: &LeontiefSystem,
    i: usize,
    j: usize,
    alpha: usize,
    beta: usize,
) -> Result<f64> {
    let dims = check_shapes(d, ls)?;
    let (n, l) = (dims.n_sectors, dims.n_economies);
    check_index("sector", i, n)?;
    check_index("economy", beta, l)?;
    let k = dims.flatten(j, alpha)?;
    let col = ls.column(k)?;
    let intensity: f64 = (0..l)
        .map(|eps| d.energy_satellite[[i, eps]] * col[eps * n + i])
        .sum();
    Ok(intensity * d.final_demand[[k.value(), beta]])
}

/// `m[i, k] = Σ_ε c[i, ε] · l[(i, ε), k]`, an `N × (N·L)` array.
pub fn embodied_intensity(d: &MrioDataset, ls: &LeontiefSystem) -> Result<Array2<f64>> {
    let dims = check_shapes(d, ls)?;
    let (n, l, nl) = (dims.n_sectors, dims.n_economies, dims.size());
    let c = &d.energy_satellite;
    let mut m = Array2::<f64>::zeros((n, nl));
    match &ls.inverse {
        InverseRepr::Dense(linv) => {
            m.axis_iter_mut(Axis(0))
                .into_par_iter()
                .enumerate()
                .for_each(|(i, mut row)| {
                    for eps in 0..l {
                        let ci = c[[i, eps]];
                        if ci != 0.0 {
                            row.scaled_add(ci, &linv.row(eps * n + i));
                        }
                    }
                });
        }
        InverseRepr::Factored(lu) => {
            let cols: Vec<Vec<f64>> = (0..nl)
                .into_par_iter()
                .map(|k| {
                    let mut col = vec![0.0; nl];
                    lu.solve_unit_into(k, &mut col);
                    (0..n)
                        .map(|i| (0..l).map(|eps| c[[i, eps]] * col[eps * n + i]).sum())
                        .collect()
                })
                .collect();
            for (k, col) in cols.into_iter().enumerate() {
                m.column_mut(k).assign(&ndarray::Array1::from(col));
            }
        }
    }
    Ok(m)
}

/// Assembles `W` with `w[(i, α), (j, β)] = max(q[i, j, α, β], 0)`.
pub fn build_supranetwork(d: &MrioDataset, ls: &LeontiefSystem) -> Result<SupraNetwork> {
    let dims = check_shapes(d, ls)?;
    let (n, nl) = (dims.n_sectors, dims.size());
    let m = embodied_intensity(d, ls)?;
    let f = &d.final_demand;

    if let Some(((i, k), v)) = m.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite {
            array: "embodied intensity".into(),
            location: format!("{} -> {} ({v})", d.sectors[i].code, d.flat_label(k)),
        });
    }

    let mut w = Array2::<f64>::zeros((nl, nl));
    let clamped: usize = w
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .map(|(r, mut row)| {
            let (i, alpha) = (r % n, r / n);
            let mut negatives = 0;
            for (col, out) in row.iter_mut().enumerate() {
                let (j, beta) = (col % n, col / n);
                let k = alpha * n + j;
                let q = m[[i, k]] * f[[k, beta]];
                if q > 0.0 {
                    *out = q;
                } else if q < 0.0 {
                    negatives += 1;
                }
            }
            negatives
        })
        .sum();

    if let Some(((r, c), v)) = w.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite {
            array: "W".into(),
            location: format!("{} -> {} ({v})", d.flat_label(r), d.flat_label(c)),
        });
    }
    if clamped > 0 {
        warn!("{clamped} negative embodied flows set to zero");
    }
    let w = SupraMatrix::from_dense_auto(w);
    let total_flow = w.sum();
    debug!(
        "supranetwork: total flow {total_flow:.6e}, density {:.4}",
        w.density()
    );
    Ok(SupraNetwork {
        w,
        sectors: d.sectors.clone(),
        economies: d.economies.clone(),
        total_flow,
        clamped_count: clamped,
    })
}

/// The `N × N` block of flows from layer `alpha` to layer `beta`.
pub fn layer_block(sn: &SupraNetwork, alpha: usize, beta: usize) -> Result<Array2<f64>> {
    let dims = sn.dims();
    check_index("economy", alpha, dims.n_economies)?;
    check_index("economy", beta, dims.n_economies)?;
    let n = dims.n_sectors;
    Ok(sn.w.block(alpha * n, beta * n, n, n))
}

pub fn write_flows(sn: &SupraNetwork, path: &Path) -> Result<()> {
    let labels = sn.flat_labels();
    let dense = sn.w.to_dense();
    write_matrix(path, FLOWS_CORNER, &labels, &labels, dense.view())
}

/// Reads a flows file, recovering sector and economy codes from the
/// `SECTOR@ECONOMY` labels. Names default to the codes.
pub fn read_flows(path: &Path) -> Result<SupraNetwork> {
    let m = read_matrix(path)?;
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.into(),
        line,
        msg,
    };
    if m.row_labels != m.col_labels {
        return Err(parse_err(1, "row and column labels differ".into()));
    }
    let mut pairs = Vec::with_capacity(m.row_labels.len());
    for (h, label) in m.row_labels.iter().enumerate() {
        let (s, e) = label
            .rsplit_once('@')
            .ok_or_else(|| parse_err(h + 2, format!("label {label:?} is not SECTOR@ECONOMY")))?;
        pairs.push((s.to_string(), e.to_string()));
    }
    let n = pairs
        .iter()
        .position(|(_, e)| Some(e) != pairs.first().map(|p| &p.1))
        .unwrap_or(pairs.len());
    if n == 0 || pairs.len() % n != 0 {
        return Err(parse_err(1, "labels do not form full sector blocks".into()));
    }
    let sectors: Vec<SectorId> = pairs[..n]
        .iter()
        .enumerate()
        .map(|(index, (code, _))| SectorId {
            index,
            code: code.clone(),
            name: code.clone(),
        })
        .collect();
    let economies: Vec<EconomyId> = pairs
        .chunks(n)
        .enumerate()
        .map(|(index, chunk)| EconomyId {
            index,
            code: chunk[0].1.clone(),
            name: chunk[0].1.clone(),
        })
        .collect();
    for (h, (s, e)) in pairs.iter().enumerate() {
        if *s != sectors[h % n].code || *e != economies[h / n].code {
            return Err(parse_err(
                h + 2,
                format!("label {s}@{e} breaks the economy-major sector order"),
            ));
        }
    }
    SupraNetwork::new(m.data, sectors, economies)
}

/// Nonzero entries of an `N × N` block as `(source, target, weight)` rows.
pub fn write_edge_list(path: &Path, sectors: &[SectorId], block: &Array2<f64>) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(Error::Csv)?;
    wtr.write_record(["source_sector", "target_sector", "weight"])?;
    for ((i, j), &v) in block.indexed_iter() {
        if v != 0.0 {
            wtr.write_record([
                sectors[i].code.as_str(),
                sectors[j].code.as_str(),
                crate::ingest::format::format_value(v).as_str(),
            ])?;
        }
    }
    wtr.flush()
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Reassembles `W` from its `L × L` grid of blocks. Used to check the
/// partition identity.
pub fn assemble_blocks(blocks: &[Vec<Array2<f64>>], n: usize) -> Array2<f64> {
    let l = blocks.len();
    let mut w = Array2::zeros((n * l, n * l));
    for (a, row) in blocks.iter().enumerate() {
        for (b, block) in row.iter().enumerate() {
            w.slice_mut(s![a * n..(a + 1) * n, b * n..(b + 1) * n])
                .assign(block);
        }
    }
    w
}
