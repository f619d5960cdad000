//! Direct energy consumption totals from the satellite account.

use ndarray::Axis;
use serde::Serialize;

use crate::centrality::ranking::{rank, RankingTable};
use crate::model::MrioDataset;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsumptionSummary {
    /// `Σ_ε c[i, ε]`, in sector order.
    pub sector_totals: Vec<f64>,
    /// `Σ_i c[i, ε]`, in economy order.
    pub economy_totals: Vec<f64>,
    pub sector_ranking: RankingTable,
    pub economy_ranking: RankingTable,
    /// For each sector (in sector order), the `top_k` economies by consumption.
    pub top_economies_per_sector: Vec<RankingTable>,
}

pub fn consumption_summary(d: &MrioDataset, top_k: usize) -> ConsumptionSummary {
    let c = &d.energy_satellite;
    let sector_totals = c.sum_axis(Axis(1)).to_vec();
    let economy_totals = c.sum_axis(Axis(0)).to_vec();
    let top_economies_per_sector = c
        .rows()
        .into_iter()
        .map(|row| rank(&d.economies, &row.to_vec(), top_k))
        .collect();
    ConsumptionSummary {
        sector_ranking: rank(&d.sectors, &sector_totals, d.sectors.len()),
        economy_ranking: rank(&d.economies, &economy_totals, d.economies.len()),
        sector_totals,
        economy_totals,
        top_economies_per_sector,
    }
}
