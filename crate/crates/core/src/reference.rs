//! Reference labels for the 26-sector, 189-economy EORA classification.

use crate::model::{EconomyId, SectorId};

const SECTORS_CSV: &str = include_str!("../data/sectors.csv");
const ECONOMIES_CSV: &str = include_str!("../data/economies.csv");

fn parse(text: &str) -> Vec<(usize, String, String)> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.records()
        .map(|r| {
            let r = r.expect("embedded reference table is valid CSV");
            let index: usize = r[0].parse().expect("1-based index");
            (index - 1, r[1].to_string(), r[2].to_string())
        })
        .collect()
}

/// The 26 EORA sectors in table order.
pub fn sectors() -> Vec<SectorId> {
    parse(SECTORS_CSV)
        .into_iter()
        .map(|(index, code, name)| SectorId { index, code, name })
        .collect()
}

/// The 189 economies in table order.
pub fn economies() -> Vec<EconomyId> {
    parse(ECONOMIES_CSV)
        .into_iter()
        .map(|(index, code, name)| EconomyId { index, code, name })
        .collect()
}
