//! Ranking tables and Spearman rank correlation.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{EconomyId, SectorId};

/// Anything with a code and a display name.
pub trait Labeled {
    fn code(&self) -> &str;
    fn name(&self) -> &str;
}

impl Labeled for SectorId {
    fn code(&self) -> &str {
        &self.code
    }
    fn name(&self) -> &str {
        &self.name
    }
}

impl Labeled for EconomyId {
    fn code(&self) -> &str {
        &self.code
    }
    fn name(&self) -> &str {
        &self.name
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankedRow {
    pub rank: usize,
    pub code: String,
    pub name: String,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankingTable {
    pub rows: Vec<RankedRow>,
}

impl RankingTable {
    pub fn codes(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.code.as_str()).collect()
    }

    /// `rank,code,name,score` with scores at 3 decimals.
    pub fn to_csv(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(["rank", "code", "name", "score"])
            .expect("writing to memory");
        for r in &self.rows {
            wtr.write_record([
                r.rank.to_string(),
                r.code.clone(),
                r.name.clone(),
                format!("{:.3}", r.score),
            ])
            .expect("writing to memory");
        }
        String::from_utf8(wtr.into_inner().expect("writing to memory")).expect("utf-8 input")
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// Aligned plain-text rendering for terminals.
    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.code.len())
            .max()
            .unwrap_or(4)
            .max(4);
        let mut out = format!("{:>4}  {:<width$}  {:>7}  name\n", "rank", "code", "score");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>4}  {:<width$}  {:>7.3}  {}",
                r.rank, r.code, r.score, r.name
            );
        }
        out
    }
}

/// Sorts by descending score, ties by ascending code, and keeps the top `k`.
pub fn rank<T: Labeled>(items: &[T], scores: &[f64], k: usize) -> RankingTable {
    assert_eq!(items.len(), scores.len(), "one score per label");
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| items[a].code().cmp(items[b].code()))
    });
    RankingTable {
        rows: order
            .into_iter()
            .take(k)
            .enumerate()
            .map(|(pos, idx)| RankedRow {
                rank: pos + 1,
                code: items[idx].code().to_string(),
                name: items[idx].name().to_string(),
                score: scores[idx],
            })
            .collect(),
    }
}

/// Ranks starting at 1, ties receiving the mean of the positions they span.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        let mean = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = mean;
        }
        start = end;
    }
    ranks
}

/// Spearman correlation: Pearson correlation of the average ranks.
pub fn rank_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Parameter(format!(
            "rank correlation needs two vectors of equal length >= 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Parameter(
            "rank correlation of non-finite scores".into(),
        ));
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = a.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        let (dx, dy) = (x - mean, y - mean);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}
