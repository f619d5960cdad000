//! End-to-end runs: ingest, Leontief inverse, flows, strengths and
//! consumption, MD-HITS and ranking tables, written to one directory.
//!
//! Output files (all delimited text except the summary):
//!
//! | file | contents |
//! |---|---|
//! | `consumption_sectors.csv`, `consumption_economies.csv` | direct energy use, descending |
//! | `consumption_top_economies.csv` | top economies per sector |
//! | `strength_sectors.csv`, `strength_economies.csv` | in/out/total strength |
//! | `strength_sector_economy.csv` | strength of every sector in every economy |
//! | `scores_sectors.csv`, `scores_economies.csv` | MD-HITS scores at full precision |
//! | `ranking_{hub,authority,broadcasting,receiving}.csv` | top-k tables, 3 decimals |
//! | `monolayer_<CODE>.csv` | intra-layer edge list of one economy |
//! | `leontief_inverse.csv`, `flows.csv` | only with `write_matrices` |
//! | `summary.json` | residuals, iterations, spectral radius, correlations |
//!
//! A failed run leaves the files of completed stages in place and adds a
//! `FAILED` marker naming the stage. Wall times go to the log only, so two
//! runs with the same inputs produce identical directories.

pub mod config;
pub mod diff;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::Serialize;

use crate::centrality::{
    consumption_summary, mdhits, rank, rank_correlation, strengths, ConsumptionSummary, Gamma,
    MdHitsOptions, MdHitsScores, RankingTable, StrengthReport,
};
use crate::error::{Error, Result};
use crate::flows::{build_supranetwork, layer_block, write_edge_list, write_flows, FlowSummary};
use crate::ingest::format::{format_value, write_matrix};
use crate::ingest::load_dataset;
use crate::leontief::{build_coefficients, solve_leontief, SolveOptions};
use crate::model::{EconomyId, SectorId};

pub use config::{RunConfig, OUTPUT_ROOT_ENV};
pub use diff::{diff_runs, DiffReport, FileDiff};

pub const FAILED_MARKER: &str = "FAILED";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub manifest: String,
    pub n_sectors: usize,
    pub n_economies: usize,
    pub year: i32,
    pub energy_unit: String,
    pub energy_semantics: String,
    pub clamped_inputs: BTreeMap<String, usize>,
    pub zero_output_columns: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeontiefSummary {
    pub spectral_radius_estimate: f64,
    pub residual_norm: f64,
    pub tol: f64,
    pub dense_inverse: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MdHitsSummary {
    pub gamma: Gamma,
    pub tol: f64,
    pub max_iter: usize,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Spearman correlation between in- and out-strength; `None` when undefined.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationSummary {
    pub economy_in_out: Option<f64>,
    pub sector_in_out: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub dataset: DatasetSummary,
    pub leontief: LeontiefSummary,
    pub flows: FlowSummary,
    pub mdhits: MdHitsSummary,
    pub strength_rank_correlation: CorrelationSummary,
    pub files: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub output_dir: PathBuf,
    pub summary: RunSummary,
    pub sectors: Vec<SectorId>,
    pub economies: Vec<EconomyId>,
    pub consumption: ConsumptionSummary,
    pub strengths: StrengthReport,
    pub scores: MdHitsScores,
}

struct Run {
    dir: PathBuf,
    files: Vec<String>,
    completed: Vec<&'static str>,
}

impl Run {
    fn stage<T>(
        &mut self,
        name: &'static str,
        f: impl FnOnce(&mut Self) -> Result<T>,
    ) -> Result<T> {
        let start = Instant::now();
        match f(self) {
            Ok(v) => {
                info!("[{name}] done in {:.3}s", start.elapsed().as_secs_f64());
                self.completed.push(name);
                Ok(v)
            }
            Err(e) => {
                let msg = format!(
                    "stage: {name}\nerror: {e}\ncompleted: {}\n",
                    self.completed.join(", ")
                );
                if let Err(io) = fs::write(self.dir.join(FAILED_MARKER), msg) {
                    warn!("could not write failure marker: {io}");
                }
                Err(Error::Stage {
                    stage: name,
                    source: Box::new(e),
                })
            }
        }
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }
}

fn write_rows(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(header)?;
    for row in rows {
        wtr.write_record(&row)?;
    }
    wtr.flush()
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// A ranking with full-precision values, for plotting.
fn write_precise_ranking(path: &Path, table: &RankingTable, value: &str) -> Result<()> {
    write_rows(
        path,
        &["rank", "code", "name", value],
        table.rows.iter().map(|r| {
            vec![
                r.rank.to_string(),
                r.code.clone(),
                r.name.clone(),
                format_value(r.score),
            ]
        }),
    )
}

fn correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    match rank_correlation(a, b) {
        Ok(r) => Some(r),
        Err(e) => {
            warn!("strength rank correlation: {e}");
            None
        }
    }
}

pub fn run_pipeline(cfg: &RunConfig) -> Result<RunArtifacts> {
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::Stage {
        stage: "config",
        source: Box::new(Error::io(dir.display().to_string(), e)),
    })?;
    let marker = dir.join(FAILED_MARKER);
    if marker.exists() {
        fs::remove_file(&marker).map_err(|e| Error::io(marker.display().to_string(), e))?;
    }
    let mut run = Run {
        dir,
        files: Vec::new(),
        completed: Vec::new(),
    };

    run.stage("config", |_| cfg.validate())?;

    let loaded = run.stage("ingest", |_| {
        let loaded = load_dataset(&cfg.manifest)?;
        for code in &cfg.monolayer_economies {
            if loaded.dataset.economy_by_code(code).is_none() {
                return Err(Error::Config(format!(
                    "monolayer economy {code:?} is not in the dataset"
                )));
            }
        }
        Ok(loaded)
    })?;
    let d = &loaded.dataset;
    info!(
        "[ingest] {} sectors x {} economies",
        d.sectors.len(),
        d.economies.len()
    );

    let ls = run.stage("leontief", |run| {
        let opts = SolveOptions {
            tol: cfg.leontief_tol,
            ..Default::default()
        };
        let ls = solve_leontief(build_coefficients(d)?, &opts)?;
        info!(
            "[leontief] spectral radius {:.6}, residual {:.3e}",
            ls.spectral_radius_estimate, ls.residual_norm
        );
        if cfg.write_matrices {
            let labels = d.flat_labels();
            let path = run.path("leontief_inverse.csv");
            write_matrix(
                &path,
                "leontief_inverse",
                &labels,
                &labels,
                ls.to_dense_inverse().view(),
            )?;
        }
        Ok(ls)
    })?;

    let sn = run.stage("flows", |run| {
        let sn = build_supranetwork(d, &ls)?;
        info!(
            "[flows] total flow {:.6e}, density {:.4}, clamped {}",
            sn.total_flow,
            sn.w.density(),
            sn.clamped_count
        );
        if cfg.write_matrices {
            let path = run.path("flows.csv");
            write_flows(&sn, &path)?;
        }
        for code in &cfg.monolayer_economies {
            let alpha = sn.economy_index(code)?;
            let block = layer_block(&sn, alpha, alpha)?;
            let path = run.path(&format!("monolayer_{code}.csv"));
            write_edge_list(&path, &sn.sectors, &block)?;
        }
        Ok(sn)
    })?;

    let consumption = run.stage("consumption", |run| {
        let c = consumption_summary(d, cfg.top_k);
        let path = run.path("consumption_sectors.csv");
        write_precise_ranking(&path, &c.sector_ranking, "energy")?;
        let path = run.path("consumption_economies.csv");
        write_precise_ranking(&path, &c.economy_ranking, "energy")?;
        let path = run.path("consumption_top_economies.csv");
        write_rows(
            &path,
            &["sector", "rank", "code", "name", "energy"],
            d.sectors
                .iter()
                .zip(&c.top_economies_per_sector)
                .flat_map(|(s, table)| {
                    table.rows.iter().map(move |r| {
                        vec![
                            s.code.clone(),
                            r.rank.to_string(),
                            r.code.clone(),
                            r.name.clone(),
                            format_value(r.score),
                        ]
                    })
                }),
        )?;
        Ok(c)
    })?;

    let strength = run.stage("strength", |run| {
        let s = strengths(&sn);
        let names = write_strength_tables(&run.dir, &d.sectors, &d.economies, &s)?;
        run.files.extend(names);
        Ok(s)
    })?;

    let scores = run.stage("mdhits", |run| {
        let opts = MdHitsOptions {
            gamma: cfg.gamma,
            tol: cfg.mdhits_tol,
            max_iter: cfg.max_iter,
        };
        let scores = mdhits(&sn, &opts)?;
        info!(
            "[mdhits] {} iterations, residual {:.3e}, converged {}",
            scores.iterations, scores.residual, scores.converged
        );
        if !scores.converged {
            warn!(
                "MD-HITS stopped after {} iterations without converging",
                scores.iterations
            );
        }
        let names = write_score_tables(&run.dir, &d.sectors, &d.economies, &scores)?;
        run.files.extend(names);
        Ok(scores)
    })?;

    run.stage("report", |run| {
        let names = write_ranking_tables(&run.dir, &d.sectors, &d.economies, &scores, cfg.top_k)?;
        run.files.extend(names);
        Ok(())
    })?;

    let summary = run.stage("summary", |run| {
        let path = run.path(SUMMARY_FILE);
        let mut files = run.files.clone();
        files.sort();
        let summary = RunSummary {
            dataset: DatasetSummary {
                manifest: cfg.manifest.display().to_string(),
                n_sectors: d.sectors.len(),
                n_economies: d.economies.len(),
                year: d.info.year,
                energy_unit: d.info.energy_unit.clone(),
                energy_semantics: d.info.energy_semantics.to_string(),
                clamped_inputs: loaded.report.clamped.clone(),
                zero_output_columns: ls.coefficient.zero_output_columns.len(),
            },
            leontief: LeontiefSummary {
                spectral_radius_estimate: ls.spectral_radius_estimate,
                residual_norm: ls.residual_norm,
                tol: cfg.leontief_tol,
                dense_inverse: ls.dense_inverse().is_some(),
            },
            flows: sn.summary(),
            mdhits: MdHitsSummary {
                gamma: scores.gamma,
                tol: cfg.mdhits_tol,
                max_iter: cfg.max_iter,
                iterations: scores.iterations,
                residual: scores.residual,
                converged: scores.converged,
            },
            strength_rank_correlation: CorrelationSummary {
                economy_in_out: correlation(
                    strength.layer_in.as_slice().expect("contiguous"),
                    strength.layer_out.as_slice().expect("contiguous"),
                ),
                sector_in_out: correlation(
                    strength.node_in.as_slice().expect("contiguous"),
                    strength.node_out.as_slice().expect("contiguous"),
                ),
            },
            files,
        };
        let mut text = serde_json::to_string_pretty(&summary)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(summary)
    })?;

    Ok(RunArtifacts {
        output_dir: run.dir,
        summary,
        sectors: d.sectors.clone(),
        economies: d.economies.clone(),
        consumption,
        strengths: strength,
        scores,
    })
}

/// Writes the strength tables into `dir` and returns the file names.
pub fn write_strength_tables(
    dir: &Path,
    sectors: &[SectorId],
    economies: &[EconomyId],
    s: &StrengthReport,
) -> Result<Vec<String>> {
    let header = ["code", "name", "in", "out", "total"];
    write_rows(
        &dir.join("strength_sectors.csv"),
        &header,
        sectors.iter().enumerate().map(|(i, sec)| {
            vec![
                sec.code.clone(),
                sec.name.clone(),
                format_value(s.node_in[i]),
                format_value(s.node_out[i]),
                format_value(s.node_tot[i]),
            ]
        }),
    )?;
    write_rows(
        &dir.join("strength_economies.csv"),
        &header,
        economies.iter().enumerate().map(|(a, e)| {
            vec![
                e.code.clone(),
                e.name.clone(),
                format_value(s.layer_in[a]),
                format_value(s.layer_out[a]),
                format_value(s.layer_tot[a]),
            ]
        }),
    )?;
    write_rows(
        &dir.join("strength_sector_economy.csv"),
        &["sector", "economy", "in", "out", "total"],
        economies.iter().enumerate().flat_map(|(a, e)| {
            sectors.iter().enumerate().map(move |(i, sec)| {
                vec![
                    sec.code.clone(),
                    e.code.clone(),
                    format_value(s.node_layer_in[[i, a]]),
                    format_value(s.node_layer_out[[i, a]]),
                    format_value(s.node_layer_tot[[i, a]]),
                ]
            })
        }),
    )?;
    Ok(vec![
        "strength_sectors.csv".into(),
        "strength_economies.csv".into(),
        "strength_sector_economy.csv".into(),
    ])
}

/// Writes full-precision MD-HITS scores into `dir`.
pub fn write_score_tables(
    dir: &Path,
    sectors: &[SectorId],
    economies: &[EconomyId],
    scores: &MdHitsScores,
) -> Result<Vec<String>> {
    write_rows(
        &dir.join("scores_sectors.csv"),
        &["code", "name", "hub", "authority"],
        sectors.iter().enumerate().map(|(i, s)| {
            vec![
                s.code.clone(),
                s.name.clone(),
                format_value(scores.hub[i]),
                format_value(scores.authority[i]),
            ]
        }),
    )?;
    write_rows(
        &dir.join("scores_economies.csv"),
        &["code", "name", "broadcasting", "receiving"],
        economies.iter().enumerate().map(|(a, e)| {
            vec![
                e.code.clone(),
                e.name.clone(),
                format_value(scores.broadcasting[a]),
                format_value(scores.receiving[a]),
            ]
        }),
    )?;
    Ok(vec![
        "scores_sectors.csv".into(),
        "scores_economies.csv".into(),
    ])
}

/// The four top-`k` tables: hub and authority for sectors, broadcasting
/// and receiving for economies.
pub fn ranking_tables(
    sectors: &[SectorId],
    economies: &[EconomyId],
    scores: &MdHitsScores,
    top_k: usize,
) -> Vec<(&'static str, RankingTable)> {
    vec![
        ("hub", rank(sectors, &scores.hub, top_k)),
        ("authority", rank(sectors, &scores.authority, top_k)),
        ("broadcasting", rank(economies, &scores.broadcasting, top_k)),
        ("receiving", rank(economies, &scores.receiving, top_k)),
    ]
}

pub fn write_ranking_tables(
    dir: &Path,
    sectors: &[SectorId],
    economies: &[EconomyId],
    scores: &MdHitsScores,
    top_k: usize,
) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for (name, table) in ranking_tables(sectors, economies, scores, top_k) {
        let file = format!("ranking_{name}.csv");
        table.write_csv(&dir.join(&file))?;
        names.push(file);
    }
    Ok(names)
}

/// Ranking tables rebuilt from the score files of a finished run.
pub fn report_from_run(dir: &Path, top_k: usize) -> Result<Vec<(String, RankingTable)>> {
    let mut out = Vec::new();
    for (file, columns) in [
        ("scores_sectors.csv", ["hub", "authority"]),
        ("scores_economies.csv", ["broadcasting", "receiving"]),
    ] {
        let path = dir.join(file);
        let mut rdr = csv::Reader::from_path(&path)?;
        let mut labels = Vec::new();
        let mut values: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 4 {
                return Err(Error::Parse {
                    path: path.clone(),
                    line: line + 2,
                    msg: "expected code,name and two scores".into(),
                });
            }
            labels.push(SectorId {
                index: line,
                code: rec[0].to_string(),
                name: rec[1].to_string(),
            });
            for (k, v) in values.iter_mut().enumerate() {
                v.push(rec[2 + k].parse().map_err(|_| Error::Parse {
                    path: path.clone(),
                    line: line + 2,
                    msg: format!("bad score {:?}", &rec[2 + k]),
                })?);
            }
        }
        for (name, v) in columns.iter().zip(&values) {
            out.push((name.to_string(), rank(&labels, v, top_k)));
        }
    }
    Ok(out)
}
