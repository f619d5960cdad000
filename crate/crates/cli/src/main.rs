//! `eeflow`: build embodied energy flow networks from MRIO tables and rank
//! sectors and economies.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::json;

use eeflow_core::centrality::{hits_monoplex, mdhits, rank, strengths, Gamma, MdHitsOptions};
use eeflow_core::flows::{
    build_supranetwork, layer_block, read_flows, write_edge_list, write_flows,
};
use eeflow_core::ingest::eora::adapt_eora;
use eeflow_core::ingest::{load_dataset, read_matrix, synth_dataset, write_dataset, write_matrix};
use eeflow_core::leontief::{build_coefficients, solve_leontief, LeontiefSystem, SolveOptions};
use eeflow_core::pipeline::{
    diff_runs, ranking_tables, report_from_run, run_pipeline, write_ranking_tables,
    write_score_tables, write_strength_tables, RunConfig, OUTPUT_ROOT_ENV,
};

#[derive(Parser)]
#[command(
    name = "eeflow",
    version,
    about = "Embodied energy flow multilayer networks"
)]
struct Cli {
    /// Log filter, e.g. `warn`, `info` or `eeflow_core=debug`.
    #[arg(long, global = true, env = "EEFLOW_LOG", default_value = "info")]
    log_level: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate a dataset.
    Ingest {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Write a seeded synthetic dataset.
    Synth {
        #[arg(long)]
        sectors: usize,
        #[arg(long)]
        economies: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Upper bound on the spectral radius of the coefficient matrix.
        #[arg(long, default_value_t = 0.6)]
        rho: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert an EORA26 text export into the canonical format.
    AdaptEora {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the Leontief inverse and write it as a matrix file.
    Leontief {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the JSON summary to this file.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Build the supradjacency matrix of embodied energy flows.
    Flows {
        #[arg(long)]
        manifest: PathBuf,
        /// Leontief inverse written by `leontief`; solved afresh when omitted.
        #[arg(long)]
        leontief: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Extract the block between two layers as an edge list.
    Block {
        #[arg(long)]
        flows: PathBuf,
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        beta: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write strength tables for a flows file.
    Strength {
        #[arg(long)]
        flows: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classic HITS on the intra-layer network of one economy.
    Hits {
        #[arg(long)]
        flows: PathBuf,
        #[arg(long)]
        layer: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Multi-dimensional HITS scores and ranking tables.
    Mdhits {
        #[arg(long)]
        flows: PathBuf,
        #[arg(long, default_value = "0.25,0.25,0.25,0.25")]
        gamma: Gamma,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        #[arg(long, default_value_t = 25)]
        top: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print ranking tables from a finished run directory.
    Report {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, default_value_t = 25)]
        top: usize,
    },
    /// Run the full pipeline.
    Run(RunArgs),
    /// Compare two run directories.
    Diff {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        json: bool,
        /// Exit with status 1 when the runs differ.
        #[arg(long)]
        check: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output directory. Relative paths resolve against $EEFLOW_OUTPUT_ROOT when set.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<Gamma>,
    #[arg(long)]
    leontief_tol: Option<f64>,
    #[arg(long)]
    mdhits_tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    top: Option<usize>,
    /// Comma-separated economy codes whose intra-layer networks are written.
    #[arg(long, value_delimiter = ',')]
    monolayer: Option<Vec<String>>,
    #[arg(long)]
    write_matrices: bool,
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

fn leontief_summary(ls: &LeontiefSystem, tol: f64) -> serde_json::Value {
    json!({
        "order": ls.dim(),
        "spectral_radius_estimate": ls.spectral_radius_estimate,
        "residual_norm": ls.residual_norm,
        "tol": tol,
        "zero_output_columns": ls.coefficient.zero_output_columns.len(),
    })
}

fn run_config(args: RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::read(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = args.manifest {
        cfg.manifest = v;
    }
    if let Some(v) = args.out {
        cfg.output_dir = v;
    }
    if let Some(v) = args.gamma {
        cfg.gamma = v;
    }
    if let Some(v) = args.leontief_tol {
        cfg.leontief_tol = v;
    }
    if let Some(v) = args.mdhits_tol {
        cfg.mdhits_tol = v;
    }
    if let Some(v) = args.max_iter {
        cfg.max_iter = v;
    }
    if let Some(v) = args.top {
        cfg.top_k = v;
    }
    if let Some(v) = args.monolayer {
        cfg.monolayer_economies = v;
    }
    cfg.write_matrices |= args.write_matrices;
    let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from);
    cfg.resolve_output_dir(root.as_deref());
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one subcommand, tagging failures with its stage name.
fn execute(command: Command) -> Result<()> {
    let stage = |name: &'static str| move |e: eeflow_core::Error| anyhow!("[{name}] {e}");
    match command {
        Command::Ingest { manifest } => {
            let loaded = load_dataset(&manifest).map_err(stage("ingest"))?;
            let d = &loaded.dataset;
            let warnings: Vec<String> = loaded
                .report
                .validation
                .warnings()
                .map(|f| f.message.clone())
                .collect();
            print_json(&json!({
                "n_sectors": d.sectors.len(),
                "n_economies": d.economies.len(),
                "year": d.info.year,
                "energy_semantics": d.info.energy_semantics.to_string(),
                "clamped": loaded.report.clamped,
                "warnings": warnings,
            }))
        }
        Command::Synth {
            sectors,
            economies,
            seed,
            rho,
            out,
        } => {
            let d = synth_dataset(sectors, economies, seed, rho).map_err(stage("synth"))?;
            write_dataset(&d, &out).map_err(stage("synth"))?;
            info!("wrote synthetic dataset to {}", out.display());
            Ok(())
        }
        Command::AdaptEora { input, out } => {
            let (_, report) = adapt_eora(&input, &out).map_err(stage("adapt-eora"))?;
            print_json(&serde_json::to_value(report)?)
        }
        Command::Leontief {
            manifest,
            tol,
            out,
            summary,
        } => {
            let d = load_dataset(&manifest).map_err(stage("ingest"))?.dataset;
            let opts = SolveOptions {
                tol,
                ..Default::default()
            };
            let ls = build_coefficients(&d)
                .and_then(|cm| solve_leontief(cm, &opts))
                .map_err(stage("leontief"))?;
            let labels = d.flat_labels();
            write_matrix(
                &out,
                "leontief_inverse",
                &labels,
                &labels,
                ls.to_dense_inverse().view(),
            )
            .map_err(stage("leontief"))?;
            let s = leontief_summary(&ls, tol);
            if let Some(path) = summary {
                write_json(&path, &s)?;
            }
            print_json(&s)
        }
        Command::Flows {
            manifest,
            leontief,
            tol,
            out,
            summary,
        } => {
            let d = load_dataset(&manifest).map_err(stage("ingest"))?.dataset;
            let opts = SolveOptions {
                tol,
                ..Default::default()
            };
            let ls = match leontief {
                Some(path) => {
                    let m = read_matrix(&path).map_err(stage("leontief"))?;
                    let labels = d.flat_labels();
                    m.expect_labels(&path, &labels, &labels)
                        .map_err(stage("leontief"))?;
                    build_coefficients(&d)
                        .and_then(|cm| LeontiefSystem::from_inverse(cm, m.data, &opts))
                        .map_err(stage("leontief"))?
                }
                None => build_coefficients(&d)
                    .and_then(|cm| solve_leontief(cm, &opts))
                    .map_err(stage("leontief"))?,
            };
            let sn = build_supranetwork(&d, &ls).map_err(stage("flows"))?;
            write_flows(&sn, &out).map_err(stage("flows"))?;
            let s = serde_json::to_value(sn.summary())?;
            if let Some(path) = summary {
                write_json(&path, &s)?;
            }
            print_json(&s)
        }
        Command::Block {
            flows,
            alpha,
            beta,
            out,
        } => {
            let sn = read_flows(&flows).map_err(stage("block"))?;
            let a = sn.economy_index(&alpha).map_err(stage("block"))?;
            let b = sn.economy_index(&beta).map_err(stage("block"))?;
            let block = layer_block(&sn, a, b).map_err(stage("block"))?;
            write_edge_list(&out, &sn.sectors, &block).map_err(stage("block"))
        }
        Command::Strength { flows, out } => {
            let sn = read_flows(&flows).map_err(stage("strength"))?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let s = strengths(&sn);
            write_strength_tables(&out, &sn.sectors, &sn.economies, &s)
                .map_err(stage("strength"))?;
            Ok(())
        }
        Command::Hits {
            flows,
            layer,
            tol,
            max_iter,
            top,
        } => {
            let sn = read_flows(&flows).map_err(stage("hits"))?;
            let a = sn.economy_index(&layer).map_err(stage("hits"))?;
            let block = layer_block(&sn, a, a).map_err(stage("hits"))?;
            let scores = hits_monoplex(&block, tol, max_iter).map_err(stage("hits"))?;
            if !scores.converged {
                log::warn!("HITS did not converge in {} iterations", scores.iterations);
            }
            println!("# hub");
            print!("{}", rank(&sn.sectors, &scores.hub, top).to_csv());
            println!("# authority");
            print!("{}", rank(&sn.sectors, &scores.authority, top).to_csv());
            Ok(())
        }
        Command::Mdhits {
            flows,
            gamma,
            tol,
            max_iter,
            top,
            out,
        } => {
            let sn = read_flows(&flows).map_err(stage("mdhits"))?;
            let opts = MdHitsOptions {
                gamma,
                tol,
                max_iter,
            };
            let scores = mdhits(&sn, &opts).map_err(stage("mdhits"))?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            write_score_tables(&out, &sn.sectors, &sn.economies, &scores)
                .and_then(|_| write_ranking_tables(&out, &sn.sectors, &sn.economies, &scores, top))
                .map_err(stage("mdhits"))?;
            for (name, table) in ranking_tables(&sn.sectors, &sn.economies, &scores, top) {
                println!("# {name}");
                print!("{}", table.to_text());
            }
            print_json(&json!({
                "iterations": scores.iterations,
                "residual": scores.residual,
                "converged": scores.converged,
            }))
        }
        Command::Report { run, top } => {
            let tables = report_from_run(&run, top).map_err(stage("report"))?;
            for (name, table) in tables {
                println!("# {name}");
                print!("{}", table.to_csv());
            }
            Ok(())
        }
        Command::Run(args) => {
            let cfg = run_config(args).map_err(|e| anyhow!("[config] {e:#}"))?;
            let artifacts = run_pipeline(&cfg).map_err(|e| anyhow!("{e}"))?;
            println!("{}", artifacts.output_dir.display());
            Ok(())
        }
        Command::Diff { a, b, json, check } => {
            let report = diff_runs(&a, &b).map_err(stage("diff"))?;
            if json {
                print_json(&serde_json::to_value(&report)?)?;
            } else {
                print!("{}", report.to_text());
            }
            if check && !report.is_identical() {
                return Err(anyhow!("[diff] runs differ"));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .init();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
