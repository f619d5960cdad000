//! Embodied energy flow multilayer networks.
//!
//! Builds a sector-by-economy supradjacency matrix of embodied energy flows
//! from a multi-region input-output table with an energy satellite account,
//! then ranks sectors (nodes) and economies (layers) with strengths, classic
//! HITS and multi-dimensional HITS.
//!
//! The pipeline is split into stages that can be driven separately:
//!
//! * [`ingest`] reads and writes the canonical dataset format, adapts EORA
//!   exports and generates synthetic instances.
//! * [`leontief`] builds the direct requirement coefficients and solves the
//!   Leontief inverse.
//! * [`flows`] assembles the supradjacency matrix of embodied energy flows.
//! * [`centrality`] computes strengths, consumption summaries, HITS and
//!   MD-HITS scores and ranking tables.
//! * [`pipeline`] runs everything end to end and compares run directories.

pub mod centrality;
pub mod error;
pub mod flows;
pub mod ingest;
pub mod leontief;
pub mod matrix;
pub mod model;
pub mod pipeline;
pub mod reference;

pub use error::{Error, Result};
pub use model::{Dims, EconomyId, FlatIndex, MrioDataset, SectorId};
