//! Centrality measures on the embodied energy network.

pub mod consumption;
pub mod hits;
pub mod mdhits;
pub mod ranking;
pub mod strength;

pub use consumption::{consumption_summary, ConsumptionSummary};
pub use hits::{hits_monoplex, HitsScores};
pub use mdhits::{mdhits, mdhits_matrix, Gamma, MdHitsOptions, MdHitsScores};
pub use ranking::{rank, rank_correlation, Labeled, RankedRow, RankingTable};
pub use strength::{strengths, StrengthReport};
