//! Post-processing and statistical characterization of wideband directional
//! channel-sounding data.
//!
//! The pipeline runs raw S21 sweeps through calibration ([`ingest`]), an inverse
//! DFT into impulse responses ([`cir`]), per-sample multipath extraction
//! ([`extract`]), MCD-based DBSCAN clustering ([`cluster`]) and channel statistics
//! ([`stats`]). [`synth`] renders known paths into sweeps so every stage can be
//! checked against ground truth, and [`report`] ties a whole campaign together.

// `!(x > 0.0)` is used on purpose so NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cir;
pub mod cli;
pub mod cluster;
pub mod error;
pub mod extract;
pub mod ingest;
pub mod report;
pub mod stats;
pub mod sweep;
pub mod synth;

pub use error::{Error, Result};
pub use sweep::{derive_resolution, Case, CirGrid, Mpc, ResolutionSummary, SweepGrid, SystemConfig};
