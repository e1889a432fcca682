//! Whole-campaign analysis: per-position pipeline, per-case fits, and the
//! self-describing report.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cir::ctf_to_cir;
use crate::cluster::{dbscan, summarize_clusters, Cluster, ClusterFile, DbscanConfig};
use crate::error::{Error, Result};
use crate::extract::{extract_mpcs, write_mpc_file, ThresholdPolicy};
use crate::ingest::{calibrate, CalibrationRecord};
use crate::stats::{
    arrival_intervals, dispersion_stats, fit_alpha_beta, fit_ci, path_losses, AlphaBetaFit,
    CiFit, DispersionStats, PathLossSample, PathLosses, Which, AS_FORMULA, DS_FORMULA,
};
use crate::sweep::{Case, Mpc, SweepGrid};

pub const REPORT_SCHEMA: &str = "report/1";
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const THRESHOLD_FORMULA: &str = "P_TH = max(P_m - 40, NF + 10) dB, samples >= P_TH kept";
pub const PATH_LOSS_FORMULA: &str =
    "PL_best = -10log10(max_ij P_ij), PL_omni = -10log10(sum_ij P_ij), P_ij = sum over surviving samples |h|^2";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

impl InputRecord {
    pub fn new(path: impl Into<String>, bytes: &[u8]) -> Self {
        InputRecord {
            path: path.into(),
            sha256: sha256_hex(bytes),
        }
    }
}

/// Everything needed to reproduce an output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub toolkit_version: String,
    pub inputs: Vec<InputRecord>,
    pub policy: Option<ThresholdPolicy>,
    pub dbscan: Option<DbscanConfig>,
    pub d0_m: Option<f64>,
    pub freq_hz: Option<f64>,
    pub seed: Option<u64>,
    /// Further numeric flags, by name.
    pub extra: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>) -> Self {
        RunManifest {
            command: command.into(),
            toolkit_version: TOOLKIT_VERSION.into(),
            inputs: Vec::new(),
            policy: None,
            dbscan: None,
            d0_m: None,
            freq_hz: None,
            seed: None,
            extra: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisParams {
    pub policy: ThresholdPolicy,
    pub dbscan: DbscanConfig,
    pub d0_m: f64,
    /// Frequency of the CI anchor; the band centre when `None`.
    pub freq_hz: Option<f64>,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            policy: ThresholdPolicy::Relative,
            dbscan: DbscanConfig::default(),
            d0_m: 1.0,
            freq_hz: None,
        }
    }
}

impl AnalysisParams {
    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        self.dbscan.validate()?;
        if !(self.d0_m > 0.0 && self.d0_m.is_finite()) {
            return Err(Error::InvalidParameter(format!("d0 must be positive, got {}", self.d0_m)));
        }
        if let Some(f) = self.freq_hz {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::InvalidParameter(format!("frequency must be positive, got {f}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionReport {
    pub position_id: String,
    pub case: Case,
    pub tx_rx_distance_m: Option<f64>,
    pub center_frequency_hz: f64,
    pub threshold_db: f64,
    pub peak_db: f64,
    pub n_mpcs: usize,
    pub n_noise_mpcs: usize,
    pub path_loss: PathLosses,
    pub dispersion: DispersionStats,
    pub cluster_intervals_s: Vec<f64>,
}

/// One analyzed position: the report row plus its MPC and cluster sets.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionAnalysis {
    pub report: PositionReport,
    pub mpcs: Vec<Mpc>,
    pub clusters: Vec<Cluster>,
    pub cluster_file: ClusterFile,
}

impl PositionAnalysis {
    pub fn mpc_file(&self) -> Result<Vec<u8>> {
        write_mpc_file(&self.report.position_id, &self.mpcs)
    }

    pub fn cluster_file_bytes(&self) -> Result<Vec<u8>> {
        Ok(serde_json::to_vec_pretty(&self.cluster_file)?)
    }
}

/// Calibrate, transform, extract, cluster and summarize one position.
pub fn analyze_position(
    raw: &SweepGrid,
    cal: &CalibrationRecord,
    params: &AnalysisParams,
) -> Result<PositionAnalysis> {
    params.validate()?;
    let sweep = calibrate(raw, cal)?;
    let cir = ctf_to_cir(&sweep);
    let extraction = extract_mpcs(&cir, &params.policy)?;
    if extraction.is_empty() {
        return Err(Error::NoSignal(format!(
            "no sample reaches the threshold at position `{}`",
            raw.position_id
        )));
    }
    let path_loss = path_losses(&cir, Some(&extraction.mask))?;
    let labeling = dbscan(&extraction.mpcs, &params.dbscan)?;
    let clusters = summarize_clusters(&extraction.mpcs, &labeling);
    let dispersion = dispersion_stats(&extraction.mpcs, &clusters)?;
    let onsets: Vec<f64> = clusters.iter().map(|c| c.centroid_toa_s).collect();
    let report = PositionReport {
        position_id: raw.position_id.clone(),
        case: raw.case,
        tx_rx_distance_m: raw.tx_rx_distance_m,
        center_frequency_hz: raw.config.center_frequency_hz(),
        threshold_db: extraction.threshold_db,
        peak_db: extraction.peak_db,
        n_mpcs: extraction.mpcs.len(),
        n_noise_mpcs: labeling.noise_indices().len(),
        path_loss,
        dispersion,
        cluster_intervals_s: arrival_intervals(&onsets),
    };
    Ok(PositionAnalysis {
        report,
        cluster_file: ClusterFile::new(&params.dbscan, &clusters, &labeling),
        mpcs: extraction.mpcs,
        clusters,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseFits {
    pub case: Case,
    pub n_positions: usize,
    pub ci_best: CiFit,
    pub ci_omni: CiFit,
    pub alpha_beta_best: AlphaBetaFit,
    pub alpha_beta_omni: AlphaBetaFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Formulas {
    pub threshold: String,
    pub path_loss: String,
    pub delay_spread: String,
    pub angular_spread: String,
}

impl Default for Formulas {
    fn default() -> Self {
        Formulas {
            threshold: THRESHOLD_FORMULA.into(),
            path_loss: PATH_LOSS_FORMULA.into(),
            delay_spread: DS_FORMULA.into(),
            angular_spread: AS_FORMULA.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub schema: String,
    pub manifest: RunManifest,
    pub params: AnalysisParams,
    pub formulas: Formulas,
    /// Ordered by position id.
    pub positions: Vec<PositionReport>,
    /// Cases with at least two distinct distances.
    pub fits: Vec<CaseFits>,
    /// Mean inter-cluster arrival interval pooled over positions, ns.
    pub exp_mean_los_ns: Option<f64>,
    pub exp_mean_nlos_ns: Option<f64>,
}

impl ChannelReport {
    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut out = serde_json::to_vec_pretty(self)?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn fit(&self, case: Case) -> Option<&CaseFits> {
        self.fits.iter().find(|f| f.case == case)
    }
}

fn pooled_interval_ns(positions: &[PositionReport], case: Case) -> Option<f64> {
    let all: Vec<f64> = positions
        .iter()
        .filter(|p| p.case == case)
        .flat_map(|p| p.cluster_intervals_s.iter().copied())
        .collect();
    (!all.is_empty()).then(|| all.iter().sum::<f64>() / all.len() as f64 * 1e9)
}

/// Fit each case's path loss and assemble the report.
///
/// A case with one located position is reported without fits; a case with several
/// positions all at one distance is rank deficient.
pub fn build_report(
    analyses: &[PositionAnalysis],
    params: &AnalysisParams,
    manifest: RunManifest,
) -> Result<ChannelReport> {
    let mut positions: Vec<PositionReport> = analyses.iter().map(|a| a.report.clone()).collect();
    positions.sort_by(|a, b| a.position_id.cmp(&b.position_id));
    if let Some(w) = positions.windows(2).find(|w| w[0].position_id == w[1].position_id) {
        return Err(Error::InvalidParameter(format!(
            "duplicate position id `{}`",
            w[0].position_id
        )));
    }
    let freq_hz = params
        .freq_hz
        .or_else(|| positions.first().map(|p| p.center_frequency_hz))
        .unwrap_or(0.0);
    let mut fits = Vec::new();
    for case in [Case::Los, Case::Nlos, Case::Olos] {
        let samples: Vec<PathLossSample> = positions
            .iter()
            .filter(|p| p.case == case)
            .filter_map(|p| {
                p.tx_rx_distance_m.map(|d| PathLossSample {
                    position_id: p.position_id.clone(),
                    distance_m: d,
                    pl_best_db: p.path_loss.pl_best_db,
                    pl_omni_db: p.path_loss.pl_omni_db,
                    case,
                })
            })
            .collect();
        if samples.len() < 2 {
            continue;
        }
        fits.push(CaseFits {
            case,
            n_positions: samples.len(),
            ci_best: fit_ci(&samples, Which::Best, params.d0_m, freq_hz)?,
            ci_omni: fit_ci(&samples, Which::Omni, params.d0_m, freq_hz)?,
            alpha_beta_best: fit_alpha_beta(&samples, Which::Best)?,
            alpha_beta_omni: fit_alpha_beta(&samples, Which::Omni)?,
        });
    }
    Ok(ChannelReport {
        schema: REPORT_SCHEMA.into(),
        manifest,
        params: *params,
        formulas: Formulas::default(),
        exp_mean_los_ns: pooled_interval_ns(&positions, Case::Los),
        exp_mean_nlos_ns: pooled_interval_ns(&positions, Case::Nlos),
        positions,
        fits,
    })
}

/// Analyze every position (in parallel) and build the report.
pub fn analyze_campaign(
    sweeps: &[SweepGrid],
    cal: &CalibrationRecord,
    params: &AnalysisParams,
    manifest: RunManifest,
) -> Result<(ChannelReport, Vec<PositionAnalysis>)> {
    let mut analyses = sweeps
        .par_iter()
        .map(|s| analyze_position(s, cal, params))
        .collect::<Result<Vec<_>>>()?;
    analyses.sort_by(|a, b| a.report.position_id.cmp(&b.report.position_id));
    let report = build_report(&analyses, params, manifest)?;
    Ok((report, analyses))
}
