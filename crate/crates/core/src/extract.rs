//! Noise elimination and per-sample MPC extraction.
//!
//! Every CIR sample at or above the threshold is kept as one MPC: its delay is the
//! ToA and the pointing direction is the AoA. No peak picking is done, so one
//! physical path may yield several adjacent MPCs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sweep::{power_to_db, CirGrid, Mpc, SystemConfig};

pub const MPC_SCHEMA: &str = "mpc/1";

/// Margin below the strongest sample for the relative threshold (dB).
pub const PEAK_MARGIN_DB: f64 = 40.0;
/// Margin above the average noise floor for the relative threshold (dB).
pub const NOISE_MARGIN_DB: f64 = 10.0;

/// `P_TH = max(P_max − 40, NF + 10)` in dB.
pub fn noise_threshold(p_max_db: f64, noise_floor_db: f64) -> f64 {
    (p_max_db - PEAK_MARGIN_DB).max(noise_floor_db + NOISE_MARGIN_DB)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ThresholdPolicy {
    /// Peak/noise-floor rule, using the configured noise floor.
    #[default]
    Relative,
    /// Fixed level in the same reference as the ingested powers.
    Absolute { level_db: f64 },
    /// Keep samples within `range_db` of the strongest sample.
    DynamicRange { range_db: f64 },
}

impl ThresholdPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ThresholdPolicy::Relative => Ok(()),
            ThresholdPolicy::Absolute { level_db } if level_db.is_finite() => Ok(()),
            ThresholdPolicy::DynamicRange { range_db } if range_db.is_finite() && range_db > 0.0 => {
                Ok(())
            }
            other => Err(Error::InvalidParameter(format!(
                "invalid threshold policy {other:?}"
            ))),
        }
    }

    /// Threshold in dB given the strongest sample power and the noise floor.
    pub fn threshold_db(&self, p_max_db: f64, noise_floor_db: f64) -> f64 {
        match *self {
            ThresholdPolicy::Relative => noise_threshold(p_max_db, noise_floor_db),
            ThresholdPolicy::Absolute { level_db } => level_db,
            ThresholdPolicy::DynamicRange { range_db } => p_max_db - range_db,
        }
    }
}

/// Per-sample survivor flags in the same layout as a [`CirGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivorMask {
    n_az: usize,
    n_el: usize,
    n_points: usize,
    keep: Vec<bool>,
    pub threshold_db: f64,
    pub peak_db: f64,
}

impl SurvivorMask {
    pub fn count(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn flags(&self) -> &[bool] {
        &self.keep
    }

    pub(crate) fn pencil(&self, cfg: &SystemConfig, az_idx: usize, el_idx: usize) -> &[bool] {
        let off = cfg.pencil_offset(az_idx, el_idx);
        &self.keep[off..off + self.n_points]
    }

    pub(crate) fn check_shape(&self, cir: &CirGrid) -> Result<()> {
        let c = &cir.config;
        if (self.n_az, self.n_el, self.n_points) != (c.n_az(), c.n_el(), c.n_points) {
            return Err(Error::DimensionMismatch(
                "survivor mask does not match CIR grid".into(),
            ));
        }
        Ok(())
    }
}

fn sample_db(h: num_complex::Complex64) -> Option<f64> {
    let p = h.norm_sqr();
    (p > 0.0).then(|| power_to_db(p))
}

/// Flag samples whose power is at or above the policy threshold.
pub fn survivor_mask(cir: &CirGrid, policy: &ThresholdPolicy) -> Result<SurvivorMask> {
    policy.validate()?;
    let powers: Vec<Option<f64>> = cir.samples().iter().map(|&h| sample_db(h)).collect();
    let peak_db = powers
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let threshold_db = policy.threshold_db(peak_db, cir.config.noise_floor_dbm);
    let keep = powers
        .iter()
        .map(|p| matches!(p, Some(db) if *db >= threshold_db))
        .collect();
    Ok(SurvivorMask {
        n_az: cir.config.n_az(),
        n_el: cir.config.n_el(),
        n_points: cir.config.n_points,
        keep,
        threshold_db,
        peak_db,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    /// Sorted by (ToA, azimuth, elevation).
    pub mpcs: Vec<Mpc>,
    pub threshold_db: f64,
    pub peak_db: f64,
    pub mask: SurvivorMask,
}

impl Extraction {
    /// True when no sample survived; legal for all-noise grids.
    pub fn is_empty(&self) -> bool {
        self.mpcs.is_empty()
    }
}

pub fn extract_mpcs(cir: &CirGrid, policy: &ThresholdPolicy) -> Result<Extraction> {
    let mask = survivor_mask(cir, policy)?;
    let cfg = &cir.config;
    let mut mpcs = Vec::new();
    // (delay, az, el) loop order yields the sorted output directly
    for t in 0..cfg.n_points {
        for a in 0..cfg.n_az() {
            for e in 0..cfg.n_el() {
                let idx = cfg.pencil_offset(a, e) + t;
                if !mask.keep[idx] {
                    continue;
                }
                mpcs.push(Mpc {
                    toa_s: cir.delay_s(t),
                    az_deg: cfg.az_grid_deg[a],
                    el_deg: cfg.el_grid_deg[e],
                    power_db: power_to_db(cir.samples()[idx].norm_sqr()),
                    position_id: cir.position_id.clone(),
                });
            }
        }
    }
    Ok(Extraction {
        mpcs,
        threshold_db: mask.threshold_db,
        peak_db: mask.peak_db,
        mask,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcRecord {
    pub toa_ns: f64,
    pub az_deg: f64,
    pub el_deg: f64,
    pub power_db: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct MpcFile {
    schema: String,
    position_id: String,
    mpcs: Vec<MpcRecord>,
}

pub fn write_mpc_file(position_id: &str, mpcs: &[Mpc]) -> Result<Vec<u8>> {
    let file = MpcFile {
        schema: MPC_SCHEMA.into(),
        position_id: position_id.into(),
        mpcs: mpcs
            .iter()
            .map(|m| MpcRecord {
                toa_ns: m.toa_s * 1e9,
                az_deg: m.az_deg,
                el_deg: m.el_deg,
                power_db: m.power_db,
            })
            .collect(),
    };
    Ok(serde_json::to_vec_pretty(&file)?)
}

pub fn parse_mpc_file(bytes: &[u8]) -> Result<Vec<Mpc>> {
    let file: MpcFile = serde_json::from_slice(bytes)?;
    if file.schema != MPC_SCHEMA {
        return Err(Error::UnknownSchema {
            found: file.schema,
            expected: MPC_SCHEMA,
        });
    }
    file.mpcs
        .into_iter()
        .map(|r| {
            if ![r.toa_ns, r.az_deg, r.el_deg, r.power_db]
                .iter()
                .all(|v| v.is_finite())
            {
                return Err(Error::NonFinite("mpc record".into()));
            }
            Ok(Mpc {
                toa_s: r.toa_ns * 1e-9,
                az_deg: r.az_deg,
                el_deg: r.el_deg,
                power_db: r.power_db,
                position_id: file.position_id.clone(),
            })
        })
        .collect()
}
