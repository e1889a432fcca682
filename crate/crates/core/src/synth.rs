//! Forward model: ground-truth paths rendered into directional sweeps, a seeded
//! statistical channel generator, and the extraction round-trip check.
//!
//! The receive pattern is a Gaussian main lobe in power,
//! `g(Δ) = exp(−4·ln2·(Δ/HPBW)²)`, floored at a sidelobe level, where `Δ` is the
//! great-circle angle between pointing and arrival. The transmitter is isotropic.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`. Stream 0
//! draws cluster onsets; stream `k + 1` draws the content of cluster `k`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cir::ctf_to_cir;
use crate::cluster::{
    dbscan, direction_vector, mcd, summarize_clusters, wrap_360, DbscanConfig, McdParams,
};
use crate::error::{Error, Result};
use crate::extract::{extract_mpcs, ThresholdPolicy};
use crate::ingest::CalibrationRecord;
use crate::stats::fspl;
use crate::sweep::{
    db_to_amplitude, db_to_power, power_to_db, Case, Mpc, SweepGrid, SystemConfig, SPEED_OF_LIGHT,
};

pub const TRUTH_SCHEMA: &str = "truth/1";
pub const DEFAULT_SIDELOBE_FLOOR_DB: f64 = -40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaModel {
    pub hpbw_deg: f64,
    pub sidelobe_floor_db: f64,
}

impl AntennaModel {
    pub fn new(hpbw_deg: f64) -> Self {
        AntennaModel {
            hpbw_deg,
            sidelobe_floor_db: DEFAULT_SIDELOBE_FLOOR_DB,
        }
    }

    pub fn for_config(config: &SystemConfig) -> Self {
        Self::new(config.rx_hpbw_deg)
    }

    /// Power gain relative to boresight for an off-axis angle in degrees.
    pub fn power_gain(&self, off_axis_deg: f64) -> f64 {
        let x = off_axis_deg / self.hpbw_deg;
        (-4.0 * std::f64::consts::LN_2 * x * x).exp().max(db_to_power(self.sidelobe_floor_db))
    }
}

/// Great-circle angle between two directions, degrees.
pub fn angle_between_deg(az1: f64, el1: f64, az2: f64, el2: f64) -> f64 {
    let a = direction_vector(az1, el1);
    let b = direction_vector(az2, el2);
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    dot.clamp(-1.0, 1.0).acos().to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthPath {
    pub toa_s: f64,
    pub az_deg: f64,
    pub el_deg: f64,
    pub amplitude_linear: f64,
    pub phase_rad: f64,
}

impl GroundTruthPath {
    pub fn power_db(&self) -> f64 {
        20.0 * self.amplitude_linear.log10()
    }

    fn as_mpc(&self) -> Mpc {
        Mpc::new(self.toa_s, self.az_deg, self.el_deg, self.power_db())
    }
}

fn check_paths(paths: &[GroundTruthPath]) -> Result<()> {
    for p in paths {
        if ![p.toa_s, p.az_deg, p.el_deg, p.amplitude_linear, p.phase_rad]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::NonFinite("ground-truth path".into()));
        }
        if !(p.amplitude_linear > 0.0) || p.toa_s < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "path needs positive amplitude and non-negative ToA: {p:?}"
            )));
        }
    }
    Ok(())
}

/// `H(f; az, el) = Σ a·√g·exp(jφ)·exp(−j2πfτ)` over the configured grids.
pub fn render_sweep(
    paths: &[GroundTruthPath],
    config: &SystemConfig,
    pattern: &AntennaModel,
) -> Result<SweepGrid> {
    config.validate()?;
    check_paths(paths)?;
    let n = config.n_points;
    // per-path frequency response, shared by every direction
    let phasors: Vec<Vec<Complex64>> = paths
        .par_iter()
        .map(|p| {
            (0..n)
                .map(|k| {
                    let cycles = config.frequency_hz(k) * p.toa_s;
                    let frac = cycles - cycles.floor();
                    Complex64::from_polar(1.0, p.phase_rad - 2.0 * std::f64::consts::PI * frac)
                })
                .collect()
        })
        .collect();
    let n_el = config.n_el();
    let mut samples = vec![Complex64::new(0.0, 0.0); config.n_directions() * n];
    samples.par_chunks_mut(n).enumerate().for_each(|(dir, pencil)| {
        let (az, el) = (config.az_grid_deg[dir / n_el], config.el_grid_deg[dir % n_el]);
        for (p, ph) in paths.iter().zip(&phasors) {
            let off = angle_between_deg(az, el, p.az_deg, p.el_deg);
            let amp = p.amplitude_linear * pattern.power_gain(off).sqrt();
            pencil.iter_mut().zip(ph).for_each(|(h, v)| *h += v * amp);
        }
    });
    SweepGrid::new(config.clone(), "synthetic", Case::Los, None, samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatGenParams {
    pub mean_cluster_interval_s: f64,
    /// Cluster count is `1 + Poisson(mean − 1)`.
    pub n_clusters_mean: f64,
    /// Paths per cluster are `1 + Poisson(mean − 1)`.
    pub intra_cluster_count_mean: f64,
    pub intra_toa_jitter_s: f64,
    pub intra_angle_jitter_deg: f64,
    pub ple: f64,
    pub seed: u64,
}

impl StatGenParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.mean_cluster_interval_s > 0.0
            && self.n_clusters_mean >= 1.0
            && self.intra_cluster_count_mean >= 1.0
            && self.intra_toa_jitter_s >= 0.0
            && self.intra_angle_jitter_deg >= 0.0
            && self.ple > 0.0
            && [
                self.mean_cluster_interval_s,
                self.n_clusters_mean,
                self.intra_cluster_count_mean,
                self.intra_toa_jitter_s,
                self.intra_angle_jitter_deg,
                self.ple,
            ]
            .iter()
            .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "degenerate generator parameters {self:?}"
            )))
        }
    }
}

fn one_plus_poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 1.0 {
        return 1;
    }
    1 + Poisson::new(mean - 1.0).expect("positive rate").sample(rng) as usize
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Cluster onset times: first at `first_s`, then exponential gaps.
pub fn cluster_onsets(n: usize, mean_interval_s: f64, first_s: f64, seed: u64) -> Result<Vec<f64>> {
    let exp = Exp::new(1.0 / mean_interval_s)
        .map_err(|e| Error::InvalidParameter(format!("mean interval: {e}")))?;
    let mut rng = stream(seed, 0);
    let mut t = first_s;
    Ok((0..n)
        .map(|i| {
            if i > 0 {
                t += exp.sample(&mut rng);
            }
            t
        })
        .collect())
}

/// Draw a clustered channel whose total power equals the CI prediction at
/// `distance_m` (with `d0 = 1 m`).
///
/// Clusters arrive as a Poisson process starting at the line-of-sight delay; cluster
/// power decays exponentially with excess delay over `mean_interval · n_clusters_mean`.
pub fn generate_statistical(
    params: &StatGenParams,
    distance_m: f64,
    f_hz: f64,
) -> Result<Vec<GroundTruthPath>> {
    params.validate()?;
    if !(distance_m > 0.0 && f_hz > 0.0) {
        return Err(Error::InvalidParameter("distance and frequency must be positive".into()));
    }
    let mut rng = stream(params.seed, 0);
    let n_clusters = one_plus_poisson(&mut rng, params.n_clusters_mean);
    let first = distance_m / SPEED_OF_LIGHT;
    let onsets = cluster_onsets(n_clusters, params.mean_cluster_interval_s, first, params.seed)?;
    let decay = params.mean_cluster_interval_s * params.n_clusters_mean;

    let mut paths = Vec::new();
    let mut weights = Vec::new();
    for (k, &onset) in onsets.iter().enumerate() {
        let mut rng = stream(params.seed, k as u64 + 1);
        let az = rng.random_range(0.0..360.0);
        let el = rng.random_range(-20.0..20.0);
        let cluster_w = (-(onset - first) / decay).exp();
        let n_paths = one_plus_poisson(&mut rng, params.intra_cluster_count_mean);
        let angle_jitter = Normal::new(0.0, params.intra_angle_jitter_deg).expect("finite sigma");
        for j in 0..n_paths {
            let (dt, daz, del) = if j == 0 {
                (0.0, 0.0, 0.0)
            } else {
                let dt = if params.intra_toa_jitter_s > 0.0 {
                    Exp::new(1.0 / params.intra_toa_jitter_s)
                        .expect("positive rate")
                        .sample(&mut rng)
                } else {
                    0.0
                };
                (dt, angle_jitter.sample(&mut rng), angle_jitter.sample(&mut rng))
            };
            let intra_w = if params.intra_toa_jitter_s > 0.0 {
                (-dt / params.intra_toa_jitter_s).exp()
            } else {
                1.0
            };
            weights.push(cluster_w * intra_w);
            paths.push(GroundTruthPath {
                toa_s: onset + dt,
                az_deg: wrap_360(az + daz),
                el_deg: (el + del).clamp(-90.0, 90.0),
                amplitude_linear: 0.0,
                phase_rad: rng.random_range(0.0..std::f64::consts::TAU),
            });
        }
    }
    let target = db_to_power(-(fspl(1.0, f_hz) + 10.0 * params.ple * distance_m.log10()));
    let total: f64 = weights.iter().sum();
    for (p, w) in paths.iter_mut().zip(&weights) {
        p.amplitude_linear = (target * w / total).sqrt();
    }
    Ok(paths)
}

/// A back-to-back record for synthetic campaigns: constant magnitude, a smooth
/// phase ramp, and the configured gains.
pub fn synthetic_calibration(config: &SystemConfig, attenuator_db: f64) -> Result<CalibrationRecord> {
    let n = config.n_points;
    let s_calib = (0..n)
        .map(|k| Complex64::from_polar(0.5, -std::f64::consts::TAU * 3.7 * k as f64 / n as f64))
        .collect();
    CalibrationRecord::new(s_calib, attenuator_db, config.tx_gain_dbi, config.rx_gain_dbi)
}

/// Processing settings for a round trip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub policy: ThresholdPolicy,
    pub dbscan: DbscanConfig,
    pub pattern: AntennaModel,
    /// Largest MCD at which a truth path and a cluster peak are paired.
    pub match_radius: f64,
}

impl PipelineParams {
    pub fn for_config(config: &SystemConfig) -> Self {
        let dbscan = DbscanConfig::default();
        PipelineParams {
            policy: ThresholdPolicy::Relative,
            dbscan,
            pattern: AntennaModel::for_config(config),
            match_radius: dbscan.eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathError {
    pub truth_index: usize,
    pub cluster_id: usize,
    pub toa_error_s: f64,
    pub az_error_deg: f64,
    pub el_error_deg: f64,
    pub power_error_db: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundtripReport {
    pub matched: usize,
    pub missed: usize,
    pub spurious: usize,
    /// Truth paths absorbed by a cluster already matched to another path
    /// (below the sounder's resolution).
    pub coalesced: usize,
    pub errors: Vec<PathError>,
}

impl RoundtripReport {
    pub fn max_abs_toa_error_s(&self) -> f64 {
        self.errors.iter().map(|e| e.toa_error_s.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_angle_error_deg(&self) -> f64 {
        self.errors
            .iter()
            .map(|e| e.az_error_deg.abs().max(e.el_error_deg.abs()))
            .fold(0.0, f64::max)
    }

    pub fn max_abs_power_error_db(&self) -> f64 {
        self.errors.iter().map(|e| e.power_error_db.abs()).fold(0.0, f64::max)
    }
}

/// Render, then extract and cluster, and compare against the truth.
pub fn roundtrip_check(
    paths: &[GroundTruthPath],
    config: &SystemConfig,
    params: &PipelineParams,
) -> Result<RoundtripReport> {
    let sweep = render_sweep(paths, config, &params.pattern)?;
    roundtrip_sweep(paths, &sweep, params)
}

/// Compare truth paths with what the pipeline recovers from a (calibrated) sweep.
///
/// Each cluster is represented by its strongest MPC; its power estimate is the
/// summed power of the cluster members in that MPC's pointing direction. Pairs are
/// formed greedily by increasing MCD.
pub fn roundtrip_sweep(
    paths: &[GroundTruthPath],
    sweep: &SweepGrid,
    params: &PipelineParams,
) -> Result<RoundtripReport> {
    check_paths(paths)?;
    let cir = ctf_to_cir(sweep);
    let extraction = extract_mpcs(&cir, &params.policy)?;
    let mpcs = &extraction.mpcs;
    let labeling = dbscan(mpcs, &params.dbscan)?;
    let clusters = summarize_clusters(mpcs, &labeling);

    let peaks: Vec<(usize, Mpc)> = clusters
        .iter()
        .map(|c| {
            let &peak = c
                .member_indices
                .iter()
                .max_by(|&&a, &&b| mpcs[a].power_db.total_cmp(&mpcs[b].power_db))
                .expect("clusters are non-empty");
            let p = &mpcs[peak];
            let energy: f64 = c
                .member_indices
                .iter()
                .map(|&i| &mpcs[i])
                .filter(|m| m.az_deg == p.az_deg && m.el_deg == p.el_deg)
                .map(Mpc::power_linear)
                .sum();
            (c.id, Mpc { power_db: power_to_db(energy), ..p.clone() })
        })
        .collect();

    let tau_max = mpcs
        .iter()
        .map(|m| m.toa_s)
        .chain(paths.iter().map(|p| p.toa_s))
        .fold(0.0, f64::max);
    let mcd_params = McdParams {
        xi: params.dbscan.xi,
        tau_max_s: tau_max,
    };
    let mut pairs = Vec::with_capacity(paths.len() * peaks.len());
    for (ti, truth) in paths.iter().enumerate() {
        let tm = truth.as_mpc();
        for (pi, (_, peak)) in peaks.iter().enumerate() {
            pairs.push((mcd(&tm, peak, &mcd_params)?, ti, pi));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut truth_done = vec![false; paths.len()];
    let mut peak_done = vec![false; peaks.len()];
    let mut report = RoundtripReport::default();
    for &(dist, ti, pi) in &pairs {
        if dist > params.match_radius || truth_done[ti] || peak_done[pi] {
            continue;
        }
        truth_done[ti] = true;
        peak_done[pi] = true;
        let truth = &paths[ti];
        let (cluster_id, peak) = &peaks[pi];
        let off = angle_between_deg(peak.az_deg, peak.el_deg, truth.az_deg, truth.el_deg);
        let expected_db = truth.power_db() + power_to_db(params.pattern.power_gain(off));
        report.errors.push(PathError {
            truth_index: ti,
            cluster_id: *cluster_id,
            toa_error_s: peak.toa_s - truth.toa_s,
            az_error_deg: (peak.az_deg - truth.az_deg + 180.0).rem_euclid(360.0) - 180.0,
            el_error_deg: peak.el_deg - truth.el_deg,
            power_error_db: peak.power_db - expected_db,
        });
    }
    report.errors.sort_by_key(|e| e.truth_index);
    report.matched = report.errors.len();
    for (ti, done) in truth_done.iter().enumerate() {
        if *done {
            continue;
        }
        let near = pairs
            .iter()
            .any(|&(d, t, _)| t == ti && d <= params.match_radius);
        if near {
            report.coalesced += 1;
        } else {
            report.missed += 1;
        }
    }
    report.spurious = peak_done.iter().filter(|d| !**d).count();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TruthRecord {
    toa_ns: f64,
    az_deg: f64,
    el_deg: f64,
    amp_db: f64,
    phase_rad: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TruthFile {
    schema: String,
    paths: Vec<TruthRecord>,
}

pub fn write_truth_file(paths: &[GroundTruthPath]) -> Result<Vec<u8>> {
    let file = TruthFile {
        schema: TRUTH_SCHEMA.into(),
        paths: paths
            .iter()
            .map(|p| TruthRecord {
                toa_ns: p.toa_s * 1e9,
                az_deg: p.az_deg,
                el_deg: p.el_deg,
                amp_db: p.power_db(),
                phase_rad: p.phase_rad,
            })
            .collect(),
    };
    Ok(serde_json::to_vec_pretty(&file)?)
}

pub fn parse_truth_file(bytes: &[u8]) -> Result<Vec<GroundTruthPath>> {
    let file: TruthFile = serde_json::from_slice(bytes)?;
    if file.schema != TRUTH_SCHEMA {
        return Err(Error::UnknownSchema {
            found: file.schema,
            expected: TRUTH_SCHEMA,
        });
    }
    let paths: Vec<GroundTruthPath> = file
        .paths
        .into_iter()
        .map(|r| GroundTruthPath {
            toa_s: r.toa_ns * 1e-9,
            az_deg: r.az_deg,
            el_deg: r.el_deg,
            amplitude_linear: db_to_amplitude(r.amp_db),
            phase_rad: r.phase_rad,
        })
        .collect();
    check_paths(&paths)?;
    Ok(paths)
}
