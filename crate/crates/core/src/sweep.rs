//! Measurement-system configuration and the grids shared by the rest of the pipeline.
//!
//! Sample grids are stored flat in `(azimuth, elevation, frequency|delay)` order, so
//! one pointing direction ("pencil") is a contiguous slice of `n_points` values.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Propagation condition of a Tx–Rx position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    Los,
    Nlos,
    Olos,
}

impl Case {
    pub fn as_str(self) -> &'static str {
        match self {
            Case::Los => "los",
            Case::Nlos => "nlos",
            Case::Olos => "olos",
        }
    }
}

impl std::str::FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "los" => Ok(Case::Los),
            "nlos" => Ok(Case::Nlos),
            "olos" => Ok(Case::Olos),
            other => Err(Error::InvalidParameter(format!("unknown case `{other}`"))),
        }
    }
}

/// Sounder configuration for one campaign.
///
/// The receive gain is a single scalar per campaign; its variation over the band is
/// not modeled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub f_start_hz: f64,
    pub f_stop_hz: f64,
    pub n_points: usize,
    pub az_grid_deg: Vec<f64>,
    pub el_grid_deg: Vec<f64>,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub rx_hpbw_deg: f64,
    pub noise_floor_dbm: f64,
}

/// Tolerance used when matching an angle against a pointing grid.
const GRID_MATCH_TOL_DEG: f64 = 1e-6;

impl SystemConfig {
    /// The 306–321 GHz sounder: 6001 points, azimuth 0°:10°:360°, elevation −20°:10°:20°.
    pub fn thz_306_321() -> Self {
        SystemConfig {
            f_start_hz: 306e9,
            f_stop_hz: 321e9,
            n_points: 6001,
            az_grid_deg: grid(0.0, 360.0, 10.0),
            el_grid_deg: grid(-20.0, 20.0, 10.0),
            tx_gain_dbi: 7.0,
            rx_gain_dbi: 26.0,
            rx_hpbw_deg: 8.0,
            noise_floor_dbm: -180.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.f_start_hz,
            self.f_stop_hz,
            self.tx_gain_dbi,
            self.rx_gain_dbi,
            self.rx_hpbw_deg,
            self.noise_floor_dbm,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("system configuration".into()));
        }
        if self.n_points < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_points must be at least 2, got {}",
                self.n_points
            )));
        }
        if !(self.f_stop_hz > self.f_start_hz) {
            return Err(Error::InvalidConfig(format!(
                "f_stop_hz ({}) must exceed f_start_hz ({})",
                self.f_stop_hz, self.f_start_hz
            )));
        }
        if !(self.sweep_interval_hz() > 0.0) {
            return Err(Error::InvalidConfig("sweep interval is not positive".into()));
        }
        if !(self.rx_hpbw_deg > 0.0) {
            return Err(Error::InvalidConfig("rx_hpbw_deg must be positive".into()));
        }
        check_grid("az_grid_deg", &self.az_grid_deg, 0.0, 360.0)?;
        check_grid("el_grid_deg", &self.el_grid_deg, -90.0, 90.0)?;
        Ok(())
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.f_stop_hz - self.f_start_hz
    }

    pub fn sweep_interval_hz(&self) -> f64 {
        self.bandwidth_hz() / (self.n_points as f64 - 1.0)
    }

    pub fn frequency_hz(&self, k: usize) -> f64 {
        self.f_start_hz + k as f64 * self.sweep_interval_hz()
    }

    pub fn center_frequency_hz(&self) -> f64 {
        0.5 * (self.f_start_hz + self.f_stop_hz)
    }

    pub fn n_az(&self) -> usize {
        self.az_grid_deg.len()
    }

    pub fn n_el(&self) -> usize {
        self.el_grid_deg.len()
    }

    pub fn n_directions(&self) -> usize {
        self.n_az() * self.n_el()
    }

    /// Spacing of IDFT delay bins: `1 / (n_points · Δf)`, so that `n_points` bins span
    /// exactly the maximum excess delay `1/Δf`.
    pub fn delay_step_s(&self) -> f64 {
        1.0 / (self.n_points as f64 * self.sweep_interval_hz())
    }

    pub fn az_index(&self, az_deg: f64) -> Option<usize> {
        grid_index(&self.az_grid_deg, az_deg)
    }

    pub fn el_index(&self, el_deg: f64) -> Option<usize> {
        grid_index(&self.el_grid_deg, el_deg)
    }

    /// Flat offset of the pencil at `(az_idx, el_idx)` in a sample grid.
    pub(crate) fn pencil_offset(&self, az_idx: usize, el_idx: usize) -> usize {
        (az_idx * self.n_el() + el_idx) * self.n_points
    }

    pub(crate) fn check_direction(&self, az_idx: usize, el_idx: usize) -> Result<()> {
        if az_idx >= self.n_az() || el_idx >= self.n_el() {
            return Err(Error::IndexOutOfRange(format!(
                "direction ({az_idx}, {el_idx}) outside a {}x{} grid",
                self.n_az(),
                self.n_el()
            )));
        }
        Ok(())
    }
}

/// Inclusive arithmetic grid `start, start+step, ..., stop`.
pub fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| start + i as f64 * step).collect()
}

fn grid_index(values: &[f64], target: f64) -> Option<usize> {
    values
        .iter()
        .position(|v| (v - target).abs() <= GRID_MATCH_TOL_DEG)
}

fn check_grid(name: &str, values: &[f64], lo: f64, hi: f64) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidConfig(format!("{name} is empty")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(name.to_string()));
    }
    if let Some(v) = values.iter().find(|&&v| v < lo || v > hi) {
        return Err(Error::InvalidConfig(format!(
            "{name} value {v} outside [{lo}, {hi}]"
        )));
    }
    if values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidConfig(format!(
            "{name} must be strictly ascending"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionSummary {
    pub time_res_s: f64,
    pub space_res_m: f64,
    pub max_excess_delay_s: f64,
    pub max_path_m: f64,
}

/// Time/space resolution and unambiguous delay range of a frequency sweep.
pub fn derive_resolution(config: &SystemConfig) -> Result<ResolutionSummary> {
    if config.n_points < 2 {
        return Err(Error::InvalidConfig(
            "a single sweep point has no resolution".into(),
        ));
    }
    let bandwidth = config.bandwidth_hz();
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    let time_res_s = 1.0 / bandwidth;
    let max_excess_delay_s = 1.0 / config.sweep_interval_hz();
    Ok(ResolutionSummary {
        time_res_s,
        space_res_m: SPEED_OF_LIGHT * time_res_s,
        max_excess_delay_s,
        max_path_m: SPEED_OF_LIGHT * max_excess_delay_s,
    })
}

/// Channel transfer function samples for one Tx–Rx position.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub config: SystemConfig,
    pub position_id: String,
    pub tx_rx_distance_m: Option<f64>,
    pub case: Case,
    samples: Vec<Complex64>,
}

impl SweepGrid {
    pub fn new(
        config: SystemConfig,
        position_id: impl Into<String>,
        case: Case,
        tx_rx_distance_m: Option<f64>,
        samples: Vec<Complex64>,
    ) -> Result<Self> {
        config.validate()?;
        check_samples(&config, &samples)?;
        if let Some(d) = tx_rx_distance_m {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "tx_rx_distance_m must be positive, got {d}"
                )));
            }
        }
        Ok(SweepGrid {
            config,
            position_id: position_id.into(),
            tx_rx_distance_m,
            case,
            samples,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    /// Frequency samples of one pointing direction.
    pub fn pencil(&self, az_idx: usize, el_idx: usize) -> &[Complex64] {
        let off = self.config.pencil_offset(az_idx, el_idx);
        &self.samples[off..off + self.config.n_points]
    }

    /// Replace the samples, keeping metadata. Dimensions are re-checked.
    pub fn with_samples(&self, samples: Vec<Complex64>) -> Result<Self> {
        check_samples(&self.config, &samples)?;
        Ok(SweepGrid {
            samples,
            ..self.clone_meta()
        })
    }

    fn clone_meta(&self) -> Self {
        SweepGrid {
            config: self.config.clone(),
            position_id: self.position_id.clone(),
            tx_rx_distance_m: self.tx_rx_distance_m,
            case: self.case,
            samples: Vec::new(),
        }
    }
}

fn check_samples(config: &SystemConfig, samples: &[Complex64]) -> Result<()> {
    let expected = config.n_directions() * config.n_points;
    if samples.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "expected {} x {} x {} = {expected} samples, got {}",
            config.n_az(),
            config.n_el(),
            config.n_points,
            samples.len()
        )));
    }
    if samples.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
        return Err(Error::NonFinite("sample grid".into()));
    }
    Ok(())
}

/// Channel impulse response samples, the IDFT image of a [`SweepGrid`].
///
/// Delay bin `t` sits at `t · delay_step_s` of excess delay.
#[derive(Debug, Clone, PartialEq)]
pub struct CirGrid {
    pub config: SystemConfig,
    pub position_id: String,
    pub delay_step_s: f64,
    samples: Vec<Complex64>,
}

impl CirGrid {
    pub fn new(
        config: SystemConfig,
        position_id: impl Into<String>,
        samples: Vec<Complex64>,
    ) -> Result<Self> {
        config.validate()?;
        check_samples(&config, &samples)?;
        Ok(CirGrid {
            delay_step_s: config.delay_step_s(),
            config,
            position_id: position_id.into(),
            samples,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn pencil(&self, az_idx: usize, el_idx: usize) -> &[Complex64] {
        let off = self.config.pencil_offset(az_idx, el_idx);
        &self.samples[off..off + self.config.n_points]
    }

    pub fn n_delays(&self) -> usize {
        self.config.n_points
    }

    pub fn delay_s(&self, bin: usize) -> f64 {
        bin as f64 * self.delay_step_s
    }

    pub fn max_excess_delay_s(&self) -> f64 {
        self.n_delays() as f64 * self.delay_step_s
    }
}

/// One multipath component: a surviving CIR sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Mpc {
    pub toa_s: f64,
    pub az_deg: f64,
    pub el_deg: f64,
    pub power_db: f64,
    pub position_id: String,
}

impl Mpc {
    pub fn new(toa_s: f64, az_deg: f64, el_deg: f64, power_db: f64) -> Self {
        Mpc {
            toa_s,
            az_deg,
            el_deg,
            power_db,
            position_id: String::new(),
        }
    }

    pub fn power_linear(&self) -> f64 {
        db_to_power(self.power_db)
    }
}

pub fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn power_to_db(p: f64) -> f64 {
    10.0 * p.log10()
}

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}
