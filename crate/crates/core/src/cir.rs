//! CTF → CIR transform and power profiles.
//!
//! The inverse transform carries the `1/N` factor:
//! `h[t] = (1/N) Σ_k H[k] · exp(+j2πkt/N)`, so `Σ_k |H[k]|² = N · Σ_t |h[t]|²`.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::extract::SurvivorMask;
use crate::sweep::{power_to_db, CirGrid, SweepGrid};

/// Frequency-domain taper applied before the inverse transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Rectangular,
    /// Symmetric Hann taper, for sidelobe studies only.
    Hann,
}

impl Window {
    fn coefficients(self, n: usize) -> Option<Vec<f64>> {
        match self {
            Window::Rectangular => None,
            Window::Hann => {
                let denom = (n - 1) as f64;
                Some(
                    (0..n)
                        .map(|k| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / denom).cos())
                        .collect(),
                )
            }
        }
    }
}

/// IDFT of every pencil of a calibrated sweep.
pub fn ctf_to_cir(sweep: &SweepGrid) -> CirGrid {
    ctf_to_cir_windowed(sweep, Window::Rectangular)
}

pub fn ctf_to_cir_windowed(sweep: &SweepGrid, window: Window) -> CirGrid {
    let n = sweep.config.n_points;
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    let taper = window.coefficients(n);
    let mut samples = sweep.samples().to_vec();
    samples
        .par_chunks_mut(n)
        .for_each(|pencil| inverse_in_place(&ifft, pencil, taper.as_deref()));
    CirGrid::new(sweep.config.clone(), sweep.position_id.clone(), samples)
        .expect("IDFT preserves grid dimensions")
}

fn inverse_in_place(ifft: &Arc<dyn Fft<f64>>, pencil: &mut [Complex64], taper: Option<&[f64]>) {
    if let Some(w) = taper {
        pencil.iter_mut().zip(w).for_each(|(h, &w)| *h *= w);
    }
    ifft.process(pencil);
    let scale = 1.0 / pencil.len() as f64;
    pencil.iter_mut().for_each(|h| *h *= scale);
}

/// `P = Σ_t |h_t|²` for one direction, optionally restricted to surviving bins.
pub fn direction_power(
    cir: &CirGrid,
    az_idx: usize,
    el_idx: usize,
    mask: Option<&SurvivorMask>,
) -> Result<f64> {
    cir.config.check_direction(az_idx, el_idx)?;
    let pencil = cir.pencil(az_idx, el_idx);
    let power = match mask {
        None => pencil.iter().map(|h| h.norm_sqr()).sum(),
        Some(m) => {
            m.check_shape(cir)?;
            let keep = m.pencil(&cir.config, az_idx, el_idx);
            pencil
                .iter()
                .zip(keep)
                .filter(|(_, &k)| k)
                .map(|(h, _)| h.norm_sqr())
                .sum()
        }
    };
    Ok(power)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElevationMode {
    Slice(usize),
    MaxOverElevation,
}

/// Power–delay–angular profile over (azimuth, delay).
///
/// Cells at or below the floor (or with zero power) are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pdap {
    pub az_axis_deg: Vec<f64>,
    pub delay_axis_s: Vec<f64>,
    pub floor_db: f64,
    power_db: Vec<Option<f64>>,
}

impl Pdap {
    pub fn get(&self, az_idx: usize, delay_idx: usize) -> Option<f64> {
        self.power_db[az_idx * self.delay_axis_s.len() + delay_idx]
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.delay_axis_s.len();
        self.power_db
            .iter()
            .enumerate()
            .filter_map(move |(i, p)| p.map(|p| (i / n, i % n, p)))
    }

    pub fn above_floor_count(&self) -> usize {
        self.power_db.iter().filter(|p| p.is_some()).count()
    }

    /// CSV with header `az_deg,delay_ns,power_db`; below-floor cells are omitted.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("az_deg,delay_ns,power_db\n");
        for (a, t, p) in self.cells() {
            let _ = writeln!(
                out,
                "{},{},{}",
                self.az_axis_deg[a],
                self.delay_axis_s[t] * 1e9,
                p
            );
        }
        out
    }
}

/// PDAP with the floor at the configured noise floor.
pub fn compute_pdap(cir: &CirGrid, mode: ElevationMode) -> Result<Pdap> {
    compute_pdap_with_floor(cir, mode, cir.config.noise_floor_dbm)
}

pub fn compute_pdap_with_floor(cir: &CirGrid, mode: ElevationMode, floor_db: f64) -> Result<Pdap> {
    let cfg = &cir.config;
    let n = cir.n_delays();
    let elevations: Vec<usize> = match mode {
        ElevationMode::Slice(e) if e < cfg.n_el() => vec![e],
        ElevationMode::Slice(e) => {
            return Err(Error::IndexOutOfRange(format!(
                "elevation slice {e} of {}",
                cfg.n_el()
            )))
        }
        ElevationMode::MaxOverElevation => (0..cfg.n_el()).collect(),
    };
    let mut power_db = Vec::with_capacity(cfg.n_az() * n);
    for a in 0..cfg.n_az() {
        for t in 0..n {
            let p = elevations
                .iter()
                .map(|&e| cir.pencil(a, e)[t].norm_sqr())
                .fold(0.0, f64::max);
            let cell = (p > 0.0)
                .then(|| power_to_db(p))
                .filter(|db| db.is_finite() && *db > floor_db);
            power_db.push(cell);
        }
    }
    Ok(Pdap {
        az_axis_deg: cfg.az_grid_deg.clone(),
        delay_axis_s: (0..n).map(|t| cir.delay_s(t)).collect(),
        floor_db,
        power_db,
    })
}
