//! Sweep and calibration file parsing, and removal of the sounder response.
//!
//! Calibration follows the back-to-back procedure: the Tx and Rx fronts are
//! joined through a known attenuator and the resulting `S_calib` is divided out,
//!
//! ```text
//! H_channel = (S_measure / S_calib) · H_att / (G_tx · G_rx)
//! ```
//!
//! with attenuator and gains converted from dB to linear amplitude.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sweep::{db_to_amplitude, Case, SweepGrid, SystemConfig};

pub const SWEEP_SCHEMA: &str = "sweep/1";
pub const CALIB_SCHEMA: &str = "calib/1";

/// Default lower bound on `|S_calib|` (linear).
pub const DEFAULT_CALIB_FLOOR: f64 = 1e-15;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    schema: String,
    position_id: String,
    case: Case,
    tx_rx_distance_m: Option<f64>,
    config: SystemConfig,
    samples: Vec<PencilRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PencilRecord {
    az_deg: f64,
    el_deg: f64,
    s21: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibFile {
    schema: String,
    attenuator_db: f64,
    s21: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
struct SchemaProbe {
    schema: Option<String>,
}

fn check_schema(bytes: &[u8], expected: &'static str) -> Result<()> {
    let probe: SchemaProbe = serde_json::from_slice(bytes)?;
    match probe.schema {
        Some(s) if s == expected => Ok(()),
        Some(found) => Err(Error::UnknownSchema { found, expected }),
        None => Err(Error::Malformed("missing `schema` field".into())),
    }
}

fn to_complex(pairs: &[[f64; 2]]) -> Vec<Complex64> {
    pairs.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

fn to_pairs(values: &[Complex64]) -> Vec<[f64; 2]> {
    values.iter().map(|c| [c.re, c.im]).collect()
}

/// Parse a `sweep/1` JSON document into a validated [`SweepGrid`].
///
/// Every `(az, el)` pair of the configured grids must appear exactly once.
pub fn parse_sweep_file(bytes: &[u8]) -> Result<SweepGrid> {
    check_schema(bytes, SWEEP_SCHEMA)?;
    let file: SweepFile = serde_json::from_slice(bytes)?;
    let config = file.config;
    config.validate()?;

    let n = config.n_points;
    let mut samples = vec![Complex64::new(0.0, 0.0); config.n_directions() * n];
    let mut seen = vec![false; config.n_directions()];
    for rec in &file.samples {
        let (ai, ei) = match (config.az_index(rec.az_deg), config.el_index(rec.el_deg)) {
            (Some(a), Some(e)) => (a, e),
            _ => {
                return Err(Error::DimensionMismatch(format!(
                    "pencil ({}, {}) is not on the configured grid",
                    rec.az_deg, rec.el_deg
                )))
            }
        };
        let dir = ai * config.n_el() + ei;
        if seen[dir] {
            return Err(Error::DimensionMismatch(format!(
                "duplicate pencil ({}, {})",
                rec.az_deg, rec.el_deg
            )));
        }
        seen[dir] = true;
        if rec.s21.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "pencil ({}, {}) has {} points, n_points is {n}",
                rec.az_deg,
                rec.el_deg,
                rec.s21.len()
            )));
        }
        samples[dir * n..(dir + 1) * n].copy_from_slice(&to_complex(&rec.s21));
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::DimensionMismatch(format!(
            "missing pencil ({}, {})",
            config.az_grid_deg[missing / config.n_el()],
            config.el_grid_deg[missing % config.n_el()]
        )));
    }
    SweepGrid::new(
        config,
        file.position_id,
        file.case,
        file.tx_rx_distance_m,
        samples,
    )
}

/// Serialize a grid as a `sweep/1` document.
pub fn write_sweep_file(grid: &SweepGrid) -> Result<Vec<u8>> {
    let cfg = &grid.config;
    let mut pencils = Vec::with_capacity(cfg.n_directions());
    for (ai, &az) in cfg.az_grid_deg.iter().enumerate() {
        for (ei, &el) in cfg.el_grid_deg.iter().enumerate() {
            pencils.push(PencilRecord {
                az_deg: az,
                el_deg: el,
                s21: to_pairs(grid.pencil(ai, ei)),
            });
        }
    }
    let file = SweepFile {
        schema: SWEEP_SCHEMA.into(),
        position_id: grid.position_id.clone(),
        case: grid.case,
        tx_rx_distance_m: grid.tx_rx_distance_m,
        config: cfg.clone(),
        samples: pencils,
    };
    Ok(serde_json::to_vec(&file)?)
}

/// Back-to-back calibration measurement plus the known system gains.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRecord {
    pub s_calib: Vec<Complex64>,
    pub attenuator_db: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
}

impl CalibrationRecord {
    pub fn new(
        s_calib: Vec<Complex64>,
        attenuator_db: f64,
        tx_gain_dbi: f64,
        rx_gain_dbi: f64,
    ) -> Result<Self> {
        if ![attenuator_db, tx_gain_dbi, rx_gain_dbi]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::NonFinite("calibration gains".into()));
        }
        if s_calib.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::NonFinite("calibration s21".into()));
        }
        Ok(CalibrationRecord {
            s_calib,
            attenuator_db,
            tx_gain_dbi,
            rx_gain_dbi,
        })
    }

    /// Linear amplitude factor `H_att / (G_tx · G_rx)`.
    pub fn gain_factor(&self) -> f64 {
        db_to_amplitude(self.attenuator_db - self.tx_gain_dbi - self.rx_gain_dbi)
    }

    /// Apply the system response to a channel: the inverse of [`calibrate`].
    pub fn forward(&self, channel: &SweepGrid) -> Result<SweepGrid> {
        self.check_len(channel.config.n_points)?;
        let n = channel.config.n_points;
        let inv = 1.0 / self.gain_factor();
        let samples = channel
            .samples()
            .iter()
            .enumerate()
            .map(|(i, h)| h * self.s_calib[i % n] * inv)
            .collect();
        channel.with_samples(samples)
    }

    fn check_len(&self, n_points: usize) -> Result<()> {
        if self.s_calib.len() != n_points {
            return Err(Error::DimensionMismatch(format!(
                "calibration has {} points, sweep has {n_points}",
                self.s_calib.len()
            )));
        }
        Ok(())
    }
}

/// Parse a `calib/1` document; gains are taken from the sweep configuration.
pub fn parse_calibration_file(bytes: &[u8], config: &SystemConfig) -> Result<CalibrationRecord> {
    check_schema(bytes, CALIB_SCHEMA)?;
    let file: CalibFile = serde_json::from_slice(bytes)?;
    if file.s21.len() != config.n_points {
        return Err(Error::DimensionMismatch(format!(
            "calibration has {} points, configuration has {}",
            file.s21.len(),
            config.n_points
        )));
    }
    CalibrationRecord::new(
        to_complex(&file.s21),
        file.attenuator_db,
        config.tx_gain_dbi,
        config.rx_gain_dbi,
    )
}

pub fn write_calibration_file(cal: &CalibrationRecord) -> Result<Vec<u8>> {
    let file = CalibFile {
        schema: CALIB_SCHEMA.into(),
        attenuator_db: cal.attenuator_db,
        s21: to_pairs(&cal.s_calib),
    };
    Ok(serde_json::to_vec(&file)?)
}

/// Remove the measurement-system response from a raw S21 grid.
pub fn calibrate(raw: &SweepGrid, cal: &CalibrationRecord) -> Result<SweepGrid> {
    calibrate_with_floor(raw, cal, DEFAULT_CALIB_FLOOR)
}

pub fn calibrate_with_floor(
    raw: &SweepGrid,
    cal: &CalibrationRecord,
    floor: f64,
) -> Result<SweepGrid> {
    let n = raw.config.n_points;
    cal.check_len(n)?;
    if let Some((index, s)) = cal
        .s_calib
        .iter()
        .enumerate()
        .find(|(_, s)| !(s.norm() >= floor))
    {
        return Err(Error::CalibrationDegenerate {
            index,
            magnitude: s.norm(),
            floor,
        });
    }
    let factor = cal.gain_factor();
    let inv_cal: Vec<Complex64> = cal.s_calib.iter().map(|s| factor / s).collect();
    let samples = raw
        .samples()
        .iter()
        .enumerate()
        .map(|(i, s)| s * inv_cal[i % n])
        .collect();
    raw.with_samples(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tiny_config(n_az: usize, n_el: usize, n: usize) -> SystemConfig {
        SystemConfig {
            f_start_hz: 306e9,
            f_stop_hz: 321e9,
            n_points: n,
            az_grid_deg: (0..n_az).map(|i| 10.0 * i as f64).collect(),
            el_grid_deg: (0..n_el).map(|i| -10.0 + 10.0 * i as f64).collect(),
            ..SystemConfig::thz_306_321()
        }
    }

    fn grid_of(cfg: &SystemConfig, f: impl Fn(usize) -> Complex64) -> SweepGrid {
        let n = cfg.n_directions() * cfg.n_points;
        SweepGrid::new(cfg.clone(), "rx1", Case::Los, Some(5.0), (0..n).map(f).collect())
            .unwrap()
    }

    const MINIMAL: &str = r#"{"schema":"sweep/1","position_id":"rx0","case":"los",
        "tx_rx_distance_m":null,
        "config":{"f_start_hz":0,"f_stop_hz":1,"n_points":2,"az_grid_deg":[0],
                  "el_grid_deg":[0],"tx_gain_dbi":0,"rx_gain_dbi":0,"rx_hpbw_deg":8,
                  "noise_floor_dbm":-180},
        "samples":[{"az_deg":0,"el_deg":0,"s21":[[1,0],[0.5,-0.5]]}]}"#;

    #[test]
    fn parses_minimal_file() {
        let g = parse_sweep_file(MINIMAL.as_bytes()).unwrap();
        assert_eq!(g.config.n_az(), 1);
        assert_eq!(g.config.n_el(), 1);
        assert_eq!(g.samples().len(), 2);
        assert_eq!(g.samples()[1], Complex64::new(0.5, -0.5));
        assert_eq!(g.tx_rx_distance_m, None);
    }

    #[test]
    fn short_pencil_is_dimension_mismatch() {
        let doc = MINIMAL.replace("[[1,0],[0.5,-0.5]]", "[[1,0]]");
        assert!(matches!(
            parse_sweep_file(doc.as_bytes()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn schema_and_syntax_errors() {
        let doc = MINIMAL.replace("sweep/1", "sweep/2");
        assert!(matches!(
            parse_sweep_file(doc.as_bytes()),
            Err(Error::UnknownSchema { .. })
        ));
        assert!(matches!(
            parse_sweep_file(b"{\"schema\": \"sweep/1\""),
            Err(Error::Malformed(_))
        ));
        let doc = MINIMAL.replace("\"az_deg\":0,", "\"az_deg\":5,");
        assert!(matches!(
            parse_sweep_file(doc.as_bytes()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = tiny_config(3, 2, 4);
        let g = grid_of(&cfg, |i| Complex64::new(i as f64 * 0.1, -(i as f64)));
        let bytes = write_sweep_file(&g).unwrap();
        assert_eq!(parse_sweep_file(&bytes).unwrap(), g);
    }

    #[test]
    fn calibration_file_checks_length() {
        let cfg = tiny_config(1, 1, 3);
        let doc = r#"{"schema":"calib/1","attenuator_db":-40,"s21":[[1,0],[1,0]]}"#;
        assert!(matches!(
            parse_calibration_file(doc.as_bytes(), &cfg),
            Err(Error::DimensionMismatch(_))
        ));
        let doc = r#"{"schema":"calib/1","attenuator_db":-40,"s21":[[1,0],[1,0],[0,1]]}"#;
        let cal = parse_calibration_file(doc.as_bytes(), &cfg).unwrap();
        assert_eq!(cal.attenuator_db, -40.0);
        assert_eq!(cal.rx_gain_dbi, cfg.rx_gain_dbi);
    }

    #[test]
    fn equal_measure_and_calib_leave_constant() {
        let cfg = tiny_config(2, 1, 5);
        let s_cal: Vec<Complex64> = (0..5)
            .map(|k| Complex64::from_polar(0.3 + k as f64, 0.7 * k as f64))
            .collect();
        let raw = grid_of(&cfg, |i| s_cal[i % 5]);
        let cal = CalibrationRecord::new(s_cal, -40.0, 7.0, 26.0).unwrap();
        let h = calibrate(&raw, &cal).unwrap();
        let expected = 10f64.powf((-40.0 - 7.0 - 26.0) / 20.0);
        for v in h.samples() {
            assert!((v.norm() - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_calibration() {
        let cfg = tiny_config(2, 2, 3);
        let raw = grid_of(&cfg, |i| Complex64::new(i as f64, 1.0 - i as f64));
        let cal = CalibrationRecord::new(vec![Complex64::new(1.0, 0.0); 3], 0.0, 0.0, 0.0)
            .unwrap();
        assert_eq!(calibrate(&raw, &cal).unwrap(), raw);
    }

    #[test]
    fn degenerate_calibration_rejected() {
        let cfg = tiny_config(1, 1, 3);
        let raw = grid_of(&cfg, |_| Complex64::new(1.0, 0.0));
        let cal = CalibrationRecord::new(
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(1e-16, 0.0),
                Complex64::new(1.0, 0.0),
            ],
            -40.0,
            7.0,
            26.0,
        )
        .unwrap();
        match calibrate(&raw, &cal) {
            Err(Error::CalibrationDegenerate { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected degenerate error, got {other:?}"),
        }
        assert!(calibrate_with_floor(&raw, &cal, 1e-17).is_ok());
    }

    fn complex() -> impl Strategy<Value = Complex64> {
        (-1e3..1e3f64, -1e3..1e3f64).prop_map(|(r, i)| Complex64::new(r, i))
    }

    proptest! {
        #[test]
        fn forward_then_calibrate_recovers_channel(
            h in prop::collection::vec(complex(), 12),
            cal_mag in prop::collection::vec(1e-3..10.0f64, 3),
            cal_ph in prop::collection::vec(-std::f64::consts::PI..std::f64::consts::PI, 3),
            att in -60.0..0.0f64,
        ) {
            let cfg = tiny_config(2, 2, 3);
            let channel = grid_of(&cfg, |i| h[i]);
            let s_cal = cal_mag.iter().zip(&cal_ph)
                .map(|(&m, &p)| Complex64::from_polar(m, p)).collect();
            let cal = CalibrationRecord::new(s_cal, att, 7.0, 26.0).unwrap();
            let measured = cal.forward(&channel).unwrap();
            let back = calibrate(&measured, &cal).unwrap();
            for (a, b) in back.samples().iter().zip(channel.samples()) {
                prop_assert!((a - b).norm() <= 1e-12 * b.norm().max(1e-300));
            }
        }

        #[test]
        fn calibration_is_linear(
            x in prop::collection::vec(complex(), 6),
            y in prop::collection::vec(complex(), 6),
            a in complex(), b in complex(),
        ) {
            let cfg = tiny_config(2, 1, 3);
            let cal = CalibrationRecord::new(
                vec![Complex64::new(0.5, 0.1), Complex64::new(-0.2, 0.9), Complex64::new(1.5, -1.0)],
                -40.0, 7.0, 26.0).unwrap();
            let gx = grid_of(&cfg, |i| x[i]);
            let gy = grid_of(&cfg, |i| y[i]);
            let gxy = grid_of(&cfg, |i| a * x[i] + b * y[i]);
            let cx = calibrate(&gx, &cal).unwrap();
            let cy = calibrate(&gy, &cal).unwrap();
            let cxy = calibrate(&gxy, &cal).unwrap();
            for i in 0..6 {
                let lhs = cxy.samples()[i];
                let rhs = a * cx.samples()[i] + b * cy.samples()[i];
                let scale = (a * cx.samples()[i]).norm() + (b * cy.samples()[i]).norm();
                prop_assert!((lhs - rhs).norm() <= 1e-12 * scale.max(1e-300));
            }
        }
    }
}
