//! Back-to-back calibration: push a known channel through a system response,
//! serialize both files, parse them back and remove the response again.

use num_complex::Complex64;
use thz_channel::ingest::{
    calibrate, parse_calibration_file, parse_sweep_file, write_calibration_file, write_sweep_file,
    CalibrationRecord,
};
use thz_channel::sweep::{grid, Case, SweepGrid, SystemConfig};

fn main() -> thz_channel::Result<()> {
    let cfg = SystemConfig {
        n_points: 64,
        az_grid_deg: grid(0.0, 90.0, 30.0),
        el_grid_deg: vec![0.0],
        ..SystemConfig::thz_306_321()
    };
    let n = cfg.n_points;
    let channel: Vec<Complex64> = (0..cfg.n_directions() * n)
        .map(|i| Complex64::from_polar(1e-5 * (1.0 + (i / n) as f64), 0.01 * i as f64))
        .collect();
    let truth = SweepGrid::new(cfg.clone(), "rx1", Case::Los, Some(6.6), channel)?;

    // cable + attenuator response measured back to back
    let s_cal: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(0.3 + 0.001 * k as f64, -0.2 * k as f64))
        .collect();
    let cal = CalibrationRecord::new(s_cal, 40.0, cfg.tx_gain_dbi, cfg.rx_gain_dbi)?;
    let raw = cal.forward(&truth)?;

    let sweep_bytes = write_sweep_file(&raw)?;
    let calib_bytes = write_calibration_file(&cal)?;
    println!("sweep file {} bytes, calib file {} bytes", sweep_bytes.len(), calib_bytes.len());

    let raw = parse_sweep_file(&sweep_bytes)?;
    let cal = parse_calibration_file(&calib_bytes, &raw.config)?;
    let recovered = calibrate(&raw, &cal)?;
    let worst = recovered
        .samples()
        .iter()
        .zip(truth.samples())
        .map(|(a, b)| (a - b).norm() / b.norm())
        .fold(0.0, f64::max);
    println!("gain factor {:.3e}", cal.gain_factor());
    println!("max relative error after calibration {worst:.2e}");
    Ok(())
}
