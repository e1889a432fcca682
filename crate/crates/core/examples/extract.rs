//! Threshold policies applied to one impulse-response grid.

use thz_channel::cir::ctf_to_cir;
use thz_channel::extract::{extract_mpcs, noise_threshold, ThresholdPolicy};
use thz_channel::sweep::{db_to_amplitude, grid, SystemConfig, SPEED_OF_LIGHT};
use thz_channel::synth::{render_sweep, AntennaModel, GroundTruthPath};

fn main() -> thz_channel::Result<()> {
    let cfg = SystemConfig {
        n_points: 1501,
        az_grid_deg: grid(0.0, 350.0, 10.0),
        el_grid_deg: vec![0.0],
        ..SystemConfig::thz_306_321()
    };
    // line of sight at 7.8 m plus two reflections
    let los = 7.8 / SPEED_OF_LIGHT;
    let paths = [
        (los, 0.0, -100.0),
        (los + 12e-9, 140.0, -112.0),
        (los + 30e-9, 220.0, -125.0),
    ]
    .map(|(t, az, db)| GroundTruthPath {
        toa_s: t,
        az_deg: az,
        el_deg: 0.0,
        amplitude_linear: db_to_amplitude(db),
        phase_rad: 1.0,
    });
    let cir = ctf_to_cir(&render_sweep(&paths, &cfg, &AntennaModel::for_config(&cfg))?);

    println!("P_TH(-100, -180) = {}", noise_threshold(-100.0, -180.0));
    for policy in [
        ThresholdPolicy::Relative,
        ThresholdPolicy::DynamicRange { range_db: 30.0 },
        ThresholdPolicy::Absolute { level_db: -160.0 },
    ] {
        let ex = extract_mpcs(&cir, &policy)?;
        let first = ex.mpcs.first().map_or(f64::NAN, |m| m.toa_s * 1e9);
        println!(
            "{:<40} threshold {:8.2} dB  {:5} MPCs  first ToA {first:.2} ns",
            format!("{policy:?}"),
            ex.threshold_db,
            ex.mpcs.len()
        );
    }
    Ok(())
}
