//! Power-delay-angular profile of a rendered three-path channel, written as CSV.

use thz_channel::cir::{compute_pdap, ctf_to_cir, ElevationMode};
use thz_channel::sweep::{db_to_amplitude, grid, SystemConfig};
use thz_channel::synth::{render_sweep, AntennaModel, GroundTruthPath};

fn main() -> thz_channel::Result<()> {
    let cfg = SystemConfig {
        n_points: 751,
        az_grid_deg: grid(0.0, 350.0, 10.0),
        el_grid_deg: grid(-10.0, 10.0, 10.0),
        ..SystemConfig::thz_306_321()
    };
    let step = cfg.delay_step_s();
    let path = |bin: f64, az: f64, db: f64| GroundTruthPath {
        toa_s: bin * step,
        az_deg: az,
        el_deg: 0.0,
        amplitude_linear: db_to_amplitude(db),
        phase_rad: 0.0,
    };
    let paths = [path(120.0, 0.0, -70.0), path(300.0, 90.0, -78.0), path(520.0, 250.0, -84.0)];
    let sweep = render_sweep(&paths, &cfg, &AntennaModel::for_config(&cfg))?;
    let cir = ctf_to_cir(&sweep);

    let pdap = compute_pdap(&cir, ElevationMode::MaxOverElevation)?;
    let floor = -120.0;
    let strong = thz_channel::cir::compute_pdap_with_floor(&cir, ElevationMode::Slice(1), floor)?;
    println!("cells above {} dBm floor: {}", cfg.noise_floor_dbm, pdap.above_floor_count());
    println!("cells above {floor} dB in the 0° slice: {}", strong.above_floor_count());
    for (a, t, p) in strong.cells().filter(|c| c.2 > -90.0) {
        println!("  az {:5.1}°  {:7.3} ns  {:6.2} dB", strong.az_axis_deg[a], strong.delay_axis_s[t] * 1e9, p);
    }
    let csv = strong.to_csv();
    println!("{}", csv.lines().take(4).collect::<Vec<_>>().join("\n"));
    Ok(())
}
