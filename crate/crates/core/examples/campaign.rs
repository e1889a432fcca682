//! A small statistical campaign: generate LoS and NLoS positions, analyze them
//! end to end, and print the per-case fits.

use thz_channel::report::{analyze_campaign, AnalysisParams, RunManifest};
use thz_channel::sweep::{grid, Case, SystemConfig};
use thz_channel::synth::{generate_statistical, render_sweep, synthetic_calibration, AntennaModel, StatGenParams};

fn main() -> thz_channel::Result<()> {
    let cfg = SystemConfig {
        n_points: 1201,
        az_grid_deg: grid(0.0, 350.0, 10.0),
        el_grid_deg: grid(-10.0, 10.0, 10.0),
        ..SystemConfig::thz_306_321()
    };
    let cal = synthetic_calibration(&cfg, 40.0)?;
    let pattern = AntennaModel::for_config(&cfg);
    let mut sweeps = Vec::new();
    for (i, (case, d, ple)) in [
        (Case::Los, 4.0, 1.7222),
        (Case::Los, 9.0, 1.7222),
        (Case::Los, 15.0, 1.7222),
        (Case::Nlos, 6.0, 2.6),
        (Case::Nlos, 11.0, 2.6),
        (Case::Nlos, 17.0, 2.6),
    ]
    .into_iter()
    .enumerate()
    {
        let params = StatGenParams {
            mean_cluster_interval_s: if case == Case::Los { 22.59e-9 } else { 37.15e-9 },
            n_clusters_mean: 3.0,
            intra_cluster_count_mean: 2.0,
            intra_toa_jitter_s: 0.5e-9,
            intra_angle_jitter_deg: 2.0,
            ple,
            seed: i as u64,
        };
        let paths = generate_statistical(&params, d, cfg.center_frequency_hz())?;
        let mut s = render_sweep(&paths, &cfg, &pattern)?;
        s.position_id = format!("{}{i}", case.as_str());
        s.case = case;
        s.tx_rx_distance_m = Some(d);
        sweeps.push(cal.forward(&s)?);
    }

    let params = AnalysisParams::default();
    let (report, _) = analyze_campaign(&sweeps, &cal, &params, RunManifest::new("example"))?;
    for p in &report.positions {
        println!(
            "{:6} d={:5.1} m  PL_best {:6.2}  PL_omni {:6.2}  DS {:6.2} ns  ASA {:6.2}°  clusters {}",
            p.position_id,
            p.tx_rx_distance_m.unwrap_or(f64::NAN),
            p.path_loss.pl_best_db,
            p.path_loss.pl_omni_db,
            p.dispersion.ds_s * 1e9,
            p.dispersion.asa_deg,
            p.dispersion.n_clusters
        );
    }
    // paths between pointing directions lose part of their power to the 8° beam
    // on a 10° grid, so with three positions per case the fitted exponents run
    // above the generator's
    for f in &report.fits {
        println!(
            "{:?}: CI PLE best {:.3} omni {:.3} | alpha-beta best {:.3}/{:.2} dB",
            f.case, f.ci_best.ple, f.ci_omni.ple, f.alpha_beta_best.alpha, f.alpha_beta_best.beta_db
        );
    }
    Ok(())
}
