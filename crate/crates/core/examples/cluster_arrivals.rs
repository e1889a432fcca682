//! Cluster arrival process: draw Poisson onsets, refit the mean, and test the
//! exponential fit.

use thz_channel::stats::{arrival_intervals, ks_exponential, mean_interval};
use thz_channel::synth::cluster_onsets;

fn main() -> thz_channel::Result<()> {
    for (seed, mean_ns) in [37.15, 22.59, 15.24, 8.9].into_iter().enumerate() {
        let mean = mean_ns * 1e-9;
        let onsets = cluster_onsets(10_001, mean, 0.0, seed as u64)?;
        let iv = arrival_intervals(&onsets);
        let fit = mean_interval(&iv)?;
        let ks = ks_exponential(&iv, mean)?;
        println!(
            "mean {mean_ns:6.2} ns -> {:7.3} ns ({:+.2}%)  KS D={:.4} p={:.3}",
            fit * 1e9,
            (fit / mean - 1.0) * 100.0,
            ks.statistic,
            ks.p_value
        );
    }
    Ok(())
}
