//! MCD-DBSCAN on a synthetic MPC cloud, checked against the brute-force reference.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thz_channel::cluster::{dbscan, reference_clustering, summarize_clusters, DbscanConfig};
use thz_channel::Mpc;

fn main() -> thz_channel::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let centres = [(20e-9, 10.0, 0.0), (45e-9, 120.0, 10.0), (80e-9, 250.0, -10.0)];
    let mut mpcs = Vec::new();
    for &(t, az, el) in &centres {
        for _ in 0..30 {
            mpcs.push(Mpc::new(
                t + rng.random_range(-1e-9..1e-9),
                az + rng.random_range(-5.0..5.0),
                el + rng.random_range(-3.0..3.0),
                rng.random_range(-120.0..-100.0),
            ));
        }
    }
    for _ in 0..10 {
        mpcs.push(Mpc::new(
            rng.random_range(0.0..100e-9),
            rng.random_range(0.0..360.0),
            rng.random_range(-20.0..20.0),
            -130.0,
        ));
    }

    let cfg = DbscanConfig::default();
    let labels = dbscan(&mpcs, &cfg)?;
    let agrees = reference_clustering(&mpcs, &cfg)?.agrees_with(&labels);
    println!("{} MPCs -> {} clusters, {} noise", mpcs.len(), labels.n_clusters, labels.noise_indices().len());
    println!("matches brute-force reference: {agrees}");
    for c in summarize_clusters(&mpcs, &labels) {
        println!(
            "  cluster {}: {:3} members  ToA {:6.2} ns  az {:6.1}°  el {:5.1}°  {:7.2} dB",
            c.id,
            c.n_members,
            c.centroid_toa_s * 1e9,
            c.centroid_az_deg,
            c.centroid_el_deg,
            c.total_power_db
        );
    }
    Ok(())
}
