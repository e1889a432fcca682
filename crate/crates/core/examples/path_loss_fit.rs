//! CI and alpha-beta fits on a shadowed set of path-loss samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thz_channel::stats::{fit_alpha_beta, fit_ci, fspl, PathLossSample, Which};
use thz_channel::Case;

fn main() -> thz_channel::Result<()> {
    let f = 313.5e9;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let shadow = Normal::new(0.0, 2.0).unwrap();
    let samples: Vec<PathLossSample> = (0..40)
        .map(|i| {
            let d = 3.0 + 0.5 * i as f64;
            let best = fspl(1.0, f) + 10.0 * 1.7222 * d.log10() + shadow.sample(&mut rng);
            let omni = fspl(1.0, f) + 10.0 * 1.3910 * d.log10() + shadow.sample(&mut rng);
            PathLossSample {
                position_id: format!("rx{i}"),
                distance_m: d,
                pl_best_db: best,
                pl_omni_db: omni,
                case: Case::Los,
            }
        })
        .collect();

    println!("FSPL(1 m, {:.1} GHz) = {:.2} dB", f / 1e9, fspl(1.0, f));
    for which in [Which::Best, Which::Omni] {
        let ci = fit_ci(&samples, which, 1.0, f)?;
        let ab = fit_alpha_beta(&samples, which)?;
        println!(
            "{which:?}: CI PLE {:.4} sigma {:.2} dB | alpha {:.3} beta {:.2} dB sigma {:.2} dB",
            ci.ple, ci.sigma_sf_db, ab.alpha, ab.beta_db, ab.sigma_sf_db
        );
    }
    Ok(())
}
