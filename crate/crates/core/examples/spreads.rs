//! Delay and angular spreads of small MPC sets.

use thz_channel::stats::{angular_spread, rms_delay_spread, Axis, MAX_CIRCULAR_SPREAD_DEG};
use thz_channel::Mpc;

fn main() -> thz_channel::Result<()> {
    let two = [Mpc::new(10e-9, 0.0, 0.0, -90.0), Mpc::new(30e-9, 20.0, 0.0, -90.0)];
    println!("two equal paths 20 ns apart: DS {:.3} ns", rms_delay_spread(&two)? * 1e9);
    println!("  ASA {:.3}°", angular_spread(&two, Axis::Azimuth)?);

    let wrapped = [Mpc::new(0.0, 350.0, -5.0, -90.0), Mpc::new(0.0, 10.0, 5.0, -90.0)];
    println!("350° and 10°: ASA {:.3}°  ESA {:.3}°", angular_spread(&wrapped, Axis::Azimuth)?, angular_spread(&wrapped, Axis::Elevation)?);

    let ring: Vec<Mpc> = (0..36).map(|k| Mpc::new(0.0, 10.0 * k as f64, 0.0, -90.0)).collect();
    println!(
        "uniform ring: ASA {:.2}° (bound {MAX_CIRCULAR_SPREAD_DEG}°)",
        angular_spread(&ring, Axis::Azimuth)?
    );

    // a dominant path with weak echoes
    let echoes = [
        Mpc::new(26e-9, 0.0, 0.0, -100.0),
        Mpc::new(40e-9, 90.0, 0.0, -115.0),
        Mpc::new(61e-9, 200.0, 10.0, -118.0),
    ];
    println!(
        "dominant + echoes: DS {:.2} ns  ASA {:.2}°",
        rms_delay_spread(&echoes)? * 1e9,
        angular_spread(&echoes, Axis::Azimuth)?
    );
    Ok(())
}
