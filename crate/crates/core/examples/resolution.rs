//! Delay/space resolution and unambiguous range of the 306–321 GHz sounder.

use thz_channel::{derive_resolution, SystemConfig};

fn main() -> thz_channel::Result<()> {
    let cfg = SystemConfig::thz_306_321();
    let r = derive_resolution(&cfg)?;
    println!("bandwidth        {:.1} GHz", cfg.bandwidth_hz() / 1e9);
    println!("sweep interval   {:.2} MHz", cfg.sweep_interval_hz() / 1e6);
    println!("time resolution  {:.2} ps", r.time_res_s * 1e12);
    println!("space resolution {:.2} cm", r.space_res_m * 100.0);
    println!("max excess delay {:.1} ns", r.max_excess_delay_s * 1e9);
    println!("max path length  {:.1} m", r.max_path_m);
    println!("IDFT bin spacing {:.3} ps", cfg.delay_step_s() * 1e12);
    println!("pointing grid    {} az x {} el", cfg.n_az(), cfg.n_el());
    Ok(())
}
