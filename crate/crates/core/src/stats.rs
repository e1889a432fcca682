//! Path loss, model fits, dispersion statistics and cluster arrival fits.
//!
//! Formulas:
//! - `PL_best = −10·log10(max P_ij)`, `PL_omni = −10·log10(Σ P_ij)`, `P_ij = Σ_t |h_ijt|²`
//! - `FSPL(d, f) = 20·log10(4π f d / c)`
//! - CI: `PL = 10·PLE·log10(d/d0) + FSPL(d0)`, PLE by least squares through the anchor
//! - α–β: `PL = 10·α·log10(d) + β`, ordinary least squares
//! - DS: `√(Σ P τ² / Σ P − (Σ P τ / Σ P)²)` in linear power
//! - ASA/ESA: `min_Δ √(Σ P (θ_Δ − μ_Δ)² / Σ P)`, angles wrapped to a 360° window
//!   starting at `Δ` (circular spread)
//!
//! Shadow-fading deviations use population normalization (divide by `n`).

use serde::{Deserialize, Serialize};

use crate::cir::direction_power;
use crate::cluster::Cluster;
use crate::error::{Error, Result};
use crate::extract::SurvivorMask;
use crate::sweep::{power_to_db, Case, CirGrid, Mpc, SPEED_OF_LIGHT};

/// Theoretical maximum of the circular angular spread (degrees).
pub const MAX_CIRCULAR_SPREAD_DEG: f64 = 104.3;

pub const DS_FORMULA: &str = "DS = sqrt(sum(P*tau^2)/sum(P) - (sum(P*tau)/sum(P))^2), P linear";
pub const AS_FORMULA: &str =
    "AS = min_D sqrt(sum(P*(theta_D - mu_D)^2)/sum(P)), theta_D = angles wrapped into [D, D+360), mu_D power-weighted mean";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLosses {
    pub pl_best_db: f64,
    pub pl_omni_db: f64,
    pub best_az_deg: f64,
    pub best_el_deg: f64,
}

/// Best-direction and omni-directional path loss of one position.
pub fn path_losses(cir: &CirGrid, mask: Option<&SurvivorMask>) -> Result<PathLosses> {
    let cfg = &cir.config;
    let mut best = (0.0, 0, 0);
    let mut total = 0.0;
    for a in 0..cfg.n_az() {
        for e in 0..cfg.n_el() {
            let p = direction_power(cir, a, e, mask)?;
            total += p;
            if p > best.0 {
                best = (p, a, e);
            }
        }
    }
    if !(total > 0.0) {
        return Err(Error::NoSignal(format!(
            "no surviving power at position `{}`",
            cir.position_id
        )));
    }
    Ok(PathLosses {
        pl_best_db: -power_to_db(best.0),
        pl_omni_db: -power_to_db(total),
        best_az_deg: cfg.az_grid_deg[best.1],
        best_el_deg: cfg.el_grid_deg[best.2],
    })
}

/// Friis free-space path loss in dB.
pub fn fspl(d_m: f64, f_hz: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * f_hz * d_m / SPEED_OF_LIGHT).log10()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathLossSample {
    pub position_id: String,
    pub distance_m: f64,
    pub pl_best_db: f64,
    pub pl_omni_db: f64,
    pub case: Case,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Best,
    Omni,
}

impl PathLossSample {
    pub fn loss(&self, which: Which) -> f64 {
        match which {
            Which::Best => self.pl_best_db,
            Which::Omni => self.pl_omni_db,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiFit {
    pub ple: f64,
    pub sigma_sf_db: f64,
    pub d0_m: f64,
    pub f_hz: f64,
}

impl CiFit {
    pub fn predict(&self, d_m: f64) -> f64 {
        10.0 * self.ple * (d_m / self.d0_m).log10() + fspl(self.d0_m, self.f_hz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaBetaFit {
    pub alpha: f64,
    pub beta_db: f64,
    pub sigma_sf_db: f64,
}

impl AlphaBetaFit {
    pub fn predict(&self, d_m: f64) -> f64 {
        10.0 * self.alpha * d_m.log10() + self.beta_db
    }
}

fn check_distances(samples: &[PathLossSample]) -> Result<()> {
    if let Some(s) = samples
        .iter()
        .find(|s| !(s.distance_m.is_finite() && s.distance_m > 0.0))
    {
        return Err(Error::InvalidParameter(format!(
            "distance of `{}` must be positive, got {}",
            s.position_id, s.distance_m
        )));
    }
    let first = samples.first().map(|s| s.distance_m);
    if samples.len() < 2 || samples.iter().all(|s| Some(s.distance_m) == first) {
        return Err(Error::RankDeficient(
            "path-loss fit needs at least two distinct distances".into(),
        ));
    }
    Ok(())
}

fn rms(residuals: impl Iterator<Item = f64>) -> f64 {
    let (n, ss) = residuals.fold((0usize, 0.0), |(n, ss), r| (n + 1, ss + r * r));
    (ss / n as f64).sqrt()
}

/// Close-in model fit: the PLE minimizing the shadow-fading deviation.
pub fn fit_ci(samples: &[PathLossSample], which: Which, d0_m: f64, f_hz: f64) -> Result<CiFit> {
    check_distances(samples)?;
    if !(d0_m > 0.0 && f_hz > 0.0) {
        return Err(Error::InvalidParameter("d0 and frequency must be positive".into()));
    }
    let anchor = fspl(d0_m, f_hz);
    let xs: Vec<f64> = samples.iter().map(|s| 10.0 * (s.distance_m / d0_m).log10()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.loss(which) - anchor).collect();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    if sxx == 0.0 {
        return Err(Error::RankDeficient("all distances equal d0".into()));
    }
    let ple = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>() / sxx;
    let sigma_sf_db = rms(xs.iter().zip(&ys).map(|(x, y)| y - ple * x));
    Ok(CiFit {
        ple,
        sigma_sf_db,
        d0_m,
        f_hz,
    })
}

/// Floating-intercept fit by ordinary least squares on `(10·log10 d, 1)`.
pub fn fit_alpha_beta(samples: &[PathLossSample], which: Which) -> Result<AlphaBetaFit> {
    check_distances(samples)?;
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| 10.0 * s.distance_m.log10()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.loss(which)).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let alpha = sxy / sxx;
    let beta_db = my - alpha * mx;
    let sigma_sf_db = rms(xs.iter().zip(&ys).map(|(x, y)| y - (alpha * x + beta_db)));
    Ok(AlphaBetaFit {
        alpha,
        beta_db,
        sigma_sf_db,
    })
}

fn require_non_empty(mpcs: &[Mpc], what: &str) -> Result<()> {
    if mpcs.is_empty() {
        return Err(Error::InsufficientData(format!("{what} of an empty MPC set")));
    }
    Ok(())
}

/// Power-weighted RMS delay spread in seconds.
pub fn rms_delay_spread(mpcs: &[Mpc]) -> Result<f64> {
    require_non_empty(mpcs, "delay spread")?;
    let w: Vec<f64> = mpcs.iter().map(Mpc::power_linear).collect();
    let total: f64 = w.iter().sum();
    let t0 = mpcs.iter().map(|m| m.toa_s).fold(f64::INFINITY, f64::min);
    let mean = mpcs.iter().zip(&w).map(|(m, p)| p * (m.toa_s - t0)).sum::<f64>() / total;
    // centred second moment: same quantity, without cancellation
    let var = mpcs
        .iter()
        .zip(&w)
        .map(|(m, p)| p * (m.toa_s - t0 - mean).powi(2))
        .sum::<f64>()
        / total;
    Ok(var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Azimuth,
    Elevation,
}

/// Power-weighted circular angular spread in degrees.
pub fn angular_spread(mpcs: &[Mpc], axis: Axis) -> Result<f64> {
    require_non_empty(mpcs, "angular spread")?;
    let angles: Vec<f64> = mpcs
        .iter()
        .map(|m| match axis {
            Axis::Azimuth => m.az_deg,
            Axis::Elevation => m.el_deg,
        })
        .collect();
    let w: Vec<f64> = mpcs.iter().map(Mpc::power_linear).collect();
    Ok(circular_spread_deg(&angles, &w))
}

/// Minimum over window positions of the weighted standard deviation of the
/// angles unwrapped into a 360° window.
///
/// The deviation is constant while the window start moves between two data
/// points, so only the `n` windows starting at a data angle need checking.
pub fn circular_spread_deg(angles_deg: &[f64], weights: &[f64]) -> f64 {
    let mut pts: Vec<(f64, f64)> = angles_deg
        .iter()
        .zip(weights)
        .map(|(&a, &w)| (a.rem_euclid(360.0), w))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pts.len();
    let total: f64 = pts.iter().map(|p| p.1).sum();
    if n < 2 || !(total > 0.0) {
        return 0.0;
    }

    // rough pass with running sums, centred on the first angle
    let origin = pts[0].0;
    let (mut s1, mut s2) = pts.iter().fold((0.0, 0.0), |(s1, s2), &(a, w)| {
        let x = a - origin;
        (s1 + w * x, s2 + w * x * x)
    });
    let mut approx = Vec::with_capacity(n);
    for &(a, w) in &pts {
        let mean = s1 / total;
        approx.push((s2 / total - mean * mean).max(0.0));
        let x = a - origin;
        s1 += w * 360.0;
        s2 += w * ((x + 360.0).powi(2) - x * x);
    }
    let min_approx = approx.iter().copied().fold(f64::INFINITY, f64::min);
    // 360² · 1e-9 covers the rounding of the running sums
    let slack = 360.0 * 360.0 * 1e-9;

    let exact = |c: usize| -> f64 {
        let start = pts[c].0;
        let unwrapped = |a: f64| if a < start { a + 360.0 } else { a };
        let mean = pts.iter().map(|&(a, w)| w * unwrapped(a)).sum::<f64>() / total;
        pts.iter()
            .map(|&(a, w)| w * (unwrapped(a) - mean).powi(2))
            .sum::<f64>()
            / total
    };
    (0..n)
        .filter(|&c| approx[c] <= min_approx + slack)
        .map(exact)
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalFit {
    /// Maximum-likelihood exponential mean: the sample mean of the intervals.
    pub mean_interval_s: f64,
    pub intervals_s: Vec<f64>,
}

/// Consecutive differences of sorted arrival times.
pub fn arrival_intervals(toas_s: &[f64]) -> Vec<f64> {
    let mut sorted = toas_s.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.windows(2).map(|w| w[1] - w[0]).collect()
}

pub fn mean_interval(intervals: &[f64]) -> Result<f64> {
    if intervals.is_empty() {
        return Err(Error::InsufficientData(
            "arrival fit needs at least two clusters".into(),
        ));
    }
    Ok(intervals.iter().sum::<f64>() / intervals.len() as f64)
}

/// Exponential fit of the inter-cluster arrival intervals.
pub fn cluster_arrival_fit(clusters: &[Cluster]) -> Result<ArrivalFit> {
    let toas: Vec<f64> = clusters.iter().map(|c| c.centroid_toa_s).collect();
    let intervals_s = arrival_intervals(&toas);
    Ok(ArrivalFit {
        mean_interval_s: mean_interval(&intervals_s)?,
        intervals_s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov test against an exponential of known mean.
pub fn ks_exponential(samples: &[f64], mean: f64) -> Result<KsTest> {
    if samples.is_empty() || !(mean > 0.0) {
        return Err(Error::InsufficientData("KS test needs samples and a positive mean".into()));
    }
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let d = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = if v <= 0.0 { 0.0 } else { 1.0 - (-v / mean).exp() };
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    let sqrt_n = n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    Ok(KsTest {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
    })
}

/// `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²)`.
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    if lambda < 1.18 {
        // dual theta series, fast where the alternating one is not
        let c = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=20).map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp()).sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-12 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionStats {
    pub ds_s: f64,
    pub asa_deg: f64,
    pub esa_deg: f64,
    pub n_clusters: usize,
    pub mean_cluster_interval_s: Option<f64>,
}

pub fn dispersion_stats(mpcs: &[Mpc], clusters: &[Cluster]) -> Result<DispersionStats> {
    Ok(DispersionStats {
        ds_s: rms_delay_spread(mpcs)?,
        asa_deg: angular_spread(mpcs, Axis::Azimuth)?,
        esa_deg: angular_spread(mpcs, Axis::Elevation)?,
        n_clusters: clusters.len(),
        mean_cluster_interval_s: cluster_arrival_fit(clusters).ok().map(|f| f.mean_interval_s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::SystemConfig;
    use num_complex::Complex64;
    use proptest::prelude::*;

    const F: f64 = 313.5e9;

    fn sample(d: f64, pl: f64) -> PathLossSample {
        PathLossSample {
            position_id: format!("d{d}"),
            distance_m: d,
            pl_best_db: pl,
            pl_omni_db: pl - 3.0,
            case: Case::Los,
        }
    }

    #[test]
    fn fspl_values() {
        assert!((fspl(1.0, F) - 82.37).abs() < 0.005);
        assert!((fspl(2.0, F) - fspl(1.0, F) - 6.0206).abs() < 1e-4);
        let d = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * F);
        assert!(fspl(d, F).abs() < 1e-12);
    }

    #[test]
    fn free_space_ci_fit() {
        let s: Vec<_> = [2.0, 5.0, 9.0, 14.0].iter().map(|&d| sample(d, fspl(d, F))).collect();
        let fit = fit_ci(&s, Which::Best, 1.0, F).unwrap();
        assert!((fit.ple - 2.0).abs() < 1e-12);
        assert!(fit.sigma_sf_db < 1e-9);
    }

    #[test]
    fn ci_fit_recovers_generator_ple() {
        for ple in [1.7222, 1.3910] {
            let s: Vec<_> = (1..=13)
                .map(|i| {
                    let d = 3.0 + 2.5 * i as f64;
                    sample(d, 10.0 * ple * d.log10() + fspl(1.0, F))
                })
                .collect();
            let fit = fit_ci(&s, Which::Best, 1.0, F).unwrap();
            assert!((fit.ple - ple).abs() < 1e-9);
        }
    }

    #[test]
    fn equal_distances_are_rank_deficient() {
        let s = vec![sample(5.0, 100.0), sample(5.0, 101.0)];
        assert!(matches!(fit_ci(&s, Which::Best, 1.0, F), Err(Error::RankDeficient(_))));
        assert!(matches!(fit_alpha_beta(&s, Which::Omni), Err(Error::RankDeficient(_))));
        assert!(matches!(
            fit_alpha_beta(&s[..1], Which::Omni),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn alpha_beta_exact_line() {
        let s: Vec<_> = [3.0, 7.0, 11.0, 19.0]
            .iter()
            .map(|&d| sample(d, 10.0 * 1.57 * d.log10() + 90.0))
            .collect();
        let fit = fit_alpha_beta(&s, Which::Best).unwrap();
        assert!((fit.alpha - 1.57).abs() < 1e-12);
        assert!((fit.beta_db - 90.0).abs() < 1e-11);
        let omni = fit_alpha_beta(&s, Which::Omni).unwrap();
        assert!((omni.beta_db - 87.0).abs() < 1e-11);
    }

    #[test]
    fn alpha_beta_free_space() {
        let s: Vec<_> = [1.5, 4.0, 8.0, 20.0].iter().map(|&d| sample(d, fspl(d, F))).collect();
        let fit = fit_alpha_beta(&s, Which::Best).unwrap();
        assert!((fit.alpha - 2.0).abs() < 1e-12);
        assert!((fit.beta_db - fspl(1.0, F)).abs() < 1e-10);
    }

    fn grid_with_directions(powers: &[f64]) -> CirGrid {
        let cfg = SystemConfig {
            n_points: 4,
            az_grid_deg: (0..powers.len()).map(|i| 10.0 * i as f64).collect(),
            el_grid_deg: vec![0.0],
            ..SystemConfig::thz_306_321()
        };
        let mut s = vec![Complex64::new(0.0, 0.0); powers.len() * 4];
        for (i, p) in powers.iter().enumerate() {
            s[i * 4 + 1] = Complex64::new(p.sqrt(), 0.0);
        }
        CirGrid::new(cfg, "p", s).unwrap()
    }

    #[test]
    fn path_loss_examples() {
        let pl = path_losses(&grid_with_directions(&[1e-12]), None).unwrap();
        assert!((pl.pl_best_db - 120.0).abs() < 1e-9);
        assert!((pl.pl_omni_db - 120.0).abs() < 1e-9);

        let pl = path_losses(&grid_with_directions(&[1e-10, 1e-10]), None).unwrap();
        assert!((pl.pl_best_db - pl.pl_omni_db - 10.0 * 2f64.log10()).abs() < 1e-9);

        assert!(matches!(
            path_losses(&grid_with_directions(&[0.0, 0.0]), None),
            Err(Error::NoSignal(_))
        ));
    }

    #[test]
    fn omni_offset_on_lobby_like_grid() {
        // strongest beam carries 35% of the power: omni 4.56 dB below best
        let mut p = vec![0.35e-10, 0.2e-10, 0.15e-10, 0.12e-10, 0.1e-10, 0.08e-10];
        p.resize(36, 0.0);
        let pl = path_losses(&grid_with_directions(&p), None).unwrap();
        let offset = pl.pl_best_db - pl.pl_omni_db;
        assert!((4.0..=5.0).contains(&offset), "offset {offset}");
    }

    #[test]
    fn delay_spread_examples() {
        assert_eq!(rms_delay_spread(&[Mpc::new(7e-9, 0.0, 0.0, -90.0)]).unwrap(), 0.0);
        // binary-exact delays: the two-point spread is exactly Δ/2
        let delta = 2f64.powi(-27);
        let two = [Mpc::new(0.0, 0.0, 0.0, 0.0), Mpc::new(delta, 0.0, 0.0, 0.0)];
        assert_eq!(rms_delay_spread(&two).unwrap(), delta / 2.0);
        assert!(rms_delay_spread(&[]).is_err());
    }

    #[test]
    fn angular_spread_examples() {
        let m = |a: f64| Mpc::new(0.0, a, 0.0, -90.0);
        assert_eq!(angular_spread(&[m(123.0)], Axis::Azimuth).unwrap(), 0.0);
        assert!((angular_spread(&[m(0.0), m(20.0)], Axis::Azimuth).unwrap() - 10.0).abs() < 1e-12);
        assert!((angular_spread(&[m(350.0), m(10.0)], Axis::Azimuth).unwrap() - 10.0).abs() < 1e-12);
        let e = |el: f64| Mpc::new(0.0, 0.0, el, -90.0);
        assert!((angular_spread(&[e(-20.0), e(20.0)], Axis::Elevation).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn arrival_fit_examples() {
        let c = |t: f64| Cluster {
            id: 0,
            member_indices: vec![0],
            total_power_db: -90.0,
            centroid_toa_s: t,
            centroid_az_deg: 0.0,
            centroid_el_deg: 0.0,
            n_members: 1,
        };
        let fit = cluster_arrival_fit(&[c(30e-9), c(0.0), c(20e-9), c(10e-9)]).unwrap();
        assert!((fit.mean_interval_s - 10e-9).abs() < 1e-20);
        assert_eq!(fit.intervals_s.len(), 3);
        assert!(matches!(cluster_arrival_fit(&[c(1e-9)]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn ks_detects_wrong_mean() {
        // deterministic exponential quantiles
        let n = 2000;
        let xs: Vec<f64> = (0..n)
            .map(|i| -10.0 * (1.0 - (i as f64 + 0.5) / n as f64).ln())
            .collect();
        assert!(ks_exponential(&xs, 10.0).unwrap().p_value > 0.99);
        assert!(ks_exponential(&xs, 13.0).unwrap().p_value < 1e-6);
    }

    fn weighted_angles() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((0.0..360.0f64, -30.0..0.0f64), 1..40)
    }

    proptest! {
        #[test]
        fn spread_is_rotation_invariant(pts in weighted_angles(), rot in 0.0..360.0f64) {
            let a: Vec<Mpc> = pts.iter().map(|&(az, p)| Mpc::new(0.0, az, 0.0, p)).collect();
            let b: Vec<Mpc> = pts.iter()
                .map(|&(az, p)| Mpc::new(0.0, (az + rot).rem_euclid(360.0), 0.0, p)).collect();
            let sa = angular_spread(&a, Axis::Azimuth).unwrap();
            let sb = angular_spread(&b, Axis::Azimuth).unwrap();
            prop_assert!((sa - sb).abs() < 1e-9, "{} vs {}", sa, sb);
            prop_assert!(sa <= MAX_CIRCULAR_SPREAD_DEG);
        }

        #[test]
        fn delay_spread_scaling_and_translation(
            pts in prop::collection::vec((0.0..300e-9f64, -40.0..0.0f64), 1..30),
            shift in 0.0..100e-9f64, gain in -30.0..30.0f64,
        ) {
            let a: Vec<Mpc> = pts.iter().map(|&(t, p)| Mpc::new(t, 0.0, 0.0, p)).collect();
            let b: Vec<Mpc> = pts.iter().map(|&(t, p)| Mpc::new(t + shift, 0.0, 0.0, p + gain)).collect();
            let da = rms_delay_spread(&a).unwrap();
            let db = rms_delay_spread(&b).unwrap();
            prop_assert!((da - db).abs() < 1e-9 * 300e-9);
        }

        #[test]
        fn fit_residuals_are_orthogonal(
            pts in prop::collection::vec((1.0..50.0f64, 60.0..140.0f64), 3..30),
        ) {
            let s: Vec<_> = pts.iter().map(|&(d, pl)| sample(d, pl)).collect();
            prop_assume!(s.iter().any(|x| (x.distance_m - s[0].distance_m).abs() > 1e-3));
            let ci = fit_ci(&s, Which::Best, 1.0, F).unwrap();
            let dot: f64 = s.iter()
                .map(|x| 10.0 * x.distance_m.log10() * (x.pl_best_db - ci.predict(x.distance_m)))
                .sum();
            prop_assert!(dot.abs() < 1e-9);
            let ab = fit_alpha_beta(&s, Which::Best).unwrap();
            let (r0, r1) = s.iter().fold((0.0, 0.0), |(r0, r1), x| {
                let r = x.pl_best_db - ab.predict(x.distance_m);
                (r0 + r, r1 + r * 10.0 * x.distance_m.log10())
            });
            prop_assert!(r0.abs() < 1e-9);
            prop_assert!(r1.abs() < 1e-9);
        }

        #[test]
        fn omni_never_exceeds_best(amps in prop::collection::vec(0.0..1e-4f64, 2..12)) {
            prop_assume!(amps.iter().any(|&a| a > 0.0));
            let powers: Vec<f64> = amps.iter().map(|a| a * a).collect();
            let pl = path_losses(&grid_with_directions(&powers), None).unwrap();
            prop_assert!(pl.pl_omni_db <= pl.pl_best_db);
        }
    }
}
