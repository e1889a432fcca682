//! Multipath-component distance and DBSCAN clustering under it.
//!
//! The MCD between two MPCs is `√(d² + ξ·d_τ²)`, where `d` is the Euclidean
//! distance between the unit arrival vectors `(cosθ cosφ, cosθ sinφ, sinθ)` and
//! `d_τ = |τ_i − τ_j| / τ_m` with `τ_m` the largest ToA of the set being clustered.

use std::cmp::Ordering;
use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sweep::{power_to_db, Mpc};

pub const CLUSTER_SCHEMA: &str = "cluster/1";

pub const DEFAULT_XI: f64 = 4.0;
pub const DEFAULT_EPS: f64 = 0.2;
pub const DEFAULT_MIN_PTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McdParams {
    pub xi: f64,
    pub tau_max_s: f64,
}

impl McdParams {
    /// Parameters with `τ_m` taken as the maximum ToA over `mpcs`.
    pub fn for_set(mpcs: &[Mpc], xi: f64) -> Self {
        McdParams {
            xi,
            tau_max_s: mpcs.iter().map(|m| m.toa_s).fold(0.0, f64::max),
        }
    }
}

/// Unit arrival vector for azimuth `az_deg` and elevation `el_deg`.
pub fn direction_vector(az_deg: f64, el_deg: f64) -> [f64; 3] {
    let (sa, ca) = az_deg.to_radians().sin_cos();
    let (se, ce) = el_deg.to_radians().sin_cos();
    [ce * ca, ce * sa, se]
}

fn spatial_sq(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

pub fn mcd(a: &Mpc, b: &Mpc, p: &McdParams) -> Result<f64> {
    let dt = (a.toa_s - b.toa_s).abs();
    let d_tau = if p.tau_max_s > 0.0 {
        dt / p.tau_max_s
    } else if dt == 0.0 {
        0.0
    } else {
        return Err(Error::DegenerateNormalizer);
    };
    let d2 = spatial_sq(
        &direction_vector(a.az_deg, a.el_deg),
        &direction_vector(b.az_deg, b.el_deg),
    );
    Ok((d2 + p.xi * d_tau * d_tau).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbscanConfig {
    pub eps: f64,
    pub min_pts: usize,
    pub xi: f64,
}

impl Default for DbscanConfig {
    fn default() -> Self {
        DbscanConfig {
            eps: DEFAULT_EPS,
            min_pts: DEFAULT_MIN_PTS,
            xi: DEFAULT_XI,
        }
    }
}

impl DbscanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {}", self.eps)));
        }
        if self.min_pts < 1 {
            return Err(Error::InvalidParameter("min_pts must be at least 1".into()));
        }
        if !(self.xi.is_finite() && self.xi > 0.0) {
            return Err(Error::InvalidParameter(format!("xi must be positive, got {}", self.xi)));
        }
        Ok(())
    }
}

/// Per-MPC cluster labels, in input order. `None` is noise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    pub labels: Vec<Option<usize>>,
    pub core: Vec<bool>,
    pub n_clusters: usize,
}

impl Labeling {
    pub fn noise_indices(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.is_none().then_some(i))
            .collect()
    }
}

fn scan_cmp(a: &Mpc, b: &Mpc) -> Ordering {
    a.toa_s
        .total_cmp(&b.toa_s)
        .then(a.az_deg.total_cmp(&b.az_deg))
        .then(a.el_deg.total_cmp(&b.el_deg))
}

/// Indices of `mpcs` in scan order: ToA, then azimuth, then elevation.
pub fn scan_order(mpcs: &[Mpc]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..mpcs.len()).collect();
    order.sort_by(|&i, &j| scan_cmp(&mpcs[i], &mpcs[j]).then(i.cmp(&j)));
    order
}

struct Points {
    toa: Vec<f64>,
    dir: Vec<[f64; 3]>,
}

impl Points {
    fn mcd_sq(&self, i: usize, j: usize, params: &McdParams) -> f64 {
        let d_tau = if params.tau_max_s > 0.0 {
            (self.toa[i] - self.toa[j]).abs() / params.tau_max_s
        } else {
            0.0
        };
        spatial_sq(&self.dir[i], &self.dir[j]) + params.xi * d_tau * d_tau
    }
}

/// DBSCAN under the MCD metric with a closed `eps` ball and self-inclusive counts.
///
/// Points are visited in [`scan_order`]; a border point joins the first cluster that
/// reaches it. `τ_m` is computed over `mpcs`.
pub fn dbscan(mpcs: &[Mpc], cfg: &DbscanConfig) -> Result<Labeling> {
    cfg.validate()?;
    let n = mpcs.len();
    if n == 0 {
        return Ok(Labeling {
            labels: Vec::new(),
            core: Vec::new(),
            n_clusters: 0,
        });
    }
    let params = McdParams::for_set(mpcs, cfg.xi);
    let order = scan_order(mpcs);
    // points re-indexed by scan position
    let pts = Points {
        toa: order.iter().map(|&i| mpcs[i].toa_s).collect(),
        dir: order
            .iter()
            .map(|&i| direction_vector(mpcs[i].az_deg, mpcs[i].el_deg))
            .collect(),
    };
    let eps_sq = cfg.eps * cfg.eps;
    // MCD ≥ √ξ·|Δτ|/τ_m bounds the ToA window of any neighbour
    let window = if params.tau_max_s > 0.0 {
        cfg.eps * params.tau_max_s / cfg.xi.sqrt() * (1.0 + 1e-9)
    } else {
        f64::INFINITY
    };
    let neighbours: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|p| {
            let lo = pts.toa.partition_point(|&t| t < pts.toa[p] - window);
            let hi = pts.toa.partition_point(|&t| t <= pts.toa[p] + window);
            (lo..hi)
                .filter(|&q| pts.mcd_sq(p, q, &params) <= eps_sq)
                .collect()
        })
        .collect();
    let core: Vec<bool> = neighbours.iter().map(|nb| nb.len() >= cfg.min_pts).collect();

    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut n_clusters = 0;
    let mut queue = VecDeque::new();
    for p in 0..n {
        if label[p].is_some() || !core[p] {
            continue;
        }
        let id = n_clusters;
        n_clusters += 1;
        label[p] = Some(id);
        queue.push_back(p);
        while let Some(q) = queue.pop_front() {
            for &r in &neighbours[q] {
                if label[r].is_none() {
                    label[r] = Some(id);
                    if core[r] {
                        queue.push_back(r);
                    }
                }
            }
        }
    }

    let mut labels = vec![None; n];
    let mut core_out = vec![false; n];
    for (pos, &i) in order.iter().enumerate() {
        labels[i] = label[pos];
        core_out[i] = core[pos];
    }
    Ok(Labeling {
        labels,
        core: core_out,
        n_clusters,
    })
}

/// Brute-force clustering used to validate [`dbscan`]: all-pairs neighbour graph,
/// union–find over core–core edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceClustering {
    pub core: Vec<bool>,
    /// Component id for core points.
    pub component: Vec<Option<usize>>,
    /// For each non-core point, the components of the core points within eps.
    pub reachable: Vec<Vec<usize>>,
}

pub fn reference_clustering(mpcs: &[Mpc], cfg: &DbscanConfig) -> Result<ReferenceClustering> {
    cfg.validate()?;
    let n = mpcs.len();
    let params = McdParams::for_set(mpcs, cfg.xi);
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            adj[i][j] = mcd(&mpcs[i], &mpcs[j], &params)? <= cfg.eps;
        }
    }
    let core: Vec<bool> = adj
        .iter()
        .map(|row| row.iter().filter(|&&b| b).count() >= cfg.min_pts)
        .collect();

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in 0..n {
            if core[i] && core[j] && adj[i][j] {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut component = vec![None; n];
    for i in 0..n {
        if core[i] {
            let r = find(&mut parent, i);
            let id = match roots.iter().position(|&x| x == r) {
                Some(id) => id,
                None => {
                    roots.push(r);
                    roots.len() - 1
                }
            };
            component[i] = Some(id);
        }
    }
    let reachable = (0..n)
        .map(|i| {
            if core[i] {
                return Vec::new();
            }
            let mut comps: Vec<usize> = (0..n)
                .filter(|&j| core[j] && adj[i][j])
                .filter_map(|j| component[j])
                .collect();
            comps.sort_unstable();
            comps.dedup();
            comps
        })
        .collect();
    Ok(ReferenceClustering {
        core,
        component,
        reachable,
    })
}

impl ReferenceClustering {
    /// Check a labeling against this reference: identical core flags, a one-to-one
    /// correspondence between clusters and core components, border points assigned
    /// to one of their reachable components, everything else noise.
    pub fn agrees_with(&self, labeling: &Labeling) -> bool {
        if labeling.core != self.core {
            return false;
        }
        let n_comp = self.component.iter().flatten().max().map_or(0, |m| m + 1);
        if n_comp != labeling.n_clusters {
            return false;
        }
        let mut to_label: Vec<Option<usize>> = vec![None; n_comp];
        let mut to_comp: Vec<Option<usize>> = vec![None; labeling.n_clusters];
        for (i, c) in self.component.iter().enumerate() {
            let Some(c) = *c else { continue };
            let Some(l) = labeling.labels[i] else {
                return false;
            };
            match (to_label[c], to_comp[l]) {
                (None, None) => {
                    to_label[c] = Some(l);
                    to_comp[l] = Some(c);
                }
                (Some(x), Some(y)) if x == l && y == c => {}
                _ => return false,
            }
        }
        for (i, reach) in self.reachable.iter().enumerate() {
            if self.core[i] {
                continue;
            }
            match labeling.labels[i] {
                None if reach.is_empty() => {}
                Some(l) => match to_comp[l] {
                    Some(c) if reach.contains(&c) => {}
                    _ => return false,
                },
                None => return false,
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub id: usize,
    pub member_indices: Vec<usize>,
    pub total_power_db: f64,
    pub centroid_toa_s: f64,
    pub centroid_az_deg: f64,
    pub centroid_el_deg: f64,
    pub n_members: usize,
}

/// Power-weighted circular mean of angles in degrees, in `(−180, 180]`.
pub fn circular_mean_deg(angles_deg: &[f64], weights: &[f64]) -> f64 {
    let (s, c) = angles_deg
        .iter()
        .zip(weights)
        .fold((0.0, 0.0), |(s, c), (&a, &w)| {
            let (sa, ca) = a.to_radians().sin_cos();
            (s + w * sa, c + w * ca)
        });
    s.atan2(c).to_degrees()
}

pub fn wrap_360(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Aggregate each labeled group: linear power sum, power-weighted mean ToA and
/// power-weighted circular mean angles.
pub fn summarize_clusters(mpcs: &[Mpc], labeling: &Labeling) -> Vec<Cluster> {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); labeling.n_clusters];
    for (i, l) in labeling.labels.iter().enumerate() {
        if let Some(l) = l {
            members[*l].push(i);
        }
    }
    members
        .into_iter()
        .enumerate()
        .filter(|(_, m)| !m.is_empty())
        .map(|(id, member_indices)| {
            let w: Vec<f64> = member_indices.iter().map(|&i| mpcs[i].power_linear()).collect();
            let total: f64 = w.iter().sum();
            let toa = member_indices
                .iter()
                .zip(&w)
                .map(|(&i, p)| p * mpcs[i].toa_s)
                .sum::<f64>()
                / total;
            let az: Vec<f64> = member_indices.iter().map(|&i| mpcs[i].az_deg).collect();
            let el: Vec<f64> = member_indices.iter().map(|&i| mpcs[i].el_deg).collect();
            Cluster {
                id,
                n_members: member_indices.len(),
                total_power_db: power_to_db(total),
                centroid_toa_s: toa,
                centroid_az_deg: wrap_360(circular_mean_deg(&az, &w)),
                centroid_el_deg: circular_mean_deg(&el, &w),
                member_indices,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub id: usize,
    pub member_indices: Vec<usize>,
    pub total_power_db: f64,
    pub centroid_toa_ns: f64,
    pub centroid_az_deg: f64,
    pub centroid_el_deg: f64,
    pub n_members: usize,
}

impl From<&Cluster> for ClusterRecord {
    fn from(c: &Cluster) -> Self {
        ClusterRecord {
            id: c.id,
            member_indices: c.member_indices.clone(),
            total_power_db: c.total_power_db,
            centroid_toa_ns: c.centroid_toa_s * 1e9,
            centroid_az_deg: c.centroid_az_deg,
            centroid_el_deg: c.centroid_el_deg,
            n_members: c.n_members,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterFile {
    pub schema: String,
    pub eps: f64,
    pub min_pts: usize,
    pub xi: f64,
    pub clusters: Vec<ClusterRecord>,
    pub noise_indices: Vec<usize>,
}

impl ClusterFile {
    pub fn new(cfg: &DbscanConfig, clusters: &[Cluster], labeling: &Labeling) -> Self {
        ClusterFile {
            schema: CLUSTER_SCHEMA.into(),
            eps: cfg.eps,
            min_pts: cfg.min_pts,
            xi: cfg.xi,
            clusters: clusters.iter().map(ClusterRecord::from).collect(),
            noise_indices: labeling.noise_indices(),
        }
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let file: ClusterFile = serde_json::from_slice(bytes)?;
        if file.schema != CLUSTER_SCHEMA {
            return Err(Error::UnknownSchema {
                found: file.schema,
                expected: CLUSTER_SCHEMA,
            });
        }
        Ok(file)
    }
}
