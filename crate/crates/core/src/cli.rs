//! The `thz-sounder` command line.
//!
//! Exit codes: 0 ok, 2 parse, 3 calibration, 4 no signal, 5 rank deficient, 1 other.
//! Errors are written to stderr as one JSON object.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cir::{compute_pdap, ctf_to_cir, ElevationMode};
use crate::cluster::{DbscanConfig, DEFAULT_EPS, DEFAULT_MIN_PTS, DEFAULT_XI};
use crate::error::{Error, Result};
use crate::extract::ThresholdPolicy;
use crate::ingest::{
    calibrate, parse_calibration_file, parse_sweep_file, write_calibration_file, write_sweep_file,
};
use crate::report::{analyze_campaign, AnalysisParams, InputRecord, RunManifest};
use crate::sweep::{Case, SweepGrid, SystemConfig};
use crate::synth::{
    generate_statistical, parse_truth_file, render_sweep, roundtrip_sweep, synthetic_calibration,
    write_truth_file, AntennaModel, PipelineParams, RoundtripReport, StatGenParams,
};

#[derive(Debug, Parser)]
#[command(name = "thz-sounder", version, about = "Directional channel-sounding analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrate, extract, cluster and fit a set of sweeps.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic raw sweep, its ground truth and a calibration file.
    Synth(SynthArgs),
    /// Compare a sweep's extracted clusters with its ground truth.
    Roundtrip(RoundtripArgs),
    /// Write the power-delay-angular profile of a sweep as CSV.
    ExportPdap(ExportPdapArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThresholdMode {
    Relative,
    Absolute,
    Range,
}

#[derive(Debug, Clone, Args)]
pub struct PolicyArgs {
    #[arg(long, value_enum, default_value = "relative")]
    pub threshold_mode: ThresholdMode,
    /// Level for `--threshold-mode absolute`.
    #[arg(long, allow_hyphen_values = true)]
    pub threshold_db: Option<f64>,
    /// Window below the peak for `--threshold-mode range`.
    #[arg(long, default_value_t = 30.0, allow_hyphen_values = true)]
    pub range_db: f64,
    #[arg(long, default_value_t = DEFAULT_EPS, allow_hyphen_values = true)]
    pub eps: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_PTS)]
    pub min_pts: usize,
    #[arg(long, default_value_t = DEFAULT_XI, allow_hyphen_values = true)]
    pub xi: f64,
}

impl PolicyArgs {
    pub fn policy(&self) -> Result<ThresholdPolicy> {
        let policy = match self.threshold_mode {
            ThresholdMode::Relative => ThresholdPolicy::Relative,
            ThresholdMode::Absolute => ThresholdPolicy::Absolute {
                level_db: self.threshold_db.ok_or_else(|| {
                    Error::InvalidParameter("absolute mode needs --threshold-db".into())
                })?,
            },
            ThresholdMode::Range => ThresholdPolicy::DynamicRange {
                range_db: self.range_db,
            },
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn dbscan(&self) -> Result<DbscanConfig> {
        let cfg = DbscanConfig {
            eps: self.eps,
            min_pts: self.min_pts,
            xi: self.xi,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Raw sweep files (`sweep/1`).
    #[arg(required = true)]
    pub sweeps: Vec<PathBuf>,
    #[arg(long)]
    pub calib: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// CI reference distance in metres.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub d0: f64,
    /// CI anchor frequency; defaults to the band centre.
    #[arg(long, allow_hyphen_values = true)]
    pub freq_ghz: Option<f64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "p0")]
    pub position_id: String,
    #[arg(long, default_value = "los")]
    pub case: Case,
    #[arg(long, default_value_t = 10.0)]
    pub distance_m: f64,
    /// Render these paths instead of drawing a statistical channel.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// System configuration (JSON); the 306–321 GHz sounder by default.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_points: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    pub ple: f64,
    #[arg(long, default_value_t = 37.15)]
    pub mean_interval_ns: f64,
    #[arg(long, default_value_t = 6.0)]
    pub clusters_mean: f64,
    #[arg(long, default_value_t = 4.0)]
    pub paths_mean: f64,
    #[arg(long, default_value_t = 1.0)]
    pub toa_jitter_ns: f64,
    #[arg(long, default_value_t = 3.0)]
    pub angle_jitter_deg: f64,
    #[arg(long, default_value_t = 40.0)]
    pub attenuator_db: f64,
    #[arg(long, default_value_t = -40.0, allow_hyphen_values = true)]
    pub sidelobe_floor_db: f64,
}

#[derive(Debug, Clone, Args)]
pub struct RoundtripArgs {
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub sweep: PathBuf,
    /// Calibrate the sweep first.
    #[arg(long)]
    pub calib: Option<PathBuf>,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Pairing radius in MCD units; defaults to `--eps`.
    #[arg(long, allow_hyphen_values = true)]
    pub match_radius: Option<f64>,
    #[arg(long, default_value_t = -40.0, allow_hyphen_values = true)]
    pub sidelobe_floor_db: f64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExportPdapArgs {
    #[arg(long)]
    pub sweep: PathBuf,
    #[arg(long)]
    pub calib: Option<PathBuf>,
    /// Elevation slice in degrees; the maximum over elevation when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub el_deg: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })
}

/// Write through a temporary sibling and rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn safe_id(id: &str) -> Result<&str> {
    if id.is_empty() || id.starts_with('.') || id.contains(['/', '\\']) {
        return Err(Error::InvalidParameter(format!(
            "position id `{id}` cannot be used as a file name"
        )));
    }
    Ok(id)
}

fn pretty<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

fn load_sweep(path: &Path, calib: Option<&Path>, inputs: &mut Vec<InputRecord>) -> Result<SweepGrid> {
    let bytes = read(path)?;
    inputs.push(InputRecord::new(path.display().to_string(), &bytes));
    let raw = parse_sweep_file(&bytes)?;
    match calib {
        Some(c) => {
            let cb = read(c)?;
            inputs.push(InputRecord::new(c.display().to_string(), &cb));
            calibrate(&raw, &parse_calibration_file(&cb, &raw.config)?)
        }
        None => Ok(raw),
    }
}

pub fn analyze(args: &AnalyzeArgs) -> Result<()> {
    let params = AnalysisParams {
        policy: args.policy.policy()?,
        dbscan: args.policy.dbscan()?,
        d0_m: args.d0,
        freq_hz: args.freq_ghz.map(|g| g * 1e9),
    };
    params.validate()?;
    let mut manifest = RunManifest::new("analyze");
    manifest.policy = Some(params.policy);
    manifest.dbscan = Some(params.dbscan);
    manifest.d0_m = Some(params.d0_m);
    manifest.freq_hz = params.freq_hz;
    manifest.extra.insert("jobs".into(), args.jobs as f64);

    let calib_bytes = read(&args.calib)?;
    manifest
        .inputs
        .push(InputRecord::new(args.calib.display().to_string(), &calib_bytes));
    let mut sweeps = Vec::with_capacity(args.sweeps.len());
    for path in &args.sweeps {
        let bytes = read(path)?;
        manifest
            .inputs
            .push(InputRecord::new(path.display().to_string(), &bytes));
        sweeps.push(parse_sweep_file(&bytes)?);
    }
    let first = &sweeps[0].config;
    if let Some(s) = sweeps.iter().find(|s| s.config.n_points != first.n_points) {
        return Err(Error::DimensionMismatch(format!(
            "position `{}` has {} points, expected {}",
            s.position_id, s.config.n_points, first.n_points
        )));
    }
    let cal = parse_calibration_file(&calib_bytes, first)?;
    for s in &sweeps {
        safe_id(&s.position_id)?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let (report, analyses) = pool.install(|| analyze_campaign(&sweeps, &cal, &params, manifest))?;

    // everything is in memory; only now touch the output directory
    let mut files = vec![(args.out_dir.join("report.json"), report.to_json()?)];
    for a in &analyses {
        let id = &a.report.position_id;
        files.push((args.out_dir.join(format!("{id}.mpc.json")), a.mpc_file()?));
        files.push((args.out_dir.join(format!("{id}.clusters.json")), a.cluster_file_bytes()?));
    }
    for (path, bytes) in &files {
        write_atomic(path, bytes)?;
    }
    Ok(())
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let mut manifest = RunManifest::new("synth");
    manifest.seed = Some(args.seed);
    let mut config = match &args.config {
        Some(p) => {
            let bytes = read(p)?;
            manifest.inputs.push(InputRecord::new(p.display().to_string(), &bytes));
            serde_json::from_slice(&bytes)?
        }
        None => SystemConfig::thz_306_321(),
    };
    if let Some(n) = args.n_points {
        config.n_points = n;
    }
    config.validate()?;
    safe_id(&args.position_id)?;

    let paths = match &args.truth {
        Some(p) => {
            let bytes = read(p)?;
            manifest.inputs.push(InputRecord::new(p.display().to_string(), &bytes));
            parse_truth_file(&bytes)?
        }
        None => {
            let params = StatGenParams {
                mean_cluster_interval_s: args.mean_interval_ns * 1e-9,
                n_clusters_mean: args.clusters_mean,
                intra_cluster_count_mean: args.paths_mean,
                intra_toa_jitter_s: args.toa_jitter_ns * 1e-9,
                intra_angle_jitter_deg: args.angle_jitter_deg,
                ple: args.ple,
                seed: args.seed,
            };
            generate_statistical(&params, args.distance_m, config.center_frequency_hz())?
        }
    };
    for (k, v) in [
        ("distance_m", args.distance_m),
        ("ple", args.ple),
        ("mean_interval_ns", args.mean_interval_ns),
        ("clusters_mean", args.clusters_mean),
        ("paths_mean", args.paths_mean),
        ("toa_jitter_ns", args.toa_jitter_ns),
        ("angle_jitter_deg", args.angle_jitter_deg),
        ("attenuator_db", args.attenuator_db),
        ("sidelobe_floor_db", args.sidelobe_floor_db),
        ("n_points", config.n_points as f64),
    ] {
        manifest.extra.insert(k.into(), v);
    }

    let pattern = AntennaModel {
        hpbw_deg: config.rx_hpbw_deg,
        sidelobe_floor_db: args.sidelobe_floor_db,
    };
    let mut channel = render_sweep(&paths, &config, &pattern)?;
    channel.position_id = args.position_id.clone();
    channel.case = args.case;
    channel.tx_rx_distance_m = Some(args.distance_m);
    let cal = synthetic_calibration(&config, args.attenuator_db)?;
    let raw = cal.forward(&channel)?;

    let id = &args.position_id;
    let files = [
        (format!("{id}.sweep.json"), write_sweep_file(&raw)?),
        (format!("{id}.truth.json"), write_truth_file(&paths)?),
        ("calib.json".to_string(), write_calibration_file(&cal)?),
        (format!("{id}.manifest.json"), pretty(&manifest)?),
    ];
    for (name, bytes) in &files {
        write_atomic(&args.out_dir.join(name), bytes)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct RoundtripOutput {
    manifest: RunManifest,
    params: PipelineParams,
    report: RoundtripReport,
}

pub fn roundtrip(args: &RoundtripArgs) -> Result<()> {
    let mut manifest = RunManifest::new("roundtrip");
    let truth_bytes = read(&args.truth)?;
    manifest
        .inputs
        .push(InputRecord::new(args.truth.display().to_string(), &truth_bytes));
    let paths = parse_truth_file(&truth_bytes)?;
    let sweep = load_sweep(&args.sweep, args.calib.as_deref(), &mut manifest.inputs)?;
    let dbscan = args.policy.dbscan()?;
    let params = PipelineParams {
        policy: args.policy.policy()?,
        dbscan,
        pattern: AntennaModel {
            hpbw_deg: sweep.config.rx_hpbw_deg,
            sidelobe_floor_db: args.sidelobe_floor_db,
        },
        match_radius: args.match_radius.unwrap_or(dbscan.eps),
    };
    manifest.policy = Some(params.policy);
    manifest.dbscan = Some(dbscan);
    manifest.extra.insert("match_radius".into(), params.match_radius);
    let report = roundtrip_sweep(&paths, &sweep, &params)?;
    emit(
        args.out.as_deref(),
        &pretty(&RoundtripOutput {
            manifest,
            params,
            report,
        })?,
    )
}

pub fn export_pdap(args: &ExportPdapArgs) -> Result<()> {
    let mut inputs = Vec::new();
    let sweep = load_sweep(&args.sweep, args.calib.as_deref(), &mut inputs)?;
    let mode = match args.el_deg {
        Some(el) => ElevationMode::Slice(sweep.config.el_index(el).ok_or_else(|| {
            Error::IndexOutOfRange(format!("elevation {el}° is not on the grid"))
        })?),
        None => ElevationMode::MaxOverElevation,
    };
    let pdap = compute_pdap(&ctf_to_cir(&sweep), mode)?;
    emit(args.out.as_deref(), pdap.to_csv().as_bytes())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Synth(a) => synth(a),
        Command::Roundtrip(a) => roundtrip(a),
        Command::ExportPdap(a) => export_pdap(a),
    }
}

/// Structured error line for stderr.
pub fn error_json(kind: &str, message: &str, exit_code: i32) -> String {
    serde_json::json!({ "error": kind, "message": message, "exit_code": exit_code }).to_string()
}

/// Parse `args`, run, and return the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            eprintln!("{}", error_json("usage", e.to_string().trim(), 2));
            return 2;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let code = e.exit_code();
            eprintln!("{}", error_json(e.kind(), &e.to_string(), code));
            code
        }
    }
}

pub fn main() -> i32 {
    main_with(std::env::args_os())
}
