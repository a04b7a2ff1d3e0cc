//! Subcommand definitions and drivers.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rbm_lyapunov::catalog::{DomainSpec, HoleSpec};
use rbm_lyapunov::coupling::{
    estimate_decay_rate, excursion_log_cos_final, simulate_replicas, CouplingStats, DecayFit, SimConfig,
    SERIES_CSV_HEADER,
};
use rbm_lyapunov::geometry::Vec2;
use rbm_lyapunov::harmonic::BackendKind;
use rbm_lyapunov::lyapunov::{self, hole_sweep, LyapunovReport, SweepSpec, CSV_HEADER, SWEEP_CSV_HEADER};
use rbm_lyapunov::skorokhod::{skorokhod_transform, DrivingPath, HalfPlane, ReflectedPath, Region};
use rbm_lyapunov::Error;
use serde::Serialize;

use crate::config::{default_start, ExperimentConfig, Format, Seeds};
use crate::manifest::{digest_file, CsvSchema, OutputDir, RunManifest};
use crate::validate;
use crate::CliError;

pub const LAMBDA_SCHEMA: CsvSchema = CsvSchema { name: "lambda", version: 1, columns: CSV_HEADER };
pub const SERIES_SCHEMA: CsvSchema = CsvSchema { name: "series", version: 1, columns: SERIES_CSV_HEADER };
pub const SLOPES_SCHEMA: CsvSchema = CsvSchema {
    name: "slopes",
    version: 1,
    columns: "seed,status,slope,std_error,ols_std_error,batch_std_error,fit_points,LX_over_t,nu_LX_over_t,excursion_over_t,excursions,steps,split_steps,linear_steps",
};
pub const SWEEP_SCHEMA: CsvSchema = CsvSchema { name: "sweep", version: 1, columns: SWEEP_CSV_HEADER };
pub const REFLECTED_SCHEMA: CsvSchema = CsvSchema { name: "reflected", version: 1, columns: "t,x,y,local_time,on_boundary" };
pub const VALIDATE_SCHEMA: CsvSchema =
    CsvSchema { name: "validate", version: 1, columns: "check,value,target,tolerance,pass" };

#[derive(Debug, Parser)]
#[command(name = "rbm-lyapunov", version, about = "Lyapunov exponents of reflected Brownian flows in planar domains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute Λ = ∫ν + cross term for one domain.
    Lambda(LambdaArgs),
    /// Simulate synchronously coupled reflected Brownian motions.
    Simulate(SimulateArgs),
    /// Λ of a disc with 0, 1, ..., k holes.
    Sweep(SweepArgs),
    /// Reflect a sampled path read from CSV (`t,x,y`).
    Transform(TransformArgs),
    /// Run the built-in check suite.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML config, or a manifest.json from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; outputs do not depend on this.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Report formats, comma separated (csv, json).
    #[arg(long, value_delimiter = ',')]
    pub formats: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct BackendArgs {
    /// Harmonic-measure backend: exact, nystrom or wos.
    #[arg(long)]
    pub hm: Option<String>,
    /// Outer quadrature nodes per curve.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Nyström nodes per curve.
    #[arg(long)]
    pub panels: Option<usize>,
    /// Walkers per walk-on-spheres estimate.
    #[arg(long = "wos-n")]
    pub wos_n: Option<usize>,
    /// Walk-on-spheres seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct LambdaArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Domain shorthand, e.g. `disc`, `annulus:0.5,1`, `ellipse_exterior:0.5`.
    #[arg(long)]
    pub domain: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub domain: Option<String>,
    /// Time horizon.
    #[arg(long = "T")]
    pub t_max: Option<f64>,
    /// Time step.
    #[arg(long)]
    pub h: Option<f64>,
    /// A count `n` (seeds 1..=n) or a comma-separated list.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Start of the first walker, `x,y`.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    /// Start of the second walker, `x,y`.
    #[arg(long, allow_hyphen_values = true)]
    pub y0: Option<String>,
    /// Keep every `stride`-th step in the series files.
    #[arg(long)]
    pub stride: Option<usize>,
    /// Excursion threshold; defaults to 50 √h.
    #[arg(long = "d-exc")]
    pub d_exc: Option<f64>,
    /// Fraction of the horizon dropped before the slope fit.
    #[arg(long = "burn-in")]
    pub burn_in: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Place this many circular holes evenly on a ring (replaces the config's holes).
    #[arg(long)]
    pub holes: Option<usize>,
    #[arg(long = "hole-radius", default_value_t = 0.03)]
    pub hole_radius: f64,
    /// Radius of the ring the holes sit on.
    #[arg(long, default_value_t = 0.5)]
    pub ring: f64,
    /// Exploratory horizontal stretch factors, repeatable.
    #[arg(long)]
    pub stretch: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub domain: Option<String>,
    /// CSV with header `t,x,y`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Largest substep.
    #[arg(long = "h-max")]
    pub h_max: Option<f64>,
    /// Reflect in the upper half-plane.
    #[arg(long = "half-plane")]
    pub half_plane: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Exact-kernel checks only.
    #[arg(long)]
    pub quick: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

fn parse_point(s: &str, name: &str) -> Result<[f64; 2], CliError> {
    let v: Vec<&str> = s.split(',').map(str::trim).collect();
    match v.as_slice() {
        [a, b] => match (a.parse(), b.parse()) {
            (Ok(a), Ok(b)) => Ok([a, b]),
            _ => Err(CliError::Config(format!("--{name}: cannot parse '{s}' as x,y"))),
        },
        _ => Err(CliError::Config(format!("--{name}: expected x,y, got '{s}'"))),
    }
}

fn parse_seeds(s: &str) -> Result<Seeds, CliError> {
    let bad = |e: std::num::ParseIntError| CliError::Config(format!("--seeds: '{s}': {e}"));
    if s.contains(',') {
        Ok(Seeds::List(s.split(',').map(|v| v.trim().parse().map_err(bad)).collect::<Result<_, _>>()?))
    } else {
        Ok(Seeds::Count(s.trim().parse().map_err(bad)?))
    }
}

fn parse_backend(s: &str) -> Result<BackendKind, CliError> {
    match s {
        "exact" => Ok(BackendKind::Exact),
        "nystrom" => Ok(BackendKind::Nystrom),
        "wos" => Ok(BackendKind::Wos),
        _ => Err(CliError::Config(format!("--hm: unknown backend '{s}' (exact, nystrom, wos)"))),
    }
}

fn base_config(common: &Common, command: &str) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p, command)?,
        None => ExperimentConfig::default(),
    };
    if let Some(o) = &common.out {
        cfg.output.dir = o.clone();
    }
    if let Some(f) = &common.formats {
        cfg.output.formats = f
            .iter()
            .map(|s| match s.as_str() {
                "csv" => Ok(Format::Csv),
                "json" => Ok(Format::Json),
                _ => Err(CliError::Config(format!("--formats: unknown format '{s}' (csv, json)"))),
            })
            .collect::<Result<_, _>>()?;
    }
    Ok(cfg)
}

fn apply_domain(cfg: &mut ExperimentConfig, domain: &Option<String>) -> Result<(), CliError> {
    if let Some(d) = domain {
        cfg.domain = Some(DomainSpec::parse_shorthand(d)?);
    }
    Ok(())
}

fn apply_backend(cfg: &mut ExperimentConfig, b: &BackendArgs) -> Result<(), CliError> {
    if let Some(k) = &b.hm {
        cfg.hm.kind = parse_backend(k)?;
    }
    if let Some(n) = b.nodes {
        cfg.quad.nodes = n;
    }
    if let Some(p) = b.panels {
        cfg.hm.nystrom.panels = p;
    }
    if let Some(n) = b.wos_n {
        cfg.hm.wos.n = n;
    }
    if let Some(s) = b.seed {
        cfg.hm.wos.seed = s;
    }
    Ok(())
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match workers {
        Some(0) => Err(CliError::Config("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|p| p.install(f))
            .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}"))),
        None => Ok(f()),
    }
}

/// Parse arguments are already applied; run the subcommand and return its
/// manifest.
pub fn run(cli: Cli) -> Result<RunManifest, CliError> {
    match cli.command {
        Command::Lambda(a) => {
            let mut cfg = base_config(&a.common, "lambda")?;
            apply_domain(&mut cfg, &a.domain)?;
            apply_backend(&mut cfg, &a.backend)?;
            in_pool(a.common.workers, || cmd_lambda(cfg))?
        }
        Command::Simulate(a) => {
            let mut cfg = base_config(&a.common, "simulate")?;
            apply_domain(&mut cfg, &a.domain)?;
            let s = &mut cfg.sim;
            if let Some(v) = a.t_max {
                s.t_max = v;
            }
            if let Some(v) = a.h {
                s.h = v;
            }
            if let Some(v) = &a.seeds {
                s.seeds = parse_seeds(v)?;
            }
            if let Some(v) = &a.x0 {
                s.x0 = Some(parse_point(v, "x0")?);
            }
            if let Some(v) = &a.y0 {
                s.y0 = Some(parse_point(v, "y0")?);
            }
            if let Some(v) = a.stride {
                s.stride = v;
            }
            if let Some(v) = a.d_exc {
                s.d_exc = Some(v);
            }
            if let Some(v) = a.burn_in {
                s.burn_in = v;
            }
            in_pool(a.common.workers, || cmd_simulate(cfg))?
        }
        Command::Sweep(a) => {
            let mut cfg = base_config(&a.common, "sweep")?;
            apply_backend(&mut cfg, &a.backend)?;
            if let Some(k) = a.holes {
                let holes = (0..k)
                    .map(|j| {
                        let th = TAU * j as f64 / k as f64;
                        HoleSpec::circle([a.ring * th.cos(), a.ring * th.sin()], a.hole_radius)
                    })
                    .collect();
                match &mut cfg.sweep {
                    Some(s) => s.holes = holes,
                    None => cfg.sweep = Some(SweepSpec { radius: 1.0, holes, n_quad: 256, stretch: Vec::new() }),
                }
            }
            if !a.stretch.is_empty() {
                let s = cfg
                    .sweep
                    .as_mut()
                    .ok_or_else(|| CliError::Config("--stretch needs --holes or a [sweep] table".into()))?;
                s.stretch = a.stretch.clone();
            }
            in_pool(a.common.workers, || cmd_sweep(cfg))?
        }
        Command::Transform(a) => {
            let mut cfg = base_config(&a.common, "transform")?;
            apply_domain(&mut cfg, &a.domain)?;
            if let Some(p) = &a.input {
                cfg.transform.input = Some(p.clone());
            }
            if let Some(h) = a.h_max {
                cfg.transform.h_max = Some(h);
            }
            if a.half_plane {
                cfg.transform.half_plane = true;
            }
            in_pool(a.common.workers, || cmd_transform(cfg))?
        }
        Command::Validate(a) => {
            let mut cfg = ExperimentConfig::default();
            cfg.output.dir = a.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            in_pool(a.workers, || cmd_validate(cfg, a.quick))?
        }
    }
}

#[derive(Serialize)]
struct LambdaSummary<'a> {
    domain: &'a DomainSpec,
    report: &'a LyapunovReport,
    lambda_error: f64,
}

pub fn cmd_lambda(cfg: ExperimentConfig) -> Result<RunManifest, CliError> {
    let clock = Instant::now();
    let spec = cfg.domain_spec("lambda")?.clone();
    cfg.quad.validate()?;
    cfg.hm.wos.validate()?;
    let domain = spec.build()?;
    let hm = cfg.hm.measure(&domain)?;
    let report = lyapunov::lambda(&hm, &cfg.quad, &spec.id())?;

    let mut out = OutputDir::create(&cfg.output.dir)?;
    if cfg.output.wants(Format::Csv) {
        out.write_csv("lambda.csv", LAMBDA_SCHEMA, [report.csv_row()])?;
    }
    if cfg.output.wants(Format::Json) {
        out.write_json("summary.json", &LambdaSummary { domain: &spec, report: &report, lambda_error: report.lambda_error() })?;
    }
    println!("{CSV_HEADER}\n{}", report.csv_row());

    let mut m = RunManifest::new("lambda", cfg);
    m.seeds.extend(report.seed);
    m.errors.insert("curvature_term".into(), report.err_curv);
    m.errors.insert("cross_term".into(), report.err_cross);
    m.finish(out, clock.elapsed().as_secs_f64())
}

#[derive(Serialize)]
struct SeedRow {
    seed: u64,
    status: &'static str,
    slope: Option<f64>,
    std_error: Option<f64>,
    ols_std_error: Option<f64>,
    batch_std_error: Option<f64>,
    fit_points: usize,
    lx_over_t: f64,
    nu_lx_over_t: f64,
    excursion_over_t: f64,
    excursions: usize,
    steps: usize,
    split_steps: usize,
    linear_steps: usize,
}

impl SeedRow {
    fn new(s: &CouplingStats, fit: Option<&DecayFit>, status: &'static str) -> Self {
        let t = s.final_state.t;
        let per_t = |v: f64| if t > 0.0 { v / t } else { 0.0 };
        Self {
            seed: s.config.seed,
            status,
            slope: fit.map(|f| f.slope),
            std_error: fit.map(|f| f.std_error),
            ols_std_error: fit.map(|f| f.ols_std_error),
            batch_std_error: fit.map(|f| f.batch_std_error),
            fit_points: fit.map_or(0, |f| f.points),
            lx_over_t: per_t(s.final_state.lx),
            nu_lx_over_t: per_t(s.final_state.nu_lx),
            excursion_over_t: excursion_log_cos_final(s, s.config.d_exc()),
            excursions: s.excursions.len(),
            steps: s.steps,
            split_steps: s.split_steps,
            linear_steps: s.linear_steps,
        }
    }

    fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{:e},{:e},{:e},{},{},{},{}",
            self.seed,
            self.status,
            opt(self.slope),
            opt(self.std_error),
            opt(self.ols_std_error),
            opt(self.batch_std_error),
            self.fit_points,
            self.lx_over_t,
            self.nu_lx_over_t,
            self.excursion_over_t,
            self.excursions,
            self.steps,
            self.split_steps,
            self.linear_steps
        )
    }
}

#[derive(Serialize)]
struct SimulateSummary {
    domain_id: String,
    h: f64,
    #[serde(rename = "T")]
    t_max: f64,
    burn_in: f64,
    x0: [f64; 2],
    y0: [f64; 2],
    d_exc: f64,
    mean_slope: Option<f64>,
    slope_sd: Option<f64>,
    runs: Vec<SeedRow>,
}

pub fn cmd_simulate(mut cfg: ExperimentConfig) -> Result<RunManifest, CliError> {
    let clock = Instant::now();
    let spec = cfg.domain_spec("simulate")?.clone();
    let domain = spec.build()?;
    if !domain.is_bounded() {
        return Err(CliError::Config("simulate needs a bounded domain".into()));
    }
    let s = &mut cfg.sim;
    if !(0.0..1.0).contains(&s.burn_in) {
        return Err(CliError::Config(format!("sim.burn_in must lie in [0, 1), got {}", s.burn_in)));
    }
    let x0 = match s.x0 {
        Some(p) => p,
        None => {
            let p = default_start(&domain)?;
            [p.x, p.y]
        }
    };
    let y0 = s.y0.unwrap_or([x0[0], x0[1] + 0.01 * domain.feature_size()]);
    let seeds = s.seeds.resolve();
    if seeds.is_empty() {
        return Err(CliError::Config("sim.seeds is empty".into()));
    }
    // store the resolved values so the manifest replays exactly
    s.x0 = Some(x0);
    s.y0 = Some(y0);
    s.seeds = Seeds::List(seeds.clone());
    let base = SimConfig { stride: s.stride, d_exc: s.d_exc, ..SimConfig::new(s.h, s.t_max, x0, y0, 0) };
    base.validate(&domain)?;

    let runs = simulate_replicas(&domain, &base, &seeds)?;
    let mut rows = Vec::new();
    for r in &runs {
        let row = match estimate_decay_rate(r, cfg.sim.burn_in) {
            Ok(f) => SeedRow::new(r, Some(&f), "ok"),
            Err(Error::InsufficientData(_)) if r.degenerate => SeedRow::new(r, None, "degenerate"),
            Err(Error::InsufficientData(_)) => SeedRow::new(r, None, "insufficient_data"),
            Err(e) => return Err(e.into()),
        };
        rows.push(row);
    }
    let slopes: Vec<f64> = rows.iter().filter_map(|r| r.slope).collect();
    let mean = (!slopes.is_empty()).then(|| slopes.iter().sum::<f64>() / slopes.len() as f64);
    let sd = mean.filter(|_| slopes.len() > 1).map(|m| {
        (slopes.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (slopes.len() - 1) as f64).sqrt()
    });

    let mut out = OutputDir::create(&cfg.output.dir)?;
    if cfg.output.wants(Format::Csv) {
        out.write_csv("slopes.csv", SLOPES_SCHEMA, rows.iter().map(SeedRow::csv_row))?;
        for r in &runs {
            out.write_csv(&format!("series_seed{}.csv", r.config.seed), SERIES_SCHEMA, r.series.iter().map(|x| x.csv_row()))?;
        }
    }
    println!("{}", SLOPES_SCHEMA.columns);
    for r in &rows {
        println!("{}", r.csv_row());
    }
    let mut m = RunManifest::new("simulate", cfg.clone());
    for r in &rows {
        if let Some(e) = r.std_error {
            m.errors.insert(format!("slope_seed{}", r.seed), e);
        }
    }
    if cfg.output.wants(Format::Json) {
        let summary = SimulateSummary {
            domain_id: spec.id(),
            h: base.h,
            t_max: base.t_max,
            burn_in: cfg.sim.burn_in,
            x0,
            y0,
            d_exc: base.d_exc(),
            mean_slope: mean,
            slope_sd: sd,
            runs: rows,
        };
        out.write_json("summary.json", &summary)?;
    }
    m.seeds = seeds;
    m.finish(out, clock.elapsed().as_secs_f64())
}

#[derive(Serialize)]
struct SweepSummaryRow {
    k: usize,
    transform: String,
    curvature_term: f64,
    cross_term: f64,
    lambda: f64,
    lambda_error: f64,
    decay_rate: Option<f64>,
    sign: i8,
}

pub fn cmd_sweep(cfg: ExperimentConfig) -> Result<RunManifest, CliError> {
    let clock = Instant::now();
    let spec = cfg.sweep.clone().ok_or_else(|| CliError::Config("sweep needs --holes or a [sweep] table".into()))?;
    cfg.quad.validate()?;
    cfg.hm.wos.validate()?;
    let rows = hole_sweep(&spec, &cfg.hm, &cfg.quad)?;

    let mut out = OutputDir::create(&cfg.output.dir)?;
    if cfg.output.wants(Format::Csv) {
        out.write_csv("sweep.csv", SWEEP_SCHEMA, rows.iter().map(|r| r.csv_row()))?;
    }
    if cfg.output.wants(Format::Json) {
        let summary: Vec<SweepSummaryRow> = rows
            .iter()
            .map(|r| SweepSummaryRow {
                k: r.k,
                transform: r.transform.clone(),
                curvature_term: r.report.curvature_term,
                cross_term: r.report.cross_term,
                lambda: r.report.lambda,
                lambda_error: r.report.lambda_error(),
                decay_rate: r.report.decay_rate,
                sign: r.sign,
            })
            .collect();
        out.write_json("summary.json", &summary)?;
    }
    println!("{SWEEP_CSV_HEADER}");
    for r in &rows {
        println!("{}", r.csv_row());
    }
    let mut m = RunManifest::new("sweep", cfg.clone());
    if cfg.hm.kind == BackendKind::Wos {
        m.seeds.push(cfg.hm.wos.seed);
    }
    for r in &rows {
        m.errors.insert(format!("cross_term_k{}_{}", r.k, r.transform), r.report.err_cross);
    }
    m.finish(out, clock.elapsed().as_secs_f64())
}

pub fn read_path_csv(path: &Path) -> Result<DrivingPath, CliError> {
    let bad = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t", "x", "y"] {
        return Err(bad(format!("expected header t,x,y, got {}", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let (mut t, mut pts) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |k: usize| -> Result<f64, CliError> {
            rec[k].parse().map_err(|e| bad(format!("row {}: '{}': {e}", i + 2, &rec[k])))
        };
        t.push(num(0)?);
        pts.push(Vec2::new(num(1)?, num(2)?));
    }
    Ok(DrivingPath::new(t, pts)?)
}

#[derive(Serialize)]
struct TransformSummary {
    region: String,
    points: usize,
    h_max: f64,
    substeps: usize,
    local_time: f64,
    variation_gamma: f64,
    variation_beta: f64,
    variation_gap: f64,
}

pub fn cmd_transform(cfg: ExperimentConfig) -> Result<RunManifest, CliError> {
    let clock = Instant::now();
    let input = cfg.transform.input.clone().ok_or_else(|| CliError::Config("transform needs --input".into()))?;
    let path = read_path_csv(&input)?;
    let h_max = match cfg.transform.h_max {
        Some(h) => h,
        None => path.times().windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min),
    };
    if !(h_max > 0.0 && h_max.is_finite()) {
        return Err(CliError::Config(format!("transform.h_max must be positive and finite, got {h_max}")));
    }
    let (region_id, r): (String, ReflectedPath) = if cfg.transform.half_plane {
        ("half_plane".into(), reflect(&HalfPlane, &path, h_max)?)
    } else {
        let spec = cfg.domain_spec("transform")?;
        (spec.id(), reflect(&spec.build()?, &path, h_max)?)
    };

    let mut out = OutputDir::create(&cfg.output.dir)?;
    if cfg.output.wants(Format::Csv) {
        let rows = (0..r.t.len()).map(|k| {
            format!("{},{},{},{},{}", r.t[k], r.beta[k].x, r.beta[k].y, r.local_time[k], u8::from(r.on_boundary[k]))
        });
        out.write_csv("reflected.csv", REFLECTED_SCHEMA, rows)?;
    }
    let summary = TransformSummary {
        region: region_id,
        points: r.t.len(),
        h_max,
        substeps: r.substeps,
        local_time: r.local_time.last().copied().unwrap_or(0.0),
        variation_gamma: r.variation_gamma,
        variation_beta: r.variation_beta,
        variation_gap: r.variation_gamma - r.variation_beta,
    };
    if cfg.output.wants(Format::Json) {
        out.write_json("summary.json", &summary)?;
    }
    println!("local time {:e}, variation gap {:e}", summary.local_time, summary.variation_gap);
    let mut m = RunManifest::new("transform", cfg);
    m.inputs.push(digest_file(&input)?);
    m.finish(out, clock.elapsed().as_secs_f64())
}

fn reflect<R: Region + ?Sized>(region: &R, path: &DrivingPath, h_max: f64) -> Result<ReflectedPath, CliError> {
    Ok(skorokhod_transform(region, path, h_max)?)
}

pub fn cmd_validate(cfg: ExperimentConfig, quick: bool) -> Result<RunManifest, CliError> {
    let clock = Instant::now();
    let checks = validate::run_suite(quick, |c| {
        eprintln!("[{}] {}: {} ({:.2}s)", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail, c.seconds)
    });
    let mut out = OutputDir::create(&cfg.output.dir)?;
    out.write_csv("validate.csv", VALIDATE_SCHEMA, checks.iter().map(validate::Check::csv_row))?;
    out.write_json("summary.json", &checks)?;
    let failed: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| c.name.to_string()).collect();
    let mut m = RunManifest::new(if quick { "validate --quick" } else { "validate" }, cfg);
    m.seeds = validate::SEEDS.to_vec();
    let m = m.finish(out, clock.elapsed().as_secs_f64())?;
    if failed.is_empty() {
        println!("all {} checks passed", checks.len());
        Ok(m)
    } else {
        Err(CliError::Validation(failed))
    }
}
