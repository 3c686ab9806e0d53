//! Command-line pipeline: configuration, stage orchestration, artifacts and
//! acceptance gates.
//!
//! Every subcommand reads a JSON [`RunConfig`] and writes into a run
//! directory: `--out <dir>` names it explicitly (so stages can be chained);
//! otherwise a timestamped directory is created under `$TRIOD_LAB_OUT`, the
//! config's `output`, or `runs`. Existing files are never replaced without
//! `--force`. Exit status: 0 when every gate passes, 2 when a gate fails,
//! 1 on errors.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::connect::{cyclic_symmetry, solve_connection, solve_triple, ConnectionParams, ConnectionPath};
use crate::error::{invalid, Error, Result};
use crate::field::{
    check_hypothesis1, check_hypothesis2, equivariance_defect, init_triod, read_snapshot, relax, write_snapshot, FarField, PhaseMap,
    RelaxParams, SnapshotMeta, TriodAnsatz, TubeParams,
};
use crate::flux::{convergence_study, flux_circle_2d, make_surgery_plan, Schedule};
use crate::numeric::angle_diff;
use crate::potential::TripleWellSpec;
use crate::stress::{divergence_residual, StressTensorField};
use crate::young::{append_summary, extract_interfaces, predict_angles, verify_sine_law, AngleReport, PAIRS};
use crate::{Vec3, VERSION};

// ---------------------------------------------------------------------------
// Configuration

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Product potential on the unit equilateral triangle.
    Equilateral,
    /// Product potential on the given minima.
    Product,
    ScalarQuartic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minima: Option<[[f64; 3]; 3]>,
}

impl PotentialConfig {
    pub fn spec(&self) -> Result<TripleWellSpec> {
        match (self.family, self.minima) {
            (Family::Equilateral, None) => Ok(TripleWellSpec::equilateral()),
            (Family::Product, Some(m)) => Ok(TripleWellSpec::product(m.map(Vec3::from))),
            (Family::ScalarQuartic, None) => Ok(TripleWellSpec::scalar_quartic()),
            (Family::Product, None) => Err(invalid("potential family `product` needs `minima`")),
            (_, Some(_)) => Err(invalid("`minima` is only accepted for the `product` family")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionConfig {
    #[serde(default = "d_half_length")]
    pub half_length: f64,
    #[serde(default = "d_samples")]
    pub samples: usize,
    #[serde(default = "d_conn_tol")]
    pub tolerance: f64,
    #[serde(default = "d_conn_iter")]
    pub max_iterations: usize,
    /// Gate on the equipartition residual of every connection.
    #[serde(default = "d_equipartition")]
    pub equipartition_tolerance: f64,
    /// Well pairs to connect; defaults to `(0,1), (1,2), (2,0)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<(usize, usize)>>,
}

fn d_half_length() -> f64 {
    12.0
}
fn d_samples() -> usize {
    801
}
fn d_conn_tol() -> f64 {
    1e-8
}
fn d_conn_iter() -> usize {
    20_000
}
fn d_equipartition() -> f64 {
    1e-3
}

impl Default for ConnectionConfig {
    fn default() -> Self {
        Self {
            half_length: d_half_length(),
            samples: d_samples(),
            tolerance: d_conn_tol(),
            max_iterations: d_conn_iter(),
            equipartition_tolerance: d_equipartition(),
            pairs: None,
        }
    }
}

impl ConnectionConfig {
    pub fn params(&self) -> ConnectionParams {
        ConnectionParams {
            half_length: self.half_length,
            samples: self.samples,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            allow_trivial: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RayKeyword {
    /// Angles balancing the measured actions.
    Predict,
}

/// Initial ray directions: `"predict"` or three azimuths in degrees for
/// `Γ₁₂, Γ₂₃, Γ₃₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rays {
    Keyword(RayKeyword),
    Degrees([f64; 3]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub spacing: f64,
    /// Half-extent `X` of the square `[−X, X]²`.
    pub extent: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_step: Option<f64>,
    #[serde(default = "d_safety")]
    pub safety: f64,
    pub max_steps: usize,
    pub tolerance: f64,
    pub rays: Rays,
    #[serde(default)]
    pub warm_start_levels: usize,
    #[serde(default = "d_checkpoint")]
    pub checkpoint_every: usize,
    #[serde(default)]
    pub tube: TubeParams,
}

fn d_safety() -> f64 {
    0.9
}
fn d_checkpoint() -> usize {
    1000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxMode {
    #[serde(rename = "2d")]
    TwoD,
    #[serde(rename = "3d")]
    ThreeD,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxConfig {
    #[serde(default = "d_mode")]
    pub mode: FluxMode,
    #[serde(default = "d_circle_radius")]
    pub circle_radius: f64,
    #[serde(default = "d_circle_nodes")]
    pub circle_nodes: usize,
    /// Gate on `|∮ Tν ds| / Σσ`.
    #[serde(default = "d_circle_tol")]
    pub circle_tolerance: f64,
    /// Gate on each window's distance from `−σν`, relative to `σ`.
    #[serde(default = "d_window_tol")]
    pub window_tolerance: f64,
    #[serde(default = "d_radii")]
    pub radii: Vec<f64>,
    #[serde(default)]
    pub schedule: Schedule,
    /// Slice half-width; bisectors when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Quadrature nodes per unit geodesic length.
    #[serde(default = "d_resolution")]
    pub resolution: f64,
    /// Gate on each strip's distance from `−2σν` at the largest radius.
    #[serde(default = "d_window_tol")]
    pub strip_tolerance: f64,
    /// Allowed excess of `I_j` over 2.
    #[serde(default = "d_i_tol")]
    pub i_tolerance: f64,
    #[serde(default = "d_cap_exp")]
    pub cap_exponent: f64,
    #[serde(default = "d_cap_exp_tol")]
    pub cap_exponent_tolerance: f64,
    /// Gate on the total flux norm decreasing over the radii.
    #[serde(default = "d_true")]
    pub require_total_decreasing: bool,
}

fn d_true() -> bool {
    true
}

fn d_mode() -> FluxMode {
    FluxMode::Both
}
fn d_circle_radius() -> f64 {
    20.0
}
fn d_circle_nodes() -> usize {
    4096
}
fn d_circle_tol() -> f64 {
    0.02
}
fn d_window_tol() -> f64 {
    0.05
}
fn d_radii() -> Vec<f64> {
    vec![40.0, 80.0, 160.0]
}
fn d_resolution() -> f64 {
    2.0
}
fn d_i_tol() -> f64 {
    1e-3
}
fn d_cap_exp() -> f64 {
    -0.5
}
fn d_cap_exp_tol() -> f64 {
    0.1
}

impl Default for FluxConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all flux fields have defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YoungConfig {
    #[serde(default = "d_annulus")]
    pub annulus: (f64, f64),
    /// Gate on `|measured − predicted|` per angle, degrees.
    #[serde(default = "d_angle_tol")]
    pub angle_tolerance_deg: f64,
    #[serde(default = "d_sine_tol")]
    pub sine_tolerance: f64,
    #[serde(default = "d_circle_tol")]
    pub balance_tolerance: f64,
}

fn d_annulus() -> (f64, f64) {
    (11.0, 22.0)
}
fn d_angle_tol() -> f64 {
    2.0
}
fn d_sine_tol() -> f64 {
    0.03
}

impl Default for YoungConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all young fields have defaults")
    }
}

/// Numerical checks run on the relaxed field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    #[serde(default = "d_decay_range")]
    pub decay_range: (f64, f64),
    #[serde(default = "d_decay_bin")]
    pub decay_bin: f64,
    /// Gate on the fitted decay slopes.
    #[serde(default = "d_decay_slope")]
    pub decay_slope: f64,
    #[serde(default = "d_probes")]
    pub probe_distances: Vec<f64>,
    #[serde(default = "d_probe_half")]
    pub probe_half_length: f64,
    #[serde(default = "d_probe_samples")]
    pub probe_samples: usize,
    /// Gate on `|∂_t u|` at the farthest probe.
    #[serde(default = "d_tangential")]
    pub tangential_tolerance: f64,
    /// Gate on the equivariance defect, in units of `h²`.
    #[serde(default = "d_equivariance")]
    pub equivariance_factor: f64,
    /// Row stride of the stress-tensor CSV.
    #[serde(default = "d_stride")]
    pub stress_stride: usize,
}

fn d_decay_range() -> (f64, f64) {
    (2.0, 8.0)
}
fn d_decay_bin() -> f64 {
    0.5
}
fn d_decay_slope() -> f64 {
    -0.5
}
fn d_probes() -> Vec<f64> {
    vec![5.0, 10.0, 15.0, 20.0]
}
fn d_probe_half() -> f64 {
    5.0
}
fn d_probe_samples() -> usize {
    201
}
fn d_tangential() -> f64 {
    1e-2
}
fn d_equivariance() -> f64 {
    10.0
}
fn d_stride() -> usize {
    8
}

impl Default for ChecksConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all check fields have defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub potential: PotentialConfig,
    #[serde(default)]
    pub connection: ConnectionConfig,
    pub field: FieldConfig,
    #[serde(default)]
    pub flux: FluxConfig,
    #[serde(default)]
    pub young: YoungConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default = "d_workers")]
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn d_workers() -> usize {
    1
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => invalid(format!("config {} not found", path.display())),
            _ => Error::Io(e),
        })?;
        Self::parse(&text)
    }

    /// Hex SHA-256 of the normalized config.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("connection.half_length", self.connection.half_length),
            ("connection.tolerance", self.connection.tolerance),
            ("connection.equipartition_tolerance", self.connection.equipartition_tolerance),
            ("field.spacing", self.field.spacing),
            ("field.extent", self.field.extent),
            ("field.tolerance", self.field.tolerance),
            ("field.safety", self.field.safety),
            ("flux.circle_radius", self.flux.circle_radius),
            ("flux.circle_tolerance", self.flux.circle_tolerance),
            ("flux.window_tolerance", self.flux.window_tolerance),
            ("flux.resolution", self.flux.resolution),
            ("flux.strip_tolerance", self.flux.strip_tolerance),
            ("flux.i_tolerance", self.flux.i_tolerance),
            ("flux.cap_exponent_tolerance", self.flux.cap_exponent_tolerance),
            ("young.angle_tolerance_deg", self.young.angle_tolerance_deg),
            ("young.sine_tolerance", self.young.sine_tolerance),
            ("young.balance_tolerance", self.young.balance_tolerance),
            ("checks.decay_bin", self.checks.decay_bin),
            ("checks.tangential_tolerance", self.checks.tangential_tolerance),
            ("checks.equivariance_factor", self.checks.equivariance_factor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(t) = self.field.time_step {
            if !(t > 0.0) {
                return Err(invalid("field.time_step must be positive"));
            }
        }
        if self.workers == 0 {
            return Err(invalid("workers must be at least 1"));
        }
        if self.flux.radii.is_empty() || self.flux.radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("flux.radii must be a non-empty increasing list"));
        }
        if self.field.extent * 2.0 / self.field.spacing < 4.0 {
            return Err(invalid("field.extent must span at least a few grid cells"));
        }
        self.potential.spec()?;
        Ok(())
    }

    pub fn relax_params(&self) -> RelaxParams {
        RelaxParams {
            time_step: self.field.time_step,
            safety: self.field.safety,
            max_steps: self.field.max_steps,
            tolerance: self.field.tolerance,
            checkpoint_every: self.field.checkpoint_every,
            warm_start_levels: self.field.warm_start_levels,
            warm_start_tolerance: None,
            workers: self.workers,
        }
    }

    /// Grid nodes per side: `(n − 1) h = 2X`.
    pub fn grid_nodes(&self) -> Result<usize> {
        let cells = 2.0 * self.field.extent / self.field.spacing;
        let n = cells.round();
        if (cells - n).abs() > 1e-6 {
            return Err(invalid(format!(
                "2·extent / spacing = {cells} is not an integer number of cells"
            )));
        }
        Ok(n as usize + 1)
    }
}

// ---------------------------------------------------------------------------
// Command line

#[derive(Debug, Parser)]
#[command(name = "triod-lab", version = VERSION, about = "Triple-junction Allen–Cahn pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Run directory; defaults to a fresh timestamped directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replace existing artifacts.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the potential's minima, smoothness and growth.
    ValidatePotential(Common),
    /// Solve the connections between wells.
    Connect(Common),
    /// Relax the triod field and run the field checks.
    Relax(Common),
    /// Circle flux of the stress tensor.
    Flux2d(Common),
    /// Sphere surgery fluxes over the configured radii.
    Flux3d(Common),
    /// Contact angles and Young's law.
    Young(Common),
    /// Every stage in order, plus `summary.json`.
    All(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::ValidatePotential(c)
            | Command::Connect(c)
            | Command::Relax(c)
            | Command::Flux2d(c)
            | Command::Flux3d(c)
            | Command::Young(c)
            | Command::All(c) => c,
        }
    }
}

/// One acceptance gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Gate {
    fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }

    fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: ok as u8 as f64,
            threshold: 1.0,
            pass: ok,
        }
    }
}

/// Result of one stage: its report and gates.
#[derive(Debug, Clone)]
pub struct StageOutput {
    pub stage: &'static str,
    pub report: Value,
    pub gates: Vec<Gate>,
    /// Headline metrics copied into the summary.
    pub metrics: Value,
}

/// Stage context shared by every subcommand.
pub struct Context {
    pub config: RunConfig,
    pub hash: String,
    pub dir: PathBuf,
    pub force: bool,
    pool: rayon::ThreadPool,
}

impl Context {
    pub fn new(config: RunConfig, dir: PathBuf, force: bool) -> Result<Self> {
        std::fs::create_dir_all(&dir)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| invalid(format!("thread pool: {e}")))?;
        Ok(Self {
            hash: config.hash(),
            config,
            dir,
            force,
            pool,
        })
    }

    /// Path of an artifact, refusing to replace it without `--force`.
    fn target(&self, name: &str) -> Result<PathBuf> {
        let p = self.dir.join(name);
        if p.exists() && !self.force {
            return Err(Error::WouldOverwrite(p));
        }
        Ok(p)
    }

    fn input(&self, name: &str, stage: &'static str) -> Result<PathBuf> {
        let p = self.dir.join(name);
        if !p.exists() {
            return Err(Error::Dependency { path: p, stage });
        }
        Ok(p)
    }

    fn write_json(&self, name: &str, value: &Value) -> Result<PathBuf> {
        let p = self.target(name)?;
        std::fs::write(&p, serde_json::to_string_pretty(value)? + "\n")?;
        Ok(p)
    }

    fn provenance(&self) -> Value {
        json!({ "version": VERSION, "config_hash": self.hash, "name": self.config.name })
    }

    fn spec(&self) -> Result<TripleWellSpec> {
        self.config.potential.spec()
    }
}

/// Resolves the run directory for a command.
pub fn run_dir(out: Option<&Path>, config: &RunConfig) -> PathBuf {
    if let Some(d) = out {
        return d.to_path_buf();
    }
    let root = std::env::var_os("TRIOD_LAB_OUT")
        .map(PathBuf::from)
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("runs"));
    let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S%.3f");
    root.join(format!("{}-{stamp}", config.name))
}

fn connection_file(i: usize, j: usize) -> String {
    format!("connection_{i}{j}.csv")
}

fn stage_output(ctx: &Context, stage: &'static str, mut report: Value, gates: Vec<Gate>, metrics: Value) -> Result<StageOutput> {
    report["provenance"] = ctx.provenance();
    report["gates"] = serde_json::to_value(&gates)?;
    ctx.write_json(&format!("{}.json", stage.replace('-', "_")), &report)?;
    Ok(StageOutput {
        stage,
        report,
        gates,
        metrics,
    })
}

// ---------------------------------------------------------------------------
// Stages

pub fn stage_validate(ctx: &Context) -> Result<StageOutput> {
    let spec = ctx.spec()?;
    let rep = spec.validate();
    let gates = vec![Gate::holds("potential_valid", rep.passed)];
    let metrics = json!({ "potential_valid": rep.passed });
    stage_output(ctx, "potential", json!({ "validation": rep }), gates, metrics)
}

fn pairs(ctx: &Context, spec: &TripleWellSpec) -> Vec<(usize, usize)> {
    ctx.config.connection.pairs.clone().unwrap_or_else(|| {
        if spec.well_count() == 3 {
            PAIRS.to_vec()
        } else {
            vec![(0, 1)]
        }
    })
}

pub fn stage_connect(ctx: &Context) -> Result<StageOutput> {
    let spec = ctx.spec()?;
    let params = ctx.config.connection.params();
    let pairs = pairs(ctx, &spec);
    let paths: Vec<ConnectionPath> = if pairs == PAIRS && spec.well_count() == 3 {
        solve_triple(&spec, &params)?.to_vec()
    } else {
        pairs
            .iter()
            .map(|&(i, j)| solve_connection(&spec, i, j, &params))
            .collect::<Result<_>>()?
    };
    let mut entries = Vec::new();
    let mut gates = Vec::new();
    for p in &paths {
        let (i, j) = p.endpoints;
        let file = ctx.target(&connection_file(i, j))?;
        p.write_csv(&file)?;
        let el = p.el_residual(&spec);
        println!("connection {i}-{j}: sigma = {:.10} -> {}", p.action, file.display());
        gates.push(Gate::at_most(format!("connection_{i}{j}_el_residual"), el, params.tolerance));
        gates.push(Gate::at_most(
            format!("connection_{i}{j}_equipartition"),
            p.equipartition_residual,
            ctx.config.connection.equipartition_tolerance,
        ));
        entries.push(json!({
            "pair": [i, j],
            "sigma": p.action,
            "equipartition_residual": p.equipartition_residual,
            "el_residual": el,
            "endpoint_error": p.endpoint_error,
            "iterations": p.log.iterations,
            "csv": connection_file(i, j),
        }));
    }
    let sigma: Vec<f64> = paths.iter().map(|p| p.action).collect();
    stage_output(ctx, "connections", json!({ "connections": entries }), gates, json!({ "sigma": sigma }))
}

fn load_connections(ctx: &Context, spec: &TripleWellSpec) -> Result<[ConnectionPath; 3]> {
    if spec.well_count() != 3 {
        return Err(invalid("the triod stages need a three-well potential"));
    }
    let mut out = Vec::with_capacity(3);
    for (i, j) in PAIRS {
        out.push(ConnectionPath::read_csv(&ctx.input(&connection_file(i, j), "connect")?, spec)?);
    }
    Ok(out.try_into().expect("three paths"))
}

fn sigmas(conns: &[ConnectionPath; 3]) -> [f64; 3] {
    [conns[0].action, conns[1].action, conns[2].action]
}

/// Initial ray azimuths for `Γ₁₂, Γ₂₃, Γ₃₁`.
pub fn initial_rays(rays: Rays, sigma: [f64; 3]) -> Result<[f64; 3]> {
    match rays {
        Rays::Degrees(d) => Ok(d.map(f64::to_radians)),
        Rays::Keyword(RayKeyword::Predict) => {
            let p = predict_angles(sigma)?;
            Ok([FRAC_PI_2, FRAC_PI_2 + p[1], FRAC_PI_2 + p[1] + p[2]])
        }
    }
}

/// `η`-distance over which the connection covers 5% to 95% of its jump.
fn connection_width(path: &ConnectionPath) -> f64 {
    let a = path.values[0];
    let d = path.values[path.len() - 1] - a;
    let frac = |k: usize| (path.values[k] - a).dot(&d) / d.norm_squared();
    let lo = (0..path.len()).find(|&k| frac(k) >= 0.05).unwrap_or(0);
    let hi = (0..path.len()).rev().find(|&k| frac(k) <= 0.95).unwrap_or(path.len() - 1);
    (path.eta(hi) - path.eta(lo)).abs()
}

pub fn stage_relax(ctx: &Context) -> Result<StageOutput> {
    let cfg = &ctx.config;
    let spec = ctx.spec()?;
    let conns = load_connections(ctx, &spec)?;
    let sigma = sigmas(&conns);
    let n = cfg.grid_nodes()?;
    let width = conns.iter().map(connection_width).fold(0.0, f64::max);
    if cfg.field.extent < 3.0 * width {
        return Err(invalid(format!(
            "field.extent {} is below three connection widths ({width:.3} each)",
            cfg.field.extent
        )));
    }
    let rays = initial_rays(cfg.field.rays, sigma)?;
    let (init, ansatz) = init_triod(&spec, &conns, rays, n, cfg.field.spacing, cfg.field.tube)?;
    let (field, report) = relax(&init, &cfg.relax_params())?;
    let grad_bound = field.interior().map(|(i, j)| field.node_gradient(i, j).norm()).fold(0.0, f64::max);
    let meta = SnapshotMeta {
        version: VERSION.into(),
        config_hash: ctx.hash.clone(),
        n,
        spacing: field.spacing,
        extent: field.extent(),
        potential: spec.clone(),
        ray_angles: rays,
        tube: cfg.field.tube,
        residual_norm: field.residual_norm,
        field_bound: field.sup_norm(),
        gradient_bound: grad_bound,
        relax: Some(report.clone()),
    };
    let bin = ctx.target("field.bin")?;
    ctx.target("field.json")?;
    write_snapshot(&bin, &field, &meta)?;

    // Field checks.
    let chk = &cfg.checks;
    let phase = PhaseMap::new(&field);
    let h1 = check_hypothesis1(&field, &phase, chk.decay_range.0, chk.decay_range.1, chk.decay_bin)?;
    let h2: Vec<_> = (0..3)
        .map(|r| {
            check_hypothesis2(
                &field,
                &conns[r].interpolator(),
                rays[r],
                &chk.probe_distances,
                chk.probe_half_length,
                chk.probe_samples,
            )
        })
        .collect::<Result<_>>()?;
    let equivariance = cyclic_symmetry(&spec).map(|q| equivariance_defect(&field, 2.0 * PI / 3.0, &q));
    let far = FarField::new(Arc::new(field.clone()), Arc::new(ansatz));
    let jump = far.boundary_jump(400);
    let (div, _, _) = divergence_residual(&field, 2, None)?;
    let stress = StressTensorField::new(&field);
    stress.write_csv(&field, &ctx.target("stress.csv")?, chk.stress_stride)?;

    let mut gates = vec![
        Gate::at_most("relax_residual", report.final_residual, cfg.field.tolerance),
        Gate::holds("relax_energy_monotone", report.energy_monotone),
        Gate::holds("stress_frobenius_bound", stress.frobenius_bound_holds),
    ];
    gates.push(Gate::at_most(
        "hypothesis1_worst_slope",
        h1.worst_slope().unwrap_or(f64::NEG_INFINITY),
        chk.decay_slope,
    ));
    for (r, rep) in h2.iter().enumerate() {
        let (i, j) = PAIRS[r];
        if let Some(last) = rep.probes.last() {
            gates.push(Gate::at_most(
                format!("hypothesis2_{i}{j}_tangential_at_{}", last.distance),
                last.tangential_derivative,
                chk.tangential_tolerance,
            ));
        }
    }
    if let Some(e) = &equivariance {
        gates.push(Gate::at_most("equivariance_defect_per_h2", e.defect_per_h2, chk.equivariance_factor));
    }
    let report_json = json!({
        "relax": report,
        "grid": { "n": n, "spacing": field.spacing, "extent": field.extent() },
        "ray_angles_deg": rays.map(f64::to_degrees),
        "field_bound": meta.field_bound,
        "gradient_bound": grad_bound,
        "boundary_jump": jump,
        "hypothesis1": h1,
        "hypothesis2": h2,
        "equivariance": equivariance,
        "divergence": div,
        "stress_sup_norm": stress.sup_norm,
        "stress_max_asymmetry": stress.max_asymmetry(),
        "connection_width": width,
    });
    let metrics = json!({
        "relax_steps": report.steps,
        "relax_residual": report.final_residual,
        "boundary_jump": jump,
        "hypothesis2_onsets": h2.iter().map(|r| r.onset).collect::<Vec<_>>(),
    });
    stage_output(ctx, "relax", report_json, gates, metrics)
}

struct Loaded {
    sigma: [f64; 3],
    field: crate::field::GridField,
    meta: SnapshotMeta,
    far: FarField,
}

fn load_field(ctx: &Context) -> Result<Loaded> {
    let spec = ctx.spec()?;
    let conns = load_connections(ctx, &spec)?;
    let (field, meta) = read_snapshot(&ctx.input("field.bin", "relax")?)?;
    if meta.potential != spec {
        return Err(invalid("field snapshot was relaxed with a different potential"));
    }
    let ansatz = TriodAnsatz::new(&spec, &conns, meta.ray_angles, meta.tube)?;
    let far = FarField::new(Arc::new(field.clone()), Arc::new(ansatz));
    Ok(Loaded {
        sigma: sigmas(&conns),
        field,
        meta,
        far,
    })
}

/// Index of the interface whose initial ray is closest to `azimuth`.
fn interface_at(rays: &[f64; 3], azimuth: f64) -> usize {
    (0..3)
        .min_by(|&a, &b| angle_diff(rays[a], azimuth).abs().total_cmp(&angle_diff(rays[b], azimuth).abs()))
        .expect("three rays")
}

pub fn stage_flux2d(ctx: &Context) -> Result<StageOutput> {
    let f = &ctx.config.flux;
    let l = load_field(ctx)?;
    let circle = ctx
        .pool
        .install(|| flux_circle_2d(&l.far, f.circle_radius, f.circle_nodes, &l.meta.ray_angles))?;
    let total_sigma: f64 = l.sigma.iter().sum();
    let ratio = circle.total_norm() / total_sigma;
    let mut gates = vec![Gate::at_most("flux2d_total_over_sigma", ratio, f.circle_tolerance)];
    let mut windows = Vec::new();
    for w in &circle.windows {
        let r = interface_at(&l.meta.ray_angles, w.azimuth);
        let (i, j) = PAIRS[r];
        let err = w.limit_error(l.sigma[r]);
        gates.push(Gate::at_most(format!("flux2d_window_{i}{j}"), err, f.window_tolerance));
        windows.push(json!({ "pair": [i, j], "relative_error": err, "window": w }));
    }
    let report = json!({ "circle": circle, "sigma": l.sigma, "total_over_sigma": ratio, "windows": windows });
    stage_output(ctx, "flux2d", report, gates, json!({ "flux2d_total_over_sigma": ratio }))
}

pub fn stage_flux3d(ctx: &Context) -> Result<StageOutput> {
    let f = &ctx.config.flux;
    // Reject schedules that fail at some radius before loading anything.
    let probe = [FRAC_PI_2, FRAC_PI_2 + 2.0 * PI / 3.0, FRAC_PI_2 + 4.0 * PI / 3.0];
    for &r in &f.radii {
        make_surgery_plan(r, f.schedule, &probe, None, f.resolution)?;
    }
    let l = load_field(ctx)?;
    let table = ctx
        .pool
        .install(|| convergence_study(&l.far, f.schedule, &f.radii, &l.meta.ray_angles, f.delta, f.resolution))?;
    let mut gates = Vec::new();
    let last = table.decompositions.last().expect("at least one radius");
    let mut strips = Vec::new();
    for s in &last.slices {
        let r = interface_at(&l.meta.ray_angles, s.geometry.azimuth);
        let (i, j) = PAIRS[r];
        let strip = s.strip_limit_error(l.sigma[r]);
        let slice = s.limit_error(l.sigma[r]);
        gates.push(Gate::at_most(format!("flux3d_strip_{i}{j}_at_R{}", last.plan.radius), strip, f.strip_tolerance));
        strips.push(json!({ "pair": [i, j], "strip_relative_error": strip, "slice_relative_error": slice }));
    }
    let i_worst = table
        .rows
        .iter()
        .flat_map(|r| r.i_max)
        .fold(0.0, f64::max);
    gates.push(Gate::at_most("flux3d_i_max", i_worst, 2.0 + f.i_tolerance));
    let exp_err = table
        .cap_bound_exponent
        .map_or(f64::INFINITY, |e| (e - f.cap_exponent).abs());
    gates.push(Gate::at_most("flux3d_cap_exponent_error", exp_err, f.cap_exponent_tolerance));
    if f.require_total_decreasing {
        gates.push(Gate::holds("flux3d_total_decreasing", table.total_decreasing));
    }
    let partition = table.decompositions.iter().map(|d| d.partition_error).fold(0.0, f64::max);
    gates.push(Gate::at_most("flux3d_partition_error", partition, 1e-12));
    let metrics = json!({
        "flux3d_strip_errors": strips,
        "flux3d_cap_bound_exponent": table.cap_bound_exponent,
        "flux3d_total_norms": table.rows.iter().map(|r| r.total_norm).collect::<Vec<_>>(),
    });
    let report = json!({ "sigma": l.sigma, "study": table, "strips_at_largest_radius": strips });
    stage_output(ctx, "flux3d", report, gates, metrics)
}

pub fn stage_young(ctx: &Context) -> Result<StageOutput> {
    let y = &ctx.config.young;
    let l = load_field(ctx)?;
    let phase = PhaseMap::new(&l.field);
    let fits = extract_interfaces(&l.field, &phase, y.annulus)?;
    let report = AngleReport::from_fits(fits, l.sigma)?;
    report.write_json(&ctx.target("angles.json")?)?;
    report.write_csv(&ctx.target("angles.csv")?)?;
    let summary = ctx.target("summary.csv")?;
    if summary.exists() {
        std::fs::remove_file(&summary)?;
    }
    append_summary(&summary, &ctx.config.name, &report)?;
    let sine = verify_sine_law(&report, y.sine_tolerance);
    let gates = vec![
        Gate::at_most(
            "young_angle_error_deg",
            report.max_prediction_error_deg.unwrap_or(f64::INFINITY),
            y.angle_tolerance_deg,
        ),
        Gate::at_most("young_sine_spread", sine.spread, y.sine_tolerance),
        Gate::at_most("young_balance_residual", report.balance_residual, y.balance_tolerance),
    ];
    println!(
        "angles (deg): measured {:.3?}, predicted {:.3?}",
        report.angles_deg,
        report.predicted_deg.unwrap_or([f64::NAN; 3])
    );
    let metrics = json!({
        "angles_deg": report.angles_deg,
        "predicted_deg": report.predicted_deg,
        "sine_spread": report.sine_spread,
        "balance_residual": report.balance_residual,
    });
    stage_output(ctx, "young", json!({ "angles": report, "sine_law": sine }), gates, metrics)
}

/// Runs `all`: every stage in order and `summary.json`.
pub fn stage_all(ctx: &Context) -> Result<Vec<StageOutput>> {
    let mut outs = vec![stage_validate(ctx)?, stage_connect(ctx)?, stage_relax(ctx)?];
    let mode = ctx.config.flux.mode;
    if matches!(mode, FluxMode::TwoD | FluxMode::Both) {
        outs.push(stage_flux2d(ctx)?);
    }
    if matches!(mode, FluxMode::ThreeD | FluxMode::Both) {
        outs.push(stage_flux3d(ctx)?);
    }
    outs.push(stage_young(ctx)?);
    let gates: Vec<&Gate> = outs.iter().flat_map(|o| &o.gates).collect();
    let metrics: serde_json::Map<String, Value> = outs.iter().map(|o| (o.stage.to_string(), o.metrics.clone())).collect();
    let summary = json!({
        "provenance": ctx.provenance(),
        "metrics": metrics,
        "gates": gates,
        "pass": gates.iter().all(|g| g.pass),
    });
    ctx.write_json("summary.json", &summary)?;
    Ok(outs)
}

fn stage_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::ValidatePotential(_) => "validate-potential",
        Command::Connect(_) => "connect",
        Command::Relax(_) => "relax",
        Command::Flux2d(_) => "flux2d",
        Command::Flux3d(_) => "flux3d",
        Command::Young(_) => "young",
        Command::All(_) => "all",
    }
}

/// Runs a parsed command; returns the outputs of every completed stage.
pub fn execute(cmd: &Command) -> Result<(PathBuf, Vec<StageOutput>)> {
    let common = cmd.common();
    let config = RunConfig::load(&common.config)?;
    let dir = run_dir(common.out.as_deref(), &config);
    let ctx = Context::new(config, dir.clone(), common.force)?;
    let cfg_path = ctx.dir.join("config.json");
    if !cfg_path.exists() || ctx.force {
        std::fs::write(&cfg_path, serde_json::to_string_pretty(&ctx.config)? + "\n")?;
    }
    let outs = match cmd {
        Command::ValidatePotential(_) => vec![stage_validate(&ctx)?],
        Command::Connect(_) => vec![stage_connect(&ctx)?],
        Command::Relax(_) => vec![stage_relax(&ctx)?],
        Command::Flux2d(_) => vec![stage_flux2d(&ctx)?],
        Command::Flux3d(_) => vec![stage_flux3d(&ctx)?],
        Command::Young(_) => vec![stage_young(&ctx)?],
        Command::All(_) => stage_all(&ctx)?,
    };
    Ok((dir, outs))
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stage = stage_name(&cli.command);
    match execute(&cli.command) {
        Ok((dir, outs)) => {
            let mut ok = true;
            for g in outs.iter().flat_map(|o| &o.gates) {
                ok &= g.pass;
                println!("{} {} = {:.6e} (limit {:.6e})", if g.pass { "PASS" } else { "FAIL" }, g.name, g.value, g.threshold);
            }
            println!("artifacts: {}", dir.display());
            if ok {
                0
            } else {
                2
            }
        }
        Err(e) => {
            eprintln!("error [{stage}]: {e}");
            1
        }
    }
}
