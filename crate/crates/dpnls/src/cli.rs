//! Command-line front end: configuration, subcommand dispatch, and artifact
//! persistence (CSV + manifest with checksums).
//!
//! Configuration is a flat `key=value` text file, overridable per-run with
//! repeated `--set key=value` flags; a few common settings also have
//! dedicated flags. All floats are printed with 17 significant digits so the
//! CSV round-trips binary64 exactly, and infinities are written as the
//! literal `inf`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::classify::{classify_run, ClassifyThresholds, RunVerdict};
use crate::error::{DpnlsError, Result};
use crate::evolve::{propagate, AbortReason, EvolveConfig, ObservableRow, TimeSeries};
use crate::field::Field;
use crate::functionals::{boost, e_ab_matches_phi, optimal_boost, report, scaling_derivative_check};
use crate::grid::{Grid, LineGrid, RadialGrid};
use crate::groundstate::{
    mass_curve, minimal_mass, solve_ground_state, zero_frequency_scan,
};
use crate::model::{derive_constants, omega_star, ModelParams};
use crate::varflow::{threshold_curves, FlowConfig, SampleStatus, TildeSample};

/// Format a float with 17 significant digits; infinities as the `inf`
/// literal.
pub fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x:.16e}")
    }
}

/// A float as a JSON value; infinities as the JSON string `"inf"`.
fn json_f64(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else if x > 0.0 {
        serde_json::Value::String("inf".to_string())
    } else {
        serde_json::Value::String("-inf".to_string())
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Flat `key=value` configuration with typed accessors and defaults.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    map: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                DpnlsError::Format(format!(
                    "{}:{}: expected key=value, got {line:?}",
                    path.display(),
                    lineno + 1
                ))
            })?;
            cfg.map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(cfg)
    }

    pub fn set(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv.split_once('=').ok_or_else(|| {
            DpnlsError::InvalidParams(format!("override must be key=value, got {kv:?}"))
        })?;
        self.map.insert(k.trim().to_string(), v.trim().to_string());
        Ok(())
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| {
                DpnlsError::InvalidParams(format!("config key {key}: bad float {s:?}"))
            }),
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| {
                DpnlsError::InvalidParams(format!("config key {key}: bad integer {s:?}"))
            }),
        }
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| {
                DpnlsError::InvalidParams(format!("config key {key}: bad integer {s:?}"))
            }),
        }
    }

    fn string_or(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_string()
    }

    pub fn params(&self) -> Result<ModelParams> {
        let d = self.usize_or("d", 3)? as u32;
        let p0 = self.f64_or("p0", 4.0)?;
        let p1 = self.f64_or("p1", 2.0)?;
        ModelParams::new(d, p0, p1)
    }

    pub fn seed(&self) -> Result<u64> {
        self.u64_or("seed", 0)
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.string_or("output_dir", "out"))
    }

    fn flow_config(&self, d: u32) -> Result<FlowConfig> {
        let base = FlowConfig::default_desk(d)?;
        let n = self.usize_or("flow.n", base.grid.n())?;
        let r = self.f64_or("flow.r", base.grid.r_max())?;
        Ok(FlowConfig {
            grid: RadialGrid::new(d, n, r)?,
            max_iters: self.usize_or("flow.max_iters", base.max_iters)?,
            tol: self.f64_or("flow.tol", base.tol)?,
            tol_neg: self.f64_or("flow.tol_neg", base.tol_neg)?,
        })
    }

    fn evolve_config(&self) -> Result<EvolveConfig> {
        let base = EvolveConfig::default();
        Ok(EvolveConfig {
            dt: self.f64_or("evolve.dt", base.dt)?,
            t_final: self.f64_or("evolve.t", base.t_final)?,
            observe_every: self.usize_or("evolve.observe_every", base.observe_every)?,
            snapshot_every: self.usize_or("evolve.snapshot_every", base.snapshot_every)?,
        })
    }
}

// ---------------------------------------------------------------------------
// Artifact output: CSV files plus a manifest with checksums
// ---------------------------------------------------------------------------

struct OutputDir {
    dir: PathBuf,
    files: BTreeMap<String, String>, // name -> sha256 hex
}

impl OutputDir {
    fn new(dir: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir, files: BTreeMap::new() })
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), contents)?;
        let mut h = Sha256::new();
        h.update(contents);
        self.files.insert(name.to_string(), format!("{:x}", h.finalize()));
        Ok(())
    }

    fn write_field(&mut self, name: &str, f: &Field) -> Result<()> {
        let path = self.dir.join(name);
        f.write_snapshot(&path)?;
        let bytes = std::fs::read(&path)?;
        let mut h = Sha256::new();
        h.update(&bytes);
        self.files.insert(name.to_string(), format!("{:x}", h.finalize()));
        Ok(())
    }

    fn finish(&mut self, params: &ModelParams, seed: u64, extra: serde_json::Value) -> Result<()> {
        let constants = derive_constants(params).ok();
        let manifest = serde_json::json!({
            "version": env!("CARGO_PKG_VERSION"),
            "params": { "d": params.d, "p0": params.p0, "p1": params.p1 },
            "constants": constants,
            "seed": seed,
            "files": self.files,
            "extra": extra,
        });
        let body = serde_json::to_vec_pretty(&manifest)
            .map_err(|e| DpnlsError::Format(e.to_string()))?;
        std::fs::write(self.dir.join("manifest.json"), body)?;
        Ok(())
    }
}

fn csv_row(out: &mut String, cells: &[String]) {
    let _ = writeln!(out, "{}", cells.join(","));
}

// ---------------------------------------------------------------------------
// Argument parsing
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(name = "dpnls", version, about = "Double-power NLS numerics laboratory")]
struct Cli {
    /// Flat key=value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. --set p0=4.
    #[arg(long = "set", global = true)]
    set: Vec<String>,
    /// Worker threads (DPNLS_JOBS overrides; 0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Output directory (shorthand for --set output_dir=...).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print and persist the derived model constants.
    Constants {
        #[arg(long)]
        d: Option<u32>,
        #[arg(long)]
        p0: Option<f64>,
        #[arg(long)]
        p1: Option<f64>,
    },
    /// Ground-state profiles, the mass curve, and the critical masses.
    Groundstate {
        /// Frequency; accepts a plain number or a multiple like
        /// `0.99omega_star`.
        #[arg(long)]
        omega: Option<String>,
        /// Sample the mass curve at this many frequencies and locate the
        /// minimal mass.
        #[arg(long, value_name = "N")]
        mass_curve: Option<usize>,
        /// Succeed when no ground state exists at the requested frequency.
        #[arg(long)]
        expect_none: bool,
        /// Tally a 64-amplitude shooting scan at omega = 0.
        #[arg(long)]
        zero_frequency: bool,
    },
    /// Sample the threshold curves I(m), tilde-I(m), e(m).
    Curves,
    /// Propagate initial data and classify the run.
    Evolve,
    /// Classify a previously written observable series.
    Classify {
        /// Path to a series CSV produced by `evolve`.
        #[arg(long)]
        series: PathBuf,
    },
    /// Run the invariant suite; exits 3 on any failure.
    Check,
}

/// Entry point returning the process exit code
/// (0 ok, 1 invalid input, 2 numerical failure, 3 invariant-suite failure).
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                DpnlsError::Numerical(_) | DpnlsError::NoSolution(_) => 2,
                _ => 1,
            }
        }
    }
}

fn install_jobs(jobs: usize) -> Result<()> {
    let jobs = match std::env::var("DPNLS_JOBS") {
        Ok(s) => s.parse().map_err(|_| {
            DpnlsError::InvalidParams(format!("DPNLS_JOBS must be an integer, got {s:?}"))
        })?,
        Err(_) => jobs,
    };
    if jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| DpnlsError::InvalidParams(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    install_jobs(cli.jobs)?;
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    for kv in &cli.set {
        cfg.set(kv)?;
    }
    if let Some(out) = &cli.output {
        cfg.set(&format!("output_dir={}", out.display()))?;
    }

    match cli.cmd {
        Cmd::Constants { d, p0, p1 } => {
            if let Some(d) = d {
                cfg.set(&format!("d={d}"))?;
            }
            if let Some(p0) = p0 {
                cfg.set(&format!("p0={p0}"))?;
            }
            if let Some(p1) = p1 {
                cfg.set(&format!("p1={p1}"))?;
            }
            cmd_constants(&cfg)
        }
        Cmd::Groundstate { omega, mass_curve, expect_none, zero_frequency } => {
            cmd_groundstate(&cfg, omega.as_deref(), mass_curve, expect_none, zero_frequency)
        }
        Cmd::Curves => cmd_curves(&cfg),
        Cmd::Evolve => cmd_evolve(&cfg),
        Cmd::Classify { series } => cmd_classify(&cfg, &series),
        Cmd::Check => cmd_check(&cfg),
    }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_constants(cfg: &RunConfig) -> Result<i32> {
    let params = cfg.params()?;
    let c = derive_constants(&params)?;
    let w_star = omega_star(&params)?;
    let mut out = OutputDir::new(cfg.output_dir())?;
    let mut csv = String::new();
    csv_row(
        &mut csv,
        &["s0", "theta", "c0", "c1", "a0", "b0", "rho", "tilde_ratio", "omega_star"]
            .map(String::from),
    );
    csv_row(
        &mut csv,
        &[c.s0, c.theta, c.c0, c.c1, c.a0, c.b0, c.rho, c.tilde_ratio, w_star].map(fmt_f64),
    );
    out.write("constants.csv", csv.as_bytes())?;
    out.finish(&params, cfg.seed()?, serde_json::json!({ "omega_star": json_f64(w_star) }))?;
    println!(
        "d={} p0={} p1={}  s0={}  tilde_ratio={}  omega_star={}",
        params.d,
        params.p0,
        params.p1,
        fmt_f64(c.s0),
        fmt_f64(c.tilde_ratio),
        fmt_f64(w_star)
    );
    Ok(0)
}

fn parse_omega(params: &ModelParams, text: &str) -> Result<f64> {
    let text = text.trim();
    if let Some(mult) = text.strip_suffix("omega_star") {
        let mult = if mult.is_empty() { 1.0 } else { mult.parse().map_err(|_| {
            DpnlsError::InvalidParams(format!("bad omega multiple {text:?}"))
        })? };
        Ok(mult * omega_star(params)?)
    } else {
        text.parse()
            .map_err(|_| DpnlsError::InvalidParams(format!("bad omega {text:?}")))
    }
}

fn cmd_groundstate(
    cfg: &RunConfig,
    omega: Option<&str>,
    n_mass_curve: Option<usize>,
    expect_none: bool,
    zero_frequency: bool,
) -> Result<i32> {
    let params = cfg.params()?;
    let mut out = OutputDir::new(cfg.output_dir())?;
    let tol = cfg.f64_or("groundstate.tol", 1e-13)?;
    let mut extra = serde_json::Map::new();

    if zero_frequency {
        // 64 amplitudes over three decades, model signs (1, -1)
        let s_grid: Vec<f64> =
            (0..64).map(|k| 0.1 * 1000f64.powf(k as f64 / 63.0)).collect();
        let rep = zero_frequency_scan(&params, 1.0, -1.0, &s_grid)?;
        extra.insert(
            "zero_frequency".into(),
            serde_json::json!({
                "undershoot": rep.undershoot,
                "overshoot": rep.overshoot,
                "converged": rep.converged,
                "indeterminate": rep.indeterminate,
            }),
        );
        println!(
            "zero-frequency scan: {} undershoot, {} overshoot, {} converged, {} indeterminate",
            rep.undershoot, rep.overshoot, rep.converged, rep.indeterminate
        );
        if rep.converged > 0 {
            eprintln!("unexpected converged profile at omega = 0");
        }
    }

    if let Some(text) = omega {
        let w = parse_omega(&params, text)?;
        match solve_ground_state(&params, w, tol) {
            Ok(gs) => {
                if expect_none {
                    eprintln!("ground state found at omega = {w} but none was expected");
                    return Ok(2);
                }
                out.write_field("groundstate.fld", &gs.profile)?;
                let mut csv = String::new();
                csv_row(
                    &mut csv,
                    &["omega", "mass", "energy", "phi", "kinetic", "amplitude"].map(String::from),
                );
                csv_row(
                    &mut csv,
                    &[
                        gs.omega,
                        gs.mass,
                        gs.report.energy,
                        gs.report.phi,
                        gs.report.kinetic,
                        gs.shooting_amplitude,
                    ]
                    .map(fmt_f64),
                );
                out.write("groundstate.csv", csv.as_bytes())?;
                println!(
                    "omega={} mass={} energy={}",
                    fmt_f64(gs.omega),
                    fmt_f64(gs.mass),
                    fmt_f64(gs.report.energy)
                );
            }
            Err(e) => {
                if expect_none {
                    println!("no ground state at omega = {w}: {e}");
                } else {
                    return Err(e);
                }
            }
        }
    }

    if let Some(n) = n_mass_curve {
        if n < 2 {
            return Err(DpnlsError::InvalidParams("mass curve needs at least 2 samples".into()));
        }
        let w_star = omega_star(&params)?;
        let lo = cfg.f64_or("masscurve.omega_min", 0.02 * w_star)?;
        let hi = cfg.f64_or("masscurve.omega_max", 0.95 * w_star)?;
        let omegas: Vec<f64> = (0..n)
            .map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
            .collect();
        let samples = mass_curve(&params, &omegas);
        let mut csv = String::new();
        csv_row(&mut csv, &["omega", "mass", "phi_residual", "status"].map(String::from));
        for s in &samples {
            let status = match &s.status {
                Ok(()) => "ok".to_string(),
                Err(e) => format!("failed: {}", e.replace(',', ";")),
            };
            csv_row(
                &mut csv,
                &[fmt_f64(s.omega), fmt_f64(s.mass), fmt_f64(s.phi_residual), status],
            );
        }
        out.write("mass_curve.csv", csv.as_bytes())?;
        let mm = minimal_mass(&params)?;
        extra.insert(
            "minimal_mass".into(),
            serde_json::json!({
                "omega_c": json_f64(mm.omega_c),
                "m_c": json_f64(mm.m_c),
                "m_tilde_c": json_f64(mm.m_tilde_c),
            }),
        );
        println!(
            "omega_c={} m_c={} m_tilde_c={}",
            fmt_f64(mm.omega_c),
            fmt_f64(mm.m_c),
            fmt_f64(mm.m_tilde_c)
        );
    }

    out.finish(&params, cfg.seed()?, serde_json::Value::Object(extra))?;
    Ok(0)
}

fn curve_csv(
    out: &mut OutputDir,
    name: &str,
    samples: &[(f64, f64, SampleStatus, Option<String>)],
) -> Result<()> {
    let mut csv = String::new();
    csv_row(&mut csv, &["m", "value", "status", "minimizer_snapshot_path"].map(String::from));
    for (m, value, status, path) in samples {
        csv_row(
            &mut csv,
            &[
                fmt_f64(*m),
                fmt_f64(*value),
                status.to_string(),
                path.clone().unwrap_or_default(),
            ],
        );
    }
    out.write(name, csv.as_bytes())
}

fn cmd_curves(cfg: &RunConfig) -> Result<i32> {
    let params = cfg.params()?;
    let flow = cfg.flow_config(params.d)?;
    let mm = minimal_mass(&params)?;
    let m_min = cfg.f64_or("curves.m_min", 0.5 * mm.m_tilde_c)?;
    let m_max = cfg.f64_or("curves.m_max", 1.5 * mm.m_c)?;
    let m_count = cfg.usize_or("curves.m_count", 9)?;
    if m_count < 2 || !(m_max > m_min) || !(m_min > 0.0) {
        return Err(DpnlsError::InvalidParams("bad curve mass grid".into()));
    }
    let m_grid: Vec<f64> = (0..m_count)
        .map(|k| m_min + (m_max - m_min) * k as f64 / (m_count - 1) as f64)
        .collect();
    let curves = threshold_curves(&params, &m_grid, &flow)?;

    let mut out = OutputDir::new(cfg.output_dir())?;
    let mut rows = Vec::new();
    for (k, s) in curves.i_samples.iter().enumerate() {
        let path = s.minimizer.as_ref().map(|f| {
            let name = format!("i_min_{k:03}.fld");
            let _ = out.write_field(&name, f);
            name
        });
        rows.push((s.m, s.value, s.status, path));
    }
    curve_csv(&mut out, "i_curve.csv", &rows)?;

    let mut csv = String::new();
    csv_row(
        &mut csv,
        &["m", "direct_value", "direct_status", "identity_value", "identity_status"]
            .map(String::from),
    );
    for TildeSample { direct, identity_value, identity_status } in &curves.tilde_i_samples {
        csv_row(
            &mut csv,
            &[
                fmt_f64(direct.m),
                fmt_f64(direct.value),
                direct.status.to_string(),
                fmt_f64(*identity_value),
                identity_status.to_string(),
            ],
        );
    }
    out.write("tilde_i_curve.csv", csv.as_bytes())?;

    let rows: Vec<_> =
        curves.e_samples.iter().map(|s| (s.m, s.value, s.status, None)).collect();
    curve_csv(&mut out, "e_curve.csv", &rows)?;

    let extra = serde_json::json!({
        "m_c_groundstate": json_f64(mm.m_c),
        "m_tilde_c_groundstate": json_f64(mm.m_tilde_c),
        "m_c_estimate": curves.m_c_estimate.map(json_f64),
        "tilde_m_c_estimate": curves.tilde_m_c_estimate.map(json_f64),
    });
    out.finish(&params, cfg.seed()?, extra)?;
    if let Some(mc) = curves.m_c_estimate {
        println!("I-curve m_c estimate {}", fmt_f64(mc));
    }
    println!("curves written to {}", cfg.output_dir().display());
    Ok(0)
}

fn series_csv(series: &TimeSeries) -> String {
    let mut csv = String::new();
    csv_row(
        &mut csv,
        &[
            "t",
            "mass",
            "energy",
            "momentum",
            "phi",
            "virial_momentum",
            "variance",
            "peak",
            "tail_mass",
            "j1",
        ]
        .map(String::from),
    );
    for r in &series.rows {
        csv_row(
            &mut csv,
            &[
                r.t,
                r.mass,
                r.energy,
                r.momentum,
                r.phi,
                r.virial_momentum,
                r.variance,
                r.peak,
                r.tail_mass,
                r.j1,
            ]
            .map(fmt_f64),
        );
    }
    csv
}

/// Build the initial field described by the `evolve.*` config keys.
fn initial_field(cfg: &RunConfig, params: &ModelParams) -> Result<Field> {
    let geometry = cfg.string_or("evolve.geometry", "line");
    let init = cfg.string_or("evolve.init", "gaussian");
    let amp = cfg.f64_or("evolve.amplitude", 1.0)?;
    let width = cfg.f64_or("evolve.width", 2.0)?;
    match (geometry.as_str(), init.as_str()) {
        ("line", "gaussian") => {
            let n = cfg.usize_or("grid.n", 4096)?;
            let l = cfg.f64_or("grid.extent", 160.0)?;
            let g = LineGrid::new(n, l)?;
            let f = Field::from_line_fn(g, |x| {
                Complex64::new(amp * (-x * x / (2.0 * width * width)).exp(), 0.0)
            });
            let xi = cfg.f64_or("evolve.boost", 0.0)?;
            if xi != 0.0 { boost(&f, xi) } else { Ok(f) }
        }
        ("radial", "gaussian") => {
            let n = cfg.usize_or("grid.n", 8192)?;
            let r = cfg.f64_or("grid.extent", 80.0)?;
            let g = RadialGrid::new(params.d, n, r)?;
            Ok(Field::from_radial_fn(g, |x| {
                Complex64::new(amp * (-x * x / (2.0 * width * width)).exp(), 0.0)
            }))
        }
        ("radial", "soliton") => {
            let w = parse_omega(params, &cfg.string_or("evolve.omega", "0.5omega_star"))?;
            let tol = cfg.f64_or("groundstate.tol", 1e-13)?;
            Ok(solve_ground_state(params, w, tol)?.profile)
        }
        ("line", "snapshot") | ("radial", "snapshot") => {
            let path = cfg.raw("evolve.snapshot_path").ok_or_else(|| {
                DpnlsError::InvalidParams("evolve.snapshot_path required for init=snapshot".into())
            })?;
            Field::read_snapshot(Path::new(path))
        }
        _ => Err(DpnlsError::InvalidParams(format!(
            "unsupported evolve.geometry={geometry} evolve.init={init}"
        ))),
    }
}

fn verdict_json(verdict: &RunVerdict, abort: &Option<AbortReason>) -> serde_json::Value {
    serde_json::json!({
        "label": verdict.label.to_string(),
        "abort": abort.as_ref().map(|a| a.to_string()),
        "evidence": verdict
            .evidence
            .iter()
            .map(|e| {
                serde_json::json!({
                    "criterion": e.criterion,
                    "value": json_f64(e.value),
                    "threshold": json_f64(e.threshold),
                    "pass": e.pass,
                })
            })
            .collect::<Vec<_>>(),
    })
}

fn cmd_evolve(cfg: &RunConfig) -> Result<i32> {
    let params = cfg.params()?;
    let f0 = initial_field(cfg, &params)?;
    let ecfg = cfg.evolve_config()?;
    let series = propagate(&f0, &ecfg, &params)?;
    let verdict = classify_run(&series, &params, &ClassifyThresholds::default());

    let mut out = OutputDir::new(cfg.output_dir())?;
    out.write("series.csv", series_csv(&series).as_bytes())?;
    for (step, f) in &series.snapshots {
        out.write_field(&format!("run_0_t{step}.fld"), f)?;
    }
    let extra = verdict_json(&verdict, &series.abort);
    out.finish(&params, cfg.seed()?, extra)?;
    println!("verdict: {}", verdict.label);
    if let Some(reason) = &series.abort {
        println!("aborted: {reason}");
    }
    Ok(0)
}

/// Read back a `series.csv` written by `cmd_evolve`.
fn read_series_csv(path: &Path, params: &ModelParams) -> Result<TimeSeries> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| DpnlsError::Format("empty series file".into()))?;
    let expected = "t,mass,energy,momentum,phi,virial_momentum,variance,peak,tail_mass,j1";
    if header != expected {
        return Err(DpnlsError::Format(format!("unexpected series header {header:?}")));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let cells: Vec<f64> = line
            .split(',')
            .map(|c| {
                if c == "inf" {
                    Ok(f64::INFINITY)
                } else if c == "-inf" {
                    Ok(f64::NEG_INFINITY)
                } else {
                    c.parse().map_err(|_| {
                        DpnlsError::Format(format!("line {}: bad float {c:?}", lineno + 2))
                    })
                }
            })
            .collect::<Result<_>>()?;
        if cells.len() != 10 {
            return Err(DpnlsError::Format(format!("line {}: expected 10 cells", lineno + 2)));
        }
        rows.push(ObservableRow {
            t: cells[0],
            mass: cells[1],
            energy: cells[2],
            momentum: cells[3],
            phi: cells[4],
            virial_momentum: cells[5],
            variance: cells[6],
            peak: cells[7],
            tail_mass: cells[8],
            j1: cells[9],
        });
    }
    // a placeholder field of the configured geometry carries the dimension
    let final_field = if params.d == 1 {
        Field::zero(Grid::Line(LineGrid::new(16, 1.0)?))
    } else {
        Field::zero(Grid::Radial(RadialGrid::new(params.d, 16, 1.0)?))
    };
    Ok(TimeSeries { rows, snapshots: Vec::new(), abort: None, final_field })
}

fn cmd_classify(cfg: &RunConfig, series_path: &Path) -> Result<i32> {
    let params = cfg.params()?;
    let series = read_series_csv(series_path, &params)?;
    let verdict = classify_run(&series, &params, &ClassifyThresholds::default());
    let mut out = OutputDir::new(cfg.output_dir())?;
    let extra = verdict_json(&verdict, &None);
    out.write(
        "verdict.json",
        serde_json::to_vec_pretty(&extra)
            .map_err(|e| DpnlsError::Format(e.to_string()))?
            .as_slice(),
    )?;
    out.finish(&params, cfg.seed()?, extra)?;
    println!("verdict: {}", verdict.label);
    Ok(0)
}

fn cmd_check(cfg: &RunConfig) -> Result<i32> {
    let params = cfg.params()?;
    let seed = cfg.seed()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0ffee);
    let mut failures = Vec::new();
    let mut check = |name: &str, value: f64, limit: f64| {
        let ok = value < limit;
        println!("{} {name}: {} (limit {})", if ok { "ok  " } else { "FAIL" }, fmt_f64(value), fmt_f64(limit));
        if !ok {
            failures.push(name.to_string());
        }
    };

    // identity suite on random radial fields
    let grid = RadialGrid::new(params.d, 1024, 40.0)?;
    let mut worst_eab = 0.0f64;
    let mut worst_scaling = 0.0f64;
    for _ in 0..20 {
        let (a, s): (f64, f64) = (rng.gen_range(0.2..2.0), rng.gen_range(1.0..6.0));
        let f = Field::from_radial_fn(grid, |r| {
            Complex64::new(a * (-r * r / (2.0 * s * s)).exp(), 0.0)
        });
        worst_eab = worst_eab.max(e_ab_matches_phi(&f, &params)?);
        worst_scaling = worst_scaling.max(scaling_derivative_check(&f, 1.3, &params)?);
    }
    check("E_{a0,b0} vs Phi identity", worst_eab, 1e-12);
    check("scaling-derivative residual", worst_scaling, 1e-6);

    // boost identity on the line
    let lg = LineGrid::new(1024, 80.0)?;
    let lf = Field::from_line_fn(lg, |x| {
        Complex64::new(0.8 * (-x * x / 8.0).exp(), 0.0) * Complex64::new(0.0, 0.3 * x).exp()
    });
    let line_params = ModelParams::new(1, params.p0, params.p1)?;
    let rep = report(&lf, &line_params);
    let (_, deboosted) = optimal_boost(&lf, &line_params)?;
    let drop = rep.energy - report(&deboosted, &line_params).energy;
    check(
        "boost energy drop vs |P|^2/M",
        (drop - rep.momentum * rep.momentum / rep.mass).abs(),
        1e-10,
    );

    // Pohozaev on one ground state
    let w = 0.5 * omega_star(&params)?;
    let gs = solve_ground_state(&params, w, 1e-13)?;
    check(
        "Pohozaev |Phi(Q)| / kinetic",
        gs.report.phi.abs() / gs.report.kinetic,
        1e-6,
    );

    // virial identity along a short dispersive run
    let df = Field::from_line_fn(LineGrid::new(1024, 160.0)?, |x| {
        Complex64::new(0.5 * (-x * x / 4.0).exp(), 0.0)
    });
    let ecfg = EvolveConfig { dt: 1e-3, t_final: 2.0, observe_every: 20, snapshot_every: 0 };
    let series = propagate(&df, &ecfg, &line_params)?;
    check("virial identity residual", crate::evolve::virial_check(&series)?, 1e-4);

    if failures.is_empty() {
        println!("all checks passed");
        Ok(0)
    } else {
        eprintln!("{} check(s) failed: {}", failures.len(), failures.join(", "));
        Ok(3)
    }
}
