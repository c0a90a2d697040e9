//! Parameter sweeps and table output.
//!
//! Every scan is expressed in units of λ. Rows are computed independently
//! (optionally on a rayon pool) and written in input order, so a rerun with
//! the same configuration produces byte-identical tables. Solver failures are
//! recorded in a trailing `status` column instead of aborting the scan.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::entanglement::PlanarMoments;
use crate::error::{domain, Error, Result};
use crate::fluctuations::{self, spectrum};
use crate::master::{self, DensityMatrix};
use crate::params::{critical_fields, CavityRatios, CriticalFields, EffectiveParams, ParameterFile, ParamsReport};
use crate::semiclassical::{self, BlochState};
use crate::spin::{build_spin_operators, coherent_spin_state};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => domain(format!("unknown format '{s}' (expected csv or json)")),
        }
    }
}

/// `start:stop:count`, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Range {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self> {
        let r = Self { start, stop, count };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return domain(format!("range needs at least 2 points, got {}", self.count));
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return domain("range bounds must be finite");
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        spectrum::uniform_grid(self.start, self.stop, self.count)
    }
}

impl FromStr for Range {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return domain(format!("range '{s}' is not of the form start:stop:count"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|_| Error::Domain(format!("bad number '{p}' in range '{s}'")));
        let count = parts[2].trim().parse::<usize>().map_err(|_| Error::Domain(format!("bad count '{}' in range '{s}'", parts[2])))?;
        Range::new(num(parts[0])?, num(parts[1])?, count)
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.count)
    }
}

/// A field value, or one of the critical fields by name (`hc-`, `hc+`).
pub fn parse_field(token: &str, critical: &CriticalFields) -> Result<f64> {
    let t = token.trim();
    let pick = |v: f64| if critical.exists { Ok(v) } else { domain("critical fields do not exist for these rates") };
    match t {
        "hc-" => pick(critical.h_minus),
        "hc+" => pick(critical.h_plus),
        _ => t.parse().map_err(|_| Error::Domain(format!("bad field value '{t}' (number, hc- or hc+)"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Outputs {
    pub moments: bool,
    pub entanglement: bool,
    pub eigenvalues: bool,
    pub semiclassical: bool,
    pub spectrum: bool,
}

impl Outputs {
    pub fn is_empty(&self) -> bool {
        !(self.moments || self.entanglement || self.eigenvalues || self.semiclassical || self.spectrum)
    }
}

impl FromStr for Outputs {
    type Err = Error;
    /// Comma-separated names; empty string or `none` selects nothing.
    fn from_str(s: &str) -> Result<Self> {
        let mut o = Outputs::default();
        for name in s.split(',').map(str::trim).filter(|n| !n.is_empty() && *n != "none") {
            match name {
                "moments" => o.moments = true,
                "entanglement" => o.entanglement = true,
                "eigenvalues" => o.eigenvalues = true,
                "semiclassical" => o.semiclassical = true,
                "spectrum" => o.spectrum = true,
                "all" => {
                    o = Outputs { moments: true, entanglement: true, eigenvalues: true, semiclassical: true, spectrum: true }
                }
                _ => return domain(format!("unknown output '{name}'")),
            }
        }
        Ok(o)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub h_over_lambda: Range,
    pub n_atoms: Vec<u64>,
    pub gamma_a_over_lambda: f64,
    pub gamma_b_over_lambda: f64,
    pub outputs: Outputs,
    /// Fields at which probe spectra are computed.
    pub spectrum_h_values: Vec<f64>,
    /// Cavity used for probe spectra.
    pub cavity: CavityRatios,
    pub probe_amplitude: f64,
    pub nu_over_lambda: Range,
    pub refine_levels: usize,
    pub output_dir: PathBuf,
    pub format: Format,
    /// Worker threads; `None` uses rayon's default.
    pub jobs: Option<usize>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            h_over_lambda: Range { start: -0.6, stop: 1.4, count: 201 },
            n_atoms: vec![25, 50, 100],
            gamma_a_over_lambda: 0.01,
            gamma_b_over_lambda: 0.2,
            outputs: Outputs::default(),
            spectrum_h_values: Vec::new(),
            cavity: CavityRatios::default(),
            probe_amplitude: 1e-3,
            nu_over_lambda: Range { start: -3.0, stop: 3.0, count: 2001 },
            refine_levels: 3,
            output_dir: PathBuf::from("."),
            format: Format::Csv,
            jobs: None,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        self.h_over_lambda.validate()?;
        self.nu_over_lambda.validate()?;
        for &g in &[self.gamma_a_over_lambda, self.gamma_b_over_lambda] {
            if !(g >= 0.0) || !g.is_finite() {
                return domain("rates must be finite and non-negative");
            }
        }
        if (self.outputs.moments || self.outputs.entanglement) && self.n_atoms.is_empty() {
            return domain("finite-N outputs need at least one atom number");
        }
        if self.n_atoms.contains(&0) {
            return domain("atom numbers must be positive");
        }
        if self.spectrum_h_values.iter().any(|h| !h.is_finite()) {
            return domain("spectrum fields must be finite");
        }
        if !(self.probe_amplitude > 0.0) {
            return domain("probe amplitude must be positive");
        }
        if self.jobs == Some(0) {
            return domain("--jobs must be at least 1");
        }
        Ok(())
    }

    fn params(&self, h: f64, n: u64) -> Result<EffectiveParams> {
        EffectiveParams::dimensionless(h, self.gamma_a_over_lambda, self.gamma_b_over_lambda, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Bool(bool),
    Text(&'static str),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Cell::Float(v) if v.is_nan() => f.write_str("nan"),
            Cell::Float(v) if v.is_infinite() => f.write_str(if v > 0.0 { "inf" } else { "-inf" }),
            Cell::Float(v) => write!(f, "{v:.11e}"),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Bool(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl Cell {
    fn to_json(self) -> Value {
        match self {
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(_) => Value::String(self.to_string()),
            Cell::Int(v) => json!(v),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

/// Column-named rows, written as CSV (floats with 12 significant digits) or a
/// JSON array of objects.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::to_string).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| Value::Object(self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.to_json())).collect()))
                .collect(),
        )
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => serde_json::to_string_pretty(&self.to_json()).expect("table is valid JSON") + "\n",
        }
    }

    pub fn write(&self, path: &Path, format: Format) -> Result<()> {
        fs::write(path, self.render(format))?;
        Ok(())
    }

    /// Column by name.
    pub fn column(&self, name: &str) -> Option<Vec<Cell>> {
        let k = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

/// The per-row status vocabulary: `ok`, `singular`, `degenerate`, `diverged`.
pub fn status_of(err: &Error) -> &'static str {
    match err {
        Error::NonUniqueSteadyState { .. } => "degenerate",
        Error::Diverged { .. } | Error::UnstableExpansion { .. } | Error::StepUnderflow { .. } => "diverged",
        _ => "singular",
    }
}

pub const STEADY_STATE_COLUMNS: [&str; 9] = [
    "h_over_lambda",
    "n_atoms",
    "jz_over_j",
    "jx2_over_j2",
    "jy2_over_j2",
    "jxjy_sym_over_j2",
    "purity",
    "residual",
    "status",
];
pub const ENTANGLEMENT_COLUMNS: [&str; 6] = ["h_over_lambda", "n_atoms", "c_r", "c_r_raw", "phi_star", "status"];
pub const BIFURCATION_COLUMNS: [&str; 11] =
    ["h_over_lambda", "branch_id", "x", "y", "z", "stable", "re_eig1", "im_eig1", "re_eig2", "im_eig2", "status"];
pub const EIGENVALUE_COLUMNS: [&str; 7] =
    ["h_over_lambda", "re_eig1", "im_eig1", "re_eig2", "im_eig2", "branch_id", "status"];
pub const SPECTRUM_COLUMNS: [&str; 3] = ["nu_over_lambda", "transmission", "status"];
pub const EVOLUTION_COLUMNS: [&str; 8] =
    ["t_lambda", "jz_over_j", "jx_over_j", "jy_over_j", "jx2_over_j2", "jy2_over_j2", "purity", "status"];

/// Steady-state moments and entanglement at one `(h, N)`.
#[derive(Debug, Clone, Copy)]
pub struct SteadyPoint {
    pub h: f64,
    pub n_atoms: u64,
    pub moments: Option<master::MomentSet>,
    pub purity: f64,
    pub residual: f64,
    pub status: &'static str,
    pub seconds: f64,
}

pub fn steady_point(params: &EffectiveParams, n_atoms: u64) -> SteadyPoint {
    let start = Instant::now();
    let run = || -> Result<_> {
        let liou = master::build_liouvillian(params, n_atoms)?;
        let ss = master::steady_state(&liou)?;
        let m = master::expectations(&ss.rho, &build_spin_operators(n_atoms)?)?;
        Ok((m, ss.rho.purity(), ss.residual))
    };
    let (moments, purity, residual, status) = match run() {
        Ok((m, p, r)) => (Some(m), p, r, "ok"),
        Err(e) => {
            log::warn!("h = {}, N = {n_atoms}: {e}", params.h);
            (None, f64::NAN, f64::NAN, status_of(&e))
        }
    };
    SteadyPoint { h: params.h / params.lambda, n_atoms, moments, purity, residual, status, seconds: start.elapsed().as_secs_f64() }
}

impl SteadyPoint {
    pub fn moments_row(&self) -> Vec<Cell> {
        let j = self.n_atoms as f64 / 2.0;
        let f = |g: fn(&master::MomentSet) -> f64, scale: f64| Cell::Float(self.moments.as_ref().map_or(f64::NAN, |m| g(m) / scale));
        vec![
            Cell::Float(self.h),
            Cell::Int(self.n_atoms),
            f(|m| m.jz_mean, j),
            f(|m| m.jx2, j * j),
            f(|m| m.jy2, j * j),
            f(|m| m.jxjy_sym, j * j),
            Cell::Float(self.purity),
            Cell::Float(self.residual),
            Cell::Text(self.status),
        ]
    }

    pub fn entanglement_row(&self) -> Vec<Cell> {
        let e = self.moments.as_ref().map(|m| PlanarMoments::from(m).c_r());
        let f = |g: fn(&crate::entanglement::EntanglementResult) -> f64| Cell::Float(e.as_ref().map_or(f64::NAN, g));
        vec![
            Cell::Float(self.h),
            Cell::Int(self.n_atoms),
            f(|r| r.c_r),
            f(|r| r.c_r_raw),
            f(|r| r.phi_star),
            Cell::Text(self.status),
        ]
    }
}

/// All fixed points of the mean-field flow along `h_grid`.
pub fn bifurcation_table(h_grid: &[f64], lambda: f64, gamma_b: f64) -> Table {
    let mut t = Table::new(&BIFURCATION_COLUMNS);
    for &h in h_grid {
        match semiclassical::fixed_points(h, lambda, gamma_b) {
            Ok(branches) => {
                for b in branches {
                    let e = b.jacobian_eigenvalues;
                    t.push(vec![
                        Cell::Float(h / lambda),
                        Cell::Text(b.branch_id.as_str()),
                        Cell::Float(b.state.x),
                        Cell::Float(b.state.y),
                        Cell::Float(b.state.z),
                        Cell::Bool(b.stable),
                        Cell::Float(e[0].re / lambda),
                        Cell::Float(e[0].im / lambda),
                        Cell::Float(e[1].re / lambda),
                        Cell::Float(e[1].im / lambda),
                        Cell::Text(if b.marginal { "diverged" } else { "ok" }),
                    ]);
                }
            }
            Err(e) => {
                let nan = Cell::Float(f64::NAN);
                t.push(vec![
                    Cell::Float(h / lambda),
                    Cell::Text("none"),
                    nan,
                    nan,
                    nan,
                    Cell::Bool(false),
                    nan,
                    nan,
                    nan,
                    nan,
                    Cell::Text(status_of(&e)),
                ]);
            }
        }
    }
    t
}

pub fn eigenvalue_table(params: &EffectiveParams, h_grid: &[f64]) -> Table {
    let mut t = Table::new(&EIGENVALUE_COLUMNS);
    let l = params.lambda;
    for row in fluctuations::fluctuation_eigenvalues(params, h_grid) {
        let e = row.eigenvalues;
        t.push(vec![
            Cell::Float(row.h / l),
            Cell::Float(e[0].re / l),
            Cell::Float(e[0].im / l),
            Cell::Float(e[1].re / l),
            Cell::Float(e[1].im / l),
            Cell::Text(row.branch_id.as_str()),
            Cell::Text(row.status),
        ]);
    }
    t
}

pub fn spectrum_table(result: &spectrum::SpectrumResult) -> Table {
    let mut t = Table::new(&SPECTRUM_COLUMNS);
    for (&nu, &tr) in result.probe_frequencies.iter().zip(&result.transmission) {
        t.push(vec![Cell::Float(nu / result.lambda), Cell::Float(tr), Cell::Text(if tr.is_finite() { "ok" } else { "diverged" })]);
    }
    t
}

/// Probe spectrum at `h/λ` for the cavity `ratios`, on `grid` (in units of λ)
/// with `refine_levels` rounds of local refinement.
pub fn probe_spectrum(
    ratios: &CavityRatios,
    h_over_lambda: f64,
    n_atoms: u64,
    probe_amplitude: f64,
    grid: &[f64],
    refine_levels: usize,
) -> Result<spectrum::SpectrumResult> {
    let cavity = ratios.to_cavity(h_over_lambda, n_atoms);
    let branch = spectrum::default_branch(&cavity)?;
    let grid: Vec<f64> = grid.iter().map(|v| v * cavity.lambda()).collect();
    spectrum::refined_spectrum(&cavity, &branch, probe_amplitude, &grid, refine_levels)
}

/// Moments along a trajectory started from the coherent state at `(θ, φ)`.
pub fn evolution_table(
    params: &EffectiveParams,
    n_atoms: u64,
    theta: f64,
    phi: f64,
    times: &[f64],
    tol: f64,
) -> Result<Table> {
    let liou = master::build_liouvillian(params, n_atoms)?;
    let ops = build_spin_operators(n_atoms)?;
    let rho0 = DensityMatrix::from_pure(&coherent_spin_state(theta, phi, n_atoms));
    let j = n_atoms as f64 / 2.0;
    let mut t = Table::new(&EVOLUTION_COLUMNS);
    for (time, ev) in master::evolve_sampled(&liou, &rho0, times, tol)? {
        let m = master::expectations(&ev.rho, &ops)?;
        t.push(vec![
            Cell::Float(time * params.lambda),
            Cell::Float(m.jz_mean / j),
            Cell::Float(m.jx_mean / j),
            Cell::Float(m.jy_mean / j),
            Cell::Float(m.jx2 / (j * j)),
            Cell::Float(m.jy2 / (j * j)),
            Cell::Float(ev.rho.purity()),
            Cell::Text("ok"),
        ]);
    }
    Ok(t)
}

/// Mean-field trajectory, sampled at the integrator's accepted steps.
pub fn trajectory_table(state0: &BlochState, params: &EffectiveParams, t_final: f64, tol: f64) -> Result<Table> {
    let tr = semiclassical::integrate(state0, params.h, params.lambda, params.gamma_b, t_final, tol)?;
    let mut t = Table::new(&["t_lambda", "x", "y", "z"]);
    for (time, s) in tr.times.iter().zip(&tr.states) {
        t.push(vec![Cell::Float(time * params.lambda), Cell::Float(s.x), Cell::Float(s.y), Cell::Float(s.z)]);
    }
    Ok(t)
}

pub fn run_params(path: impl AsRef<Path>, threshold: f64) -> Result<ParamsReport> {
    ParamsReport::from_file(&ParameterFile::load(path)?, threshold)
}

#[derive(Debug, Clone, Serialize)]
struct Timing {
    output: &'static str,
    h_over_lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_atoms: Option<u64>,
    seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ScanSummary {
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
    /// Rows whose status is not `ok`.
    pub flagged_rows: usize,
}

fn run_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn count_flagged(t: &Table) -> usize {
    t.column("status").map_or(0, |c| c.iter().filter(|s| !matches!(s, Cell::Text("ok"))).count())
}

fn field_tag(h: f64) -> String {
    format!("{h:+.6}").replace('+', "p").replace('-', "m")
}

/// Runs every selected output and writes one file per output (per `N` for the
/// finite-N tables, per field for spectra) plus `manifest.json`.
pub fn run_scan(config: &ScanConfig) -> Result<ScanSummary> {
    config.validate()?;
    fs::create_dir_all(&config.output_dir)?;
    let dir = &config.output_dir;
    let ext = config.format.extension();
    let grid = config.h_over_lambda.values();
    let mut files = Vec::new();
    let mut timings: Vec<Timing> = Vec::new();
    let mut flagged = 0;
    let mut errors: Vec<Value> = Vec::new();
    let base = config.params(0.0, config.n_atoms.first().copied().unwrap_or(1))?;

    if config.outputs.moments || config.outputs.entanglement {
        for &n in &config.n_atoms {
            let params: Vec<EffectiveParams> = grid.iter().map(|&h| config.params(h, n)).collect::<Result<_>>()?;
            let points: Vec<SteadyPoint> =
                run_pool(config.jobs, || params.par_iter().map(|p| steady_point(p, n)).collect())?;
            timings.extend(points.iter().map(|p| Timing { output: "steady_state", h_over_lambda: p.h, n_atoms: Some(n), seconds: p.seconds }));
            if config.outputs.moments {
                let mut t = Table::new(&STEADY_STATE_COLUMNS);
                points.iter().for_each(|p| t.push(p.moments_row()));
                let path = dir.join(format!("steady_state_N{n}.{ext}"));
                t.write(&path, config.format)?;
                flagged += count_flagged(&t);
                files.push(path);
            }
            if config.outputs.entanglement {
                let mut t = Table::new(&ENTANGLEMENT_COLUMNS);
                points.iter().for_each(|p| t.push(p.entanglement_row()));
                let path = dir.join(format!("entanglement_N{n}.{ext}"));
                t.write(&path, config.format)?;
                flagged += count_flagged(&t);
                files.push(path);
            }
        }
    }

    if config.outputs.semiclassical {
        let t = bifurcation_table(&grid, base.lambda, base.gamma_b);
        let path = dir.join(format!("bifurcation.{ext}"));
        t.write(&path, config.format)?;
        flagged += count_flagged(&t);
        files.push(path);
    }

    if config.outputs.eigenvalues {
        let t = eigenvalue_table(&base, &grid);
        let path = dir.join(format!("eigenvalues.{ext}"));
        t.write(&path, config.format)?;
        flagged += count_flagged(&t);
        files.push(path);
    }

    if config.outputs.spectrum {
        let nu = config.nu_over_lambda.values();
        let n_spec = config.n_atoms.first().copied().unwrap_or(1000);
        let results: Vec<(f64, Result<spectrum::SpectrumResult>, f64)> = run_pool(config.jobs, || {
            config
                .spectrum_h_values
                .par_iter()
                .map(|&h| {
                    let start = Instant::now();
                    let r = probe_spectrum(&config.cavity, h, n_spec, config.probe_amplitude, &nu, config.refine_levels);
                    (h, r, start.elapsed().as_secs_f64())
                })
                .collect()
        })?;
        for (k, (h, r, seconds)) in results.into_iter().enumerate() {
            let path = dir.join(format!("spectrum_{k:02}_h{}.{ext}", field_tag(h)));
            let t = match r {
                Ok(s) => spectrum_table(&s),
                Err(e) => {
                    errors.push(json!({ "file": path.file_name().map(|f| f.to_string_lossy().into_owned()), "error": e.to_string() }));
                    let mut t = Table::new(&SPECTRUM_COLUMNS);
                    t.push(vec![Cell::Float(f64::NAN), Cell::Float(f64::NAN), Cell::Text(status_of(&e))]);
                    t
                }
            };
            t.write(&path, config.format)?;
            flagged += count_flagged(&t);
            files.push(path);
            timings.push(Timing { output: "spectrum", h_over_lambda: h, n_atoms: None, seconds });
        }
    }

    let manifest = dir.join("manifest.json");
    let cf = critical_fields(base.lambda, base.gamma_b)?;
    let spec_cavity = config.cavity.to_cavity(0.0, config.n_atoms.first().copied().unwrap_or(1000));
    let mut m = Map::new();
    m.insert("tool".into(), json!("dlmg"));
    m.insert("version".into(), json!(VERSION));
    m.insert("config".into(), serde_json::to_value(config).map_err(|e| Error::Domain(e.to_string()))?);
    m.insert(
        "effective_params".into(),
        json!(config.n_atoms.iter().map(|&n| config.params(0.0, n)).collect::<Result<Vec<_>>>()?),
    );
    m.insert("critical_fields".into(), json!(cf));
    if config.outputs.spectrum {
        m.insert(
            "spectrum_cavity".into(),
            json!({
                "gamma_a_over_lambda": spec_cavity.gamma_a() / spec_cavity.lambda(),
                "gamma_b_over_lambda": spec_cavity.gamma_b() / spec_cavity.lambda(),
                "critical_fields": critical_fields(spec_cavity.lambda(), spec_cavity.gamma_b())?,
            }),
        );
    }
    m.insert(
        "files".into(),
        json!(files.iter().map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned())).collect::<Vec<_>>()),
    );
    m.insert("flagged_rows".into(), json!(flagged));
    if !errors.is_empty() {
        m.insert("errors".into(), Value::Array(errors));
    }
    m.insert("timings".into(), json!(timings));
    fs::write(&manifest, serde_json::to_string_pretty(&Value::Object(m)).expect("manifest is valid JSON") + "\n")?;
    Ok(ScanSummary { files, manifest, flagged_rows: flagged })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        let r: Range = "-0.6:1.4:201".parse().unwrap();
        let v = r.values();
        assert_eq!(v.len(), 201);
        assert_eq!(v[0], -0.6);
        assert_eq!(v[200], 1.4);
        assert!((v[100] - 0.4).abs() < 1e-15);
        assert!("0:1:1".parse::<Range>().is_err());
        assert!("0:1".parse::<Range>().is_err());
        assert!("0:inf:5".parse::<Range>().is_err());
    }

    #[test]
    fn outputs_parsing() {
        let o: Outputs = "moments, semiclassical".parse().unwrap();
        assert!(o.moments && o.semiclassical && !o.spectrum);
        assert!("none".parse::<Outputs>().unwrap().is_empty());
        assert!("".parse::<Outputs>().unwrap().is_empty());
        assert!("bogus".parse::<Outputs>().is_err());
    }

    #[test]
    fn critical_tokens() {
        let cf = critical_fields(1.0, 0.2).unwrap();
        assert_eq!(parse_field("hc+", &cf).unwrap(), cf.h_plus);
        assert_eq!(parse_field("hc-", &cf).unwrap(), cf.h_minus);
        assert_eq!(parse_field("0.25", &cf).unwrap(), 0.25);
        assert!(parse_field("x", &cf).is_err());
        assert!(parse_field("hc+", &critical_fields(1.0, 2.0).unwrap()).is_err());
    }

    #[test]
    fn cell_formatting() {
        assert_eq!(Cell::Float(0.5).to_string(), "5.00000000000e-1");
        assert_eq!(Cell::Float(f64::INFINITY).to_string(), "inf");
        assert_eq!(Cell::Float(f64::NAN).to_string(), "nan");
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![Cell::Float(1.0), Cell::Text("ok")]);
        assert_eq!(t.to_csv(), "a,b\n1.00000000000e0,ok\n");
        assert_eq!(t.to_json(), json!([{ "a": 1.0, "b": "ok" }]));
    }

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::NonUniqueSteadyState { dim: 2 }), "degenerate");
        assert_eq!(status_of(&Error::Diverged { max_re: 0.0 }), "diverged");
        assert_eq!(status_of(&Error::SolverBreakdown("x".into())), "singular");
    }
}
