//! Command-line front end: scenario ingestion, dispatch and file output.

use std::ffi::OsString;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::condition::{ot_envelope, sweep, t_grid, OscillationProfile, Scenario};
use crate::error::{Error, NormP, Result};
use crate::linalg::{vec_norm, DenseMatrix};
use crate::minimax::{
    branches_csv, critical_points_beta0, h_envelope, h_extremes, h_func, q1, trace_branches,
};
use crate::oscillator::{alpha_extrema, f_extremes, f_vw_max, f_vw_min, VWPair};
use crate::spectral::{analyze_spectrum, BlockKind, DEFAULT_GROUP_TOL};

const DEFAULT_OUT: &str = "odecond-out";
const DEFAULT_SEED: u64 = 7;
const X_GRID: usize = 1025;
const BETA_GRID: usize = 513;
const SPHERE_SAMPLES: usize = 10_000;

#[derive(Debug, Parser)]
#[command(name = "odecond", version, about = "Condition numbers of y0 -> exp(tA) y0")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Matrix as CSV (one row per line) or a JSON scenario.
    #[arg(long, global = true)]
    pub matrix: Option<PathBuf>,
    /// Initial value, comma separated.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub y0: Option<String>,
    /// Perturbation direction, comma separated; normalized before use.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub z0: Option<String>,
    /// Vector norm: 1, 2 or inf.
    #[arg(long, global = true)]
    pub norm: Option<NormP>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub t0: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub t1: Option<f64>,
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Relative tolerance for grouping eigenvalues by real part.
    #[arg(long = "tol-group", global = true)]
    pub tol_group: Option<f64>,
    /// V for `envelope` and `branches`.
    #[arg(long, global = true)]
    pub v: Option<f64>,
    /// W for `envelope` and `branches`.
    #[arg(long, global = true)]
    pub w: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Condition-number series and summary for a scenario.
    Analyze,
    /// Built-in 3x3 example compared against reference values.
    Demo,
    /// f and H envelopes for given V and W.
    Envelope,
    /// Stationary branches of H for given V and W.
    Branches,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSpec {
    #[serde(default)]
    pub start: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self {
            start: 0.0,
            end: None,
            steps: None,
        }
    }
}

fn default_norm() -> NormP {
    NormP::Two
}

/// The JSON scenario format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub y0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<Vec<f64>>,
    #[serde(default = "default_norm")]
    pub norm: NormP,
    #[serde(default)]
    pub t: TimeSpec,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            matrix: Vec::new(),
            y0: Vec::new(),
            z0: None,
            norm: NormP::Two,
            t: TimeSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub out: PathBuf,
    pub seed: u64,
    pub tol_group: f64,
    pub scenario: ScenarioSpec,
    pub v: Option<f64>,
    pub w: Option<f64>,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self> {
        let mut scenario = match &cli.matrix {
            Some(path) => load_scenario(path)?,
            None => ScenarioSpec::default(),
        };
        if let Some(y) = &cli.y0 {
            scenario.y0 = parse_vector_csv(y)?;
        }
        if let Some(z) = &cli.z0 {
            scenario.z0 = Some(parse_vector_csv(z)?);
        }
        if let Some(p) = cli.norm {
            scenario.norm = p;
        }
        if let Some(t0) = cli.t0 {
            scenario.t.start = t0;
        }
        if cli.t1.is_some() {
            scenario.t.end = cli.t1;
        }
        if cli.steps.is_some() {
            scenario.t.steps = cli.steps;
        }
        let cfg = RunConfig {
            command: cli.command,
            out: cli.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            seed: cli.seed.unwrap_or(DEFAULT_SEED),
            tol_group: cli.tol_group.unwrap_or(DEFAULT_GROUP_TOL),
            scenario,
            v: cli.v,
            w: cli.w,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_args<I, T>(args: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let cli = Cli::try_parse_from(args).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Self::from_cli(cli)
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol_group > 0.0) {
            return Err(Error::InvalidParameter("--tol-group must be positive".into()));
        }
        let t = &self.scenario.t;
        if !t.start.is_finite() {
            return Err(Error::InvalidParameter("t start must be finite".into()));
        }
        if let Some(end) = t.end {
            if !(end > t.start) {
                return Err(Error::InvalidParameter(format!(
                    "t end {end} must exceed t start {}",
                    t.start
                )));
            }
        }
        if let Some(n) = t.steps {
            if n < 2 {
                return Err(Error::InvalidParameter("steps must be at least 2".into()));
            }
        }
        if self.command == Command::Analyze {
            if self.scenario.matrix.is_empty() {
                return Err(Error::InvalidParameter("analyze needs --matrix".into()));
            }
            if self.scenario.y0.is_empty() {
                return Err(Error::InvalidParameter("analyze needs y0".into()));
            }
        }
        Ok(())
    }

    fn vw(&self, open: bool) -> Result<VWPair> {
        let (Some(v), Some(w)) = (self.v, self.w) else {
            return Err(Error::InvalidParameter("--v and --w are required".into()));
        };
        if open && !(v > 0.0 && w > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "V and W must lie in (0, 1), got V = {v}, W = {w}"
            )));
        }
        VWPair::new(v, w)
    }
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Parse one number per comma-separated field; `line` is used for messages.
fn parse_fields(text: &str, line: usize) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let mut col = 1;
    for field in text.split(',') {
        let s = field.trim();
        let lead = field.len() - field.trim_start().len();
        let v: f64 = s.parse().map_err(|_| Error::Parse {
            line,
            column: col + lead,
            message: if s.is_empty() {
                format!("row {line}: empty field")
            } else {
                format!("row {line}: '{s}' is not a number")
            },
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                line,
                column: col + lead,
                message: format!("row {line}: non-finite value '{s}'"),
            });
        }
        out.push(v);
        col += field.chars().count() + 1;
    }
    Ok(out)
}

/// A comma-separated list of numbers.
pub fn parse_vector_csv(text: &str) -> Result<Vec<f64>> {
    parse_fields(text.trim(), 1)
}

/// One matrix row per line. Blank lines and lines starting with `#` are
/// skipped.
pub fn parse_matrix_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let row = parse_fields(line, k + 1)?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    line: k + 1,
                    column: 1,
                    message: format!(
                        "row {} has {} fields, expected {}",
                        k + 1,
                        row.len(),
                        first.len()
                    ),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "no matrix rows".into(),
        });
    }
    Ok(rows)
}

pub fn parse_scenario_json(text: &str) -> Result<ScenarioSpec> {
    serde_json::from_str(text).map_err(json_error)
}

/// Read a scenario from a JSON file, or just the matrix from a CSV file.
pub fn load_scenario(path: &Path) -> Result<ScenarioSpec> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
        || text.trim_start().starts_with('{');
    if is_json {
        parse_scenario_json(&text)
    } else {
        Ok(ScenarioSpec {
            matrix: parse_matrix_csv(&text)?,
            ..ScenarioSpec::default()
        })
    }
}

/// Exit status for an error: 2 for spectra outside the supported class,
/// 3 for a vanishing projection, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonDiagonalizable { .. }
        | Error::AmbiguousGrouping { .. }
        | Error::UnsupportedBlock { .. }
        | Error::EigenFailure(_) => 2,
        Error::ZeroProjection { .. } => 3,
        _ => 1,
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let p = dir.join(name);
    fs::write(&p, contents).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
    Ok(p)
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn build_scenario(spec: &ScenarioSpec, t_grid: Vec<f64>) -> Result<Scenario> {
    let a = DenseMatrix::from_rows(&spec.matrix)?;
    let z0 = match &spec.z0 {
        Some(z) => {
            let nz = vec_norm(z, spec.norm);
            if !(nz > 0.0) {
                return Err(Error::InvalidParameter("z0 must be nonzero".into()));
            }
            Some(z.iter().map(|x| x / nz).collect())
        }
        None => None,
    };
    Scenario::new(a, spec.y0.clone(), z0, spec.norm, t_grid)
}

#[derive(Debug, Serialize)]
struct BlockSummary {
    kind: BlockKind,
    r: f64,
    omega: f64,
    f: f64,
    v: Option<f64>,
    w: Option<f64>,
}

#[derive(Debug, Serialize)]
struct AnalyzeSummary {
    n: usize,
    norm: NormP,
    q: usize,
    grouping_tolerance: f64,
    eigen_residual: f64,
    eigvec_condition: f64,
    blocks: Vec<BlockSummary>,
    leading_kind: BlockKind,
    v1: Option<f64>,
    w1: Option<f64>,
    q1: Option<f64>,
    osf: f64,
    profile: Option<OscillationProfile>,
    k_inf_max: Option<f64>,
    k_inf_min: Option<f64>,
    t_start: f64,
    t_end: f64,
    steps: usize,
    directional: bool,
    k_exact_max: f64,
    k_exact_min: f64,
    warnings: Vec<String>,
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<()> {
    let spec = &cfg.scenario;
    let a = DenseMatrix::from_rows(&spec.matrix)?;
    let analysis = analyze_spectrum(&a, spec.norm, cfg.tol_group)?;
    let b1 = analysis.require_leading_supported()?;
    let t0 = spec.t.start;
    let t1 = spec.t.end.unwrap_or(if b1.omega > 0.0 {
        t0 + 4.0 * PI / b1.omega
    } else {
        t0 + 10.0
    });
    if !(t1 > t0) {
        return Err(Error::InvalidParameter("t end must exceed t start".into()));
    }
    let grid = t_grid(&analysis, t0, t1, spec.t.steps);
    let steps = grid.len();
    let s = build_scenario(spec, grid)?;
    let series = sweep(&s, &analysis)?;
    let profile = ot_envelope(&s, b1).ok();
    let ellipse = b1.ellipse().ok();
    let osf_v = series.samples.first().map_or(f64::NAN, |x| x.osf);
    let fold = |init: f64, pick: fn(f64, f64) -> f64| {
        series.samples.iter().fold(init, |m, x| pick(m, x.k_exact))
    };
    let summary = AnalyzeSummary {
        n: a.rows(),
        norm: spec.norm,
        q: analysis.q,
        grouping_tolerance: analysis.grouping_tolerance,
        eigen_residual: analysis.residual,
        eigvec_condition: analysis.eigvec_condition,
        blocks: analysis
            .blocks
            .iter()
            .map(|b| BlockSummary {
                kind: b.kind,
                r: b.r,
                omega: b.omega,
                f: b.f,
                v: b.ellipse.as_ref().map(|e| e.v_mod),
                w: b.ellipse.as_ref().map(|e| e.w_mod),
            })
            .collect(),
        leading_kind: b1.kind,
        v1: ellipse.map(|e| e.v_mod),
        w1: ellipse.map(|e| e.w_mod),
        q1: ellipse.map(|e| q1(VWPair { v: e.v_mod, w: e.w_mod })),
        osf: osf_v,
        profile,
        k_inf_max: profile.map(|p| p.osf * p.ot_max),
        k_inf_min: profile.map(|p| p.osf * p.ot_min),
        t_start: t0,
        t_end: t1,
        steps,
        directional: series.directional,
        k_exact_max: fold(f64::NEG_INFINITY, f64::max),
        k_exact_min: fold(f64::INFINITY, f64::min),
        warnings: series.warnings.clone(),
    };
    prepare_out(&cfg.out)?;
    write_file(&cfg.out, "series.csv", &series.to_csv())?;
    write_file(&cfg.out, "summary.json", &to_json(&summary))?;
    write_file(&cfg.out, "scenario.json", &to_json(spec))?;
    for w in &series.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "analyzed {} samples on [{t0}, {t1}]; leading block {:?}; OSF = {osf_v:.6}",
        steps, b1.kind
    );
    println!("wrote {}", cfg.out.display());
    Ok(())
}

/// The built-in 3x3 example.
pub fn demo_matrix() -> DenseMatrix {
    DenseMatrix::from_rows(&[
        vec![-1.0, 20.0, -20.0],
        vec![0.0, 19.0, -20.0],
        vec![0.0, 18.1, -19.0],
    ])
    .expect("finite square matrix")
}

/// One row of the demo comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoRow {
    pub name: String,
    pub reference: String,
    pub raw: f64,
}

impl DemoRow {
    fn decimals(&self) -> usize {
        self.reference.split_once('.').map_or(0, |(_, d)| d.len())
    }

    pub fn rounded(&self) -> String {
        format!("{:.*}", self.decimals(), self.raw)
    }

    /// Within one unit of the last displayed digit of the reference.
    pub fn pass(&self) -> bool {
        let r: f64 = self.reference.parse().expect("numeric reference");
        let unit = 10f64.powi(-(self.decimals() as i32));
        (self.raw - r).abs() <= unit * (1.0 + 1e-9)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoReport {
    pub rows: Vec<DemoRow>,
    pub notes: Vec<String>,
    pub sphere_max: f64,
    pub sigma: f64,
    /// Series for `y0` along the second and first right singular vectors.
    pub series_csv: [String; 2],
}

impl DemoReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(DemoRow::pass)
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<16} {:<10} {:<20} {:<26} result", "quantity", "reference", "computed", "raw");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<16} {:<10} {:<20} {:<26} {}",
                r.name,
                r.reference,
                format!("computed≈{}", r.rounded()),
                format!("raw={:.12e}", r.raw),
                if r.pass() { "PASS" } else { "FAIL" }
            );
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }
}

fn row(name: &str, reference: &str, raw: f64) -> DemoRow {
    DemoRow {
        name: name.into(),
        reference: reference.into(),
        raw,
    }
}

pub fn demo_report(seed: u64) -> Result<DemoReport> {
    let a = demo_matrix();
    let analysis = analyze_spectrum(&a, NormP::Two, DEFAULT_GROUP_TOL)?;
    let b1 = analysis.require_leading_supported()?;
    let e = b1.ellipse()?.clone();
    let t1 = 4.0 * PI / b1.omega;
    let grid = t_grid(&analysis, 0.0, t1, None);

    let second = Scenario::new(a.clone(), e.right_minor.clone(), None, NormP::Two, grid.clone())?;
    let first = Scenario::new(a.clone(), e.right_major.clone(), None, NormP::Two, grid)?;
    let prof2 = ot_envelope(&second, b1)?;
    let prof1 = ot_envelope(&first, b1)?;
    let ser2 = sweep(&second, &analysis)?;
    let ser1 = sweep(&first, &analysis)?;

    let rows = vec![
        row("V1", "0.9988", e.v_mod),
        row("W1", "0.9986", e.w_mod),
        row("Q1", "0.9995", prof1.q1),
        row("OSF(second)", "38.1", prof2.osf),
        row("OSF(first)", "1.0003", prof1.osf),
        row("a_max", "41.0", prof2.a_max),
        row("a_min", "0.0263", prof2.a_min),
        row("a_minmax", "1.1869", prof1.a_minmax),
        row("a_maxmin", "0.9997", prof1.a_maxmin),
        row("maxK∞(second)", "1563", prof2.osf * prof2.ot_max),
        row("minK∞(second)", "1", prof2.osf * prof2.ot_min),
        row("maxK∞(first)", "1.1873", prof1.osf * prof1.ot_max),
        row("minK∞(first)", "1", prof1.osf * prof1.ot_min),
    ];

    let grid_max = |s: &crate::condition::ConditionSeries| {
        s.samples.iter().fold(f64::NEG_INFINITY, |m, x| m.max(x.k_asym))
    };
    let mut notes = vec![
        format!(
            "OSF(first) = sqrt(2/(1+W1)) = {:.6}; some reference material prints 1.003 for this value",
            prof1.osf
        ),
        format!(
            "largest K∞ on the t-grid: {:.6} (second), {:.6} (first)",
            grid_max(&ser2),
            grid_max(&ser1)
        ),
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = a.rows();
    let mut sphere_max = 0.0f64;
    for _ in 0..SPHERE_SAMPLES {
        let u: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let nu = vec_norm(&u, NormP::Two);
        let u: Vec<f64> = u.iter().map(|x| x / nu).collect();
        sphere_max = sphere_max.max(b1.w_dot(&u).norm());
    }
    notes.push(format!(
        "sphere check (seed {seed}, {SPHERE_SAMPLES} samples): max |w u| = {sphere_max:.6}, sigma = {:.6}, {}",
        e.sigma,
        if sphere_max <= e.sigma * (1.0 + 1e-12) && sphere_max >= e.sigma - 1e-2 {
            "PASS"
        } else {
            "FAIL"
        }
    ));

    Ok(DemoReport {
        rows,
        notes,
        sphere_max,
        sigma: e.sigma,
        series_csv: [ser2.to_csv(), ser1.to_csv()],
    })
}

pub fn cmd_demo(cfg: &RunConfig) -> Result<bool> {
    let report = demo_report(cfg.seed)?;
    let table = report.table();
    prepare_out(&cfg.out)?;
    write_file(&cfg.out, "demo_table.txt", &table)?;
    write_file(&cfg.out, "series_second.csv", &report.series_csv[0])?;
    write_file(&cfg.out, "series_first.csv", &report.series_csv[1])?;
    print!("{table}");
    println!("wrote {}", cfg.out.display());
    Ok(report.all_pass())
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}

#[derive(Debug, Serialize)]
struct EnvelopeExtremes {
    v: f64,
    w: f64,
    q1: f64,
    f: crate::oscillator::FExtremes,
    h: crate::minimax::Extremes,
    critical_points_beta0: Option<crate::minimax::CriticalPointData>,
}

pub fn cmd_envelope(cfg: &RunConfig) -> Result<()> {
    let p = cfg.vw(false)?;
    let nb = cfg.scenario.t.steps.unwrap_or(BETA_GRID);

    let mut f_csv = String::from("x,f_max,f_min,alpha_max,alpha_min\n");
    for x in linspace(0.0, 2.0 * PI, X_GRID) {
        let (am, an) = alpha_extrema(p, x).unwrap_or((f64::NAN, f64::NAN));
        let _ = writeln!(
            f_csv,
            "{x:.16e},{:.16e},{:.16e},{am:.16e},{an:.16e}",
            f_vw_max(p, x),
            f_vw_min(p, x)
        );
    }
    let mut h_csv = String::from("beta,h_max,h_min,argmax_x,argmin_x\n");
    for beta in linspace(0.0, PI, nb) {
        let e = h_envelope(p, beta);
        let _ = writeln!(
            h_csv,
            "{beta:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            e.h_max, e.h_min, e.argmax_x, e.argmin_x
        );
    }
    let mut c_csv = String::from("x,h\n");
    for x in linspace(0.0, 2.0 * PI, X_GRID) {
        let _ = writeln!(c_csv, "{x:.16e},{:.16e}", h_func(p, x, 0.0));
    }
    let ext = EnvelopeExtremes {
        v: p.v,
        w: p.w,
        q1: q1(p),
        f: f_extremes(p),
        h: h_extremes(p),
        critical_points_beta0: critical_points_beta0(p).ok(),
    };
    prepare_out(&cfg.out)?;
    write_file(&cfg.out, "f_envelope.csv", &f_csv)?;
    write_file(&cfg.out, "h_envelope.csv", &h_csv)?;
    write_file(&cfg.out, "h_curve_beta0.csv", &c_csv)?;
    write_file(&cfg.out, "extremes.json", &to_json(&ext))?;
    println!("wrote {}", cfg.out.display());
    Ok(())
}

pub fn cmd_branches(cfg: &RunConfig) -> Result<()> {
    let p = cfg.vw(true)?;
    let nb = cfg.scenario.t.steps.unwrap_or(BETA_GRID);
    let trace = trace_branches(p, &linspace(0.0, PI, nb))?;
    let mut log = format!("lost branches: {}\n", trace.lost.len());
    for l in &trace.lost {
        let _ = writeln!(log, "branch {} lost at beta={:.16e} x={:.16e}", l.branch_id, l.beta, l.x);
    }
    prepare_out(&cfg.out)?;
    write_file(&cfg.out, "branches.csv", &branches_csv(&trace))?;
    write_file(&cfg.out, "branches.log", &log)?;
    if !trace.lost.is_empty() {
        eprintln!("warning: {} branch(es) lost, see branches.log", trace.lost.len());
    }
    println!("{} branches; wrote {}", trace.polylines.len(), cfg.out.display());
    Ok(())
}

fn dispatch(cfg: &RunConfig) -> Result<i32> {
    match cfg.command {
        Command::Analyze => cmd_analyze(cfg).map(|_| 0),
        Command::Demo => cmd_demo(cfg).map(|ok| if ok { 0 } else { 1 }),
        Command::Envelope => cmd_envelope(cfg).map(|_| 0),
        Command::Branches => cmd_branches(cfg).map(|_| 0),
    }
}

fn thread_pool() -> Result<Option<rayon::ThreadPool>> {
    let Ok(v) = std::env::var("ODECOND_THREADS") else {
        return Ok(None);
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidParameter(format!("ODECOND_THREADS={v} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map(Some)
        .map_err(|e| Error::InvalidParameter(e.to_string()))
}

/// Parse arguments, run the command and return the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = RunConfig::from_cli(cli).and_then(|cfg| match thread_pool()? {
        Some(pool) => pool.install(|| dispatch(&cfg)),
        None => dispatch(&cfg),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
