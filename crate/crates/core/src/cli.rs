//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::constants::{bbm_constant, gamma_series, surface_measure, CriticalParams};
use crate::error::{require, LabError, Result};
use crate::funcspace::{
    gagliardo_1d_estimate, gagliardo_profile, gagliardo_radial_estimate, lq_norm_pow, moser_profile, rearrange,
    PiecewiseFunction1D, QuadratureSpec, RadialProfile,
};
use crate::functionals::{blowup_scan, eps_decades, Normalization, WeightSpec};
use crate::poincare::{
    augmented_rayleigh, ls_sections, rayleigh_estimate_with, uniform_poincare_check, Ball1D, DomainSpec,
    IntervalUnionDomain, RayleighConfig, RayleighEstimate,
};
use crate::verify;

pub const THREADS_ENV: &str = "FRAC_LAB_THREADS";

#[derive(Parser, Debug)]
#[command(name = "frac-lab", version, about = "Fractional Sobolev seminorms, Moser-Trudinger functionals and nonlocal Poincare constants")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// omega, K, gamma and alpha* as JSON
    Constants(ConstantsArgs),
    /// Moser sequence sweep as CSV
    Moser(MoserArgs),
    /// Gagliardo seminorm of a sampled function
    Seminorm(SeminormArgs),
    /// Symmetric decreasing rearrangement of a sampled function
    Rearrange(RearrangeArgs),
    /// Rayleigh-quotient estimate on a union of intervals
    Poincare(PoincareArgs),
    /// Section certificate for a planar domain
    LsCheck(LsArgs),
    /// Blow-up scan along the Moser family
    Blowup(BlowupArgs),
    /// FA candidate values along the Moser family for several alpha fractions
    FaScan(FaScanArgs),
    /// Acceptance suite with a pass/fail report
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct OutArg {
    /// Output file (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ConstantsArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub p: f64,
    /// Must satisfy s * p = n when given
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[command(flatten)]
    pub out: OutArg,
}

/// Dimension and order; `p = n / s`.
#[derive(Args, Debug, Clone)]
pub struct CriticalArgs {
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    #[arg(long, default_value_t = 0.5)]
    pub s: f64,
    /// Must equal n / s when given
    #[arg(long)]
    pub p: Option<f64>,
}

impl CriticalArgs {
    fn params(&self) -> Result<CriticalParams> {
        let params = CriticalParams::critical(self.n, self.s)?;
        if let Some(p) = self.p {
            CriticalParams::new(self.n, self.s, p)?.require_critical()?;
        }
        Ok(params)
    }
}

#[derive(Args, Debug, Clone)]
pub struct EpsArgs {
    /// Comma-separated decreasing eps values; overrides --decades
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    /// Grid 1e-1 down to 1e-<decades>
    #[arg(long, default_value_t = 4)]
    pub decades: u32,
    #[arg(long, default_value_t = 1)]
    pub per_decade: u32,
}

impl EpsArgs {
    fn grid(&self) -> Result<Vec<f64>> {
        if self.eps.is_empty() {
            return Ok(eps_decades(self.decades, self.per_decade));
        }
        require(self.eps.iter().all(|&e| e > 0.0 && e < 1.0), || "eps values must lie in (0, 1)".to_string())?;
        require(self.eps.windows(2).all(|w| w[1] < w[0]), || "eps grid must be decreasing".to_string())?;
        Ok(self.eps.clone())
    }
}

#[derive(Args, Debug)]
pub struct MoserArgs {
    #[command(flatten)]
    pub params: CriticalArgs,
    #[command(flatten)]
    pub eps: EpsArgs,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    /// `r,value` profile of a radial function
    Radial,
    /// `x,value` function on the line
    Line,
}

#[derive(Args, Debug)]
pub struct SeminormArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputKind::Radial)]
    pub kind: InputKind,
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    #[arg(long)]
    pub s: f64,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 64)]
    pub cells: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub target_rel_err: f64,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Args, Debug)]
pub struct RearrangeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputKind::Line)]
    pub kind: InputKind,
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Args, Debug)]
pub struct PoincareArgs {
    /// Domain JSON of type "intervals"
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub s: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Defaults to p
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, default_value_t = 128)]
    pub grid_n: usize,
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Removed ball `centre,radius` for the augmented quotient
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub ball: Option<Vec<f64>>,
    /// Kernel exponent for the ball term
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Include nodes and minimizer values
    #[arg(long)]
    pub minimizer: bool,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Args, Debug)]
pub struct LsArgs {
    /// Domain JSON of type "strips" or "between_graphs"
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub directions: usize,
    /// Offsets `start:end:count` along the perpendicular
    #[arg(long, default_value = "-3:3:16", allow_hyphen_values = true)]
    pub offsets: String,
    #[arg(long, default_value_t = 0.5)]
    pub s: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long)]
    pub q: Option<f64>,
    /// Also minimize on every section with this many cells per interval
    #[arg(long)]
    pub rayleigh_grid: Option<usize>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Args, Debug)]
pub struct BlowupArgs {
    #[command(flatten)]
    pub params: CriticalArgs,
    #[arg(long, default_value_t = 1.0)]
    pub alpha_frac: f64,
    /// one | t | log1p
    #[arg(long, default_value = "t")]
    pub weight: String,
    /// seminorm | full | lp
    #[arg(long, default_value = "lp")]
    pub normalization: String,
    #[command(flatten)]
    pub eps: EpsArgs,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Args, Debug)]
pub struct FaScanArgs {
    #[command(flatten)]
    pub params: CriticalArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.9,1.0")]
    pub alpha_frac: Vec<f64>,
    #[command(flatten)]
    pub eps: EpsArgs,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// all | fast | comma list of criterion numbers
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
    #[command(flatten)]
    pub out: OutArg,
}

fn emit(out: &OutArg, bytes: &[u8]) -> Result<()> {
    match &out.out {
        Some(path) => fs::write(path, bytes)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| LabError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

#[derive(Serialize)]
struct ConstantsReport {
    omega: f64,
    #[serde(rename = "K")]
    k: f64,
    gamma: f64,
    alpha_star: f64,
    terms_used: usize,
    tail_bound: f64,
}

pub fn cmd_constants(a: &ConstantsArgs) -> Result<Vec<u8>> {
    require(a.n >= 1, || format!("dimension n must be >= 1, got {}", a.n))?;
    require(a.p > 1.0 && a.p.is_finite(), || format!("exponent p must exceed 1, got {}", a.p))?;
    if let Some(s) = a.s {
        CriticalParams::new(a.n, s, a.p)?.require_critical()?;
    }
    let series = gamma_series(i64::from(a.n), a.p, a.tol)?;
    let report = ConstantsReport {
        omega: surface_measure(i64::from(a.n))?,
        k: bbm_constant(a.p, i64::from(a.n))?,
        gamma: series.value,
        // n gamma^{s/(n-s)} with s = n/p
        alpha_star: f64::from(a.n) * series.value.powf(1.0 / (a.p - 1.0)),
        terms_used: series.terms_used,
        tail_bound: series.tail_bound,
    };
    json(&report)
}

pub fn cmd_moser(a: &MoserArgs) -> Result<Vec<u8>> {
    let params = a.params.params()?;
    let grid = a.eps.grid()?;
    let gamma = crate::constants::gamma_constant(&params)?;
    let quad = QuadratureSpec::default();
    let rows = crate::parallel::map_slice(&grid, |&eps| -> Result<(f64, f64, f64)> {
        let u = moser_profile(&params, eps)?;
        let semi = gagliardo_profile(&u, &params, &quad)?;
        Ok((eps, semi, lq_norm_pow(&u, params.p(), params.n())?))
    });
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["eps", "seminorm_p", "lp_norm_p", "ratio"])?;
    for row in rows {
        let (eps, semi, lp) = row?;
        w.write_record([eps.to_string(), semi.to_string(), lp.to_string(), (semi / gamma).to_string()])?;
    }
    w.into_inner().map_err(|e| LabError::Format(e.to_string()))
}

#[derive(Serialize)]
struct SeminormReport {
    value: f64,
    error_estimate: f64,
}

pub fn cmd_seminorm(a: &SeminormArgs) -> Result<Vec<u8>> {
    let quad = QuadratureSpec { cells_per_dim: a.cells, target_rel_err: a.target_rel_err, ..QuadratureSpec::default() };
    let est = match a.kind {
        InputKind::Line => {
            require(a.n == 1, || "line input needs n = 1".to_string())?;
            gagliardo_1d_estimate(&PiecewiseFunction1D::load(&a.input)?, a.s, a.p, &quad)?
        }
        InputKind::Radial => {
            let u = RadialProfile::load(&a.input)?;
            let params = CriticalParams::new(a.n, a.s, a.p)?;
            if a.n == 1 {
                gagliardo_1d_estimate(&u.to_line(), a.s, a.p, &quad)?
            } else {
                gagliardo_radial_estimate(&u, &params, &quad)?
            }
        }
    };
    json(&SeminormReport { value: est.value, error_estimate: est.error_estimate })
}

pub fn cmd_rearrange(a: &RearrangeArgs) -> Result<Vec<u8>> {
    let star = match a.kind {
        InputKind::Line => rearrange(&PiecewiseFunction1D::load(&a.input)?, a.n)?,
        InputKind::Radial => rearrange(&RadialProfile::load(&a.input)?, a.n)?,
    };
    let mut buf = Vec::new();
    star.write_csv(&mut buf)?;
    Ok(buf)
}

#[derive(Serialize)]
struct PoincareReport<'a> {
    value: f64,
    lower_bound: Option<f64>,
    iterations: usize,
    residual: f64,
    flags: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    power_check: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nodes: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    minimizer: Option<&'a [f64]>,
}

fn intervals_domain(path: &Path) -> Result<IntervalUnionDomain> {
    match DomainSpec::from_json(&read_text(path)?)? {
        DomainSpec::Intervals { intervals } => Ok(intervals),
        _ => Err(LabError::InvalidInput("poincare needs a domain of type \"intervals\"".to_string())),
    }
}

pub fn cmd_poincare(a: &PoincareArgs) -> Result<Vec<u8>> {
    let domain = intervals_domain(&a.domain)?;
    let q = a.q.unwrap_or(a.p);
    let cfg = RayleighConfig { restarts: a.restarts, seed: a.seed, ..RayleighConfig::with_grid(a.grid_n) };
    let est: RayleighEstimate = match &a.ball {
        Some(b) => {
            require(b.len() == 2, || format!("--ball takes centre,radius, got {} values", b.len()))?;
            augmented_rayleigh(&domain, &Ball1D::new(b[0], b[1])?, a.sigma, a.s, a.p, q, &cfg)?
        }
        None => rayleigh_estimate_with(&domain, a.s, a.p, q, &cfg)?,
    };
    json(&PoincareReport {
        value: est.value,
        lower_bound: est.lower_bound,
        iterations: est.iterations,
        residual: est.residual,
        flags: &est.flags,
        power_check: est.power_check,
        nodes: a.minimizer.then_some(&est.nodes[..]),
        minimizer: a.minimizer.then_some(&est.minimizer[..]),
    })
}

fn parse_offsets(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || LabError::InvalidInput(format!("offsets must read start:end:count, got '{spec}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    let k: usize = parts[2].parse().map_err(|_| bad())?;
    require(k >= 1 && b >= a, || format!("offset grid '{spec}' is empty"))?;
    if k == 1 {
        return Ok(vec![a]);
    }
    Ok((0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect())
}

#[derive(Serialize)]
struct LsReport {
    inf_bound: f64,
    certified: bool,
    directions: Vec<crate::poincare::UniformCheck>,
}

pub fn cmd_ls_check(a: &LsArgs) -> Result<Vec<u8>> {
    let spec = DomainSpec::from_json(&read_text(&a.domain)?)?;
    require(a.directions >= 1, || "need at least one direction".to_string())?;
    let offsets = parse_offsets(&a.offsets)?;
    let q = a.q.unwrap_or(a.p);
    let cfg = a.rayleigh_grid.map(|g| RayleighConfig { restarts: 0, ..RayleighConfig::with_grid(g) });
    let mut checks = Vec::new();
    for k in 0..a.directions {
        let angle = (k as f64 + 0.5) * std::f64::consts::PI / a.directions as f64;
        let family = ls_sections(&spec, angle, &offsets)?;
        checks.push(uniform_poincare_check(&family, a.s, a.p, q, cfg.as_ref())?);
    }
    let inf_bound = checks.iter().map(|c| c.inf_bound).fold(f64::INFINITY, f64::min);
    json(&LsReport { inf_bound, certified: checks.iter().all(|c| c.certified), directions: checks })
}

pub fn cmd_blowup(a: &BlowupArgs) -> Result<Vec<u8>> {
    let params = a.params.params()?;
    let weight: WeightSpec = a.weight.parse()?;
    let normalization: Normalization = a.normalization.parse()?;
    let table = blowup_scan(a.alpha_frac, weight, &a.eps.grid()?, &params, normalization, &QuadratureSpec::default())?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    Ok(buf)
}

pub fn cmd_fa_scan(a: &FaScanArgs) -> Result<Vec<u8>> {
    let params = a.params.params()?;
    let grid = a.eps.grid()?;
    require(!a.alpha_frac.is_empty(), || "need at least one alpha fraction".to_string())?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["alpha_frac", "eps", "seminorm_p", "lp_norm_p", "value", "log10_value"])?;
    for &frac in &a.alpha_frac {
        let table = blowup_scan(frac, WeightSpec::One, &grid, &params, Normalization::LpNormalized, &QuadratureSpec::default())?;
        for row in &table.rows {
            let log10 = if row.log_space { row.log10_value.to_string() } else { String::new() };
            w.write_record([
                frac.to_string(),
                row.eps.to_string(),
                row.seminorm_p.to_string(),
                row.lp_norm_p.to_string(),
                row.value.to_string(),
                log10,
            ])?;
        }
    }
    w.into_inner().map_err(|e| LabError::Format(e.to_string()))
}

/// Runs the suite; the flag is true when every criterion passed.
pub fn cmd_verify(a: &VerifyArgs) -> Result<(Vec<u8>, bool)> {
    let ids = verify::parse_suite(&a.suite)?;
    let report = verify::run_suite(&ids, a.seed);
    let bytes = match a.format {
        ReportFormat::Text => report.text().into_bytes(),
        ReportFormat::Json => json(&report)?,
    };
    Ok((bytes, report.passed))
}

fn configure_from_env() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let threads: usize = v
            .trim()
            .parse()
            .map_err(|_| LabError::InvalidInput(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
        require(threads >= 1, || format!("{THREADS_ENV} must be >= 1"))?;
        crate::parallel::configure_threads(threads);
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<i32> {
    configure_from_env()?;
    let (bytes, out, code) = match &cli.command {
        Command::Constants(a) => (cmd_constants(a)?, &a.out, 0),
        Command::Moser(a) => (cmd_moser(a)?, &a.out, 0),
        Command::Seminorm(a) => (cmd_seminorm(a)?, &a.out, 0),
        Command::Rearrange(a) => (cmd_rearrange(a)?, &a.out, 0),
        Command::Poincare(a) => (cmd_poincare(a)?, &a.out, 0),
        Command::LsCheck(a) => (cmd_ls_check(a)?, &a.out, 0),
        Command::Blowup(a) => (cmd_blowup(a)?, &a.out, 0),
        Command::FaScan(a) => (cmd_fa_scan(a)?, &a.out, 0),
        Command::Verify(a) => {
            let (bytes, passed) = cmd_verify(a)?;
            (bytes, &a.out, if passed { 0 } else { 1 })
        }
    };
    emit(out, &bytes)?;
    Ok(code)
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
