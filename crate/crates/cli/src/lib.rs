//! The `zs` command line: argument types, run configuration and the
//! subcommand implementations. Every command renders its output to a string
//! first, so the bytes written do not depend on the thread budget.

pub mod io;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;
use zs_core::bounds::{bers_curve_bound_check, epsilon_r, properness_sweep, systole_bound_check};
use zs_core::conformal::{heat_invariants, jensen_bound_check, polyakov_logD1};
use zs_core::precision::Precision;
use zs_core::spectrum::enumerate;
use zs_core::surface::{SurfaceKind, SurfaceModel};
use zs_core::zeta::{
    find_zeros, log_det_d, log_zeta, log_zeta_cylinder, winding_number, Convention, CylinderZeta, DeterminantParams,
    Rect, ZeroFinderOptions, ZetaEvaluation, ZetaOptions,
};
use zs_core::ZsError;

use crate::io::{csv_table, floats_to_strings, fmt15, read_surface, ChartFile};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] ZsError),
    #[error("{message}")]
    Numeric { message: String },
}

impl CliError {
    /// 0 success, 1 numeric failure, 2 input error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric { .. } => 1,
            CliError::Core(e) => match e {
                ZsError::InvalidInput(_)
                | ZsError::InvalidLength(_)
                | ZsError::InvalidR(_)
                | ZsError::NonHyperbolicElement { .. }
                | ZsError::SupportTouchesBoundary(_) => 2,
                _ => 1,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "zs", version, about = "Length spectra, Selberg zeta functions and heat invariants of hyperbolic surfaces")]
pub struct Cli {
    /// Decimal digits requested (at least 15); ZS_PRECISION overrides.
    #[arg(long, global = true, default_value_t = 16)]
    pub prec: u32,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory; without it results go to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Product convention for the zeta function.
    #[arg(long, global = true, value_enum, default_value_t = ConventionArg::Oriented)]
    pub convention: ConventionArg,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Oriented,
    Unoriented,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Primitive length spectrum up to --lmax.
    Spectrum {
        surface: PathBuf,
        #[arg(long)]
        lmax: f64,
        /// Write a partial spectrum instead of failing when enumeration is cut short.
        #[arg(long)]
        allow_incomplete: bool,
    },
    /// log Z(s) on points or a real grid.
    Zeta(ZetaArgs),
    /// log D(s) with the Sarnak normalization.
    Detz(ZetaArgs),
    /// Zeros of the cylinder zeta function in a rectangle.
    Resonances {
        surface: Option<PathBuf>,
        #[arg(long)]
        cylinder: Option<f64>,
        /// re_min re_max im_min im_max
        #[arg(long, num_args = 4, allow_negative_numbers = true, required = true)]
        rect: Vec<f64>,
    },
    /// a0, a1, a2, Polyakov and Jensen for a conformal factor.
    Invariants {
        chart: PathBuf,
        /// Grid of phi values (n_t rows of n_theta values); defaults to the chart's bump.
        phi: Option<PathBuf>,
    },
    /// -log Z(1) and systole along the pants (l, l, l).
    Sweep {
        #[arg(long, required = true)]
        pants_uniform: bool,
        #[arg(long)]
        lmin: f64,
        #[arg(long)]
        lmax: f64,
        #[arg(long)]
        steps: usize,
    },
    /// Systole bound and, for pants, the collar inequality.
    Bounds {
        surface: PathBuf,
        #[arg(long, default_value_t = 14.0)]
        lmax: f64,
    },
}

#[derive(Debug, Args)]
pub struct ZetaArgs {
    pub surface: PathBuf,
    /// `re` or `re,im`.
    #[arg(long, allow_negative_numbers = true)]
    pub s: Vec<String>,
    /// `start,stop,n` on the real axis.
    #[arg(long)]
    pub s_grid: Option<String>,
    /// Spectrum cutoff (not needed for the cylinder).
    #[arg(long)]
    pub lmax: Option<f64>,
    /// Allow heuristic evaluation below Re s = 1 when the empirical exponent permits.
    #[arg(long)]
    pub extended: bool,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub precision: Precision,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub convention: Convention,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let prec = match std::env::var("ZS_PRECISION") {
            Ok(v) => v
                .trim()
                .parse::<u32>()
                .map_err(|_| CliError::Input(format!("ZS_PRECISION=`{v}` is not a digit count")))?,
            Err(_) => cli.prec,
        };
        if prec < 15 {
            return Err(CliError::Input(format!("precision of {prec} digits is below 15")));
        }
        if cli.threads == Some(0) {
            return Err(CliError::Input("--threads must be positive".into()));
        }
        Ok(RunConfig {
            precision: Precision::new(prec),
            threads: cli.threads,
            out: cli.out.clone(),
            convention: match cli.convention {
                ConventionArg::Oriented => Convention::Oriented,
                ConventionArg::Unoriented => Convention::Unoriented,
            },
        })
    }

    fn zeta_options(&self, extended: bool) -> ZetaOptions {
        ZetaOptions { convention: self.convention, extended, precision: self.precision, ..Default::default() }
    }

    fn json<T: Serialize>(&self, v: &T) -> Result<String, CliError> {
        let mut value = serde_json::to_value(v).map_err(|e| CliError::Numeric { message: e.to_string() })?;
        if self.precision.exceeds_double() {
            value = floats_to_strings(value);
        }
        let mut s = serde_json::to_string_pretty(&value).map_err(|e| CliError::Numeric { message: e.to_string() })?;
        s.push('\n');
        Ok(s)
    }
}

/// A rendered result and the file name it goes to under `--out`.
pub struct Output {
    pub file: &'static str,
    pub body: String,
}

pub fn run(cli: Cli) -> Result<Output, CliError> {
    let cfg = RunConfig::from_cli(&cli)?;
    if let Some(n) = cfg.threads {
        // Fails only if a pool already exists, in which case that pool is used.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Spectrum { surface, lmax, allow_incomplete } => cmd_spectrum(surface, *lmax, *allow_incomplete),
        Command::Zeta(args) => cmd_zeta(&cfg, args),
        Command::Detz(args) => cmd_detz(&cfg, args),
        Command::Resonances { surface, cylinder, rect } => cmd_resonances(&cfg, surface.as_deref(), *cylinder, rect),
        Command::Invariants { chart, phi } => cmd_invariants(&cfg, chart, phi.as_deref()),
        Command::Sweep { lmin, lmax, steps, .. } => cmd_sweep(*lmin, *lmax, *steps),
        Command::Bounds { surface, lmax } => cmd_bounds(&cfg, surface, *lmax),
    }
}

/// Writes the output under `--out` (or to stdout).
pub fn emit(cfg_out: Option<&Path>, out: &Output) -> Result<(), CliError> {
    match cfg_out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
            let path = dir.join(out.file);
            std::fs::write(&path, &out.body).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
        }
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(out.body.as_bytes())
                .map_err(|e| CliError::Input(format!("stdout: {e}")))
        }
    }
}

fn cmd_spectrum(surface: &Path, lmax: f64, allow_incomplete: bool) -> Result<Output, CliError> {
    let s = read_surface(surface)?;
    let ls = match enumerate(&s, lmax) {
        Ok(ls) => ls,
        Err(ZsError::EnumerationBudgetExceeded { partial, budget }) => {
            if !allow_incomplete {
                return Err(CliError::Core(ZsError::EnumerationBudgetExceeded { partial, budget }));
            }
            eprintln!("warning: enumeration budget of {budget} words exhausted; spectrum is incomplete");
            *partial
        }
        Err(e) => return Err(e.into()),
    };
    let rows: Vec<Vec<String>> = ls
        .classes
        .iter()
        .map(|c| {
            vec![c.word.to_string(), fmt15(c.length), c.primitive.to_string(), c.oriented_multiplicity.to_string()]
        })
        .collect();
    Ok(Output {
        file: "spectrum.csv",
        body: csv_table(&["word", "length", "primitive", "oriented_multiplicity"], &rows)?,
    })
}

fn parse_point(text: &str) -> Result<Complex64, CliError> {
    let bad = || CliError::Input(format!("--s `{text}`: expected `re` or `re,im`"));
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|_| bad());
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(bad()),
    }
}

fn sample_points(args: &ZetaArgs) -> Result<Vec<Complex64>, CliError> {
    let mut pts = args.s.iter().map(|s| parse_point(s)).collect::<Result<Vec<_>, _>>()?;
    if let Some(grid) = &args.s_grid {
        let bad = || CliError::Input(format!("--s-grid `{grid}`: expected `start,stop,n`"));
        let parts: Vec<&str> = grid.split(',').map(str::trim).collect();
        let [a, b, n] = parts.as_slice() else { return Err(bad()) };
        let (a, b): (f64, f64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
        let n: usize = n.parse().map_err(|_| bad())?;
        if n == 0 || !(a.is_finite() && b.is_finite()) {
            return Err(bad());
        }
        for i in 0..n {
            let x = if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 };
            pts.push(Complex64::new(x, 0.0));
        }
    }
    if pts.is_empty() {
        return Err(CliError::Input("give at least one --s or an --s-grid".into()));
    }
    Ok(pts)
}

/// Either the closed form (cylinder) or the Euler product over an enumerated spectrum.
enum ZetaSource {
    Cylinder(f64),
    Spectrum(Box<zs_core::spectrum::LengthSpectrum>),
}

impl ZetaSource {
    fn new(s: &SurfaceModel, lmax: Option<f64>) -> Result<Self, CliError> {
        if let SurfaceKind::Cylinder { length } = *s.kind() {
            return Ok(ZetaSource::Cylinder(length));
        }
        let lmax = lmax.ok_or_else(|| CliError::Input("--lmax is required for this surface".into()))?;
        Ok(ZetaSource::Spectrum(Box::new(enumerate(s, lmax)?)))
    }

    fn eval(&self, s: Complex64, opts: &ZetaOptions) -> Result<ZetaEvaluation, ZsError> {
        match self {
            ZetaSource::Cylinder(l) => log_zeta_cylinder(*l, s, opts.k_max),
            ZetaSource::Spectrum(ls) => log_zeta(ls, s, opts),
        }
    }
}

fn zeta_row(s: Complex64, v: Complex64, z: &ZetaEvaluation) -> Vec<String> {
    vec![
        fmt15(s.re),
        fmt15(s.im),
        fmt15(v.re),
        fmt15(v.im),
        fmt15(z.truncation_error_bound),
        z.k_max.to_string(),
        fmt15(z.length_cutoff),
        z.heuristic.to_string(),
    ]
}

fn cmd_zeta(cfg: &RunConfig, args: &ZetaArgs) -> Result<Output, CliError> {
    let surface = read_surface(&args.surface)?;
    let pts = sample_points(args)?;
    let source = ZetaSource::new(&surface, args.lmax)?;
    let opts = cfg.zeta_options(args.extended);
    let mut rows = Vec::new();
    for s in pts {
        let z = source.eval(s, &opts)?;
        rows.push(zeta_row(s, z.value, &z));
    }
    let header = ["s_re", "s_im", "log_z_re", "log_z_im", "error_bound", "k_max", "length_cutoff", "heuristic"];
    Ok(Output { file: "zeta.csv", body: csv_table(&header, &rows)? })
}

fn cmd_detz(cfg: &RunConfig, args: &ZetaArgs) -> Result<Output, CliError> {
    let surface = read_surface(&args.surface)?;
    let pts = sample_points(args)?;
    let source = ZetaSource::new(&surface, args.lmax)?;
    let opts = cfg.zeta_options(args.extended);
    let chi = surface.chi();
    let params = DeterminantParams::sarnak(chi);
    let mut rows = Vec::new();
    for s in pts {
        let (value, z) = match &source {
            ZetaSource::Spectrum(ls) => {
                let d = log_det_d(ls, s, params, chi, &opts)?;
                (d.value, d.zeta)
            }
            // chi = 0: no Z_inf factor and G = 0
            ZetaSource::Cylinder(_) => {
                let z = source.eval(s, &opts)?;
                (params.f * s * (s - 1.0) + params.g + z.value, z)
            }
        };
        let mut row = zeta_row(s, value, &z);
        row.splice(4..4, [fmt15(z.value.re), fmt15(z.value.im)]);
        rows.push(row);
    }
    let header = [
        "s_re",
        "s_im",
        "log_d_re",
        "log_d_im",
        "log_z_re",
        "log_z_im",
        "error_bound",
        "k_max",
        "length_cutoff",
        "heuristic",
    ];
    Ok(Output { file: "detz.csv", body: csv_table(&header, &rows)? })
}

#[derive(Serialize)]
struct ZeroOut {
    re: f64,
    im: f64,
    multiplicity: u32,
}

fn cmd_resonances(
    cfg: &RunConfig,
    surface: Option<&Path>,
    cylinder: Option<f64>,
    rect: &[f64],
) -> Result<Output, CliError> {
    let length = match (cylinder, surface) {
        (Some(l), None) => l,
        (None, Some(p)) => match *read_surface(p)?.kind() {
            SurfaceKind::Cylinder { length } => length,
            _ => {
                return Err(CliError::Input(
                    "resonances are available for the cylinder only; the zeta function of other surfaces is not continued below its abscissa".into(),
                ))
            }
        },
        _ => return Err(CliError::Input("give exactly one of --cylinder or a surface file".into())),
    };
    let r = Rect::new(rect[0], rect[1], rect[2], rect[3])?;
    let f = CylinderZeta::new(length, r.re_min)?;
    let opts = ZeroFinderOptions::default();
    let on_boundary = |e: ZsError| match e {
        ZsError::BoundaryZero(z) => {
            let d = 1e-3 * (r.re_max - r.re_min).min(r.im_max - r.im_min);
            CliError::Numeric {
                message: format!(
                    "{}; suggested: --rect {} {} {} {}",
                    ZsError::BoundaryZero(z),
                    fmt15(r.re_min - d),
                    fmt15(r.re_max + d),
                    fmt15(r.im_min - d),
                    fmt15(r.im_max + d)
                ),
            }
        }
        other => other.into(),
    };
    let zeros = find_zeros(&f, &r, &opts).map_err(on_boundary)?;
    let winding = winding_number(&f, &r, opts.tol).map_err(on_boundary)?;
    let zeros: Vec<ZeroOut> = zeros
        .iter()
        .map(|z| ZeroOut { re: clean(z.location.re), im: clean(z.location.im), multiplicity: z.multiplicity })
        .collect();
    let body = cfg.json(&json!({
        "cylinder_length": length,
        "rect": { "re_min": r.re_min, "re_max": r.re_max, "im_min": r.im_min, "im_max": r.im_max },
        "winding_number": winding,
        "zeros": zeros,
    }))?;
    Ok(Output { file: "resonances.json", body })
}

/// Drops the sign of a negative zero so that output does not depend on it.
fn clean(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

fn cmd_invariants(cfg: &RunConfig, chart: &Path, phi: Option<&Path>) -> Result<Output, CliError> {
    let file = ChartFile::read(chart)?;
    let cf = file.factor(phi)?;
    let heat = heat_invariants(&cf)?;
    let polyakov = polyakov_logD1(&cf)?;
    let jensen = jensen_bound_check(&cf, file.chi)?;
    let body = cfg.json(&json!({
        "a0": heat.a0,
        "a1": heat.a1,
        "a2": heat.a2,
        "errors": heat.errors,
        "quadrature_error_estimate": heat.quadrature_error_estimate,
        "polyakov": polyakov,
        "jensen": jensen,
        "support": [cf.support().0, cf.support().1],
    }))?;
    Ok(Output { file: "invariants.json", body })
}

fn cmd_sweep(lmin: f64, lmax: f64, steps: usize) -> Result<Output, CliError> {
    if !(lmin > 0.0 && lmax >= lmin && steps >= 1) {
        return Err(CliError::Input(format!("sweep range [{lmin}, {lmax}] with {steps} steps")));
    }
    let grid: Vec<f64> = (0..steps)
        .map(|i| if steps == 1 { lmin } else { lmin + (lmax - lmin) * i as f64 / (steps - 1) as f64 })
        .collect();
    let rows: Vec<Vec<String>> = properness_sweep(&grid, SWEEP_CUTOFF_FACTOR)?
        .iter()
        .map(|r| {
            vec![
                fmt15(r.length),
                fmt15(r.systole),
                fmt15(r.neg_log_z1),
                fmt15(r.truncation_error_bound),
                r.heuristic.to_string(),
            ]
        })
        .collect();
    let header = ["length", "systole", "neg_log_z1", "error_bound", "heuristic"];
    Ok(Output { file: "sweep.csv", body: csv_table(&header, &rows)? })
}

/// Spectra in the sweep are enumerated to this multiple of the boundary length.
pub const SWEEP_CUTOFF_FACTOR: f64 = 7.0;

fn cmd_bounds(cfg: &RunConfig, surface: &Path, lmax: f64) -> Result<Output, CliError> {
    let s = read_surface(surface)?;
    let systole = systole_bound_check(&s, lmax)?;
    let r = systole.context["R"];
    let mut collar = Vec::new();
    if let SurfaceKind::Pants { spec } = *s.kind() {
        let edge = (2.0 * std::f64::consts::PI / spec.total_boundary()).asinh();
        for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
            collar.push(bers_curve_bound_check(spec, edge * frac)?);
        }
    }
    let body = cfg.json(&json!({
        "epsilon_R": epsilon_r(r)?,
        "systole": systole,
        "collar": collar,
    }))?;
    Ok(Output { file: "bounds.json", body })
}
