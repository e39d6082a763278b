//! Experiment runner for scaled lattice rules: convergence sweeps with error
//! decomposition, CSV and gnuplot output, slope fits, CBC construction,
//! worst-case errors and Gauss–Hermite/Smolyak baselines.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use scaled_lattice::baselines::{gauss_hermite_level, level_count, smolyak_evaluations, smolyak_quadrature, tensor_quadrature};
use scaled_lattice::error::Error;
use scaled_lattice::integrator::{integrate, total_error_bound_report, Integrand, NormEstimates};
use scaled_lattice::kernels::SmoothnessOrder;
use scaled_lattice::lattice::{cbc_construct, wce_korobov_closed_form, wce_scaled_box_bound, BoxDomain, GeneratingVector, BASE2_SEQUENCE_VECTOR};
use scaled_lattice::testbed::{box_integral, separable_decay_sup, IntegrandSpecFile, ProductIntegrand, TestFamily};

/// Samples per axis when estimating decay constants for `--bounds`.
const DECAY_SAMPLES: usize = 2001;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("slope fit: {0}")]
    Fit(String),
}

impl CliError {
    /// 0 success, 2 domain (bad input, missing capability), 3 resource
    /// (including I/O), 4 computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::Domain(_) | Error::Capability(_)) | CliError::Parse(_) | CliError::Fit(_) => 2,
            CliError::Core(Error::Resource(_)) | CliError::Io { .. } => 3,
            CliError::Core(Error::Computation(_)) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

/// One row of a convergence sweep. Error parts are absolute.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub n: u64,
    pub a: f64,
    pub estimate: f64,
    pub rel_error: Option<f64>,
    /// `|int_{R^d} f - int_box f|`.
    pub truncation_part: Option<f64>,
    /// `|int_box f - estimate|`.
    pub cubature_part: Option<f64>,
}

/// Least-squares line through `(log2 n, log2 rel_error)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n_min: u64,
    pub n_max: u64,
}

/// Reads a generating vector, truncating it to `d` components if longer.
pub fn load_generating_vector(path: Option<&Path>, d: usize) -> Result<GeneratingVector> {
    let gv = match path {
        Some(p) => read(p)?.parse::<GeneratingVector>()?,
        None => GeneratingVector::new(1 << 10, BASE2_SEQUENCE_VECTOR.to_vec())?,
    };
    if gv.dim() == d {
        Ok(gv)
    } else if gv.dim() > d {
        log::info!("using the first {d} of {} generating-vector components", gv.dim());
        Ok(gv.truncated(d)?)
    } else {
        Err(Error::Domain(format!("generating vector has {} components, the integrand needs {d}", gv.dim())).into())
    }
}

pub fn load_spec(path: &Path) -> Result<IntegrandSpecFile> {
    Ok(read(path)?.parse()?)
}

/// One sweep point: integrate with `n` points and, if `decompose`, split the
/// error into truncation and cubature parts using the 1D-product box integral.
pub fn convergence_record(f: &dyn ProductIntegrand, gv: &GeneratingVector, decompose: bool) -> Result<ConvergenceRecord> {
    let res = integrate(f, gv)?;
    let a = res.box_domain.intervals()[0].b();
    let exact = f.exact_integral();
    let rel_error = exact.map(|e| (res.estimate - e).abs() / e.abs());
    let (truncation_part, cubature_part) = if decompose {
        let on_box = box_integral(f, &res.box_domain)?;
        (exact.map(|e| (e - on_box).abs()), Some((on_box - res.estimate).abs()))
    } else {
        (None, None)
    };
    Ok(ConvergenceRecord { n: res.n, a, estimate: res.estimate, rel_error, truncation_part, cubature_part })
}

/// Sweep `n = 2^m_min .. 2^m_max` with the lattice `gv` re-sized to each `n`.
pub fn run_convergence(spec: &IntegrandSpecFile, gv: &GeneratingVector, m_min: u32, m_max: u32) -> Result<Vec<ConvergenceRecord>> {
    if m_min < 1 || m_min > m_max || m_max > 40 {
        return Err(Error::Domain(format!("need 1 <= m_min <= m_max <= 40, got {m_min}..{m_max}")).into());
    }
    let f = spec.family.as_product();
    (m_min..=m_max)
        .into_par_iter()
        .map(|m| convergence_record(f, &gv.with_n(1u64 << m)?, spec.decompose))
        .collect()
}

/// Fit over the records with a positive, finite relative error.
pub fn fit_slope(records: &[ConvergenceRecord]) -> Result<SlopeFit> {
    let pts: Vec<(u64, f64)> = records
        .iter()
        .filter_map(|r| r.rel_error.filter(|e| *e > 0.0 && e.is_finite()).map(|e| (r.n, e)))
        .collect();
    if pts.len() < 4 {
        return Err(CliError::Fit(format!("need at least 4 records with positive error, have {}", pts.len())));
    }
    let xs: Vec<f64> = pts.iter().map(|p| (p.0 as f64).log2()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.log2()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(CliError::Fit("all records share the same n".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    let n_min = pts.iter().map(|p| p.0).min().unwrap_or(0);
    let n_max = pts.iter().map(|p| p.0).max().unwrap_or(0);
    Ok(SlopeFit { slope, intercept, r2, n_min, n_max })
}

pub const CSV_HEADER: &str = "n,a,estimate,rel_error,trunc,cubature";

/// 17 significant digits, enough to round-trip any `f64`.
fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

pub fn to_csv(records: &[ConvergenceRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n,
            fmt_num(r.a),
            fmt_num(r.estimate),
            fmt_opt(r.rel_error),
            fmt_opt(r.truncation_part),
            fmt_opt(r.cubature_part)
        );
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<ConvergenceRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(CliError::Parse(format!("missing header {CSV_HEADER:?}")));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| CliError::Parse(format!("{s:?}: {e}")));
    let opt = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(CliError::Parse(format!("expected 6 fields in {line:?}")));
            }
            Ok(ConvergenceRecord {
                n: f[0].parse().map_err(|e| CliError::Parse(format!("{:?}: {e}", f[0])))?,
                a: num(f[1])?,
                estimate: num(f[2])?,
                rel_error: opt(f[3])?,
                truncation_part: opt(f[4])?,
                cubature_part: opt(f[5])?,
            })
        })
        .collect()
}

pub fn emit_csv(records: &[ConvergenceRecord], path: &Path) -> Result<()> {
    write(path, &to_csv(records))
}

/// Log-log plot of the CSV at `csv` (relative error plus the absolute parts).
pub fn gnuplot_script(csv: &Path, png: &Path) -> String {
    format!(
        "set terminal pngcairo size 800,600\n\
         set output '{png}'\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set logscale xy 2\n\
         set format y '2^{{%L}}'\n\
         set xlabel 'n'\n\
         set ylabel 'error'\n\
         plot '{csv}' using 1:4 with linespoints title 'relative error', \\\n     \
         '' using 1:5 with lines dashtype 2 title 'truncation (abs)', \\\n     \
         '' using 1:6 with lines dashtype 3 title 'cubature (abs)'\n",
        png = png.display(),
        csv = csv.display()
    )
}

/// `f / prod_j phi(x_j)`, the function the Gauss–Hermite rules integrate
/// against the standard normal density.
fn normal_ratio(family: &TestFamily) -> Box<dyn Fn(&[f64]) -> f64 + Sync + '_> {
    match family {
        TestFamily::Normal(f) => {
            let sigma = f.sigma();
            Box::new(move |x: &[f64]| x.iter().map(|t| 1.0 + t.abs().powf(sigma)).product())
        }
        other => {
            let f = other.as_product();
            Box::new(move |x: &[f64]| {
                let v = f.eval(x);
                if v == 0.0 {
                    return 0.0;
                }
                let d = x.len() as f64;
                let log = v.abs().ln() + x.iter().map(|t| 0.5 * t * t).sum::<f64>() + 0.5 * d * (2.0 * std::f64::consts::PI).ln();
                // beyond this the node's weight underflows to zero anyway
                if log > 700.0 {
                    0.0
                } else {
                    v.signum() * log.exp()
                }
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineMethod {
    GhTensor,
    Smolyak,
}

/// Estimate of `int f` by a baseline rule, and the number of integrand evaluations.
pub fn run_baseline(method: BaselineMethod, level: u32, family: &TestFamily) -> Result<(f64, u128)> {
    let d = Integrand::dim(family.as_product());
    let g = normal_ratio(family);
    Ok(match method {
        BaselineMethod::GhTensor => {
            let rule = gauss_hermite_level(level)?;
            (tensor_quadrature(&rule, d, &g)?, (level_count(level) as u128).pow(d as u32))
        }
        BaselineMethod::Smolyak => (smolyak_quadrature(level, d, &g)?, smolyak_evaluations(level, d)),
    })
}

#[derive(Debug, Parser)]
#[command(name = "slr", version, about = "Scaled rank-1 lattice rules on R^d")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a test integrand with one lattice size; prints `n a estimate [trunc cubature_factor projection]`.
    Integrate {
        #[arg(long)]
        spec: PathBuf,
        /// Generating-vector file; defaults to the built-in base-2 sequence vector.
        #[arg(long)]
        gv: Option<PathBuf>,
        #[arg(long)]
        n: u64,
        /// Also print the truncation bound, the norm-free cubature factor and the projection bound.
        #[arg(long)]
        bounds: bool,
    },
    /// Sweep n = 2^m_min..2^m_max and write a CSV.
    Convergence {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        gv: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        m_min: u32,
        #[arg(long, default_value_t = 16)]
        m_max: u32,
        #[arg(long)]
        out: PathBuf,
        /// Write a gnuplot script next to the CSV.
        #[arg(long)]
        plot: bool,
    },
    /// Component-by-component construction of a generating vector.
    Cbc {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        alpha: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Worst-case error in the Korobov space (optionally scaled to [-a, a]^d).
    Wce {
        #[arg(long)]
        gv: PathBuf,
        #[arg(long, default_value_t = 1)]
        alpha: u32,
        /// Override the number of points in the file.
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        half_width: Option<f64>,
    },
    /// Gauss–Hermite tensor or Smolyak estimate; prints `method level evaluations estimate rel_error`.
    Baseline {
        #[arg(long, value_enum)]
        method: BaselineMethod,
        #[arg(long)]
        level: u32,
        #[arg(long)]
        spec: PathBuf,
    },
}

/// Runs one subcommand, writing its report to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let io = |e: std::io::Error| CliError::Io { path: PathBuf::from("<stdout>"), source: e };
    match cli.command {
        Command::Integrate { spec, gv, n, bounds } => {
            let spec = load_spec(&spec)?;
            let f = spec.family.as_product();
            let gv = load_generating_vector(gv.as_deref(), Integrand::dim(f))?.with_n(n)?;
            let res = integrate(f, &gv)?;
            let a = res.box_domain.intervals()[0].b();
            let mut line = format!("{} {} {}", n, fmt_num(a), fmt_num(res.estimate));
            if bounds {
                let decay = f.decay();
                let order = f.smoothness().get() - 1;
                let decay_sup = separable_decay_sup(f, &decay, order, a, DECAY_SAMPLES)?;
                let norms = NormEstimates { decay_sup, sobolev: 1.0 };
                let report = total_error_bound_report(f, &gv, &res.box_domain, &norms)?;
                let _ = write!(line, " {} {} {}", fmt_num(report.truncation), fmt_num(report.cubature), fmt_num(report.projection));
            }
            writeln!(out, "{line}").map_err(io)?;
        }
        Command::Convergence { spec, gv, m_min, m_max, out: path, plot } => {
            let spec = load_spec(&spec)?;
            let gv = load_generating_vector(gv.as_deref(), Integrand::dim(spec.family.as_product()))?;
            let records = run_convergence(&spec, &gv, m_min, m_max)?;
            emit_csv(&records, &path)?;
            if plot {
                let script = path.with_extension("gp");
                write(&script, &gnuplot_script(&path, &path.with_extension("png")))?;
            }
            match fit_slope(&records) {
                Ok(fit) => writeln!(
                    out,
                    "slope {:.4} intercept {:.4} r2 {:.4} over n = {}..{}",
                    fit.slope, fit.intercept, fit.r2, fit.n_min, fit.n_max
                )
                .map_err(io)?,
                Err(e) => log::warn!("{e}"),
            }
        }
        Command::Cbc { n, d, alpha, out: path } => {
            let alpha = SmoothnessOrder::new(alpha)?;
            let gv = cbc_construct(n, d, alpha)?;
            write(&path, &gv.to_record())?;
            writeln!(out, "{} wce {}", gv, fmt_num(wce_korobov_closed_form(&gv, alpha)?)).map_err(io)?;
        }
        Command::Wce { gv, alpha, n, half_width } => {
            let alpha = SmoothnessOrder::new(alpha)?;
            let mut gv: GeneratingVector = read(&gv)?.parse()?;
            if let Some(n) = n {
                gv = gv.with_n(n)?;
            }
            let value = match half_width {
                Some(a) => wce_scaled_box_bound(&gv, alpha, &BoxDomain::symmetric(a, gv.dim())?)?,
                None => wce_korobov_closed_form(&gv, alpha)?,
            };
            writeln!(out, "{}", fmt_num(value)).map_err(io)?;
        }
        Command::Baseline { method, level, spec } => {
            let spec = load_spec(&spec)?;
            let (estimate, evals) = run_baseline(method, level, &spec.family)?;
            let rel = spec.family.as_product().exact_integral().map(|e| fmt_num((estimate - e).abs() / e.abs()));
            let name = match method {
                BaselineMethod::GhTensor => "gh-tensor",
                BaselineMethod::Smolyak => "smolyak",
            };
            writeln!(out, "{name} {level} {evals} {} {}", fmt_num(estimate), rel.unwrap_or_else(|| "-".into())).map_err(io)?;
        }
    }
    Ok(())
}
