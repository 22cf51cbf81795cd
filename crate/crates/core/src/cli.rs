//! Command-line front end. [`run`] returns the process exit code so the whole
//! surface can be driven in-process.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curvature::{check_dimension, extended_curvature, is_nondegenerate, CurvatureVector, MetricVector};
use crate::solver::{
    self, regular_solve, write_trace_files, FlowConfig, Method, NewtonMode, RegularSolution, SolveReport, SolverError,
};
use crate::triangulation::{
    detect_format, parse_gluing, parse_incidence, read_gluing_file, validate, validate_gluings, Format, Triangulation,
    TriangulationError, ValidationReport,
};

pub const EXIT_OK: i32 = 0;
/// Validation failure or metric/target dimension mismatch.
pub const EXIT_INVALID: i32 = 1;
/// Unreadable or malformed input, bad flags.
pub const EXIT_USAGE: i32 = 2;
/// `max_time`, or no regular solution.
pub const EXIT_NO_CONVERGENCE: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;

/// Lower and upper bounds of `--metric-random` lengths.
pub const RANDOM_METRIC_RANGE: (f64, f64) = (0.5, 2.0);

#[derive(Debug, Parser)]
#[command(name = "hyperflow", version, about = "Extended Ricci flow for hyper-ideal polyhedral metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a triangulation and print a JSON report.
    Validate {
        #[command(flatten)]
        input: InputArgs,
        /// Require every boundary component to have negative Euler characteristic.
        #[arg(long)]
        strict: bool,
    },
    /// Print per-edge curvature for a metric.
    Curvature {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        metric: MetricArgs,
        /// Subtract this target curvature in the sup-norm line.
        #[arg(long)]
        target: Option<PathBuf>,
    },
    /// Integrate the curvature flow.
    Flow(RunArgs),
    /// Flow followed by Newton refinement.
    Solve(RunArgs),
    /// Solve the single-edge instance of degree N.
    Regular {
        #[arg(long = "N", short = 'N', value_parser = clap::value_parser!(u32).range(1..))]
        n: u32,
        /// Bisection interval width.
        #[arg(long, default_value_t = 1e-14)]
        tol: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Gluing,
    Incidence,
    Auto,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Triangulation file.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct MetricArgs {
    /// Same length on every edge (default 1.0).
    #[arg(long, allow_negative_numbers = true)]
    pub metric_const: Option<f64>,
    /// JSON array or whitespace/comma separated lengths, one per edge.
    #[arg(long)]
    pub metric_file: Option<PathBuf>,
    /// Uniform random lengths in [0.5, 2) from this seed.
    #[arg(long)]
    pub metric_random: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub metric: MetricArgs,
    /// Target curvature file, same layout as a metric file (default 0).
    #[arg(long)]
    pub target: Option<PathBuf>,
    #[arg(long, default_value = "rk4")]
    pub method: Method,
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    #[arg(long, default_value_t = 100.0)]
    pub tmax: f64,
    /// Stop once the curvature sup-norm error is below this.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 1)]
    pub record_every: usize,
    /// Newton handoff for `flow` (`solve` always hands off).
    #[arg(long, default_value = "off")]
    pub newton: NewtonMode,
    /// Trace CSV path; events go to `<stem>.events.csv` beside it.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Also write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Failure with an exit code and a message for stderr.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self { code: EXIT_INVALID, message: message.into() }
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        let code = match e {
            SolverError::Curvature(_) => EXIT_INVALID,
            _ => EXIT_USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

fn is_syntax(e: &TriangulationError) -> bool {
    matches!(e, TriangulationError::Syntax { .. } | TriangulationError::Empty)
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn resolve_format(text: &str, arg: FormatArg) -> Result<Format, Failure> {
    match arg {
        FormatArg::Gluing => Ok(Format::Gluing),
        FormatArg::Incidence => Ok(Format::Incidence),
        FormatArg::Auto => detect_format(text).map_err(|e| Failure::usage(e.to_string())),
    }
}

fn load(input: &InputArgs) -> Result<Triangulation, Failure> {
    let text = read(&input.input)?;
    let parsed = match resolve_format(&text, input.format)? {
        Format::Gluing => parse_gluing(&text),
        Format::Incidence => parse_incidence(&text),
    };
    parsed.map_err(|e| {
        let message = format!("{}: {e}", input.input.display());
        if is_syntax(&e) {
            Failure::usage(message)
        } else {
            Failure::invalid(message)
        }
    })
}

fn read_vector(path: &Path) -> Result<Vec<f64>, Failure> {
    let text = read(path)?;
    if let Ok(v) = serde_json::from_str::<Vec<f64>>(&text) {
        return Ok(v);
    }
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| Failure::usage(format!("{}: not a number: `{t}`", path.display()))))
        .collect()
}

fn resolve_metric(tri: &Triangulation, args: &MetricArgs) -> Result<MetricVector, Failure> {
    let n = tri.num_edges();
    let metric = if let Some(path) = &args.metric_file {
        MetricVector(read_vector(path)?)
    } else if let Some(seed) = args.metric_random {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        MetricVector((0..n).map(|_| rng.gen_range(RANDOM_METRIC_RANGE.0..RANDOM_METRIC_RANGE.1)).collect())
    } else {
        MetricVector::constant(n, args.metric_const.unwrap_or(1.0))
    };
    if metric.0.iter().any(|x| !x.is_finite()) {
        return Err(Failure::usage("metric entries must be finite"));
    }
    check_dimension(tri, metric.len()).map_err(|e| Failure::invalid(format!("metric: {e}")))?;
    Ok(metric)
}

fn resolve_target(tri: &Triangulation, path: Option<&Path>) -> Result<CurvatureVector, Failure> {
    let Some(path) = path else {
        return Ok(CurvatureVector::zeros(tri.num_edges()));
    };
    let target = CurvatureVector(read_vector(path)?);
    check_dimension(tri, target.len()).map_err(|e| Failure::invalid(format!("target: {e}")))?;
    Ok(target)
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

fn cmd_validate(input: &InputArgs, strict: bool, out: &mut dyn Write) -> Result<i32, Failure> {
    let text = read(&input.input)?;
    let report = match resolve_format(&text, input.format)? {
        Format::Gluing => match read_gluing_file(&text) {
            Ok(file) => validate_gluings(file.num_tets, &file.gluings, strict),
            Err(e) if is_syntax(&e) => return Err(Failure::usage(format!("{}: {e}", input.input.display()))),
            Err(e) => ValidationReport::rejected(e),
        },
        Format::Incidence => match parse_incidence(&text) {
            Ok(tri) => validate(&tri, strict),
            Err(e) if is_syntax(&e) => return Err(Failure::usage(format!("{}: {e}", input.input.display()))),
            Err(e) => ValidationReport::rejected(e),
        },
    };
    writeln!(out, "{}", json(&report)).map_err(|e| Failure::usage(e.to_string()))?;
    Ok(if report.ok { EXIT_OK } else { EXIT_INVALID })
}

fn cmd_curvature(
    input: &InputArgs,
    metric: &MetricArgs,
    target: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let tri = load(input)?;
    let metric = resolve_metric(&tri, metric)?;
    let target = resolve_target(&tri, target)?;
    let k = extended_curvature(&tri, &metric);
    let regions = is_nondegenerate(&tri, &metric);
    let mut text = String::from("edge\tlength\tcurvature\n");
    for e in 0..tri.num_edges() {
        text += &format!("e{e}\t{}\t{}\n", metric.0[e], k.0[e]);
    }
    for (t, r) in regions.regions.iter().enumerate() {
        text += &format!("tet {t}\t{}\n", r.short_name());
    }
    text += &format!("nondegenerate\t{}\n", regions.ok);
    text += &format!("sup_norm\t{}\n", k.distance(&target));
    out.write_all(text.as_bytes()).map_err(|e| Failure::usage(e.to_string()))?;
    Ok(EXIT_OK)
}

fn cmd_run(args: &RunArgs, hybrid: bool, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let tri = load(&args.input)?;
    let metric = resolve_metric(&tri, &args.metric)?;
    let target = resolve_target(&tri, args.target.as_deref())?;
    let config = FlowConfig {
        method: args.method,
        step: args.step,
        t_max: args.tmax,
        tol_curvature: args.tol,
        record_every: args.record_every,
        newton: if hybrid { NewtonMode::Hybrid } else { args.newton },
        seed: args.metric.metric_random.unwrap_or(0),
        ..FlowConfig::default()
    };
    let (trace, report): (_, SolveReport) = solver::run(&tri, &metric, &target, &config)?;
    if let Some(path) = &args.trace {
        let sidecar = write_trace_files(&trace, path)?;
        let _ = writeln!(err, "trace: {} (events: {})", path.display(), sidecar.display());
    }
    let text = json(&report);
    if let Some(path) = &args.report {
        std::fs::write(path, format!("{text}\n")).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    }
    writeln!(out, "{text}").map_err(|e| Failure::usage(e.to_string()))?;
    let _ = writeln!(err, "wall time: {:.3} s", report.wall_time);
    Ok(report.status.exit_code())
}

fn cmd_regular(n: u32, tol: f64, out: &mut dyn Write) -> Result<i32, Failure> {
    if !(tol > 0.0) {
        return Err(Failure::usage("--tol must be positive"));
    }
    let solution = regular_solve(n, tol);
    writeln!(out, "{}", json(&solution)).map_err(|e| Failure::usage(e.to_string()))?;
    Ok(match solution {
        RegularSolution::Root { .. } => EXIT_OK,
        RegularSolution::NoSolution { .. } => EXIT_NO_CONVERGENCE,
    })
}

/// Parses `args` (including the program name) and runs one subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Validate { input, strict } => cmd_validate(input, *strict, out),
        Command::Curvature { input, metric, target } => cmd_curvature(input, metric, target.as_deref(), out),
        Command::Flow(args) => cmd_run(args, false, out, err),
        Command::Solve(args) => cmd_run(args, true, out, err),
        Command::Regular { n, tol } => cmd_regular(*n, *tol, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
