mod render;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use perron_core::counterexample::verify_counterexample;
use perron_core::decay::{decay_rate_bounds, effective_decay_rate, ModulatedSource};
use perron_core::kernel::{matrix_to_csv, parse_kernel};
use perron_core::nystrom::study_to_csv;
use perron_core::{
    convergence_study, discretize, fubini_trend, make_uniform_grid, perron_bounds,
    perron_bounds_density, perron_pair, refine_bounds, scaled_power, BoundsReport,
    DensityBoundsOptions, DensityKernel, Error, IteratedQuadrature, KernelInput, MassAggregation,
    MatrixKernel, QuadratureGrid, QuadratureRule, StudyQuantity,
};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "perron",
    version,
    about = "Two-sided Perron-root bounds for non-negative kernels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
    /// Matrices and convergence studies only.
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Bounds on the Perron root of K from one test kernel L.
    Bounds(BoundsArgs),
    /// Bounds with L = K^m for m = 0..=m_max.
    Refine(RefineArgs),
    /// Perron root and eigenvectors by power iteration.
    Oracle(OracleArgs),
    /// Nyström matrix of a density kernel, or a study over several grid sizes.
    Discretize(DiscretizeArgs),
    /// Numeric run of the counterexample that needs absolute integrability.
    Counterexample(CounterexampleArgs),
    /// Effective decay rate of a Markov-modulated source.
    DecayRate(DecayArgs),
    /// Absolute product mass of two density kernels over refining grids.
    CheckFubini(FubiniArgs),
}

#[derive(Args)]
struct GridArgs {
    /// Grid size used for density kernels.
    #[arg(long, default_value_t = 200, value_parser = at_least_two)]
    grid_n: usize,

    #[arg(long, default_value = "midpoint")]
    rule: QuadratureRule,
}

#[derive(Args)]
struct BoundsArgs {
    /// Matrix CSV, matrix JSON, or density spec JSON.
    #[arg(long)]
    kernel: PathBuf,

    /// `identity`, `power:m`, or `file:PATH`.
    #[arg(long, default_value = "identity")]
    test_kernel: TestKernel,

    #[command(flatten)]
    grid: GridArgs,

    /// Inner quadrature panels per piece when both kernels are densities.
    #[arg(long, default_value_t = 4096, value_parser = positive_usize)]
    panels: usize,

    /// Report bounds even if the absolute product mass looks divergent.
    #[arg(long)]
    allow_fubini_violation: bool,

    #[arg(long)]
    no_fubini_check: bool,
}

#[derive(Args)]
struct RefineArgs {
    #[arg(long)]
    kernel: PathBuf,

    #[arg(long, default_value_t = 20, value_parser = positive_usize)]
    m_max: usize,

    /// Stop once the width is at most tol * max(1, upper).
    #[arg(long, default_value_t = 1e-12, value_parser = positive_f64)]
    tol: f64,

    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    kernel: PathBuf,

    #[arg(long, default_value_t = 1e-12, value_parser = positive_f64)]
    tol: f64,

    #[arg(long, default_value_t = 100_000, value_parser = positive_usize)]
    max_iter: usize,

    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args)]
struct DiscretizeArgs {
    /// Density spec JSON.
    #[arg(long)]
    kernel: PathBuf,

    #[command(flatten)]
    grid: GridArgs,

    /// Run a convergence study on these midpoint grid sizes instead.
    #[arg(long, value_delimiter = ',', value_parser = at_least_two)]
    sizes: Option<Vec<usize>>,

    /// `rho`, `lower`, `upper` or `abs-mass`.
    #[arg(long, default_value = "rho")]
    quantity: StudyQuantity,
}

#[derive(Args)]
struct CounterexampleArgs {
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000", value_parser = positive_usize)]
    sizes: Vec<usize>,
}

#[derive(Args)]
struct DecayArgs {
    /// `{"P": [[...]], "s": [...]}`
    #[arg(long)]
    source: PathBuf,

    #[arg(long, default_value_t = 1e-10, value_parser = positive_f64)]
    tol: f64,

    /// Defaults to 50 / max |s|.
    #[arg(long, value_parser = positive_f64)]
    theta_max: Option<f64>,

    /// Only bound rho(K_theta) at this theta, with L = K_theta^m.
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,

    #[arg(long, default_value_t = 8, requires = "theta")]
    m: usize,
}

#[derive(Args)]
struct FubiniArgs {
    /// Density spec for F.
    #[arg(long)]
    kernel: PathBuf,

    /// Density spec for G.
    #[arg(long)]
    test_kernel: PathBuf,

    #[arg(long, value_delimiter = ',', default_value = "10,100,1000", value_parser = at_least_two)]
    sizes: Vec<usize>,

    #[arg(long, value_enum, default_value_t = Aggregation::Sup)]
    aggregation: Aggregation,
}

#[derive(Clone, Copy, ValueEnum)]
enum Aggregation {
    Sup,
    Total,
}

#[derive(Clone)]
enum TestKernel {
    Identity,
    Power(usize),
    File(PathBuf),
}

impl FromStr for TestKernel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "identity" {
            Ok(Self::Identity)
        } else if let Some(m) = s.strip_prefix("power:") {
            m.parse()
                .map(Self::Power)
                .map_err(|_| format!("bad power `{m}`"))
        } else if let Some(p) = s.strip_prefix("file:") {
            Ok(Self::File(PathBuf::from(p)))
        } else {
            Err(format!(
                "expected identity, power:m or file:PATH, got `{s}`"
            ))
        }
    }
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("`{s}` is not a positive integer")),
    }
}

fn at_least_two(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 2 => Ok(v),
        _ => Err(format!("`{s}` is not an integer >= 2")),
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

enum Failure {
    Core(Error),
    Io(PathBuf, std::io::Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Io(..) | Failure::Usage(_) => 1,
            Failure::Core(e) => match e {
                Error::InvalidArgument(_) => 1,
                Error::HypothesisViolation(_)
                | Error::Domain(_)
                | Error::DegenerateMeasure(_)
                | Error::Evaluation(_)
                | Error::Unstable { .. } => 2,
                Error::NoConvergence { .. }
                | Error::NoRoot(_)
                | Error::VerificationFailure { .. }
                | Error::Range(_) => 3,
            },
        }
    }

    fn message(&self) -> String {
        let text = match self {
            Failure::Core(e) => e.to_string(),
            Failure::Io(path, e) => format!("io error: {}: {e}", path.display()),
            Failure::Usage(msg) => format!("invalid argument: {msg}"),
        };
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

type Outcome<T> = Result<T, Failure>;

/// A finished report in every format it supports.
struct Report {
    value: serde_json::Value,
    csv: Option<String>,
}

impl Report {
    fn new(data: &impl Serialize) -> Self {
        Self {
            value: serde_json::to_value(data).expect("reports serialize"),
            csv: None,
        }
    }

    fn with_csv(mut self, csv: String) -> Self {
        self.csv = Some(csv);
        self
    }
}

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn load_kernel(path: &Path) -> Outcome<KernelInput> {
    Ok(parse_kernel(&read(path)?)?)
}

fn grid_for(kernel: &DensityKernel, grid: &GridArgs) -> Outcome<QuadratureGrid> {
    Ok(make_uniform_grid(kernel.domain(), grid.grid_n, grid.rule)?)
}

/// Matrices pass through; densities become their Nyström matrix.
fn as_matrix(
    input: KernelInput,
    grid: &GridArgs,
    notes: &mut Vec<String>,
) -> Outcome<MatrixKernel> {
    match input {
        KernelInput::Matrix(k) => Ok(k),
        KernelInput::Density { kernel, .. } => {
            notes.push(format!(
                "{} discretized on {} {} nodes",
                kernel.label(),
                grid.grid_n,
                grid.rule
            ));
            Ok(discretize(&kernel, &grid_for(&kernel, grid)?)?.into_matrix())
        }
    }
}

fn bounds(args: &BoundsArgs) -> Outcome<Report> {
    let k = load_kernel(&args.kernel)?;
    if let (KernelInput::Density { kernel: kd, .. }, TestKernel::File(path)) =
        (&k, &args.test_kernel)
    {
        if let KernelInput::Density { kernel: ld, .. } = load_kernel(path)? {
            let options = DensityBoundsOptions {
                inner: IteratedQuadrature::new(args.panels)?,
                fubini_check: !args.no_fubini_check,
                allow_fubini_violation: args.allow_fubini_violation,
                ..Default::default()
            };
            let out = perron_bounds_density(kd, &ld, &grid_for(kd, &args.grid)?, &options)?;
            return Ok(Report::new(&out.report));
        }
    }
    let mut notes = Vec::new();
    let k = as_matrix(k, &args.grid, &mut notes)?;
    let (l, m) = match &args.test_kernel {
        TestKernel::Identity => (MatrixKernel::identity(k.n()), 0),
        TestKernel::Power(m) => (scaled_power(&k, *m)?, *m),
        TestKernel::File(path) => (as_matrix(load_kernel(path)?, &args.grid, &mut notes)?, 0),
    };
    let mut report = perron_bounds(&k, &l)?;
    report.m = m;
    notes.append(&mut report.notes);
    report.notes = notes;
    Ok(Report::new(&report))
}

#[derive(Serialize)]
struct RefineReport {
    tol: f64,
    reports: Vec<BoundsReport>,
}

fn refine(args: &RefineArgs) -> Outcome<Report> {
    let mut notes = Vec::new();
    let k = as_matrix(load_kernel(&args.kernel)?, &args.grid, &mut notes)?;
    let mut reports = refine_bounds(&k, args.m_max, args.tol)?;
    if let Some(first) = reports.first_mut() {
        first.notes.splice(0..0, notes);
    }
    Ok(Report::new(&RefineReport {
        tol: args.tol,
        reports,
    }))
}

fn oracle(args: &OracleArgs) -> Outcome<Report> {
    let mut notes = Vec::new();
    let k = as_matrix(load_kernel(&args.kernel)?, &args.grid, &mut notes)?;
    let mut pair = perron_pair(&k, args.tol, args.max_iter)?;
    pair.notes.splice(0..0, notes);
    Ok(Report::new(&pair))
}

fn discretize_cmd(args: &DiscretizeArgs) -> Outcome<Report> {
    let KernelInput::Density { kernel, .. } = load_kernel(&args.kernel)? else {
        return Err(Failure::Usage("discretize needs a density spec".into()));
    };
    if let Some(sizes) = &args.sizes {
        let rows = convergence_study(&kernel, sizes, args.quantity)?;
        return Ok(Report::new(&rows).with_csv(study_to_csv(&rows)));
    }
    let matrix = discretize(&kernel, &grid_for(&kernel, &args.grid)?)?.into_matrix();
    Ok(Report::new(&matrix).with_csv(matrix_to_csv(&matrix)))
}

fn decay_rate(args: &DecayArgs) -> Outcome<Report> {
    let src = ModulatedSource::from_json(&read(&args.source)?)?;
    match args.theta {
        Some(theta) => Ok(Report::new(&decay_rate_bounds(&src, theta, args.m)?)),
        None => Ok(Report::new(&effective_decay_rate(
            &src,
            args.tol,
            args.theta_max,
        )?)),
    }
}

fn density(path: &Path) -> Outcome<DensityKernel> {
    match load_kernel(path)? {
        KernelInput::Density { kernel, .. } => Ok(kernel),
        KernelInput::Matrix(_) => Err(Failure::Usage(format!(
            "{} is not a density spec",
            path.display()
        ))),
    }
}

fn check_fubini(args: &FubiniArgs) -> Outcome<Report> {
    let aggregation = match args.aggregation {
        Aggregation::Sup => MassAggregation::SupOverX,
        Aggregation::Total => MassAggregation::Total,
    };
    let trend = fubini_trend(
        &density(&args.kernel)?,
        &density(&args.test_kernel)?,
        &args.sizes,
        aggregation,
    )?;
    Ok(Report::new(&trend))
}

fn run(cli: &Cli) -> Outcome<Report> {
    match &cli.command {
        Command::Bounds(a) => bounds(a),
        Command::Refine(a) => refine(a),
        Command::Oracle(a) => oracle(a),
        Command::Discretize(a) => discretize_cmd(a),
        Command::Counterexample(a) => Ok(Report::new(&verify_counterexample(&a.sizes)?)),
        Command::DecayRate(a) => decay_rate(a),
        Command::CheckFubini(a) => check_fubini(a),
    }
}

fn render(report: Report, format: Format) -> Outcome<String> {
    match format {
        Format::Json => {
            let mut text =
                serde_json::to_string_pretty(&report.value).expect("json values serialize");
            text.push('\n');
            Ok(text)
        }
        Format::Table => Ok(render::table(&report.value)),
        Format::Csv => report
            .csv
            .ok_or_else(|| Failure::Usage("csv output is only available for discretize".into())),
    }
}

fn emit(text: &str, output: Option<&Path>) -> Outcome<()> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(path.to_path_buf(), e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Io(PathBuf::from("<stdout>"), e))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text
                .lines()
                .next()
                .unwrap_or("bad arguments")
                .trim_start_matches("error: ");
            eprintln!("{}", Failure::Usage(first.to_string()).message());
            return ExitCode::from(1);
        }
    };
    let result = run(&cli)
        .and_then(|report| render(report, cli.format))
        .and_then(|text| emit(&text, cli.output.as_deref()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}
