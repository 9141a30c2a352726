//! Batch command-line front end.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::harness::{
    bench_throughput, build_summary, equivalence_test, run_experiment, write_bench_csv, write_experiment_csv, Dyadic,
    ExperimentConfig, Path, SIGNIFICANCE,
};
use crate::noise::NoiseSpec;
use crate::query::{answer, parse_queries, relative_error, write_report, Mode};
use crate::rng::RngHandle;
use crate::summarize::{method_for_target, read_summary, write_summary, Method, MethodSpec, Sided, Tuning};
use crate::table::{read_table, synth_table, DomainSpec, ExperimentProfile, Placement, SparseTable};

const DEFAULT_SEED: u64 = 0x5EED;

/// `--seed`: a number, or `random` for operating-system entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedArg {
    Fixed(u64),
    Random,
}

impl std::str::FromStr for SeedArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "random" {
            return Ok(SeedArg::Random);
        }
        s.parse().map(SeedArg::Fixed).map_err(|_| format!("expected an integer or `random`, got {s:?}"))
    }
}

impl std::fmt::Display for SeedArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeedArg::Fixed(s) => write!(f, "{s}"),
            SeedArg::Random => f.write_str("random"),
        }
    }
}

impl SeedArg {
    fn rng(self) -> RngHandle {
        match self {
            SeedArg::Fixed(s) => RngHandle::new(s),
            SeedArg::Random => RngHandle::from_entropy(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sparsedp", version, about = "Differentially private summaries of sparse count tables")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Release a private summary of a count table.
    Anonymize(AnonymizeArgs),
    /// Answer point, range and subset queries from a summary.
    Query(QueryArgs),
    /// Check that shortcut and dense paths agree in distribution.
    Verify(VerifyArgs),
    /// Measure summarizer throughput.
    Bench(BenchArgs),
    /// Write a synthetic table.
    Synth(SynthArgs),
    /// Run an accuracy experiment from a key=value config file.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Args)]
pub struct MethodArgs {
    /// filter1, filter2, threshold, filter-threshold, priority, filter-priority or geometric-full.
    #[arg(long)]
    pub method: Method,
    #[arg(long)]
    pub theta: Option<u64>,
    #[arg(long, conflicts_with = "target_size")]
    pub tau: Option<u64>,
    /// Priority sample size.
    #[arg(long, conflicts_with = "target_size")]
    pub size: Option<usize>,
    /// Pick parameters automatically for about this many output cells.
    #[arg(long)]
    pub target_size: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AnonymizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Domain size; read from the input header when omitted.
    #[arg(long)]
    pub m: Option<u64>,
    /// Per-attribute cardinalities, comma separated, for multi-column input.
    #[arg(long, value_delimiter = ',', conflicts_with = "m")]
    pub cardinalities: Option<Vec<u64>>,
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, default_value_t = SeedArg::Fixed(DEFAULT_SEED))]
    pub seed: SeedArg,
    /// Summarize the dyadic range tree instead of the cells.
    #[arg(long)]
    pub dyadic: bool,
    /// Drop nodes whose ancestors were filtered out (filter methods, dyadic only).
    #[arg(long, requires = "dyadic")]
    pub consistency: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write `<out>.origin.csv` marking which entries came from zero cells.
    #[cfg(feature = "debug-origin")]
    #[arg(long)]
    pub debug_origin: bool,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub summary: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    /// adjusted, unadjusted, clamped, or half-theta (filter summaries).
    #[arg(long, default_value = "adjusted")]
    pub mode: Mode,
    /// True table; adds truth and error columns to the report.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Report path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long, default_value_t = 4096)]
    pub m: u64,
    #[arg(long, default_value_t = 128)]
    pub n: u64,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 20_000)]
    pub trials: usize,
    #[arg(long, default_value_t = SeedArg::Fixed(DEFAULT_SEED))]
    pub seed: SeedArg,
    /// Scale the shortcut's zero-cell inclusion rate to check test power.
    #[arg(long, default_value_t = 1.0, hide = true)]
    pub mutate: f64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Methods as `name:key=value,...`, separated by `;`.
    #[arg(long, value_delimiter = ';', default_value = "filter2:theta=40;threshold:tau=100;priority:s=10000")]
    pub methods: Vec<MethodSpec>,
    #[arg(long, value_delimiter = ',', default_value = "1000000,10000000")]
    pub m: Vec<u64>,
    #[arg(long, default_value_t = 10_000)]
    pub n: u64,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    /// Time the dense path too.
    #[arg(long)]
    pub laborious: bool,
    #[arg(long, default_value_t = SeedArg::Fixed(DEFAULT_SEED))]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub m: u64,
    #[arg(long, default_value_t = 0.1)]
    pub density: f64,
    #[arg(long, default_value_t = 100.0)]
    pub mean: f64,
    #[arg(long, default_value_t = 20.0)]
    pub std_dev: f64,
    #[arg(long, default_value = "uniform")]
    pub placement: Placement,
    #[arg(long, default_value_t = SeedArg::Fixed(DEFAULT_SEED))]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `output` in the config; standard output when neither is set.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failure classified by exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.into())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn with_path(path: &FsPath, e: io::Error) -> Failure {
    Failure::Data(io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

fn open(path: &FsPath) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| with_path(path, e))
}

fn create(path: &FsPath) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| with_path(path, e))
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn resolve_method(args: &MethodArgs, table: &SparseTable, spec: &NoiseSpec) -> Result<MethodSpec, Failure> {
    if let Some(t) = args.target_size {
        return Ok(method_for_target(args.method, table, t, spec, args.theta)?);
    }
    let need = |v: Option<u64>, flag: &str| {
        v.ok_or_else(|| usage(format!("{} needs --{flag} or --target-size", args.method)))
    };
    let size = || need(args.size.map(|s| s as u64), "size").map(|s| s as usize);
    Ok(match args.method {
        Method::Filter1 => MethodSpec::Filter { theta: need(args.theta, "theta")?, sided: Sided::One },
        Method::Filter2 => MethodSpec::Filter { theta: need(args.theta, "theta")?, sided: Sided::Two },
        Method::Threshold => MethodSpec::Threshold { tau: need(args.tau, "tau")? },
        Method::FilterThreshold => {
            MethodSpec::FilterThreshold { theta: need(args.theta, "theta")?, tau: need(args.tau, "tau")? }
        }
        Method::Priority => MethodSpec::Priority { size: size()? },
        Method::FilterPriority => MethodSpec::FilterPriority { theta: need(args.theta, "theta")?, size: size()? },
        Method::GeometricFull => MethodSpec::GeometricFull,
    })
}

fn anonymize(args: &AnonymizeArgs) -> Result<(), Failure> {
    if !(args.epsilon > 0.0) {
        return Err(usage("--epsilon must be positive"));
    }
    let domain = match (&args.m, &args.cardinalities) {
        (Some(m), _) => Some(DomainSpec::flat(*m)?),
        (None, Some(c)) => Some(DomainSpec::new(c.clone())?),
        (None, None) => None,
    };
    let table = read_table(open(&args.input)?, domain)?;
    let spec = NoiseSpec::with_epsilon(args.epsilon)?;
    let method = resolve_method(&args.method, &table, &spec)?;
    if args.consistency && !method.method().is_filter() && !matches!(method, MethodSpec::FilterPriority { .. }) {
        return Err(usage(format!("--consistency needs a filter-based method, not {}", method.method())));
    }
    let mut rng = args.seed.rng();
    let dyadic = Dyadic { enabled: args.dyadic, consistency: args.consistency };
    let mut summary = build_summary(&table, &method, &spec, dyadic, &mut rng)?;
    summary.seed = Some(rng.seed());
    let mut out = create(&args.out)?;
    write_summary(&summary, &mut out)?;
    out.flush()?;
    #[cfg(feature = "debug-origin")]
    if args.debug_origin {
        let mut path = args.out.clone().into_os_string();
        path.push(".origin.csv");
        let mut o = create(FsPath::new(&path))?;
        crate::harness::write_origin(&table, &summary, &mut o)?;
        o.flush()?;
    }
    Ok(())
}

fn query(args: &QueryArgs) -> Result<(), Failure> {
    let summary = read_summary(open(&args.summary)?)?;
    let queries = parse_queries(open(&args.queries)?, args.mode)?;
    let mut out = output(args.out.as_ref())?;
    match &args.truth {
        Some(path) => {
            let truth = read_table(open(path)?, Some(DomainSpec::flat(summary.m)?))?;
            let report = relative_error(&truth, &summary, &queries)?;
            write_report(&mut out, &[], Some(&report.per_query))?;
        }
        None => {
            let est = queries.iter().map(|q| answer(&summary, q)).collect::<Result<Vec<_>>>()?;
            write_report(&mut out, &est, None)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn verify(args: &VerifyArgs) -> Result<bool, Failure> {
    if args.method.method == Method::GeometricFull {
        return Err(usage("geometric-full has no shortcut to verify"));
    }
    if args.n == 0 || args.n >= args.m {
        return Err(usage("--n must satisfy 1 <= n < m"));
    }
    let profile = ExperimentProfile {
        m: args.m,
        density: args.n as f64 / args.m as f64,
        mean: 10.0,
        std_dev: 3.0,
        placement: Placement::Uniform,
        seed: 0,
    };
    let seed = match args.seed {
        SeedArg::Fixed(s) => s,
        SeedArg::Random => RngHandle::from_entropy().seed(),
    };
    let rng = RngHandle::new(seed);
    let table = synth_table(&profile, &mut rng.stream("table"))?;
    let spec = NoiseSpec::with_epsilon(args.epsilon)?;
    let mut margs = args.method.clone();
    if margs.target_size.is_none() {
        margs.theta = margs.theta.or(Some(3));
        margs.tau = margs.tau.or(Some(5));
        margs.size = margs.size.or(Some(64));
    }
    let method = resolve_method(&margs, &table, &spec)?;
    let tuning = Tuning { zero_rate_scale: args.mutate, ..Default::default() };
    let report = equivalence_test(&table, &method, &spec, args.trials, seed, &tuning)?;
    let mut out = io::stdout().lock();
    writeln!(out, "method {method}, m {}, n {}, trials {}", args.m, table.n(), report.trials)?;
    for (name, p) in report.p_values() {
        writeln!(out, "{name:>16}  p = {p:.6}")?;
    }
    writeln!(out, "{:>16}  {:.6} ({:.2} se)", "max inclusion dev", report.inclusion_max_deviation, report.inclusion_max_z)?;
    let ok = report.passes(SIGNIFICANCE);
    writeln!(out, "{}", if ok { "PASS" } else { "FAIL" })?;
    Ok(ok)
}

fn bench(args: &BenchArgs) -> Result<(), Failure> {
    let spec = NoiseSpec::with_epsilon(args.epsilon)?;
    let paths: &[Path] = if args.laborious { &[Path::Shortcut, Path::Laborious] } else { &[Path::Shortcut] };
    let seed = args.seed.rng().seed();
    let reports = bench_throughput(&args.methods, &args.m, args.n, &spec, paths, args.reps, seed)?;
    let mut out = output(args.out.as_ref())?;
    write_bench_csv(&mut out, &reports)?;
    out.flush()?;
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<(), Failure> {
    let mut rng = args.seed.rng();
    let profile = ExperimentProfile {
        m: args.m,
        density: args.density,
        mean: args.mean,
        std_dev: args.std_dev,
        placement: args.placement,
        seed: rng.seed(),
    };
    let table = synth_table(&profile, &mut rng)?;
    let mut out = create(&args.out)?;
    table.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn experiment(args: &ExperimentArgs) -> Result<(), Failure> {
    let config = ExperimentConfig::parse(open(&args.config)?)?;
    let rows = run_experiment(&config)?;
    let target = args.out.clone().or_else(|| config.output.as_ref().map(PathBuf::from));
    let mut out = output(target.as_ref())?;
    write_experiment_csv(&mut out, &rows)?;
    out.flush()?;
    Ok(())
}

/// Runs a parsed command line and returns the process exit code:
/// 0 on success, 1 on data errors or a failed verification, 2 on usage errors.
pub fn dispatch(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Anonymize(a) => anonymize(a).map(|_| true),
        Command::Query(a) => query(a).map(|_| true),
        Command::Verify(a) => verify(a),
        Command::Bench(a) => bench(a).map(|_| true),
        Command::Synth(a) => synth(a).map(|_| true),
        Command::Experiment(a) => experiment(a).map(|_| true),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Data(Error::InvalidParameter(msg))) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Parses `args` and runs them. Clap handles `--help` and malformed
/// flags itself, exiting with 0 or 2.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => dispatch(&cli),
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            code
        }
    }
}
