use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fairshare::approx::optimal_theta;
use fairshare::certify::{certify_efs_delta, certify_sqrt_n, check_plane_lower_bound};
use fairshare::cover::cover_allocate;
use fairshare::experiment::{run_experiment, ExperimentConfig};
use fairshare::forge::{generate, load_csv, Family, GenSpec, DEFAULT_ITEM_BUDGET, DEFAULT_TOTAL};
use fairshare::lp::Mode;
use fairshare::model::{Instance, ShareKind};
use fairshare::num::{parse_rational, Rational};
use fairshare::shares::{all_shares, DeltaSpec};
use fairshare::Error;

const EXIT_INPUT: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(name = "fairshare", version, about = "Fair shares, optimal approximation and certificates for divisible goods")]
struct Cli {
    /// Seed for every randomized step (default 0; an experiment config's own seed otherwise).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// LP arithmetic. `experiment` defaults to float, everything else to exact.
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    /// Relative tolerance for float mode.
    #[arg(long, global = true, default_value_t = Mode::DEFAULT_TOLERANCE)]
    tolerance: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Float,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance CSV (plus a `.json` metadata sidecar when writing to a file).
    Gen(GenArgs),
    /// Compute a share vector.
    Shares(ShareArgs),
    /// Solve for the optimal simultaneous approximation θ of a share vector.
    Approx(ShareArgs),
    /// Run the random-instance θ experiment.
    Experiment(ExperimentArgs),
    /// Check a bound and exit with 3 on any violation.
    Certify {
        #[command(subcommand)]
        target: CertifyTarget,
    },
    /// Run the greedy cover allocation.
    Cover(CoverArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Uniform,
    Bernoulli,
    Intrinsic,
    Plane,
    EfsDeltaLb,
    Disjoint,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TOTAL)]
    total: u64,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha_max: f64,
    #[arg(long, default_value_t = 0.3)]
    beta_max: f64,
    /// Prime order of the projective plane.
    #[arg(long)]
    q: Option<usize>,
    #[arg(long, value_parser = rational)]
    delta: Option<Rational>,
    #[arg(long, default_value_t = DEFAULT_ITEM_BUDGET)]
    item_budget: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ShareArgs {
    instance: PathBuf,
    #[arg(long)]
    kind: ShareKind,
    #[arg(long, value_parser = rational)]
    delta: Option<Rational>,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment config.
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Overrides the number of generated instances.
    #[arg(long)]
    instances: Option<usize>,
    /// Per-row CSV; the summary goes to `<output>.summary.json` and stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write a plot-spec JSON (median and quartiles per series).
    #[arg(long)]
    plot_spec: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CertifyTarget {
    SqrtN {
        #[arg(long)]
        instance: PathBuf,
    },
    EfsDelta {
        #[arg(long)]
        instance: PathBuf,
        /// Size of each `Z_i`; the family is cyclic.
        #[arg(long)]
        z: usize,
    },
    Plane {
        #[arg(long)]
        q: usize,
    },
    Cover(CoverArgs),
}

#[derive(Args)]
struct CoverArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_parser = rational)]
    a: Option<Rational>,
    #[arg(long, value_parser = rational)]
    b: Option<Rational>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn rational(text: &str) -> Result<Rational, String> {
    parse_rational(text).ok_or_else(|| format!("not a rational number: {text:?}"))
}

enum Failure {
    Error(Error),
    Violation(String),
    PartialFailure(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Error(Error::Io(e))
    }
}

type Outcome = Result<(), Failure>;

fn writer(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<T: Serialize>(value: &T, path: Option<&Path>) -> Outcome {
    let mut out = writer(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(Error::from)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn require<T>(value: Option<T>, flag: &str, family: &str) -> Result<T, Error> {
    value.ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required for {family}")))
}

fn delta_spec(kind: ShareKind, delta: Option<Rational>, samples: usize, seed: u64) -> Result<Option<DeltaSpec>, Error> {
    match (kind, delta) {
        (ShareKind::EfsDelta, Some(d)) => Ok(Some(DeltaSpec::new(d, samples, seed)?)),
        (ShareKind::EfsDelta, None) => Err(Error::InvalidArgument("--delta is required for EFS_DELTA".into())),
        (_, Some(_)) => Err(Error::InvalidArgument("--delta only applies to EFS_DELTA".into())),
        (_, None) => Ok(None),
    }
}

fn cmd_gen(args: GenArgs, seed: u64) -> Outcome {
    let name = match args.family {
        FamilyArg::Uniform => "uniform",
        FamilyArg::Bernoulli => "bernoulli",
        FamilyArg::Intrinsic => "intrinsic",
        FamilyArg::Plane => "plane",
        FamilyArg::EfsDeltaLb => "efs-delta-lb",
        FamilyArg::Disjoint => "disjoint",
    };
    let family = match args.family {
        FamilyArg::Uniform => Family::UniformPartition {
            n: require(args.n, "n", name)?,
            m: require(args.m, "m", name)?,
            total: args.total,
        },
        FamilyArg::Bernoulli => Family::Bernoulli {
            n: require(args.n, "n", name)?,
            m: require(args.m, "m", name)?,
            p: args.p,
        },
        FamilyArg::Intrinsic => Family::IntrinsicValue {
            n: require(args.n, "n", name)?,
            m: require(args.m, "m", name)?,
            alpha_max: args.alpha_max,
            beta_max: args.beta_max,
        },
        FamilyArg::Plane => Family::ProjectivePlane { q: require(args.q, "q", name)? },
        FamilyArg::EfsDeltaLb => Family::EfsDeltaLb {
            n: require(args.n, "n", name)?,
            delta: require(args.delta, "delta", name)?,
            item_budget: args.item_budget,
        },
        FamilyArg::Disjoint => Family::Disjoint { n: require(args.n, "n", name)? },
    };
    let generated = generate(&GenSpec { family, seed })?;
    let mut out = writer(args.output.as_deref())?;
    generated.instance.write_csv(&mut out)?;
    out.flush()?;
    if let Some(path) = &args.output {
        emit(&generated.metadata, Some(&path.with_extension("json")))?;
    }
    Ok(())
}

fn load(path: &Path) -> Result<Instance, Error> {
    load_csv(path).map_err(|e| match e {
        Error::Io(io) => Error::InvalidArgument(format!("{}: {io}", path.display())),
        other => other,
    })
}

fn cmd_shares(args: ShareArgs, seed: u64, mode: Mode) -> Outcome {
    let inst = load(&args.instance)?;
    let spec = delta_spec(args.kind, args.delta, args.samples, seed)?;
    let shares = all_shares(&inst, args.kind, spec.as_ref(), mode)?;
    emit(&shares, args.output.as_deref())
}

fn cmd_approx(args: ShareArgs, seed: u64, mode: Mode) -> Outcome {
    let inst = load(&args.instance)?;
    let spec = delta_spec(args.kind, args.delta, args.samples, seed)?;
    let shares = all_shares(&inst, args.kind, spec.as_ref(), mode)?;
    let result = optimal_theta(&inst, &shares, mode)?;
    emit(&result, args.output.as_deref())
}

fn cmd_experiment(args: ExperimentArgs, seed: Option<u64>, mode: Mode) -> Outcome {
    let mut config = match (&args.config, &args.preset) {
        (Some(path), _) => serde_json::from_reader(File::open(path)?).map_err(Error::from)?,
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        (None, None) => ExperimentConfig::preset("uniform")?,
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(instances) = args.instances {
        config.instances = instances;
    }
    if args.output.is_some() {
        config.output = args.output.clone();
    }
    let result = run_experiment(&config, mode)?;
    for row in result.rows.iter().filter(|r| r.error.is_some()) {
        log::error!("instance {} {}: {}", row.instance, row.kind, row.error.as_deref().unwrap_or(""));
    }
    match &config.output {
        Some(path) => {
            result.write_csv(BufWriter::new(File::create(path)?))?;
            emit(&result.summary, Some(&path.with_extension("summary.json")))?;
            emit(&result.summary, None)?;
        }
        None => {
            result.write_csv(io::stdout().lock())?;
            eprintln!("{}", serde_json::to_string_pretty(&result.summary).map_err(Error::from)?);
        }
    }
    if let Some(path) = &args.plot_spec {
        emit(&result.plot_spec(), Some(path))?;
    }
    match result.failures() {
        0 => Ok(()),
        k => Err(Failure::PartialFailure(k)),
    }
}

fn verdict(passed: bool, what: &str) -> Outcome {
    if passed {
        Ok(())
    } else {
        Err(Failure::Violation(what.to_string()))
    }
}

fn cmd_certify(target: CertifyTarget, mode: Mode) -> Outcome {
    match target {
        CertifyTarget::SqrtN { instance } => {
            let report = certify_sqrt_n(&load(&instance)?, mode)?;
            emit(&report, None)?;
            verdict(report.passed, "sqrt-n certificate")
        }
        CertifyTarget::EfsDelta { instance, z } => {
            let report = certify_efs_delta(&load(&instance)?, z, None, mode)?;
            emit(&report, None)?;
            verdict(report.passed, "EFS-delta certificate")
        }
        CertifyTarget::Plane { q } => {
            let report = check_plane_lower_bound(q, mode)?;
            emit(&report, None)?;
            verdict(report.passed, "projective plane lower bound")
        }
        CertifyTarget::Cover(args) => {
            let report = cover_allocate(&load(&args.instance)?, args.a, args.b, mode)?;
            emit(&report.summary, args.output.as_deref())?;
            let s = &report.summary;
            verdict(s.supply_feasible && s.safe_bound_holds && s.bound_9m23_holds, "cover guarantee")
        }
    }
}

fn cmd_cover(args: CoverArgs, mode: Mode) -> Outcome {
    let report = cover_allocate(&load(&args.instance)?, args.a, args.b, mode)?;
    if !report.summary.bound_3m23_holds {
        log::warn!(
            "max ratio {} exceeds 3 m^(2/3) = {}",
            report.summary.max_ratio,
            report.summary.bound_3m23
        );
    }
    emit(&report, args.output.as_deref())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mode_for = |default: ModeArg| match cli.mode.unwrap_or(default) {
        ModeArg::Exact => Mode::Exact,
        ModeArg::Float => Mode::Float { tolerance: cli.tolerance },
    };
    let seed = cli.seed.unwrap_or(0);
    let outcome = match cli.command {
        Command::Gen(args) => cmd_gen(args, seed),
        Command::Shares(args) => cmd_shares(args, seed, mode_for(ModeArg::Exact)),
        Command::Approx(args) => cmd_approx(args, seed, mode_for(ModeArg::Exact)),
        Command::Experiment(args) => cmd_experiment(args, cli.seed, mode_for(ModeArg::Float)),
        Command::Certify { target } => cmd_certify(target, mode_for(ModeArg::Exact)),
        Command::Cover(args) => cmd_cover(args, mode_for(ModeArg::Exact)),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { EXIT_INPUT } else { EXIT_SOLVER })
        }
        Err(Failure::Violation(what)) => {
            eprintln!("violation: {what} failed");
            ExitCode::from(EXIT_VIOLATION)
        }
        Err(Failure::PartialFailure(k)) => {
            eprintln!("error: {k} experiment rows failed");
            ExitCode::from(EXIT_SOLVER)
        }
    }
}
