use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use digitmeasure::experiments::{normal_number_demo, run_campaign, CampaignConfig};
use digitmeasure::measure::{interval_measure_enclosure, interval_measure_with_ends};
use digitmeasure::normality::{build_report, is_eps_normal};
use digitmeasure::{parse_rational, point_measure, Base, DigitDistribution, DigitStream, FiniteExpansion, Rational};

mod source;

use source::SourceSpec;

#[derive(Debug, Parser)]
#[command(name = "digitmeasure", version, about = "Exact digit-sequence measures and normality statistics")]
struct Cli {
    /// Digit base (default 10, or the base of the distribution file when one is given)
    #[arg(long, global = true)]
    base: Option<u32>,

    /// Suppress explanatory output and tables
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact measure of a closed interval or a point
    Measure(MeasureArgs),
    /// Print digits from a source
    Digits(DigitsArgs),
    /// Word-frequency report against a target distribution
    Normality(NormalityArgs),
    /// Seeded Monte Carlo campaign over sampled sequences
    Montecarlo(MonteCarloArgs),
    /// Sample a number and classify its canonical digits
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
struct MeasureArgs {
    /// Distribution file
    #[arg(long)]
    dist: PathBuf,
    /// Endpoints as n/d, an integer, or 0.<digits>
    #[arg(long, num_args = 2, value_names = ["A", "B"], conflicts_with = "point")]
    interval: Option<Vec<String>>,
    /// Point mass at x (n/d or 0.<digits>)
    #[arg(long)]
    point: Option<String>,
    /// Exclude the left endpoint
    #[arg(long, requires = "interval")]
    open_left: bool,
    /// Exclude the right endpoint
    #[arg(long, requires = "interval")]
    open_right: bool,
    /// For endpoints without a finite expansion, print bounds from truncation at this depth
    #[arg(long)]
    depth: Option<usize>,
    /// Append a k-digit truncated decimal approximation
    #[arg(long, value_name = "K")]
    decimal: Option<usize>,
}

#[derive(Debug, Args)]
struct DigitsArgs {
    /// rational:<n/d> | sqrt:<m> | sample:<distfile>:<seed> | steinhaus:<a> | file:<path>
    #[arg(long)]
    source: SourceSpec,
    #[arg(long)]
    count: u64,
}

#[derive(Debug, Args)]
struct NormalityArgs {
    #[arg(long)]
    source: SourceSpec,
    /// Target distribution file
    #[arg(long)]
    dist: PathBuf,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 1)]
    maxk: usize,
    #[arg(long, value_parser = rational_arg)]
    epsilon: Rational,
}

#[derive(Debug, Args)]
struct MonteCarloArgs {
    #[arg(long)]
    dist: PathBuf,
    #[arg(long)]
    m: u64,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 1)]
    maxk: usize,
    #[arg(long, value_parser = rational_arg)]
    epsilon: Rational,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the result file here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DemoArgs {
    #[arg(long)]
    dist: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    n: u64,
    #[arg(long, default_value_t = 2)]
    maxk: usize,
    #[arg(long, value_parser = rational_arg, default_value = "1/100")]
    epsilon: Rational,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(String),
}

impl From<digitmeasure::Error> for Failure {
    fn from(e: digitmeasure::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli, &mut std::io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn io(e: std::io::Error) -> Failure {
    Failure::Domain(format!("write failed: {e}"))
}

fn load_dist(path: &PathBuf, base: Option<u32>) -> CliResult<DigitDistribution> {
    let dist = DigitDistribution::from_file(path)?;
    if let Some(b) = base {
        Base::new(b as u64)?.ensure_same(dist.base())?;
    }
    Ok(dist)
}

fn resolve_base(flag: Option<u32>, fallback: Option<Base>) -> CliResult<Base> {
    match (flag, fallback) {
        (Some(b), _) => Ok(Base::new(b as u64)?),
        (None, Some(b)) => Ok(b),
        (None, None) => Ok(Base::TEN),
    }
}

fn run(cli: &Cli, out: &mut impl Write) -> CliResult {
    match &cli.command {
        Command::Measure(args) => measure(cli, args, out),
        Command::Digits(args) => digits(cli, args, out),
        Command::Normality(args) => normality(cli, args, out),
        Command::Montecarlo(args) => montecarlo(args, cli, out),
        Command::Demo(args) => demo(cli, args, out),
    }
}

fn with_decimal(x: &Rational, places: Option<usize>) -> String {
    match places {
        None => x.to_string(),
        Some(k) => format!("{x}\tapprox {} (truncated, not exact)", truncated_decimal(x, k)),
    }
}

fn truncated_decimal(x: &Rational, places: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10u32), places);
    let scaled = (x.numer() * &scale).div_floor(x.denom());
    let (int, frac) = scaled.div_mod_floor(&scale);
    if places == 0 {
        return int.to_string();
    }
    let sign = if x.is_negative() && int.is_zero() { "-" } else { "" };
    format!("{sign}{int}.{:0>places$}", frac.to_string())
}

fn parse_point(s: &str, base: Base) -> CliResult<Rational> {
    let s = s.trim();
    if s.starts_with("0.") {
        Ok(FiniteExpansion::parse(s, base)?.value())
    } else {
        Ok(parse_rational(s)?)
    }
}

fn measure(cli: &Cli, args: &MeasureArgs, out: &mut impl Write) -> CliResult {
    let dist = load_dist(&args.dist, cli.base)?;
    let base = dist.base();
    if let Some(p) = &args.point {
        let x = parse_point(p, base)?;
        let m = point_measure(&x, &dist)?;
        writeln!(out, "{}", with_decimal(&m, args.decimal)).map_err(io)?;
        return Ok(());
    }
    let Some(ends) = &args.interval else {
        return Err(Failure::Usage("measure needs --interval <a> <b> or --point <x>".into()));
    };
    let finite = |s: &str| FiniteExpansion::parse(s, base);
    match (finite(&ends[0]), finite(&ends[1])) {
        (Ok(a), Ok(b)) => {
            let m = interval_measure_with_ends(&a, &b, !args.open_left, !args.open_right, &dist)?;
            writeln!(out, "{}", with_decimal(&m, args.decimal)).map_err(io)?;
        }
        (Err(digitmeasure::Error::NotFiniteExpansion(..)), _) | (_, Err(digitmeasure::Error::NotFiniteExpansion(..))) => {
            let Some(depth) = args.depth else {
                return Err(Failure::Domain(format!(
                    "endpoint without a finite base-{base} expansion; pass --depth <n> for bounds"
                )));
            };
            if args.open_left || args.open_right {
                return Err(Failure::Usage("--open-left/--open-right need finite-expansion endpoints".into()));
            }
            let a = parse_point(&ends[0], base)?;
            let b = parse_point(&ends[1], base)?;
            let (lo, hi) = interval_measure_enclosure(&a, &b, depth, &dist)?;
            writeln!(out, "lower {}", with_decimal(&lo, args.decimal)).map_err(io)?;
            writeln!(out, "upper {}", with_decimal(&hi, args.decimal)).map_err(io)?;
        }
        (Err(e), _) | (_, Err(e)) => return Err(e.into()),
    }
    Ok(())
}

fn write_digits(out: &mut impl Write, base: Base, digits: &[u32]) -> CliResult {
    for line in digits.chunks(80) {
        let text = if base.get() <= 10 {
            line.iter().map(|d| char::from_digit(*d, 10).expect("digit")).collect::<String>()
        } else {
            line.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")
        };
        writeln!(out, "{text}").map_err(io)?;
    }
    Ok(())
}

fn digits(cli: &Cli, args: &DigitsArgs, out: &mut impl Write) -> CliResult {
    let base = resolve_base(cli.base, args.source.natural_base()?)?;
    let mut stream = args.source.open(base)?;
    let digits = stream.take_digits(args.count)?;
    if !cli.quiet {
        eprintln!("# {}", stream.description());
    }
    write_digits(out, base, &digits)
}

fn normality(cli: &Cli, args: &NormalityArgs, out: &mut impl Write) -> CliResult {
    let target = load_dist(&args.dist, cli.base)?;
    let base = target.base();
    let mut stream = args.source.open(base)?;
    let report = build_report(&mut stream, args.n, args.maxk, &target)?;
    let verdict = is_eps_normal(&report, &args.epsilon)?;
    if !cli.quiet {
        writeln!(out, "# source: {}", stream.description()).map_err(io)?;
        writeln!(out, "# n={} maxk={} epsilon={}", args.n, args.maxk, args.epsilon).map_err(io)?;
    }
    write!(out, "{}", report.to_tsv(!cli.quiet)).map_err(io)?;
    writeln!(out, "{verdict}").map_err(io)?;
    Ok(())
}

fn montecarlo(args: &MonteCarloArgs, cli: &Cli, out: &mut impl Write) -> CliResult {
    let dist = load_dist(&args.dist, cli.base)?;
    let config = CampaignConfig {
        dist,
        samples: args.m,
        length: args.n,
        max_len: args.maxk,
        epsilon: args.epsilon.clone(),
        seed: args.seed,
    };
    let result = run_campaign(&config)?;
    let text = result.to_string();
    match &args.out {
        Some(path) => {
            std::fs::write(path, &text)
                .map_err(|e| Failure::Domain(format!("cannot write {}: {e}", path.display())))?;
            writeln!(out, "fraction: {}/{}", result.normal_count(), config.samples).map_err(io)?;
        }
        None => write!(out, "{text}").map_err(io)?,
    }
    Ok(())
}

fn demo(cli: &Cli, args: &DemoArgs, out: &mut impl Write) -> CliResult {
    let dist = load_dist(&args.dist, cli.base)?;
    let outcome = normal_number_demo(&dist, args.n, args.maxk, &args.epsilon, args.seed)?;
    if cli.quiet {
        let last = outcome.text.lines().last().unwrap_or_default();
        writeln!(out, "{last}").map_err(io)?;
    } else {
        write!(out, "{}", outcome.text).map_err(io)?;
    }
    writeln!(out, "{}", outcome.verdict).map_err(io)?;
    Ok(())
}
