use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mapprior::cli_io::{
    common_median_comparison, fmt_sig, load_studies_csv, parse_ratio_ci, render_tsv,
    run_map_report_with, table2_command, write_grid, EffectScale, GridSource, ReportOptions,
    StudyRow, DEFAULT_DIGITS,
};
use mapprior::{
    shrinkage_posterior, uisd, Error, HeterogeneityPrior, MapPrior, PowerPriorMap, Result,
    StudyEstimate,
};

#[derive(Parser)]
#[command(name = "mapprior", version, about = "MAP priors from a single external study")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report the MAP prior derived from one source study.
    Map(ReportArgs),
    /// Combine the MAP prior with a target study.
    Shrink(ReportArgs),
    /// Compare MAP priors under several heterogeneity priors.
    Table2(Table2Args),
    /// Convert a ratio estimate and confidence interval to log scale.
    Convert(ConvertArgs),
    /// Export a two-column grid for plotting.
    Grid(GridArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

#[derive(Args)]
struct InputArgs {
    /// CSV file with header label,scale,estimate,lower,upper,se,n.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Source study label in the CSV (default: first row).
    #[arg(long)]
    source: Option<String>,
    /// Target study label in the CSV (default: second row).
    #[arg(long)]
    target: Option<String>,
    /// Inline study "label,estimate,se[,n]"; give once for the source and
    /// again for the target.
    #[arg(long = "study", value_name = "SPEC")]
    studies: Vec<String>,
    /// Treat inline estimates as log ratios.
    #[arg(long)]
    log_ratio: bool,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Significant digits in numeric output.
    #[arg(long, default_value_t = DEFAULT_DIGITS)]
    digits: usize,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "half-normal(0.5)")]
    prior: String,
    /// Interval level; repeat for several.
    #[arg(long = "level", default_values_t = [0.95])]
    levels: Vec<f64>,
    #[arg(long)]
    uisd: Option<f64>,
    /// Seed for the optional Monte Carlo cross-check.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of Monte Carlo draws (0 disables the check).
    #[arg(long, default_value_t = 0)]
    mc_draws: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct Table2Args {
    /// Source standard error.
    #[arg(long, default_value_t = 0.451)]
    se: f64,
    /// Heterogeneity prior; repeat for several (default: the common-median set).
    #[arg(long = "prior")]
    priors: Vec<String>,
    #[arg(long)]
    uisd: Option<f64>,
    /// Patient count used for uisd = sqrt(n)·se when --uisd is absent.
    #[arg(long, default_value_t = 70)]
    n: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    estimate: f64,
    #[arg(long)]
    lower: f64,
    #[arg(long)]
    upper: f64,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = DEFAULT_DIGITS)]
    digits: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridKind {
    MapDensity,
    MapLogDensity,
    MapCdf,
    Normal,
    TauPrior,
    A0,
    Likelihood,
    Posterior,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, value_enum)]
    what: GridKind,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "half-normal(0.5)")]
    prior: String,
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_DIGITS)]
    digits: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Map(args) => report(args, false),
        Command::Shrink(args) => report(args, true),
        Command::Table2(args) => table2(args),
        Command::Convert(args) => convert(args),
        Command::Grid(args) => grid(args),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn parse_inline(spec: &str, scale: EffectScale) -> Result<StudyRow> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if !(3..=4).contains(&parts.len()) {
        return Err(Error::Config(format!(
            "study '{spec}': expected label,estimate,se[,n]"
        )));
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::Config(format!("study '{spec}': '{s}' is not a number")))
    };
    let n = match parts.get(3) {
        Some(s) => Some(
            s.parse::<u64>()
                .map_err(|_| Error::Config(format!("study '{spec}': '{s}' is not a count")))?,
        ),
        None => None,
    };
    Ok(StudyRow {
        study: StudyEstimate::new(parts[0], num(parts[1])?, num(parts[2])?, n)?,
        scale,
    })
}

/// Resolves the source and, when `want_target`, the target study.
fn studies(input: &InputArgs, want_target: bool) -> Result<(StudyRow, Option<StudyRow>)> {
    let rows: Vec<StudyRow> = match (&input.data, input.studies.is_empty()) {
        (Some(_), false) => {
            return Err(Error::Config("use either --data or --study, not both".into()))
        }
        (Some(path), true) => load_studies_csv(path)?,
        (None, _) => {
            let scale = if input.log_ratio {
                EffectScale::LogRatio
            } else {
                EffectScale::Linear
            };
            input
                .studies
                .iter()
                .map(|s| parse_inline(s, scale))
                .collect::<Result<_>>()?
        }
    };
    let pick = |label: &Option<String>, index: usize, role: &str| -> Result<StudyRow> {
        match label {
            Some(l) => rows
                .iter()
                .find(|r| r.study.label() == l)
                .cloned()
                .ok_or_else(|| Error::Config(format!("no study labelled '{l}'"))),
            None => rows
                .get(index)
                .cloned()
                .ok_or_else(|| Error::Config(format!("no {role} study given"))),
        }
    };
    let source = pick(&input.source, 0, "source")?;
    let target = if want_target {
        Some(pick(&input.target, 1, "target")?)
    } else {
        None
    };
    Ok((source, target))
}

fn report(args: ReportArgs, shrink: bool) -> Result<()> {
    let (source, target) = studies(&args.input, shrink)?;
    let options = ReportOptions {
        digits: args.output.digits,
        monte_carlo: (args.mc_draws > 0).then_some((args.mc_draws, args.seed)),
    };
    let rep = run_map_report_with(
        &source,
        &args.prior,
        target.as_ref(),
        args.uisd,
        &args.levels,
        options,
    )?;
    let text = match args.output.format {
        Format::Json => rep.to_json()?,
        Format::Tsv => rep.to_tsv(args.output.digits)?,
    };
    emit(&args.output.out, &text)
}

fn table2(args: Table2Args) -> Result<()> {
    let priors: Vec<HeterogeneityPrior> = if args.priors.is_empty() {
        common_median_comparison()
    } else {
        args.priors
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_>>()?
    };
    let unit_sd = match args.uisd {
        Some(u) => u,
        None => uisd(args.n, args.se)?,
    };
    let rows = table2_command(args.se, &priors, unit_sd)?;
    let text = match args.output.format {
        Format::Tsv => render_tsv(&rows, args.output.digits),
        Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
    };
    emit(&args.output.out, &text)
}

fn convert(args: ConvertArgs) -> Result<()> {
    let (y, se) = parse_ratio_ci(args.estimate, args.lower, args.upper, args.level)?;
    println!("estimate\tse");
    println!("{}\t{}", fmt_sig(y, args.digits), fmt_sig(se, args.digits));
    Ok(())
}

fn grid(args: GridArgs) -> Result<()> {
    let prior: HeterogeneityPrior = args.prior.parse()?;
    let needs_target = matches!(args.what, GridKind::Posterior);
    let (source, target) = studies(&args.input, needs_target)?;
    let map = MapPrior::new(&source.study, prior);
    let spread = (source.study.se().powi(2) + 2.0 * prior.quantile(0.9)?.powi(2)).sqrt();
    let around_map = (map.location() - 8.0 * spread, map.location() + 8.0 * spread);

    let power;
    let posterior;
    let (source_sel, default_range) = match args.what {
        GridKind::MapDensity => (GridSource::MapDensity(&map), around_map),
        GridKind::MapLogDensity => (GridSource::MapLnDensity(&map), around_map),
        GridKind::MapCdf => (GridSource::MapCdf(&map), around_map),
        GridKind::Normal => (GridSource::MomentMatchedNormal(&map), around_map),
        GridKind::TauPrior => (GridSource::TauPrior(&prior), (0.0, prior.quantile(0.99)?)),
        GridKind::A0 => {
            power = PowerPriorMap::new(source.study.se(), prior)?;
            (GridSource::PowerExponent(&power), (1e-6, 1.0 - 1e-6))
        }
        GridKind::Likelihood => {
            let s = &source.study;
            (
                GridSource::Likelihood(s),
                (s.y() - 6.0 * s.se(), s.y() + 6.0 * s.se()),
            )
        }
        GridKind::Posterior => {
            let t = target.expect("target resolved above");
            posterior = shrinkage_posterior(&source.study, &t.study, &prior)?;
            (GridSource::Posterior(&posterior), around_map)
        }
    };
    let lo = args.from.unwrap_or(default_range.0);
    let hi = args.to.unwrap_or(default_range.1);
    let mut buf = Vec::new();
    write_grid(source_sel, lo, hi, args.points, args.digits, &mut buf)?;
    emit(&args.out, &String::from_utf8(buf).expect("ascii output"))
}
