//! Command-line surface.
//!
//! Every option can also come from a `--config` file of `key = value`
//! lines (keys are the long option names); explicit flags win over config
//! entries, which win over environment variables, which win over built-in
//! defaults.
//!
//! Exit codes: 0 success, 2 I/O and parse failures (including usage
//! errors), 3 degenerate or inconsistent data, 4 illegal parameters
//! (including an ILLEGAL `check` verdict), 5 incomplete attribute
//! coverage.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng as _;

use flag_synth::{
    assign_labels, beta_max, build_model, build_profiles, estimate_powerlaw_alpha, fit_params,
    fit_params_with_surface, loglog_points, observed_group_distribution, parse_attribute_csv,
    parse_generic_interactions, parse_movielens_movies, parse_movielens_ratings,
    parse_movielens_users, realized_stats, BetaMode, CsvFormat, Error, FitOptions, FlagParams,
    InteractionDataset, LegalityMode, Pivot, ProfileSizeDistribution, Support, XminMode,
    DEFAULT_SEED,
};

const SEED_ENV: &str = "FLAG_SYNTH_SEED";

/// Tolerance mirrored from the model's legality check, so `check` and
/// `generate` agree on boundary verdicts.
const LEGALITY_SLACK: f64 = 1e-12;

#[derive(Parser)]
#[command(
    name = "flag-synth",
    version,
    about = "Synthetic binary attributes for interaction datasets",
    long_about = "Assigns each entity of an interaction log a synthetic binary attribute \
                  (A/B) whose probability follows a scaled power law of profile size. \
                  `stats` and `estimate` describe the input distribution, `check` maps the \
                  legal parameter space, `generate` draws reproducible labels, `fit` tunes \
                  (alpha, beta) against a real attribute, and `expected` prints the \
                  per-size group counts a parameter choice implies."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summarize the profile-size distribution of an interaction log
    Stats(StatsArgs),
    /// Estimate the power-law exponent of the distribution
    Estimate(EstimateArgs),
    /// Map the legal beta range; optionally judge a requested (alpha, beta)
    Check(CheckArgs),
    /// Assign a synthetic A/B label to every entity
    Generate(GenerateArgs),
    /// Fit (alpha, beta) against a real binary attribute
    Fit(FitArgs),
    /// Expected per-size group counts for given parameters
    Expected(ExpectedArgs),
}

#[derive(Args)]
struct CommonOpts {
    /// Interaction log path, or '-' for stdin
    #[arg(long)]
    input: Option<String>,
    /// Layout of the interaction log
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Which side of each interaction owns the profile
    #[arg(long, value_enum)]
    pivot: Option<PivotArg>,
    /// Drop entities with more interactions than this
    #[arg(long)]
    max_size: Option<u32>,
    /// Collapse duplicate (entity, counterpart) pairs before counting
    #[arg(long)]
    dedup: bool,
    /// Skew of the membership law (>= 0)
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Expected fraction of group B, in (0, 1]
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// RNG seed: an unsigned integer, or 'random' for entropy
    #[arg(long)]
    seed: Option<String>,
    /// What to do when beta is not achievable
    #[arg(long, value_enum)]
    legality: Option<LegalityArg>,
    /// Directory for output files
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value defaults file; explicit flags win
    #[arg(long)]
    config: Option<PathBuf>,
    /// Field delimiter for --format csv
    #[arg(long)]
    delimiter: Option<char>,
    /// 0-based entity column for --format csv
    #[arg(long)]
    entity_col: Option<usize>,
    /// 0-based counterpart column for --format csv
    #[arg(long)]
    counterpart_col: Option<usize>,
    /// Treat the first row of --format csv input as data, not a header
    #[arg(long)]
    no_header: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Normalization of the fitted law
    #[arg(long, value_enum)]
    support: Option<SupportArg>,
    /// Fit the tail from this size onward (default 1)
    #[arg(long)]
    xmin: Option<u32>,
    /// Choose xmin by scanning for the best goodness of fit
    #[arg(long)]
    scan_xmin: bool,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Smallest alpha of the printed sweep
    #[arg(long)]
    sweep_min: Option<f64>,
    /// Largest alpha of the printed sweep
    #[arg(long)]
    sweep_max: Option<f64>,
    /// Step of the printed sweep
    #[arg(long)]
    sweep_step: Option<f64>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Attribute table path, or '-' for stdin
    #[arg(long)]
    attributes: Option<String>,
    /// Layout of the attribute table
    #[arg(long, value_enum)]
    attr_format: Option<FormatArg>,
    /// Genre whose presence flags a row (ml1m-movies attributes)
    #[arg(long)]
    genre: Option<String>,
    /// Exclude entities missing from the attribute table instead of failing
    #[arg(long)]
    allow_partial: bool,
    /// How beta is chosen
    #[arg(long, value_enum)]
    beta_mode: Option<BetaModeArg>,
    /// Smallest alpha candidate
    #[arg(long)]
    alpha_min: Option<f64>,
    /// Largest alpha candidate
    #[arg(long)]
    alpha_max: Option<f64>,
    /// Alpha grid step
    #[arg(long)]
    alpha_step: Option<f64>,
    /// Beta grid step (searched mode)
    #[arg(long)]
    beta_step: Option<f64>,
    /// Resolution of the logarithmic size binning
    #[arg(long)]
    bins_per_decade: Option<u32>,
    /// Also write every evaluated (alpha, beta, objective) cell
    #[arg(long)]
    loss_surface: bool,
}

#[derive(Args)]
struct ExpectedArgs {
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    /// UserID::MovieID::Rating::Timestamp interaction rows
    Ml1mRatings,
    /// UserID::Gender::Age::Occupation::Zip attribute rows
    Ml1mUsers,
    /// MovieID::Title::Genre|Genre|... attribute rows
    Ml1mMovies,
    /// Delimited text with configurable columns
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PivotArg {
    User,
    Item,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LegalityArg {
    /// Reject an unachievable beta
    Strict,
    /// Cap probabilities at 1 and accept the shortfall
    Clamp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SupportArg {
    /// Normalize over the observed range xmin..=k
    Truncated,
    /// Normalize over xmin.. (needs alpha > 1)
    Infinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BetaModeArg {
    /// Pin beta to the observed flagged fraction
    #[value(alias = "fixed")]
    FixedToObservedFraction,
    Searched,
}

enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Lib(Error::Io(e))
    }
}

fn lib_exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Parse { .. } => 2,
        Error::EmptyDataset
        | Error::EmptyDistribution
        | Error::DegenerateDistribution { .. }
        | Error::Numeric(_)
        | Error::Consistency(_) => 3,
        Error::InvalidParameter(_) | Error::IllegalBeta { .. } | Error::NoFeasibleFit { .. } => 4,
        Error::Coverage { .. } => 5,
    }
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Stats(args) => cmd_stats(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Check(args) => cmd_check(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Expected(args) => cmd_expected(args),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Lib(e)) => {
            eprintln!("error: {e}");
            lib_exit_code(&e)
        }
    }
}

/// Option resolution: explicit flag, then config file, then (for the few
/// options that have one) environment or built-in default.
struct Ctx {
    cfg: BTreeMap<String, String>,
}

impl Ctx {
    fn new(config: Option<&Path>) -> Result<Self, CliError> {
        let cfg = match config {
            Some(path) => load_config(path)?,
            None => BTreeMap::new(),
        };
        Ok(Ctx { cfg })
    }

    fn string(&self, flag: Option<String>, key: &str) -> Option<String> {
        flag.or_else(|| self.cfg.get(key).cloned())
    }

    fn parsed<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.cfg.get(key) {
            None => Ok(None),
            Some(raw) => raw.trim().parse().map(Some).map_err(|e| {
                CliError::Lib(Error::InvalidParameter(format!("config {key} = {raw:?}: {e}")))
            }),
        }
    }

    fn value_enum<T: ValueEnum>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.cfg.get(key) {
            None => Ok(None),
            Some(raw) => T::from_str(raw.trim(), true).map(Some).map_err(|_| {
                CliError::Lib(Error::InvalidParameter(format!(
                    "config {key} = {raw:?} is not a recognized value"
                )))
            }),
        }
    }

    fn switch(&self, flag: bool, key: &str) -> Result<bool, CliError> {
        if flag {
            return Ok(true);
        }
        match self.cfg.get(key).map(|s| s.trim()) {
            None => Ok(false),
            Some("true") | Some("1") => Ok(true),
            Some("false") | Some("0") => Ok(false),
            Some(other) => Err(CliError::Lib(Error::InvalidParameter(format!(
                "config {key} = {other:?} is not a boolean"
            )))),
        }
    }

    fn required_f64(&self, flag: Option<f64>, key: &str) -> Result<f64, CliError> {
        self.parsed(flag, key)?
            .ok_or_else(|| CliError::Usage(format!("--{key} is required for this command")))
    }
}

fn load_config(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Lib(Error::Parse {
                line: idx + 1,
                message: format!("config line is not key = value: {raw:?}"),
            }));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn open_reader(path: &str) -> Result<Box<dyn BufRead>, CliError> {
    if path == "-" {
        return Ok(Box::new(io::BufReader::new(io::stdin())));
    }
    let file = fs::File::open(path)
        .map_err(|e| io::Error::new(e.kind(), format!("{path}: {e}")))?;
    Ok(Box::new(io::BufReader::new(file)))
}

fn load_dataset(ctx: &Ctx, common: &CommonOpts) -> Result<InteractionDataset, CliError> {
    let input = ctx
        .string(common.input.clone(), "input")
        .ok_or_else(|| CliError::Usage("--input is required (a path, or '-' for stdin)".into()))?;
    let format = ctx
        .value_enum(common.format, "format")?
        .ok_or_else(|| CliError::Usage("--format is required".into()))?;
    let reader = open_reader(&input)?;
    let mut dataset = match format {
        FormatArg::Ml1mRatings => parse_movielens_ratings(reader)?,
        FormatArg::Csv => {
            let delimiter = match ctx.parsed(common.delimiter, "delimiter")? {
                None => b',',
                Some(c) if c.is_ascii() => c as u8,
                Some(c) => {
                    return Err(CliError::Lib(Error::InvalidParameter(format!(
                        "delimiter must be a single ASCII character, got {c:?}"
                    ))))
                }
            };
            let layout = CsvFormat {
                delimiter,
                entity_col: ctx.parsed(common.entity_col, "entity-col")?.unwrap_or(0),
                counterpart_col: ctx.parsed(common.counterpart_col, "counterpart-col")?.unwrap_or(1),
                has_header: !ctx.switch(common.no_header, "no-header")?,
            };
            parse_generic_interactions(reader, &layout)?
        }
        FormatArg::Ml1mUsers | FormatArg::Ml1mMovies => {
            return Err(CliError::Usage(
                "ml1m-users and ml1m-movies are attribute-table formats; interactions \
                 take --format ml1m-ratings or csv (attributes go to fit --attr-format)"
                    .into(),
            ))
        }
    };
    if ctx.switch(common.dedup, "dedup")? {
        dataset.dedup();
    }
    Ok(dataset)
}

fn load_distribution(ctx: &Ctx, common: &CommonOpts) -> Result<ProfileSizeDistribution, CliError> {
    let dataset = load_dataset(ctx, common)?;
    let pivot = match ctx.value_enum(common.pivot, "pivot")?.unwrap_or(PivotArg::User) {
        PivotArg::User => Pivot::User,
        PivotArg::Item => Pivot::Item,
    };
    let max_size = ctx.parsed(common.max_size, "max-size")?;
    Ok(build_profiles(&dataset, pivot, max_size)?)
}

fn resolve_seed(ctx: &Ctx, flag: &Option<String>) -> Result<u64, CliError> {
    let source = flag
        .clone()
        .or_else(|| ctx.cfg.get("seed").cloned())
        .or_else(|| std::env::var(SEED_ENV).ok());
    match source {
        None => Ok(DEFAULT_SEED),
        Some(s) if s.trim().eq_ignore_ascii_case("random") => Ok(rand::rng().random()),
        Some(s) => s.trim().parse().map_err(|_| {
            CliError::Lib(Error::InvalidParameter(format!(
                "seed must be an unsigned integer or 'random', got {s:?}"
            )))
        }),
    }
}

fn resolve_legality(ctx: &Ctx, flag: Option<LegalityArg>) -> Result<LegalityMode, CliError> {
    Ok(match ctx.value_enum(flag, "legality")?.unwrap_or(LegalityArg::Strict) {
        LegalityArg::Strict => LegalityMode::Strict,
        LegalityArg::Clamp => LegalityMode::Clamp,
    })
}

fn prepare_out(ctx: &Ctx, flag: &Option<PathBuf>) -> Result<Option<PathBuf>, CliError> {
    let out = flag.clone().or_else(|| ctx.cfg.get("out").map(PathBuf::from));
    if let Some(dir) = &out {
        fs::create_dir_all(dir)
            .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", dir.display())))?;
    }
    Ok(out)
}

/// Write through a temp file in the same directory, then rename, so a
/// crash never leaves a half-written artifact behind.
fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(name);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

fn pretty(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("json value serializes") + "\n"
}

fn cmd_stats(args: &StatsArgs) -> Result<i32, CliError> {
    let ctx = Ctx::new(args.common.config.as_deref())?;
    let dist = load_distribution(&ctx, &args.common)?;
    let s = dist.summary();
    println!("entities: {}", s.total_entities);
    println!("interactions: {}", s.total_interactions);
    println!("mean_size: {}", s.mean_size);
    println!("median_size: {}", s.median_size);
    println!("k: {}", s.max_size);
    if let Some(out) = prepare_out(&ctx, &args.common.out)? {
        let mut table = String::from("size,count\n");
        for size in 1..=dist.max_size() {
            let _ = writeln!(table, "{size},{}", dist.count(size));
        }
        write_atomic(&out.join("distribution.csv"), table.as_bytes())?;
        let mut plot = Vec::new();
        loglog_points(&dist, None).write_csv(&mut plot)?;
        write_atomic(&out.join("loglog.csv"), &plot)?;
    }
    Ok(0)
}

fn cmd_estimate(args: &EstimateArgs) -> Result<i32, CliError> {
    let ctx = Ctx::new(args.common.config.as_deref())?;
    let dist = load_distribution(&ctx, &args.common)?;
    let support = match ctx.value_enum(args.support, "support")?.unwrap_or(SupportArg::Truncated) {
        SupportArg::Truncated => Support::TruncatedAtK,
        SupportArg::Infinite => Support::Infinite,
    };
    let scan = ctx.switch(args.scan_xmin, "scan-xmin")?;
    let xmin = ctx.parsed(args.xmin, "xmin")?;
    if scan && xmin.is_some() {
        return Err(CliError::Usage("pick either --xmin N or --scan-xmin, not both".into()));
    }
    let mode = if scan { XminMode::Scan } else { XminMode::Fixed(xmin.unwrap_or(1)) };
    let fit = estimate_powerlaw_alpha(&dist, mode, support)?;
    let json = serde_json::to_value(&fit).expect("fit serializes");
    print!("{}", pretty(&json));
    if let Some(out) = prepare_out(&ctx, &args.common.out)? {
        write_atomic(&out.join("powerlaw_fit.json"), pretty(&json).as_bytes())?;
    }
    Ok(0)
}

fn cmd_check(args: &CheckArgs) -> Result<i32, CliError> {
    let ctx = Ctx::new(args.common.config.as_deref())?;
    let dist = load_distribution(&ctx, &args.common)?;
    let sweep_min = ctx.parsed(args.sweep_min, "sweep-min")?.unwrap_or(0.0);
    let sweep_max = ctx.parsed(args.sweep_max, "sweep-max")?.unwrap_or(3.0);
    let sweep_step = ctx.parsed(args.sweep_step, "sweep-step")?.unwrap_or(0.1);
    if !(sweep_min.is_finite() && sweep_min >= 0.0 && sweep_max >= sweep_min && sweep_step > 0.0) {
        return Err(CliError::Lib(Error::InvalidParameter(format!(
            "sweep needs 0 <= min <= max and step > 0, got [{sweep_min}, {sweep_max}] step {sweep_step}"
        ))));
    }
    let mut table = String::from("alpha,beta_max\n");
    let mut i = 0u64;
    loop {
        let alpha = sweep_min + i as f64 * sweep_step;
        if alpha > sweep_max * (1.0 + 1e-12) + f64::MIN_POSITIVE {
            break;
        }
        let _ = writeln!(table, "{alpha},{}", beta_max(&dist, alpha));
        i += 1;
    }
    print!("{table}");
    if let Some(out) = prepare_out(&ctx, &args.common.out)? {
        write_atomic(&out.join("beta_range.csv"), table.as_bytes())?;
    }
    let alpha = ctx.parsed(args.common.alpha, "alpha")?;
    let beta = ctx.parsed(args.common.beta, "beta")?;
    let mut code = 0;
    match (alpha, beta) {
        (Some(a), maybe_b) => {
            if !a.is_finite() || a < 0.0 {
                return Err(CliError::Lib(Error::InvalidParameter(format!(
                    "alpha must be finite and >= 0, got {a}"
                ))));
            }
            let bound = beta_max(&dist, a);
            println!("beta_max at alpha {a}: {bound}");
            if let Some(b) = maybe_b {
                FlagParams::new(a, b)?;
                if b <= bound * (1.0 + LEGALITY_SLACK) {
                    println!("LEGAL: beta {b} <= beta_max {bound} at alpha {a}");
                } else {
                    println!("ILLEGAL: beta {b} > beta_max {bound} at alpha {a}");
                    code = 4;
                }
            }
        }
        (None, Some(_)) => {
            return Err(CliError::Usage("--beta needs --alpha for a legality verdict".into()))
        }
        (None, None) => {}
    }
    Ok(code)
}

fn cmd_generate(args: &GenerateArgs) -> Result<i32, CliError> {
    let ctx = Ctx::new(args.common.config.as_deref())?;
    let alpha = ctx.required_f64(args.common.alpha, "alpha")?;
    let beta = ctx.required_f64(args.common.beta, "beta")?;
    let params = FlagParams::new(alpha, beta)?;
    let legality = resolve_legality(&ctx, args.common.legality)?;
    let seed = resolve_seed(&ctx, &args.common.seed)?;
    let out = prepare_out(&ctx, &args.common.out)?
        .ok_or_else(|| CliError::Usage("generate needs --out DIR for its artifacts".into()))?;
    let dist = load_distribution(&ctx, &args.common)?;
    let model = build_model(&dist, params, legality)?;
    if model.clamped_sizes() > 0 {
        eprintln!(
            "warning: clamped probability to 1 at {} size(s); the realized fraction will fall short of beta = {beta}",
            model.clamped_sizes()
        );
    }
    let assignment = assign_labels(&model, &dist, seed)?;
    let stats = realized_stats(&assignment, &dist)?;

    let mut labels = Vec::new();
    assignment.write_labels_csv(&mut labels)?;
    write_atomic(&out.join("labels.csv"), &labels)?;

    let mut realized = String::from("size,count_a,count_b\n");
    for size in 1..=dist.max_size() {
        let &(a, b) = stats.per_size.get(&size).unwrap_or(&(0, 0));
        let _ = writeln!(realized, "{size},{a},{b}");
    }
    write_atomic(&out.join("realized_stats.csv"), realized.as_bytes())?;

    let mut plot = Vec::new();
    loglog_points(&dist, Some(&stats.per_size)).write_csv(&mut plot)?;
    write_atomic(&out.join("plot_data.csv"), &plot)?;

    let sidecar = serde_json::json!({
        "seed": seed,
        "alpha": params.alpha,
        "beta": params.beta,
        "legality_mode": model.legality_mode(),
        "entities": dist.total_entities(),
        "counts": {"a": stats.count_a, "b": stats.count_b},
        "realized_fraction": stats.fraction_b(),
        "mean_size_a": stats.mean_size_a,
        "mean_size_b": stats.mean_size_b,
        "clamped_sizes": model.clamped_sizes(),
    });
    write_atomic(&out.join("assignment.json"), pretty(&sidecar).as_bytes())?;

    let model_json = serde_json::json!({
        "alpha": params.alpha,
        "beta": params.beta,
        "legality_mode": model.legality_mode(),
        "k": model.k(),
        "expected_b_total": model.expected_b_total(),
        "clamped_sizes": model.clamped_sizes(),
        "probabilities": model.probabilities(),
    });
    write_atomic(&out.join("model.json"), pretty(&model_json).as_bytes())?;

    println!("entities: {}", dist.total_entities());
    println!("group_a: {}", stats.count_a);
    println!("group_b: {}", stats.count_b);
    println!("realized_fraction: {}", stats.fraction_b());
    println!("expected_fraction: {beta}");
    println!("seed: {seed}");
    Ok(0)
}

fn cmd_expected(args: &ExpectedArgs) -> Result<i32, CliError> {
    let ctx = Ctx::new(args.common.config.as_deref())?;
    let alpha = ctx.required_f64(args.common.alpha, "alpha")?;
    let beta = ctx.required_f64(args.common.beta, "beta")?;
    let params = FlagParams::new(alpha, beta)?;
    let legality = resolve_legality(&ctx, args.common.legality)?;
    let dist = load_distribution(&ctx, &args.common)?;
    let model = build_model(&dist, params, legality)?;
    if model.clamped_sizes() > 0 {
        eprintln!(
            "warning: clamped probability to 1 at {} size(s); expected counts fall short of beta = {beta}",
            model.clamped_sizes()
        );
    }
    let mut table = String::from("size,expected_a,expected_b,total\n");
    for row in model.expected_counts() {
        let _ = writeln!(table, "{},{},{},{}", row.size, row.expected_a, row.expected_b, row.count);
    }
    let _ = writeln!(table, "# expected_b_total = {}", model.expected_b_total());
    match prepare_out(&ctx, &args.common.out)? {
        Some(out) => {
            write_atomic(&out.join("expected_counts.csv"), table.as_bytes())?;
            println!("expected_b_total: {}", model.expected_b_total());
        }
        None => print!("{table}"),
    }
    Ok(0)
}

fn cmd_fit(args: &FitArgs) -> Result<i32, CliError> {
    let ctx = Ctx::new(args.common.config.as_deref())?;
    let dist = load_distribution(&ctx, &args.common)?;
    let attr_path = ctx
        .string(args.attributes.clone(), "attributes")
        .ok_or_else(|| CliError::Usage("--attributes FILE is required".into()))?;
    let attr_format = ctx
        .value_enum(args.attr_format, "attr-format")?
        .ok_or_else(|| CliError::Usage("--attr-format is required".into()))?;
    let reader = open_reader(&attr_path)?;
    let table = match attr_format {
        FormatArg::Ml1mUsers => parse_movielens_users(reader)?,
        FormatArg::Ml1mMovies => {
            let genre = ctx.string(args.genre.clone(), "genre").ok_or_else(|| {
                CliError::Usage("--genre is required with --attr-format ml1m-movies".into())
            })?;
            parse_movielens_movies(reader, &genre)?
        }
        FormatArg::Csv => parse_attribute_csv(reader)?,
        FormatArg::Ml1mRatings => {
            return Err(CliError::Usage(
                "ml1m-ratings is an interaction format; attributes take ml1m-users, \
                 ml1m-movies, or csv"
                    .into(),
            ))
        }
    };
    let allow_partial = ctx.switch(args.allow_partial, "allow-partial")?;
    let observed = observed_group_distribution(&dist, &table, allow_partial)?;
    let defaults = FitOptions::default();
    let options = FitOptions {
        beta_mode: match ctx
            .value_enum(args.beta_mode, "beta-mode")?
            .unwrap_or(BetaModeArg::FixedToObservedFraction)
        {
            BetaModeArg::FixedToObservedFraction => BetaMode::FixedToObservedFraction,
            BetaModeArg::Searched => BetaMode::Searched,
        },
        alpha_min: ctx.parsed(args.alpha_min, "alpha-min")?.unwrap_or(defaults.alpha_min),
        alpha_max: ctx.parsed(args.alpha_max, "alpha-max")?.unwrap_or(defaults.alpha_max),
        alpha_step: ctx.parsed(args.alpha_step, "alpha-step")?.unwrap_or(defaults.alpha_step),
        beta_step: ctx.parsed(args.beta_step, "beta-step")?.unwrap_or(defaults.beta_step),
        bins_per_decade: ctx
            .parsed(args.bins_per_decade, "bins-per-decade")?
            .unwrap_or(defaults.bins_per_decade),
    };
    let surface_wanted = ctx.switch(args.loss_surface, "loss-surface")?;
    let out = prepare_out(&ctx, &args.common.out)?;
    if surface_wanted && out.is_none() {
        return Err(CliError::Usage("--loss-surface needs --out DIR".into()));
    }
    let (fit, surface) = if surface_wanted {
        fit_params_with_surface(&observed, &options)?
    } else {
        (fit_params(&observed, &options)?, Vec::new())
    };
    let report = serde_json::json!({
        "alpha": fit.alpha,
        "beta": fit.beta,
        "objective": fit.objective,
        "beta_mode": fit.beta_mode,
        "beta_max_at_alpha": fit.beta_max_at_alpha,
        "grid": fit.grid,
        "attribute": table.attribute(),
        "observed_fraction": observed.fraction(),
        "covered": observed.covered(),
        "excluded": observed.excluded(),
        "flagged": observed.total_flagged(),
    });
    print!("{}", pretty(&report));
    if let Some(out) = out {
        write_atomic(&out.join("fit.json"), pretty(&report).as_bytes())?;
        if surface_wanted {
            let mut cells = String::from("alpha,beta,objective\n");
            for p in &surface {
                let _ = writeln!(cells, "{},{},{}", p.alpha, p.beta, p.objective);
            }
            write_atomic(&out.join("loss_surface.csv"), cells.as_bytes())?;
        }
    }
    Ok(0)
}
