//! `riskindexlab` — command-line surface for the risk-controlled index
//! engines and diagnostics.
//!
//! Exit codes: 0 success, 2 input/config error, 3 numeric error,
//! 4 engine precondition failure.

mod config;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use riskindexlab_core::diagnostics::{
    bias_series, compound_table, leakage_experiment, lf_sensitivity_table, noise,
    reference_return_grid, LeakageScenario,
};
use riskindexlab_core::engines::{
    run_djrri, run_hsrai, run_sprci, simulate_stablerisk, AccrualMode, CmacInputs, DjrriConfig,
    HsraiConfig, LeverageParams, RiskControlSeries, RiskMeasure, SprciConfig, StableRiskParams,
};
use riskindexlab_core::moments::{estimate_vol, EwmaParams, VolMethod};
use riskindexlab_core::series::{
    emit_csv, ingest_csv, ingest_rates_csv, ColumnSpec, LevelSeries,
};
use riskindexlab_core::{Error as CoreError, ErrorClass};

use config::{parse_config_file, PathDisplay, Resolver};
use output::{fingerprint, num, write_sidecar, OutputFormat, Sidecar, Table};

pub const SEED_ENV: &str = "RISKINDEXLAB_SEED";

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        let code = match err.class() {
            ErrorClass::Input => 2,
            ErrorClass::Numeric => 3,
            ErrorClass::Precondition => 4,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "riskindexlab",
    about = "Risk-controlled index calculation and bias diagnostics",
    version
)]
struct Cli {
    /// Flat `key = value` config file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory artifacts are written to.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// Master seed (falls back to RISKINDEXLAB_SEED, then 0).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Report-table format; level-series artifacts are always CSV.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and canonicalize a level CSV.
    Ingest(IngestArgs),
    /// Estimate realized volatility with full provenance.
    Vol(VolArgs),
    /// Run an index engine.
    #[command(subcommand)]
    Index(IndexCommand),
    /// Run a diagnostic or experiment.
    #[command(subcommand)]
    Diagnose(DiagnoseCommand),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// Name of the date column.
    #[arg(long)]
    date_col: Option<String>,
    /// Name of the level column.
    #[arg(long)]
    level_col: Option<String>,
    /// Output file name (inside --out-dir).
    #[arg(long)]
    output: Option<String>,
}

/// Volatility-estimator flags shared by several commands.
#[derive(Args, Clone)]
struct VolFlags {
    /// Estimator: sample, ewma-long or ewma-short.
    #[arg(long)]
    method: Option<String>,
    /// Long-term decay factor.
    #[arg(long)]
    lambda_long: Option<f64>,
    /// Short-term decay factor.
    #[arg(long)]
    lambda_short: Option<f64>,
    /// Return horizon in observations.
    #[arg(long)]
    n: Option<usize>,
    /// Initialization window for the exponentially-weighted variance.
    #[arg(long)]
    init_window: Option<usize>,
    /// Window length for the sample estimator.
    #[arg(long)]
    window: Option<usize>,
}

impl VolFlags {
    fn resolve(&self, r: &Resolver) -> Result<VolMethod, CliError> {
        let method = r.get("method", self.method.clone(), "ewma-long".to_string())?;
        let n = r.get("n", self.n, 1)?;
        match method.as_str() {
            "sample" => {
                let window = r.get("window", self.window, 21)?;
                Ok(VolMethod::Sample { window, horizon: n })
            }
            "ewma-long" => {
                let lambda = r.get("lambda-long", self.lambda_long, 0.94)?;
                let init_window = r.get("init-window", self.init_window, 63)?;
                Ok(VolMethod::EwmaLong(
                    EwmaParams::new(lambda, n, init_window).map_err(CliError::from)?,
                ))
            }
            "ewma-short" => {
                let lambda = r.get("lambda-short", self.lambda_short, 0.80)?;
                let init_window = r.get("init-window", self.init_window, 63)?;
                Ok(VolMethod::EwmaShort(
                    EwmaParams::new(lambda, n, init_window).map_err(CliError::from)?,
                ))
            }
            other => Err(CliError::input(format!(
                "unknown vol method `{other}` (use sample, ewma-long or ewma-short)"
            ))),
        }
    }
}

#[derive(Args)]
struct VolArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    vol: VolFlags,
}

/// Leverage flags shared by the two-asset engines.
#[derive(Args, Clone)]
struct LeverageFlags {
    /// Target volatility (annualized, decimal).
    #[arg(long)]
    tv: Option<f64>,
    /// Maximum leverage factor.
    #[arg(long)]
    cap: Option<f64>,
    /// Minimum leverage factor.
    #[arg(long)]
    floor: Option<f64>,
    /// Volatility lag behind each rebalance.
    #[arg(long)]
    lag: Option<usize>,
}

#[derive(Subcommand)]
enum IndexCommand {
    /// Cap-and-floor volatility-target index (/365 accrual).
    Hsrai(HsraiArgs),
    /// Cap-only volatility-target index (/360 accrual from the rebalance).
    Sprci(SprciArgs),
    /// Three-asset semivariance-targeted allocator.
    Djrri(DjrriArgs),
    /// Constant-volatility futures portfolio simulator.
    Stablerisk(StableriskArgs),
}

#[derive(Args)]
struct HsraiArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    rates: Option<PathBuf>,
    #[command(flatten)]
    leverage: LeverageFlags,
    #[command(flatten)]
    vol: VolFlags,
    #[arg(long)]
    rebalance_every: Option<usize>,
    #[arg(long)]
    base: Option<f64>,
}

#[derive(Args)]
struct SprciArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// Rate CSV for the simple-rate accrual.
    #[arg(long)]
    rates: Option<PathBuf>,
    /// 3-month rate CSV for the rolling accrual.
    #[arg(long)]
    ir3m: Option<PathBuf>,
    /// 2-month rate CSV for the rolling accrual.
    #[arg(long)]
    ir2m: Option<PathBuf>,
    /// Accrual mode: simple or roll-3m.
    #[arg(long)]
    accrual: Option<String>,
    #[command(flatten)]
    leverage: LeverageFlags,
    #[command(flatten)]
    vol: VolFlags,
    #[arg(long)]
    rebalance_every: Option<usize>,
    #[arg(long)]
    base: Option<f64>,
}

#[derive(Args)]
struct DjrriArgs {
    #[arg(long)]
    stocks: Option<PathBuf>,
    #[arg(long)]
    bonds: Option<PathBuf>,
    #[arg(long)]
    cash: Option<PathBuf>,
    /// Fraction of all-stock risk (0.2, 0.4, 0.6, 0.8 or 1.0).
    #[arg(long)]
    risk_fraction: Option<f64>,
    /// Trailing window of monthly returns.
    #[arg(long)]
    window: Option<usize>,
    /// semivariance or semideviation.
    #[arg(long)]
    risk_measure: Option<String>,
    /// Expected returns as `stocks,bonds,cash`.
    #[arg(long)]
    expected_returns: Option<String>,
    #[arg(long)]
    base: Option<f64>,
}

#[derive(Args)]
struct StableriskArgs {
    /// Contract level CSVs (repeat the flag or comma-separate).
    #[arg(long, value_delimiter = ',')]
    contracts: Vec<PathBuf>,
    #[arg(long)]
    tv: Option<f64>,
    /// Minimum relative position change that triggers a trade.
    #[arg(long)]
    threshold: Option<f64>,
    /// Transaction cost per unit of traded notional.
    #[arg(long)]
    cost_rate: Option<f64>,
    /// Flat annual money-market rate.
    #[arg(long)]
    cash_rate: Option<f64>,
    #[arg(long)]
    cov_window: Option<usize>,
    #[arg(long)]
    realized_window: Option<usize>,
    #[command(flatten)]
    vol: VolFlags,
}

#[derive(Subcommand)]
enum DiagnoseCommand {
    /// Leverage-factor sensitivity grid.
    Table1(Table1Args),
    /// Volatility-leakage experiment across rebalance lags.
    Leakage(LeakageArgs),
    /// Window noise of an index against a benchmark.
    Noise(NoiseArgs),
    /// Compounded-return dispersion table.
    Compound(CompoundArgs),
    /// Index-vs-benchmark bias path.
    Bias(BiasArgs),
}

#[derive(Args)]
struct Table1Args {
    #[arg(long)]
    tv: Option<f64>,
    #[arg(long)]
    rv_min: Option<f64>,
    #[arg(long)]
    rv_max: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    cap: Option<f64>,
    #[arg(long)]
    floor: Option<f64>,
}

#[derive(Args)]
struct LeakageArgs {
    /// Rebalance lags to sweep, comma-separated.
    #[arg(long, value_delimiter = ',')]
    lags: Vec<usize>,
    #[command(flatten)]
    leverage: LeverageFlags,
    #[command(flatten)]
    vol: VolFlags,
    /// Flat accrual rate of the synthetic scenario.
    #[arg(long)]
    flat_rate: Option<f64>,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    market: Option<PathBuf>,
    #[arg(long)]
    window: Option<usize>,
}

#[derive(Args)]
struct CompoundArgs {
    /// Headerless CSV of per-period returns, one scenario per row.
    /// Defaults to the built-in reference grid.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct BiasArgs {
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    market: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {}", err.message);
            std::process::exit(err.code);
        }
    }
}

struct Ctx {
    resolver: Resolver,
    out_dir: PathBuf,
    seed: u64,
    format: OutputFormat,
}

impl Ctx {
    fn sidecar<T: Serialize>(
        &self,
        command: &str,
        artifacts: Vec<String>,
        summary: T,
    ) -> Result<(), CliError> {
        let effective = self.resolver.effective();
        let sidecar = Sidecar {
            command: command.to_string(),
            seed: self.seed,
            config_fingerprint: fingerprint(self.seed, &effective),
            effective_config: effective,
            artifacts,
            summary,
        };
        let name = format!("{}.json", command.replace(' ', "_"));
        write_sidecar(&self.out_dir, &name, &sidecar)?;
        Ok(())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file_config = match &cli.config {
        Some(path) => parse_config_file(path)?,
        None => BTreeMap::new(),
    };
    let resolver = Resolver::new(file_config);

    let seed = match cli.seed {
        Some(s) => s,
        None => match resolver.get_opt("seed", None::<u64>)? {
            Some(s) => s,
            None => std::env::var(SEED_ENV)
                .ok()
                .map(|raw| {
                    raw.parse::<u64>()
                        .map_err(|_| CliError::input(format!("{SEED_ENV}: cannot parse `{raw}`")))
                })
                .transpose()?
                .unwrap_or(0),
        },
    };
    let format = resolver.get("format", cli.format, OutputFormat::Csv)?;
    let ctx = Ctx {
        out_dir: cli.out_dir.clone(),
        seed,
        format,
        resolver,
    };
    // the seed is part of every fingerprint even when a command ignores it
    ctx.resolver.get("seed", Some(seed), 0)?;

    match cli.command {
        Command::Ingest(args) => cmd_ingest(&ctx, args),
        Command::Vol(args) => cmd_vol(&ctx, args),
        Command::Index(engine) => match engine {
            IndexCommand::Hsrai(args) => cmd_index_hsrai(&ctx, args),
            IndexCommand::Sprci(args) => cmd_index_sprci(&ctx, args),
            IndexCommand::Djrri(args) => cmd_index_djrri(&ctx, args),
            IndexCommand::Stablerisk(args) => cmd_index_stablerisk(&ctx, args),
        },
        Command::Diagnose(which) => match which {
            DiagnoseCommand::Table1(args) => cmd_diagnose_table1(&ctx, args),
            DiagnoseCommand::Leakage(args) => cmd_diagnose_leakage(&ctx, args),
            DiagnoseCommand::Noise(args) => cmd_diagnose_noise(&ctx, args),
            DiagnoseCommand::Compound(args) => cmd_diagnose_compound(&ctx, args),
            DiagnoseCommand::Bias(args) => cmd_diagnose_bias(&ctx, args),
        },
    }
}

fn column_spec(r: &Resolver, date_col: Option<String>, level_col: Option<String>) -> Result<ColumnSpec, CliError> {
    let date = r.get("date-col", date_col, "date".to_string())?;
    let level = r.get("level-col", level_col, "level".to_string())?;
    Ok(ColumnSpec::new(date, level))
}

fn load_levels(r: &Resolver, key: &str, flag: Option<PathBuf>) -> Result<LevelSeries, CliError> {
    let path = r.require_path(key, flag)?;
    Ok(ingest_csv(&path, &ColumnSpec::default())?)
}

fn load_rates(
    r: &Resolver,
    key: &str,
    flag: Option<PathBuf>,
) -> Result<riskindexlab_core::RateSeries, CliError> {
    let path = r.require_path(key, flag)?;
    Ok(ingest_rates_csv(&path, &ColumnSpec::new("date", "rate"))?)
}

fn level_series_csv(ctx: &Ctx, stem: &str, dates: &[chrono::NaiveDate], levels: &[f64]) -> Result<String, CliError> {
    let mut table = Table::new(&["date", "level"]);
    for (d, l) in dates.iter().zip(levels) {
        table.push(vec![d.format("%Y-%m-%d").to_string(), num(*l)]);
    }
    table.write(&ctx.out_dir, stem, OutputFormat::Csv)
}

#[derive(Serialize)]
struct RunSummary {
    params: LeverageParams,
    base_level: f64,
    first_date: String,
    last_date: String,
    final_level: f64,
    rebalances: usize,
    schedule: riskindexlab_core::engines::LeverageSchedule,
    steps: Vec<riskindexlab_core::engines::StepDecomposition>,
}

impl RunSummary {
    fn new(run: &RiskControlSeries) -> Self {
        Self {
            params: run.params,
            base_level: run.base_level,
            first_date: run.dates.first().map(|d| d.to_string()).unwrap_or_default(),
            last_date: run.dates.last().map(|d| d.to_string()).unwrap_or_default(),
            final_level: *run.levels.last().unwrap_or(&f64::NAN),
            rebalances: run.schedule.dates.len(),
            schedule: run.schedule.clone(),
            steps: run.steps.clone(),
        }
    }
}

fn cmd_ingest(ctx: &Ctx, args: IngestArgs) -> Result<(), CliError> {
    let r = &ctx.resolver;
    let spec = column_spec(r, args.date_col, args.level_col)?;
    let path = r.require_path("input", args.input)?;
    let series = ingest_csv(&path, &spec)?;
    let output = r.get("output", args.output, "ingested.csv".to_string())?;
    let out_path = ctx.out_dir.join(&output);
    if let Some(parent) = out_path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::input(format!("cannot create {}: {e}", parent.display())))?;
    }
    emit_csv(&series, &out_path, &spec)?;

    #[derive(Serialize)]
    struct Summary {
        rows: usize,
        label: String,
        first_date: String,
        last_date: String,
    }
    ctx.sidecar(
        "ingest",
        vec![output],
        Summary {
            rows: series.len(),
            label: series.label().to_string(),
            first_date: series.first_date().map(|d| d.to_string()).unwrap_or_default(),
            last_date: series.last_date().map(|d| d.to_string()).unwrap_or_default(),
        },
    )
}

fn cmd_vol(ctx: &Ctx, args: VolArgs) -> Result<(), CliError> {
    let r = &ctx.resolver;
    let series = load_levels(r, "input", args.input)?;
    let method = args.vol.resolve(r)?;
    let estimate = estimate_vol(&series, &method)?;

    #[derive(Serialize)]
    struct Summary {
        estimate: riskindexlab_core::VolEstimate,
        observations: usize,
        label: String,
    }
    ctx.sidecar(
        "vol",
        vec![],
        Summary {
            estimate,
            observations: series.len(),
            label: series.label().to_string(),
        },
    )
}

fn cmd_index_hsrai(ctx: &Ctx, args: HsraiArgs) -> Result<(), CliError> {
    let r = &ctx.resolver;
    let underlying = load_levels(r, "input", args.input)?;
    let rates = load_rates(r, "rates", args.rates)?;
    let leverage = LeverageParams::new(
        r.require("tv", args.leverage.tv)?,
        r.require("cap", args.leverage.cap)?,
        r.get("floor", args.leverage.floor, 0.0)?,
        r.get("lag", args.leverage.lag, 2)?,
    )?;
    let config = HsraiConfig {
        leverage,
        vol_method: args.vol.resolve(r)?,
        rebalance_every: r.get("rebalance-every", args.rebalance_every, 1)?,
        base_level: r.get("base", args.base, 100.0)?,
    };
    let run = run_hsrai(&underlying, &rates, &config)?;
    let levels_csv = level_series_csv(ctx, "hsrai_levels", &run.dates, &run.levels)?;
    ctx.sidecar("index hsrai", vec![levels_csv], RunSummary::new(&run))
}

fn cmd_index_sprci(ctx: &Ctx, args: SprciArgs) -> Result<(), CliError> {
    let r = &ctx.resolver;
    let underlying = load_levels(r, "input", args.input)?;
    let accrual_mode = r.get("accrual", args.accrual, "simple".to_string())?;
    let accrual = match accrual_mode.as_str() {
        "simple" => AccrualMode::SimpleRate {
            rates: load_rates(r, "rates", args.rates)?,
        },
        "roll-3m" => AccrualMode::Roll3m {
            ir3m: load_rates(r, "ir3m", args.ir3m)?,
            ir2m: load_rates(r, "ir2m", args.ir2m)?,
        },
        other => {
            return Err(CliError::input(format!(
                "unknown accrual `{other}` (use simple or roll-3m)"
            )))
        }
    };
    let leverage = LeverageParams::new(
        r.require("tv", args.leverage.tv)?,
        r.require("cap", args.leverage.cap)?,
        r.get("floor", args.leverage.floor, 0.0)?,
        r.get("lag", args.leverage.lag, 2)?,
    )?;
    let config = SprciConfig {
        leverage,
        vol_method: args.vol.resolve(r)?,
        rebalance_every: r.get("rebalance-every", args.rebalance_every, 1)?,
        base_level: r.get("base", args.base, 100.0)?,
    };
    let run = run_sprci(&underlying, &config, &accrual)?;
    let levels_csv = level_series_csv(ctx, "sprci_levels", &run.dates, &run.levels)?;
    ctx.sidecar("index sprci", vec![levels_csv], RunSummary::new(&run))
}

fn cmd_index_djrri(ctx: &Ctx, args: DjrriArgs) -> Result<(), CliError> {
    let r = &ctx.resolver;
    let stocks = load_levels(r, "stocks", args.stocks)?;
    let bonds = load_levels(r, "bonds", args.bonds)?;
    let cash = load_levels(r, "cash", args.cash)?;
    let expected_raw = r.get(
        "expected-returns",
        args.expected_returns,
        "0.08,0.04,0.01".to_string(),
    )?;
    let expected: Vec<f64> = expected_raw
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::input(format!("cannot parse --expected-returns `{expected_raw}`")))?;
    if expected.len() != 3 {
        return Err(CliError::input(
            "--expected-returns needs three values: stocks,bonds,cash",
        ));
    }
    let measure_raw = r.get("risk-measure", args.risk_measure, "semivariance".to_string())?;
    let risk_measure = match measure_raw.as_str() {
        "semivariance" => RiskMeasure::Semivariance,
        "semideviation" => RiskMeasure::Semideviation,
        other => {
            return Err(CliError::input(format!(
                "unknown risk measure `{other}` (use semivariance or semideviation)"
            )))
        }
    };
    let config = DjrriConfig {
        risk_fraction: r.require("risk-fraction", args.risk_fraction)?,
        window: r.get("window", args.window, 36)?,
        risk_measure,
        base_level: r.get("base", args.base, 100.0)?,
    };
    let inputs = CmacInputs {
        stocks,
        bonds,
        cash,
        expected_returns: [expected[0], expected[1], expected[2]],
    };
    let result = run_djrri(&inputs, &config)?;

    let mut table = Table::new(&[
        "date",
        "stocks",
        "bonds",
        "cash",
        "all_stock_risk",
        "target_risk",
        "achieved_risk",
        "target_unattainable",
    ]);
    for a in &result.allocations {
        table.push(vec![
            a.as_of.format("%Y-%m-%d").to_string(),
            num(a.weights[0]),
            num(a.weights[1]),
            num(a.weights[2]),
            num(a.all_stock_risk),
            num(a.target_risk),
            num(a.achieved_risk),
            a.target_unattainable.to_string(),
        ]);
    }
    let alloc_artifact = table.write(&ctx.out_dir, "djrri_allocations", ctx.format)?;
    let levels_csv = level_series_csv(
        ctx,
        "djrri_levels",
        result.composite.dates(),
        result.composite.levels(),
    )?;

    #[derive(Serialize)]
    struct Summary {
        config: DjrriConfig,
        months: usize,
        final_level: f64,
        allocations: Vec<riskindexlab_core::engines::CmacAllocation>,
    }
    ctx.sidecar(
        "index djrri",
        vec![alloc_artifact, levels_csv],
        Summary {
            config,
            months: result.allocations.len(),
            final_level: *result.composite.levels().last().unwrap_or(&f64::NAN),
            allocations: result.allocations,
        },
    )
}

fn cmd_index_stablerisk(ctx: &Ctx, args: StableriskArgs) -> Result<(), CliError> {
    let r = &ctx.resolver;
    if args.contracts.len() < 2 {
        return Err(CliError::input(
            "--contracts needs at least two level CSVs",
        ));
    }
    let mut contracts = Vec::new();
    for (i, path) in args.contracts.iter().enumerate() {
        let resolved = r.require_path(&format!("contract-{i}"), Some(path.clone()))?;
        contracts.push(ingest_csv(&resolved, &ColumnSpec::default())?);
    }
    let params = StableRiskParams {
        target_vol: r.get("tv", args.tv, 0.10)?,
        rebalance_threshold: r.get("threshold", args.threshold, 0.25)?,
        cost_rate: r.get("cost-rate", args.cost_rate, 5e-4)?,
        cash_rate: r.get("cash-rate", args.cash_rate, 0.02)?,
        vol_method: args.vol.resolve(r)?,
        cov_window: r.get("cov-window", args.cov_window, 42)?,
        realized_window: r.get("realized-window", args.realized_window, 21)?,
        initial_value: 100.0,
    };
    let run = simulate_stablerisk(&contracts, &params)?;

    let mut steps = Table::new(&["date", "value", "pnl", "accrual", "costs", "rebalanced"]);
    for s in &run.steps {
        steps.push(vec![
            s.date.format("%Y-%m-%d").to_string(),
            num(s.value),
            num(s.pnl),
            num(s.accrual),
            num(s.costs),
            s.rebalanced.to_string(),
        ]);
    }
    let steps_artifact = steps.write(&ctx.out_dir, "stablerisk_steps", ctx.format)?;

    let mut vol = Table::new(&["date", "realized_vol"]);
    for (d, v) in &run.vol_track {
        vol.push(vec![d.format("%Y-%m-%d").to_string(), num(*v)]);
    }
    let vol_artifact = vol.write(&ctx.out_dir, "stablerisk_vol", ctx.format)?;

    #[derive(Serialize)]
    struct Summary {
        params: StableRiskParams,
        contracts: usize,
        steps: usize,
        final_value: f64,
        positions: Vec<Vec<f64>>,
    }
    ctx.sidecar(
        "index stablerisk",
        vec![steps_artifact, vol_artifact],
        Summary {
            params: params.clone(),
            contracts: contracts.len(),
            steps: run.steps.len(),
            final_value: run.final_value(),
            positions: run.steps.iter().map(|s| s.positions.clone()).collect(),
        },
    )
}

fn cmd_diagnose_table1(ctx: &Ctx, args: Table1Args) -> Result<(), CliError> {
    let r = &ctx.resolver;
    let table = lf_sensitivity_table(
        r.require("tv", args.tv)?,
        r.get("rv-min", args.rv_min, 0.08)?,
        r.get("rv-max", args.rv_max, 0.48)?,
        r.get("step", args.step, 0.01)?,
        r.get("cap", args.cap, f64::INFINITY)?,
        r.get("floor", args.floor, 0.0)?,
    )?;
    let mut out = Table::new(&["tv", "rv", "delta_rv", "lf", "delta_lf"]);
    for row in &table.rows {
        out.push(vec![
            num(row.target_vol),
            num(row.realized_vol),
            num(row.delta_rv),
            num(row.leverage),
            num(row.delta_lf),
        ]);
    }
    let artifact = out.write(&ctx.out_dir, "table1", ctx.format)?;

    #[derive(Serialize)]
    struct Summary {
        rows: usize,
        first_lf: f64,
        last_lf: f64,
    }
    ctx.sidecar(
        "diagnose table1",
        vec![artifact],
        Summary {
            rows: table.rows.len(),
            first_lf: table.rows.first().map(|r| r.leverage).unwrap_or(f64::NAN),
            last_lf: table.rows.last().map(|r| r.leverage).unwrap_or(f64::NAN),
        },
    )
}

fn cmd_diagnose_leakage(ctx: &Ctx, args: LeakageArgs) -> Result<(), CliError> {
    let r = &ctx.resolver;
    let lags_flag = if args.lags.is_empty() {
        None
    } else {
        Some(
            args.lags
                .iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join(","),
        )
    };
    let lags_raw = r.get("lags", lags_flag, "1,3,5,10".to_string())?;
    let lags: Vec<usize> = lags_raw
        .split(',')
        .map(|p| p.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::input(format!("cannot parse lags `{lags_raw}`")))?;
    let leverage = LeverageParams::new(
        r.get("tv", args.leverage.tv, 0.15)?,
        r.get("cap", args.leverage.cap, 1.5)?,
        r.get("floor", args.leverage.floor, 0.0)?,
        r.get("lag", args.leverage.lag, 2)?,
    )?;
    let vol = args.vol.resolve(r)?;
    let mut scenario = LeakageScenario::reference(ctx.seed);
    scenario.flat_rate = r.get("flat-rate", args.flat_rate, scenario.flat_rate)?;
    let report = leakage_experiment(&scenario, &lags, &leverage, &vol)?;

    let mut out = Table::new(&["lag", "realized_vol"]);
    for (lag, v) in report.lags.iter().zip(&report.realized_vols) {
        out.push(vec![lag.to_string(), num(*v)]);
    }
    let artifact = out.write(&ctx.out_dir, "leakage", ctx.format)?;
    ctx.sidecar("diagnose leakage", vec![artifact], report)
}

fn cmd_diagnose_noise(ctx: &Ctx, args: NoiseArgs) -> Result<(), CliError> {
    let r = &ctx.resolver;
    let index = load_levels(r, "index", args.index)?;
    let market = load_levels(r, "market", args.market)?;
    let window = r.get("window", args.window, 21)?;
    let points = noise(&index, &market, window)?;

    let mut out = Table::new(&["date", "noise"]);
    for (d, v) in &points {
        out.push(vec![d.format("%Y-%m-%d").to_string(), num(*v)]);
    }
    let artifact = out.write(&ctx.out_dir, "noise", ctx.format)?;

    #[derive(Serialize)]
    struct Summary {
        window: usize,
        points: usize,
        mean_abs_noise: f64,
    }
    let mean_abs = if points.is_empty() {
        0.0
    } else {
        points.iter().map(|(_, v)| v.abs()).sum::<f64>() / points.len() as f64
    };
    ctx.sidecar(
        "diagnose noise",
        vec![artifact],
        Summary {
            window,
            points: points.len(),
            mean_abs_noise: mean_abs,
        },
    )
}

fn cmd_diagnose_compound(ctx: &Ctx, args: CompoundArgs) -> Result<(), CliError> {
    let r = &ctx.resolver;
    let matrix = match r.get_opt("input", args.input.map(PathDisplay))? {
        Some(PathDisplay(path)) => {
            if !path.exists() {
                return Err(CliError::input(format!(
                    "input file does not exist: {}",
                    path.display()
                )));
            }
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
            let mut rows = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let row: Vec<f64> = line
                    .split(',')
                    .map(|cell| cell.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| {
                        CliError::input(format!("{}:{}: bad number", path.display(), lineno + 1))
                    })?;
                rows.push(row);
            }
            rows
        }
        None => reference_return_grid(),
    };
    let table = compound_table(&matrix)?;

    let periods = matrix[0].len();
    let mut headers: Vec<String> = vec!["row".to_string()];
    headers.extend((1..=periods).map(|p| format!("r{p}")));
    headers.extend(
        ["compounded", "compounded_delta", "std_dev", "std_dev_delta"]
            .iter()
            .map(|s| s.to_string()),
    );
    let header_refs: Vec<&str> = headers.iter().map(|h| h.as_str()).collect();
    let mut out = Table::new(&header_refs);
    for (i, row) in table.rows.iter().enumerate() {
        let mut cells = vec![format!("R{}", i + 1)];
        cells.extend(row.returns.iter().map(|v| num(*v)));
        cells.push(num(row.compounded));
        cells.push(num(row.compounded_delta));
        cells.push(num(row.std_dev));
        cells.push(num(row.std_dev_delta));
        out.push(cells);
    }
    let artifact = out.write(&ctx.out_dir, "compound", ctx.format)?;

    #[derive(Serialize)]
    struct Summary {
        rows: usize,
        periods: usize,
        column_std: Vec<f64>,
    }
    ctx.sidecar(
        "diagnose compound",
        vec![artifact],
        Summary {
            rows: table.rows.len(),
            periods,
            column_std: table.column_std,
        },
    )
}

fn cmd_diagnose_bias(ctx: &Ctx, args: BiasArgs) -> Result<(), CliError> {
    let r = &ctx.resolver;
    let index = load_levels(r, "index", args.index)?;
    let market = load_levels(r, "market", args.market)?;
    let b = bias_series(&index, &market)?;

    let mut out = Table::new(&[
        "date",
        "index_rebased",
        "market_rebased",
        "bias",
        "delta_bias",
        "noise",
    ]);
    for (t, d) in b.dates.iter().enumerate() {
        let (delta, nz) = if t == 0 {
            (String::new(), String::new())
        } else {
            (num(b.delta_bias[t - 1]), num(b.noise[t - 1]))
        };
        out.push(vec![
            d.format("%Y-%m-%d").to_string(),
            num(b.index_rebased[t]),
            num(b.market_rebased[t]),
            num(b.bias[t]),
            delta,
            nz,
        ]);
    }
    let artifact = out.write(&ctx.out_dir, "bias", ctx.format)?;

    #[derive(Serialize)]
    struct Summary {
        points: usize,
        final_bias: f64,
        co_movement: Option<f64>,
    }
    ctx.sidecar(
        "diagnose bias",
        vec![artifact],
        Summary {
            points: b.dates.len(),
            final_bias: *b.bias.last().unwrap_or(&f64::NAN),
            co_movement: b.co_movement,
        },
    )
}
