//! Command-line front end: argument parsing, JSON config loading, single
//! solves, Monte-Carlo sweeps, and CSV/JSON emission for external plotting.
//!
//! Exit codes: 0 success, 2 usage error, 3 config file not found, 4 I/O
//! error, 1 any other failure.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{evaluate, Instance, SchedulingPolicy};
use crate::oracle;
use crate::sim::{self, Problem, Scheme, SimConfig, SweepResult};
use crate::specialfn::lambert_w0;
use crate::stm::solve_stm;
use crate::ttm::solve_ttm;

/// Seed fallback when neither the command line nor the config file sets one.
pub const SEED_ENV_VAR: &str = "WPCN_SEED";

const DEFAULT_SEED: u64 = 1;

// ---------------------------------------------------------------------------
// Argument schema
// ---------------------------------------------------------------------------

/// Parsed command line.
#[derive(Debug, Parser)]
#[command(
    name = "wpcn",
    version,
    about = "Time-allocation solvers and Monte-Carlo sweeps for wireless-powered networks"
)]
pub struct CommandSpec {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one sum-throughput instance given per-user effective SNRs.
    SolveStm(SolveArgs),
    /// Solve one total-time instance given per-user effective SNRs/demands.
    SolveTtm(SolveArgs),
    /// Monte-Carlo sweep over access-point power (or user count).
    Sweep(SweepArgs),
    /// Paired comparison of increasing- vs decreasing-SNR scheduling.
    CompareScheduling(SweepArgs),
    /// Solver-vs-oracle verification battery; exits nonzero on any failure.
    OracleCheck {
        /// Seed for the randomized checks.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Comma-separated effective SNRs, one per user in transmission order.
    #[arg(long, value_delimiter = ',', required = true)]
    pub gammas: Vec<f64>,
    /// Comma-separated per-user demands in nats (time minimization only),
    /// default 1 for every user.
    #[arg(long, value_delimiter = ',')]
    pub demands: Option<Vec<f64>>,
    /// Unit for reported throughput objectives.
    #[arg(long, value_enum, default_value_t = RateUnit::Nats)]
    pub unit: RateUnit,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// JSON config file; inline flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub users: Option<usize>,
    /// Comma-separated sweep points in dB.
    #[arg(long, value_delimiter = ',')]
    pub power_db: Option<Vec<f64>>,
    #[arg(long)]
    pub realizations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated policies: as-given, increasing-snr, decreasing-snr.
    #[arg(long, value_delimiter = ',')]
    pub scheduling: Option<Vec<String>>,
    /// Comma-separated schemes, e.g. stm-optimal,stm-equal.
    #[arg(long, value_delimiter = ',')]
    pub schemes: Option<Vec<String>>,
    /// Problem family: stm or ttm.
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub demand: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub noise_power: Option<f64>,
    #[arg(long)]
    pub channel_mean: Option<f64>,
    /// Sweep the user count over this comma-separated list instead of power
    /// (power is then fixed at the first configured point).
    #[arg(long, value_delimiter = ',')]
    pub sweep_users: Option<Vec<usize>>,
    /// Worker threads for realizations; output is identical for any count.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    #[arg(long, value_enum, default_value_t = RateUnit::Nats)]
    pub unit: RateUnit,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateUnit {
    /// Natural-log units, matching the internal math.
    Nats,
    /// Divide throughputs by ln 2 on output.
    Bits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Parses an argument vector into a [`CommandSpec`]; unknown flags are
/// errors. Exposed separately from [`run`] so parsing is testable.
pub fn parse_args<I, T>(argv: I) -> std::result::Result<CommandSpec, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    CommandSpec::try_parse_from(argv)
}

/// Full CLI entry point; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let spec = match parse_args(argv) {
        Ok(spec) => spec,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = err.print();
            return code;
        }
    };
    match execute(spec) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::FileNotFound { .. } => 3,
                Error::Io(_) => 4,
                _ => 1,
            }
        }
    }
}

pub fn execute(spec: CommandSpec) -> Result<()> {
    match spec.command {
        Command::SolveStm(args) => solve_stm_command(args),
        Command::SolveTtm(args) => solve_ttm_command(args),
        Command::Sweep(args) => sweep_command(args, false),
        Command::CompareScheduling(args) => sweep_command(args, true),
        Command::OracleCheck { seed } => oracle_check(seed.unwrap_or_else(env_seed)),
    }
}

// ---------------------------------------------------------------------------
// Config resolution
// ---------------------------------------------------------------------------

/// On-disk mirror of [`SimConfig`] with every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    num_users: Option<usize>,
    hap_power_db: Option<Vec<f64>>,
    num_realizations: Option<usize>,
    seed: Option<u64>,
    scheduling: Option<Vec<SchedulingPolicy>>,
    schemes: Option<Vec<Scheme>>,
    problem: Option<Problem>,
    demand: Option<f64>,
    eta: Option<f64>,
    noise_power: Option<f64>,
    channel_mean: Option<f64>,
}

fn load_config_file(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|err| {
        if err.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound {
                path: path.display().to_string(),
            }
        } else {
            Error::Io(err)
        }
    })?;
    serde_json::from_str(&text).map_err(|err| Error::config(format!("{}: {err}", path.display())))
}

fn env_seed() -> u64 {
    std::env::var(SEED_ENV_VAR)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

fn parse_list<T: std::str::FromStr<Err = Error>>(items: &[String]) -> Result<Vec<T>> {
    items.iter().map(|s| s.parse()).collect()
}

/// Builds the effective [`SimConfig`]: inline flags beat the config file,
/// which beats the `WPCN_SEED` environment fallback and built-in defaults.
fn resolve_config(args: &SweepArgs) -> Result<SimConfig> {
    let file = match &args.config {
        Some(path) => load_config_file(path)?,
        None => ConfigFile::default(),
    };
    let defaults = SimConfig::default();

    let problem = match &args.problem {
        Some(p) => p.parse()?,
        None => file.problem.unwrap_or(defaults.problem),
    };
    let schemes = match &args.schemes {
        Some(list) => parse_list(list)?,
        None => file.schemes.unwrap_or_else(|| match problem {
            Problem::Stm => vec![Scheme::StmOptimal, Scheme::StmEqual],
            Problem::Ttm => vec![Scheme::TtmOptimal, Scheme::TtmTangent],
        }),
    };
    let scheduling = match &args.scheduling {
        Some(list) => list
            .iter()
            .map(|s| s.parse::<SchedulingPolicy>())
            .collect::<Result<Vec<_>>>()?,
        None => file.scheduling.unwrap_or(defaults.scheduling),
    };

    let config = SimConfig {
        num_users: args.users.or(file.num_users).unwrap_or(defaults.num_users),
        hap_power_db: args
            .power_db
            .clone()
            .or(file.hap_power_db)
            .unwrap_or(defaults.hap_power_db),
        num_realizations: args
            .realizations
            .or(file.num_realizations)
            .unwrap_or(defaults.num_realizations),
        seed: args.seed.or(file.seed).unwrap_or_else(env_seed),
        scheduling,
        schemes,
        problem,
        demand: args.demand.or(file.demand).unwrap_or(defaults.demand),
        eta: args.eta.or(file.eta).unwrap_or(defaults.eta),
        noise_power: args
            .noise_power
            .or(file.noise_power)
            .unwrap_or(defaults.noise_power),
        channel_mean: args
            .channel_mean
            .or(file.channel_mean)
            .unwrap_or(defaults.channel_mean),
    };
    config.validate()?;
    Ok(config)
}

// ---------------------------------------------------------------------------
// Output formatting
// ---------------------------------------------------------------------------

/// 12 significant digits, scientific notation, '.' decimal point.
fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Renders a sweep as CSV with the fixed column set
/// `sweep_value,scheme,policy,mean_objective,std_error,n`, LF line endings.
/// Throughput objectives are converted to bits on request; times never are.
pub fn sweep_csv(result: &SweepResult, unit: RateUnit) -> String {
    let mut out = String::from("sweep_value,scheme,policy,mean_objective,std_error,n\n");
    for row in &result.rows {
        let factor = match (unit, row.scheme.problem()) {
            (RateUnit::Bits, Problem::Stm) => 1.0 / std::f64::consts::LN_2,
            _ => 1.0,
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            sig12(row.sweep_value),
            row.scheme,
            row.policy,
            sig12(row.mean_objective * factor),
            sig12(row.std_error * factor),
            row.num_realizations
        ));
    }
    out
}

fn write_output(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(path) => std::fs::write(path, contents)?,
        None => {
            let stdout = std::io::stdout();
            stdout.lock().write_all(contents.as_bytes())?;
        }
    }
    Ok(())
}

/// JSON document for a single solve; carries enough of the instance to
/// re-evaluate the reported objective.
#[derive(Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub problem: String,
    pub unit: String,
    pub gammas: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub demands: Option<Vec<f64>>,
    pub tau: Vec<f64>,
    pub objective: f64,
    pub diagnostics: serde_json::Value,
}

fn solve_stm_report(gammas: &[f64], unit: RateUnit) -> Result<SolveReport> {
    let inst = Instance::from_gammas(gammas)?;
    let sol = solve_stm(&inst)?;
    let diag = oracle::kkt_residuals(&inst, &sol.allocation)?;
    let max_residual = diag
        .stationarity_residuals
        .iter()
        .fold(0.0_f64, |acc, r| acc.max(r.abs()));
    let factor = match unit {
        RateUnit::Nats => 1.0,
        RateUnit::Bits => 1.0 / std::f64::consts::LN_2,
    };
    Ok(SolveReport {
        problem: "stm".into(),
        unit: match unit {
            RateUnit::Nats => "nats".into(),
            RateUnit::Bits => "bits".into(),
        },
        gammas: gammas.to_vec(),
        demands: None,
        tau: sol.allocation.tau().to_vec(),
        objective: sol.total_throughput * factor,
        diagnostics: serde_json::json!({
            "kkt_lambda": diag.lambda,
            "max_stationarity_residual": max_residual,
            "sum_tau": sol.allocation.total(),
        }),
    })
}

fn solve_ttm_report(gammas: &[f64], demands: &[f64]) -> Result<SolveReport> {
    let inst = Instance::from_gammas_demands(gammas, demands)?;
    let sol = solve_ttm(&inst)?;
    let eval = evaluate(&inst, &sol.allocation)?;
    let min_slack = eval
        .constraint_slack
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    Ok(SolveReport {
        problem: "ttm".into(),
        unit: "time".into(),
        gammas: gammas.to_vec(),
        demands: Some(demands.to_vec()),
        tau: sol.allocation.tau().to_vec(),
        objective: sol.total_time,
        diagnostics: serde_json::json!({
            "pivot_k": sol.pivot_k,
            "min_constraint_slack": min_slack,
            "last_constraint_slack": eval.constraint_slack[eval.constraint_slack.len() - 1],
        }),
    })
}

fn solve_stm_command(args: SolveArgs) -> Result<()> {
    if args.demands.is_some() {
        return Err(Error::config("--demands only applies to solve-ttm"));
    }
    let report = solve_stm_report(&args.gammas, args.unit)?;
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::config(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_output(args.output.as_deref(), &text)
}

fn solve_ttm_command(args: SolveArgs) -> Result<()> {
    let demands = args
        .demands
        .clone()
        .unwrap_or_else(|| vec![1.0; args.gammas.len()]);
    let report = solve_ttm_report(&args.gammas, &demands)?;
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::config(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_output(args.output.as_deref(), &text)
}

fn sweep_command(args: SweepArgs, compare_scheduling: bool) -> Result<()> {
    let mut config = resolve_config(&args)?;
    if compare_scheduling {
        // Paired policy comparison: both orders, optimal scheme only unless
        // the caller asked for more.
        config.scheduling = vec![
            SchedulingPolicy::IncreasingSnr,
            SchedulingPolicy::DecreasingSnr,
        ];
        if args.schemes.is_none() {
            config.schemes = vec![match config.problem {
                Problem::Stm => Scheme::StmOptimal,
                Problem::Ttm => Scheme::TtmOptimal,
            }];
        }
        config.validate()?;
    }

    let result = match &args.sweep_users {
        Some(k_range) => sim::sweep_users_threaded(&config, k_range, args.threads)?,
        None => sim::run_sweep_threaded(&config, args.threads)?,
    };

    let text = match args.format {
        OutputFormat::Csv => sweep_csv(&result, args.unit),
        OutputFormat::Json => {
            let mut t = serde_json::to_string_pretty(&result.rows)
                .map_err(|e| Error::config(format!("serialization failed: {e}")))?;
            t.push('\n');
            t
        }
    };
    write_output(args.output.as_deref(), &text)
}

// ---------------------------------------------------------------------------
// oracle-check
// ---------------------------------------------------------------------------

struct CheckTable {
    failures: usize,
}

impl CheckTable {
    fn report(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures += 1;
        }
    }
}

/// Runs the solver-vs-oracle battery used in CI and prints one line per
/// check.
fn oracle_check(seed: u64) -> Result<()> {
    use crate::sim::stream_exponential;
    let mut table = CheckTable { failures: 0 };

    // Lambert W inverse residual across the domain.
    let mut worst = 0.0_f64;
    for i in 0..=2000 {
        let s = 10f64.powf(-18.0 + 24.0 * i as f64 / 2000.0);
        let x = crate::specialfn::BRANCH_POINT + s;
        let w = lambert_w0(x)?;
        worst = worst.max((w * w.exp() - x).abs() / 1f64.max(x.abs()));
    }
    table.report(
        "lambert-w residual",
        worst <= 1e-12,
        format!("max relative residual {worst:.3e}"),
    );

    // Closed-form anchor: K=1, γ=1.
    let single = Instance::from_gammas(&[1.0])?;
    let sol = solve_stm(&single)?;
    let gap = (sol.total_throughput - 1.0 / std::f64::consts::E).abs();
    table.report("stm K=1 anchor", gap <= 1e-10, format!("gap {gap:.3e}"));

    // Grid oracle cross-validation at K=2.
    let pair = Instance::from_gammas(&[1.0, 1.0])?;
    let (_, grid) = oracle::stm_grid_oracle(&pair, 1e-3)?;
    let solved = solve_stm(&pair)?.total_throughput;
    let gap = (grid - solved).abs();
    table.report("stm K=2 vs grid", gap <= 1e-4, format!("gap {gap:.3e}"));

    // KKT stationarity on random instances.
    let mut worst = 0.0_f64;
    for trial in 0..100u64 {
        let k = 1 + (trial % 10) as usize;
        let power = if trial % 2 == 0 { 1.0 } else { 10.0 };
        let gammas: Vec<f64> = (0..k)
            .map(|i| stream_exponential(1.0, seed ^ trial, i as u64) * power)
            .collect();
        let inst = Instance::from_gammas(&gammas)?;
        let sol = solve_stm(&inst)?;
        let diag = oracle::kkt_residuals(&inst, &sol.allocation)?;
        for r in &diag.stationarity_residuals {
            worst = worst.max(r.abs());
        }
        worst = worst.max(diag.primal_feasibility.abs());
    }
    table.report(
        "stm KKT stationarity",
        worst <= 1e-8,
        format!("max residual {worst:.3e}"),
    );

    // Projected-gradient agreement.
    let mut worst = 0.0_f64;
    for trial in 0..25u64 {
        let k = 1 + (trial % 6) as usize;
        let gammas: Vec<f64> = (0..k)
            .map(|i| 0.05 + stream_exponential(1.0, seed ^ (500 + trial), i as u64) * 10.0)
            .collect();
        let inst = Instance::from_gammas(&gammas)?;
        let solved = solve_stm(&inst)?.total_throughput;
        let tau = oracle::stm_projected_gradient(&inst, 200_000, 1e-12)?;
        let value = evaluate(&inst, &tau)?.total_throughput;
        worst = worst.max((solved - value).abs());
    }
    table.report(
        "stm projected-gradient gap",
        worst <= 1e-6,
        format!("max gap {worst:.3e}"),
    );

    // TTM anchors and grid cross-validation.
    let sol = solve_ttm(&single)?;
    let gap = (sol.total_time - std::f64::consts::E).abs();
    table.report("ttm K=1 anchor", gap <= 1e-9, format!("gap {gap:.3e}"));

    let mut worst = 0.0_f64;
    for trial in 0..5u64 {
        let gammas = if trial == 0 {
            vec![1.0, 1.0]
        } else {
            (0..2)
                .map(|i| 0.3 + stream_exponential(1.0, seed ^ (900 + trial), i) * 5.0)
                .collect()
        };
        let inst = Instance::from_gammas(&gammas)?;
        let solved = solve_ttm(&inst)?.total_time;
        let (_, grid) = oracle::ttm_grid_oracle(&inst, 3e-4)?;
        worst = worst.max((grid - solved).abs());
        if grid < solved - 1e-9 {
            worst = f64::INFINITY;
        }
    }
    table.report(
        "ttm K=2 vs grid",
        worst <= 1e-3,
        format!("max gap {worst:.3e}"),
    );

    // Per-realization dominance across random instances.
    let mut violations = 0usize;
    for trial in 0..300u64 {
        let k = 1 + (trial % 8) as usize;
        let gammas: Vec<f64> = (0..k)
            .map(|i| 0.05 + stream_exponential(1.0, seed ^ (7000 + trial), i as u64) * 10.0)
            .collect();
        let inst = Instance::from_gammas(&gammas)?;
        let stm = solve_stm(&inst)?.total_throughput;
        if crate::heuristics::stm_equal(&inst)?.objective > stm + 1e-9
            || crate::heuristics::stm_fixed_tdma(&inst)?.objective > stm + 1e-9
        {
            violations += 1;
        }
        let ttm = solve_ttm(&inst)?.total_time;
        if crate::heuristics::ttm_equal(&inst)?.objective < ttm - 1e-9
            || crate::heuristics::ttm_tangent(&inst)?.objective < ttm - 1e-9
        {
            violations += 1;
        }
    }
    table.report(
        "optimal dominates heuristics",
        violations == 0,
        format!("{violations} violations over 300 instances"),
    );

    if table.failures == 0 {
        println!("all checks passed");
        Ok(())
    } else {
        Err(Error::Numerical {
            reason: format!("{} oracle check(s) failed", table.failures),
        })
    }
}
