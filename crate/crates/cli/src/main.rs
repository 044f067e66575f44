//! Command-line front end: operating characteristics, design search, curve
//! and surface grids, Stage-1 decision-time distributions, Monte Carlo
//! verification, and regeneration of the reference design tables.
//!
//! Exit codes: 0 success, 2 validation error, 3 infeasible search,
//! 64 usage error.

mod config;
mod tables;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use twostage::design::{Design, Rates};
use twostage::duration;
use twostage::oc;
use twostage::report::fmt6;
use twostage::search::{self, BudgetMode, Criterion, SearchSpec, SuggestedFilter};
use twostage::sim::{simulate, SimConfig, SimReport};

use config::{resolve, FileConfig};

#[derive(Debug)]
enum AppError {
    Lib(twostage::Error),
    Config(String),
    Io(std::io::Error),
}

impl From<twostage::Error> for AppError {
    fn from(e: twostage::Error) -> Self {
        AppError::Lib(e)
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e)
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Lib(e) => write!(f, "{e}"),
            AppError::Config(msg) => write!(f, "validation error: {msg}"),
            AppError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl AppError {
    fn exit_code(&self) -> i32 {
        match self {
            AppError::Lib(twostage::Error::Infeasible(_))
            | AppError::Lib(twostage::Error::EmptyCandidates) => 3,
            AppError::Lib(_) | AppError::Config(_) => 2,
            AppError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CurveKind {
    Power,
    EarlyStop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BudgetModeArg {
    ExactTotal,
    UpToTotal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CriterionArg {
    HighestAlpha,
    Optimal,
    MinimaxEarlyStop,
    Balanced,
    Suggested,
}

impl From<BudgetModeArg> for BudgetMode {
    fn from(b: BudgetModeArg) -> Self {
        match b {
            BudgetModeArg::ExactTotal => BudgetMode::ExactTotal,
            BudgetModeArg::UpToTotal => BudgetMode::UpToTotal,
        }
    }
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::HighestAlpha => Criterion::HighestAlpha,
            CriterionArg::Optimal => Criterion::Optimal,
            CriterionArg::MinimaxEarlyStop => Criterion::MinimaxEarlyStop,
            CriterionArg::Balanced => Criterion::Balanced,
            CriterionArg::Suggested => Criterion::Suggested,
        }
    }
}

/// Design-defining flags shared by several subcommands.
#[derive(Debug, clap::Args)]
struct DesignArgs {
    #[arg(long)]
    n1: Option<u64>,
    #[arg(long)]
    n2: Option<u64>,
    #[arg(long)]
    r1: Option<u64>,
    #[arg(long)]
    r2: Option<u64>,
    #[arg(long)]
    t1: Option<f64>,
    #[arg(long)]
    t2: Option<f64>,
}

impl DesignArgs {
    fn build(&self, cfg: &FileConfig) -> Result<Design, AppError> {
        let design = Design {
            n1: resolve(self.n1, cfg.n1, None, "n1")?,
            n2: resolve(self.n2, cfg.n2, None, "n2")?,
            r1: resolve(self.r1, cfg.r1, None, "r1")?,
            r2: resolve(self.r2, cfg.r2, None, "r2")?,
            t1: self.t1.or(cfg.t1),
            t2: self.t2.or(cfg.t2),
        };
        Ok(design.validate()?)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "twostage",
    about = "Exact design calculations for two-stage trials with nested early-stopping and efficacy criteria",
    version
)]
struct Cli {
    /// Output format (default: $TWOSTAGE_OUTPUT, then csv)
    #[arg(long, global = true, value_enum)]
    output: Option<OutputFormat>,
    /// Write the report here instead of standard output
    #[arg(long, global = true)]
    output_path: Option<PathBuf>,
    /// Flat key-value config file; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Operating characteristics of one design at one rate pair
    Oc {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long)]
        p1: Option<f64>,
        #[arg(long)]
        p2: Option<f64>,
    },
    /// Enumerate the design space and apply a selection criterion
    Search {
        #[arg(long)]
        total_n: Option<u64>,
        #[arg(long, value_enum)]
        budget_mode: Option<BudgetModeArg>,
        /// Significance cap for feasibility
        #[arg(long)]
        alpha: Option<f64>,
        /// Null safety rate p1
        #[arg(long)]
        p1: Option<f64>,
        /// Null efficacy rate p2
        #[arg(long)]
        p2: Option<f64>,
        /// Alternative safety rate (defaults to the null p1)
        #[arg(long)]
        alt_p1: Option<f64>,
        /// Alternative efficacy rate
        #[arg(long)]
        alt_p2: Option<f64>,
        #[arg(long, value_enum)]
        criterion: Option<CriterionArg>,
        #[arg(long)]
        alpha_window_low: Option<f64>,
        #[arg(long)]
        alpha_window_high: Option<f64>,
        #[arg(long)]
        early_stop_window_low: Option<f64>,
        #[arg(long)]
        early_stop_window_high: Option<f64>,
        /// Drop the n1 <= n2/2 cap from the suggested filter
        #[arg(long)]
        no_stage1_cap: bool,
    },
    /// Power curve over p2 (or early-termination curve over p1)
    Curve {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long, value_enum)]
        kind: Option<CurveKind>,
        /// Fixed safety rate (power curves only)
        #[arg(long)]
        p1: Option<f64>,
        #[arg(long)]
        grid_step: Option<f64>,
    },
    /// Rejection probability over the (p1, p2) grid with p2 <= p1
    Surface {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long)]
        grid_step: Option<f64>,
    },
    /// Distribution of the smallest Stage-1 sample needed for a decision
    Stage1 {
        #[arg(long)]
        n1: Option<u64>,
        #[arg(long)]
        r1: Option<u64>,
        #[arg(long)]
        p1: Option<f64>,
    },
    /// Monte Carlo verification of one design at one rate pair
    Simulate {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long)]
        p1: Option<f64>,
        #[arg(long)]
        p2: Option<f64>,
        #[arg(long)]
        replicates: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Regenerate the reference design catalog (tables 2 and 3)
    Tables,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    64
                }
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn output_format(flag: Option<OutputFormat>, cfg: &FileConfig) -> Result<OutputFormat, AppError> {
    if let Some(f) = flag {
        return Ok(f);
    }
    let from_text = |s: &str, origin: &str| match s {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        other => Err(AppError::Config(format!(
            "unknown output format {other:?} in {origin} (expected csv or json)"
        ))),
    };
    if let Some(s) = &cfg.output {
        return from_text(s, "config");
    }
    if let Ok(s) = std::env::var("TWOSTAGE_OUTPUT") {
        return from_text(&s, "$TWOSTAGE_OUTPUT");
    }
    Ok(OutputFormat::Csv)
}

fn emit(path: Option<&PathBuf>, text: &str) -> Result<(), AppError> {
    match path {
        Some(path) => std::fs::write(path, text)?,
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn json_line(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    s.push('\n');
    s
}

/// Grid 0, step, 2 step, ... capped below `end`, then `end` itself, so the
/// last point is exact and no accumulated rounding can overshoot.
fn grid_to(end: f64, step: f64) -> Result<Vec<f64>, AppError> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(AppError::Config(format!(
            "grid step must lie in (0, 1], got {step}"
        )));
    }
    let mut grid = Vec::new();
    let mut k = 0u64;
    loop {
        let v = k as f64 * step;
        if v >= end - 1e-12 {
            break;
        }
        grid.push(v);
        k += 1;
    }
    grid.push(end);
    Ok(grid)
}

fn dispatch(cli: Cli) -> Result<(), AppError> {
    let cfg = FileConfig::load(cli.config.as_deref())?;
    let format = output_format(cli.output, &cfg)?;
    let out = cli.output_path.as_ref();

    match cli.command {
        Command::Oc { design, p1, p2 } => {
            let design = design.build(&cfg)?;
            let rates = Rates::new(
                resolve(p1, cfg.p1, None, "p1")?,
                resolve(p2, cfg.p2, None, "p2")?,
            )?;
            let oc = oc::operating_characteristics(&design, &rates)?;
            let text = match format {
                OutputFormat::Json => json_line(&serde_json::json!({
                    "design": design,
                    "rates": rates,
                    "reject_prob": oc.reject_prob,
                    "early_stop_prob": oc.early_stop_prob,
                    "ess_bound": oc.ess_bound,
                    "power_bound": oc.power_bound,
                })),
                OutputFormat::Csv => format!(
                    "reject_prob,early_stop_prob,ess_bound,power_bound\n{},{},{},{}\n",
                    fmt6(oc.reject_prob),
                    fmt6(oc.early_stop_prob),
                    fmt6(oc.ess_bound),
                    fmt6(oc.power_bound)
                ),
            };
            emit(out, &text)
        }

        Command::Search {
            total_n,
            budget_mode,
            alpha,
            p1,
            p2,
            alt_p1,
            alt_p2,
            criterion,
            alpha_window_low,
            alpha_window_high,
            early_stop_window_low,
            early_stop_window_high,
            no_stage1_cap,
        } => {
            let defaults = SuggestedFilter::default();
            let null_p1 = resolve(p1, cfg.p1, None, "p1")?;
            let spec = SearchSpec {
                total_n: resolve(total_n, cfg.total_n, None, "total-n")?,
                budget_mode: resolve(
                    budget_mode,
                    parse_budget_mode(cfg.budget_mode.as_deref())?,
                    Some(BudgetModeArg::ExactTotal),
                    "budget-mode",
                )?
                .into(),
                alpha_target: resolve(alpha, cfg.alpha, None, "alpha")?,
                null_rates: Rates::new(null_p1, resolve(p2, cfg.p2, None, "p2")?)?,
                alt_rates: Rates::new(
                    resolve(alt_p1, cfg.alt_p1, Some(null_p1), "alt-p1")?,
                    resolve(alt_p2, cfg.alt_p2, None, "alt-p2")?,
                )?,
                criterion: resolve(
                    criterion,
                    parse_criterion(cfg.criterion.as_deref())?,
                    Some(CriterionArg::Suggested),
                    "criterion",
                )?
                .into(),
                suggested_filter: SuggestedFilter {
                    alpha_window: (
                        resolve(
                            alpha_window_low,
                            cfg.alpha_window_low,
                            Some(defaults.alpha_window.0),
                            "alpha-window-low",
                        )?,
                        resolve(
                            alpha_window_high,
                            cfg.alpha_window_high,
                            Some(defaults.alpha_window.1),
                            "alpha-window-high",
                        )?,
                    ),
                    early_stop_window: (
                        resolve(
                            early_stop_window_low,
                            cfg.early_stop_window_low,
                            Some(defaults.early_stop_window.0),
                            "early-stop-window-low",
                        )?,
                        resolve(
                            early_stop_window_high,
                            cfg.early_stop_window_high,
                            Some(defaults.early_stop_window.1),
                            "early-stop-window-high",
                        )?,
                    ),
                    stage1_cap: if no_stage1_cap {
                        false
                    } else {
                        cfg.stage1_cap.unwrap_or(defaults.stage1_cap)
                    },
                },
            };
            let picked = search::search(&spec)?;
            let text = match format {
                OutputFormat::Json => {
                    let mut s = serde_json::to_string_pretty(&picked)
                        .expect("report serialization cannot fail");
                    s.push('\n');
                    s
                }
                OutputFormat::Csv => {
                    let labels: Vec<String> = (1..=picked.len()).map(|i| i.to_string()).collect();
                    search::ranked_to_csv(labels.iter().map(String::as_str).zip(picked.iter()))
                }
            };
            emit(out, &text)
        }

        Command::Curve {
            design,
            kind,
            p1,
            grid_step,
        } => {
            let design = design.build(&cfg)?;
            let step = resolve(grid_step, cfg.grid_step, Some(0.01), "grid-step")?;
            let kind = resolve(
                kind,
                parse_kind(cfg.kind.as_deref())?,
                Some(CurveKind::Power),
                "kind",
            )?;
            let text = match kind {
                CurveKind::Power => {
                    let p1 = resolve(p1, cfg.p1, None, "p1")?;
                    let curve = oc::power_curve(&design, p1, &grid_to(p1, step)?)?;
                    match format {
                        OutputFormat::Csv => curve.to_csv(),
                        OutputFormat::Json => json_line(&serde_json::to_value(&curve).unwrap()),
                    }
                }
                CurveKind::EarlyStop => {
                    let curve = oc::early_stop_curve(&design, &grid_to(1.0, step)?)?;
                    match format {
                        OutputFormat::Csv => curve.to_csv(),
                        OutputFormat::Json => json_line(&serde_json::to_value(&curve).unwrap()),
                    }
                }
            };
            emit(out, &text)
        }

        Command::Surface { design, grid_step } => {
            let design = design.build(&cfg)?;
            let step = resolve(grid_step, cfg.grid_step, Some(0.01), "grid-step")?;
            let grid = grid_to(1.0, step)?;
            let surface = oc::power_surface(&design, &grid, &grid)?;
            let text = match format {
                OutputFormat::Csv => surface.to_csv(),
                OutputFormat::Json => json_line(&serde_json::to_value(&surface).unwrap()),
            };
            emit(out, &text)
        }

        Command::Stage1 { n1, r1, p1 } => {
            let n1 = resolve(n1, cfg.n1, None, "n1")?;
            let r1 = resolve(r1, cfg.r1, None, "r1")?;
            let p1 = resolve(p1, cfg.p1, None, "p1")?;
            let design = Design::new(n1, 0, r1, 0)?;
            let dist = duration::design_duration_pmf(&design, p1)?;
            let text = match format {
                OutputFormat::Csv => dist.to_csv(),
                OutputFormat::Json => json_line(&serde_json::json!({
                    "s": dist.s,
                    "t": dist.t,
                    "p": dist.p,
                    "pmf": dist.iter().map(|(y, q)| serde_json::json!({"y": y, "probability": q})).collect::<Vec<_>>(),
                    "mean": dist.mean(),
                    "sd": dist.sd(),
                })),
            };
            emit(out, &text)
        }

        Command::Simulate {
            design,
            p1,
            p2,
            replicates,
            seed,
        } => {
            let config = SimConfig {
                replicates: resolve(replicates, cfg.replicates, None, "replicates")?,
                seed: resolve(seed, cfg.seed, None, "seed")?,
                design: design.build(&cfg)?,
                rates: Rates::new(
                    resolve(p1, cfg.p1, None, "p1")?,
                    resolve(p2, cfg.p2, None, "p2")?,
                )?,
            };
            let report = simulate(&config)?;
            let text = match format {
                OutputFormat::Json => {
                    let mut s = serde_json::to_string_pretty(&report)
                        .expect("report serialization cannot fail");
                    s.push('\n');
                    s
                }
                OutputFormat::Csv => simulate_csv(&report),
            };
            emit(out, &text)
        }

        Command::Tables => {
            let report = tables::generate()?;
            let text = match format {
                OutputFormat::Csv => report.to_csv(),
                OutputFormat::Json => json_line(&report.to_json()),
            };
            emit(out, &text)
        }
    }
}

fn simulate_csv(report: &SimReport) -> String {
    let mut s = String::from("key,value\n");
    let rows = [
        ("replicates".to_string(), report.replicates.to_string()),
        ("seed".to_string(), report.seed.to_string()),
        (
            "est_reject_prob".to_string(),
            fmt6(report.est_reject_prob.value),
        ),
        (
            "se_reject_prob".to_string(),
            fmt6(report.est_reject_prob.std_error),
        ),
        (
            "est_early_stop_prob".to_string(),
            fmt6(report.est_early_stop_prob.value),
        ),
        (
            "se_early_stop_prob".to_string(),
            fmt6(report.est_early_stop_prob.std_error),
        ),
        ("est_ess".to_string(), fmt6(report.est_ess.value)),
        ("se_ess".to_string(), fmt6(report.est_ess.std_error)),
        (
            "est_stage1_decision_mean".to_string(),
            fmt6(report.est_stage1_decision_count.mean),
        ),
        (
            "est_stage1_decision_sd".to_string(),
            fmt6(report.est_stage1_decision_count.sd),
        ),
    ];
    for (k, v) in rows {
        s.push_str(&k);
        s.push(',');
        s.push_str(&v);
        s.push('\n');
    }
    s
}

fn parse_budget_mode(s: Option<&str>) -> Result<Option<BudgetModeArg>, AppError> {
    s.map(|s| {
        BudgetModeArg::from_str(s, true)
            .map_err(|_| AppError::Config(format!("unknown budget_mode {s:?} in config")))
    })
    .transpose()
}

fn parse_criterion(s: Option<&str>) -> Result<Option<CriterionArg>, AppError> {
    s.map(|s| {
        CriterionArg::from_str(s, true)
            .map_err(|_| AppError::Config(format!("unknown criterion {s:?} in config")))
    })
    .transpose()
}

fn parse_kind(s: Option<&str>) -> Result<Option<CurveKind>, AppError> {
    s.map(|s| {
        CurveKind::from_str(s, true)
            .map_err(|_| AppError::Config(format!("unknown curve kind {s:?} in config")))
    })
    .transpose()
}
