//! Command-line driver: experiment configs in, CSV reports and SVG charts
//! out.

pub mod config;
pub mod error;
pub mod plot;
pub mod report;
pub mod selftest;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use ito_edgeworth::estimator::{clt_variance_check, convergence_study};
use ito_edgeworth::hermite::fault;
use ito_edgeworth::oracle;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult, ExitKind};

/// Default location of the oracle fixtures, relative to the workspace root.
pub const FIXTURES_PATH: &str = "crates/core/tests/fixtures/oracles.json";

#[derive(Debug, Parser)]
#[command(name = "ito-edgeworth", version, about = "Edgeworth expansion of Itô integral discretization errors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags that override the config file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the config, then $ITO_EDGEWORTH_THREADS.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output file; defaults to the config's `output`, then stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    HermiteRecurrence,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convergence study: one CSV row per n.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Variance of √n(V₀ⁿ − V₀) against its limit, one row per n.
    CheckClt {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Fast invariant suite.
    Selftest {
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, hide = true)]
        inject_fault: Option<Fault>,
    },
    /// Log-log chart of a report's residuals.
    Plot { report: PathBuf, svg: PathBuf },
    /// Recomputes the oracle fixtures file.
    RegenFixtures {
        #[arg(long, default_value = FIXTURES_PATH)]
        out: PathBuf,
        #[arg(long, default_value_t = oracle::FIXTURE_PATHS)]
        paths: u64,
    },
}

fn load(config: &Path, overrides: &Overrides) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(config)?;
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &overrides.out {
        cfg.output = Some(out.clone());
    }
    Ok(cfg)
}

/// The report CSV of `run`.
pub fn run_report(cfg: &ExperimentConfig, threads: Option<usize>) -> CliResult<String> {
    let model = cfg.resolve_model()?;
    let f = cfg.resolve_test_function()?;
    let mc = cfg.mc_config(threads)?;
    let report = convergence_study(&model, &f, &cfg.n_list, cfg.m, cfg.horizon, &mc).map_err(CliError::from_core)?;
    Ok(report::report_csv(&report))
}

/// The variance-check CSV of `check-clt`.
pub fn clt_report(cfg: &ExperimentConfig, threads: Option<usize>) -> CliResult<String> {
    let model = cfg.resolve_model()?;
    let mc = cfg.mc_config(threads)?;
    if mc.antithetic {
        return Err(CliError::parse("key `antithetic`: the variance check needs independent paths"));
    }
    let checks = cfg
        .n_list
        .iter()
        .map(|&n| {
            let spec = cfg.m.spec(cfg.horizon, n).map_err(CliError::from_core)?;
            clt_variance_check(&model, &spec, &mc).map_err(CliError::from_core)
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(report::clt_csv(&model.to_string(), &checks))
}

/// Renders a report CSV file as an SVG file.
pub fn plot_file(report: &Path, svg: &Path) -> CliResult<()> {
    let text = std::fs::read_to_string(report)
        .map_err(|e| CliError::parse(format!("cannot read report {}: {e}", report.display())))?;
    let series = plot::read_series(&text)?;
    std::fs::write(svg, plot::render_svg(&series)).map_err(|e| CliError::io("cannot write SVG", e))
}

/// Runs the invariant suite, printing one line per check. Fails on the
/// first failing invariant, by name.
pub fn selftest(threads: Option<usize>, inject: Option<Fault>, out: &mut dyn Write) -> CliResult<()> {
    if inject == Some(Fault::HermiteRecurrence) {
        fault::set_corrupt_recurrence(true);
    }
    let results = selftest::run_checks(threads);
    fault::set_corrupt_recurrence(false);
    for r in &results {
        let status = if r.passed() { "ok" } else { "FAIL" };
        writeln!(out, "{status:4} {:28} {:.3e} (tolerance {:.0e})  {}", r.name, r.value, r.tolerance, r.detail)
            .map_err(|e| CliError::io("cannot write", e))?;
    }
    match results.iter().find(|r| !r.passed()) {
        Some(r) => Err(CliError::failure(format!("invariant failed: {} ({})", r.name, r.detail))),
        None => Ok(()),
    }
}

fn emit(text: &str, output: Option<&Path>) -> CliResult<()> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(&format!("cannot write {}", path.display()), e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("cannot write to stdout", e)),
    }
}

pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = load(&config, &overrides)?;
            emit(&run_report(&cfg, overrides.threads)?, cfg.output.as_deref())
        }
        Command::CheckClt { config, overrides } => {
            let cfg = load(&config, &overrides)?;
            emit(&clt_report(&cfg, overrides.threads)?, cfg.output.as_deref())
        }
        Command::Selftest { threads, inject_fault } => selftest(threads, inject_fault, &mut std::io::stdout()),
        Command::Plot { report, svg } => plot_file(&report, &svg),
        Command::RegenFixtures { out, paths } => {
            let file = oracle::fixtures_with(paths, oracle::FIXTURE_SEED).map_err(CliError::from_core)?;
            let mut text = serde_json::to_string_pretty(&file).map_err(|e| CliError::failure(e.to_string()))?;
            text.push('\n');
            emit(&text, Some(&out))
        }
    }
}
