use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chronic_roi_cli::{parse_run_config, run};
use clap::{Args, Parser, Subcommand, ValueEnum};
use toml::{Table, Value};

/// Simulate discounted ten-year costs and ROI of adherence-enhancing
/// chronic-care policies.
#[derive(Parser)]
#[command(name = "chronic-roi", version)]
struct Cli {
    /// Parameter file (defaults to the built-in reference calibration).
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed for Monte Carlo output.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run configuration file; its keys override command-line flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Preset scenario name.
    #[arg(long, default_value = "early_adherence")]
    scenario: String,
    /// Override the adherence gain.
    #[arg(long)]
    delta: Option<f64>,
    /// Override the cost intensity.
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args)]
struct DrawArgs {
    /// Number of Monte Carlo draws.
    #[arg(long, default_value_t = 10_000)]
    draws: u64,
    /// Worker threads (defaults to all cores; results do not depend on it).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistKind {
    Beta,
    TruncNormal,
}

#[derive(Clone, Copy, ValueEnum)]
enum StressArg {
    Inflation,
    Compression,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its trajectory.
    Simulate(ScenarioArgs),
    /// Compare a scenario against the no-policy arm.
    Compare(ScenarioArgs),
    /// Sweep ROI over adherence gain and cost intensity.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated, strictly increasing gains.
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
        /// Comma-separated, strictly increasing cost intensities.
        #[arg(long, value_delimiter = ',')]
        gammas: Option<Vec<f64>>,
    },
    /// Find the break-even cost intensity for each gain.
    Breakeven {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
    },
    /// Monte Carlo over uncertain adherence gains.
    Mc {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        draws: DrawArgs,
        #[arg(long, value_enum)]
        distribution: Option<DistKind>,
        /// Standard deviation of the gain.
        #[arg(long)]
        sd: Option<f64>,
    },
    /// Cost-inflation and accelerated-progression stress tests.
    Stress {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum)]
        kind: Option<StressArg>,
        #[arg(long)]
        inflation: Option<f64>,
        #[arg(long)]
        compression: Option<f64>,
    },
    /// Write plot-ready CSV series for the figure families.
    ExportPlots {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        draws: DrawArgs,
        /// Families to export (severity, adherence, cost, mc, stress).
        #[arg(long = "family", value_delimiter = ',')]
        families: Vec<String>,
    },
}

fn scenario_value(s: &ScenarioArgs) -> Value {
    if s.delta.is_none() && s.gamma.is_none() {
        return Value::String(s.scenario.clone());
    }
    let mut t = Table::new();
    t.insert("preset".into(), s.scenario.clone().into());
    if let Some(d) = s.delta {
        t.insert("adherence_gain_delta".into(), d.into());
    }
    if let Some(g) = s.gamma {
        t.insert("cost_scale_gamma".into(), g.into());
    }
    Value::Table(t)
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| x.into()).collect())
}

fn int(name: &str, v: u64) -> Result<Value> {
    Ok(Value::Integer(i64::try_from(v).with_context(|| format!("{name} is too large"))?))
}

fn path(p: &Path) -> Result<Value> {
    Ok(p.to_str().context("paths must be valid UTF-8")?.into())
}

fn insert_draws(t: &mut Table, d: &DrawArgs) -> Result<()> {
    t.insert("n_draws".into(), int("draws", d.draws)?);
    if let Some(w) = d.workers {
        t.insert("workers".into(), int("workers", w as u64)?);
    }
    Ok(())
}

/// Configuration keys implied by the command line.
fn flag_table(cli: &Cli) -> Result<Table> {
    let mut t = Table::new();
    t.insert("output_dir".into(), path(cli.out.as_deref().unwrap_or(Path::new("chronic-roi-out")))?);
    if let Some(p) = &cli.params {
        t.insert("params_file".into(), path(p)?);
    }
    if let Some(s) = cli.seed {
        t.insert("seed".into(), int("seed", s)?);
    }
    let Some(command) = &cli.command else { return Ok(t) };
    let (mode, scenario) = match command {
        Command::Simulate(s) => ("simulate", s),
        Command::Compare(s) => ("compare", s),
        Command::Sweep { scenario, deltas, gammas } => {
            let mut axes = Table::new();
            if let Some(d) = deltas {
                axes.insert("deltas".into(), floats(d));
            }
            if let Some(g) = gammas {
                axes.insert("gammas".into(), floats(g));
            }
            if !axes.is_empty() {
                t.insert("sweep".into(), Value::Table(axes));
            }
            ("sweep", scenario)
        }
        Command::Breakeven { scenario, deltas } => {
            if let Some(d) = deltas {
                let mut axes = Table::new();
                axes.insert("deltas".into(), floats(d));
                t.insert("sweep".into(), Value::Table(axes));
            }
            ("breakeven", scenario)
        }
        Command::Mc { scenario, draws, distribution, sd } => {
            insert_draws(&mut t, draws)?;
            if distribution.is_some() || sd.is_some() {
                let mut d = Table::new();
                let kind = match distribution.unwrap_or(DistKind::Beta) {
                    DistKind::Beta => "beta",
                    DistKind::TruncNormal => "trunc_normal",
                };
                d.insert("kind".into(), kind.into());
                if let Some(sd) = sd {
                    d.insert("sd".into(), (*sd).into());
                }
                t.insert("distribution".into(), Value::Table(d));
            }
            ("monte_carlo", scenario)
        }
        Command::Stress { scenario, kind, inflation, compression } => {
            if let Some(k) = kind {
                let name = match k {
                    StressArg::Inflation => "inflation",
                    StressArg::Compression => "compression",
                    StressArg::Both => "both",
                };
                t.insert("stress_kind".into(), name.into());
            }
            if let Some(f) = inflation {
                t.insert("inflation_factor".into(), (*f).into());
            }
            if let Some(c) = compression {
                t.insert("compression".into(), (*c).into());
            }
            ("stress", scenario)
        }
        Command::ExportPlots { scenario, draws, families } => {
            if !families.is_empty() {
                t.insert("families".into(), Value::Array(families.iter().map(|f| f.as_str().into()).collect()));
            }
            let wants_mc = families.is_empty() || families.iter().any(|f| f == "mc");
            if wants_mc {
                insert_draws(&mut t, draws)?;
            }
            ("export_plots", scenario)
        }
    };
    t.insert("mode".into(), mode.into());
    t.insert("scenario".into(), scenario_value(scenario));
    Ok(t)
}

/// Reads a config file; relative paths inside it resolve against its directory.
fn file_table(file: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(file).with_context(|| format!("cannot read {}", file.display()))?;
    let mut table: Table = text.parse().with_context(|| format!("{} is not valid TOML", file.display()))?;
    let base = file.parent().unwrap_or(Path::new(""));
    for key in ["params_file", "output_dir"] {
        if let Some(Value::String(p)) = table.get(key) {
            if Path::new(p).is_relative() {
                let joined = base.join(p);
                table.insert(key.into(), path(&joined)?);
            }
        }
    }
    Ok(table)
}

fn execute(cli: Cli) -> Result<()> {
    if cli.command.is_none() && cli.config.is_none() {
        bail!("give a subcommand or --config <file>; see --help");
    }
    let mut table = flag_table(&cli)?;
    if let Some(file) = &cli.config {
        table.extend(file_table(file)?);
    }
    let config = parse_run_config(&toml::to_string(&table)?)?;
    let report = run(&config)?;
    // A closed stdout (e.g. piped into `head`) is not a run failure.
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{}", report.summary);
    let _ = writeln!(
        stdout,
        "wrote {} files and manifest.json to {}",
        report.manifest.files.len(),
        report.output_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
