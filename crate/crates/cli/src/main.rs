use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use gabba::ber_analytics::QuadratureConfig;
use gabba::fading_sim::{ChannelModel, PowerProfile};
use gabba::harness::{
    analyze, analyze_csv, capacity_csv, capacity_sweep, esno_grid, run_sweep, verify, AnalyzeConfig, CapacityConfig,
    ExperimentConfig, Fault,
};
use gabba::modem::ModulationSpec;
use gabba::GabbaError;

/// GABBA space-time block codes: simulation, analysis and verification.
#[derive(Parser)]
#[command(name = "gabba", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo BER sweep with the orthogonal decoder.
    Simulate(SimulateArgs),
    /// Exact analytic BER sweep.
    Analyze(AnalyzeArgs),
    /// Structural suite for every block size up to K_MAX.
    Verify(VerifyArgs),
    /// Hard-decision rate per modulation and their envelope.
    Capacity(CapacityArgs),
}

#[derive(Args)]
struct Sweep {
    #[arg(long = "esno-start", default_value_t = 0.0, allow_negative_numbers = true)]
    start: f64,
    #[arg(long = "esno-stop", default_value_t = 20.0, allow_negative_numbers = true)]
    stop: f64,
    #[arg(long = "esno-step", default_value_t = 2.0)]
    step: f64,
    /// Quadrature points of the angle integrals.
    #[arg(long, default_value_t = 5000)]
    points: usize,
    /// Angle quadrature weights: `end-corrected` or `trapezoid`.
    #[arg(long = "quadrature-rule", default_value = "end-corrected")]
    rule: String,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Link {
    #[arg(long = "nt")]
    n_t: Option<usize>,
    #[arg(long = "nr", default_value_t = 1)]
    n_r: usize,
    #[arg(long = "mod", default_value = "psk4")]
    modulation: String,
    #[arg(long, default_value = "rayleigh")]
    channel: String,
    #[arg(long, default_value = "equipower")]
    profile: String,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long = "K", default_value_t = 4)]
    k: usize,
    #[command(flatten)]
    link: Link,
    #[command(flatten)]
    sweep: Sweep,
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    #[arg(long = "target-errors", default_value_t = 200)]
    target_errors: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the full configuration as JSON to this path.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    link: Link,
    #[command(flatten)]
    sweep: Sweep,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Comma-separated per-branch severities overriding the channel's m.
    #[arg(long, value_delimiter = ',')]
    severities: Option<Vec<f64>>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Largest block size checked.
    #[arg(value_name = "K_MAX", default_value_t = 32)]
    k_max: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Flip one mother-matrix sign, given as K,ROW,COL (zero-based).
    #[arg(long = "inject-fault", value_delimiter = ',')]
    fault: Option<Vec<usize>>,
}

#[derive(Args)]
struct CapacityArgs {
    #[command(flatten)]
    link: Link,
    #[command(flatten)]
    sweep: Sweep,
}

enum Failure {
    Config(String),
    Invariant(String),
}

impl From<GabbaError> for Failure {
    fn from(e: GabbaError) -> Self {
        match e {
            GabbaError::StructuralFailure { .. } | GabbaError::PrecisionExhausted { .. } => {
                Failure::Invariant(e.to_string())
            }
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(format!("{e:#}"))
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_link(link: &Link, default_nt: usize) -> Result<(usize, ModulationSpec, ChannelModel, PowerProfile), Failure> {
    Ok((
        link.n_t.unwrap_or(default_nt),
        link.modulation.parse()?,
        link.channel.parse()?,
        link.profile.parse()?,
    ))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate(a) => {
            let (n_t, modulation, channel, profile) = parse_link(&a.link, a.k)?;
            let config = ExperimentConfig {
                k: a.k,
                n_t,
                n_r: a.link.n_r,
                modulation,
                channel,
                profile,
                esno_db: esno_grid(a.sweep.start, a.sweep.stop, a.sweep.step)?,
                trials: a.trials,
                target_errors: a.target_errors,
                seed: a.seed,
                quadrature: QuadratureConfig { points: a.sweep.points, rule: a.sweep.rule.parse()? },
            };
            config.validate()?;
            let result = run_sweep(&config)?;
            emit(&a.sweep.out, &result.to_csv()?)?;
            if let Some(path) = &a.json {
                fs::write(path, result.config_json()?).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Analyze(a) => {
            let (n_t, modulation, channel, profile) = parse_link(&a.link, 2)?;
            let config = AnalyzeConfig {
                modulation,
                n_t,
                n_r: a.link.n_r,
                rho: a.rho,
                eta: a.eta,
                channel,
                profile,
                severities: a.severities,
                esno_db: esno_grid(a.sweep.start, a.sweep.stop, a.sweep.step)?,
                quadrature: QuadratureConfig { points: a.sweep.points, rule: a.sweep.rule.parse()? },
            };
            emit(&a.sweep.out, &analyze_csv(&analyze(&config)?)?)?;
        }
        Command::Verify(a) => {
            let fault = match a.fault.as_deref() {
                None => None,
                Some(&[k, row, col]) => Some(Fault { k, row, col }),
                Some(_) => return Err(Failure::Config("--inject-fault takes K,ROW,COL".into())),
            };
            let report = verify(a.k_max, a.seed, fault)?;
            for check in &report.checks {
                println!("{check}");
            }
            println!("verified K <= {} in {:.1} s", a.k_max, report.seconds);
            if !report.passed() {
                let names: Vec<String> = report.failures().iter().map(|c| format!("{} K={}", c.name, c.k)).collect();
                return Err(Failure::Invariant(format!("violations: {}", names.join(", "))));
            }
        }
        Command::Capacity(a) => {
            let (n_t, _, channel, profile) = parse_link(&a.link, 4)?;
            let config = CapacityConfig {
                n_t,
                n_r: a.link.n_r,
                channel,
                profile,
                esno_db: esno_grid(a.sweep.start, a.sweep.stop, a.sweep.step)?,
                quadrature: QuadratureConfig { points: a.sweep.points, rule: a.sweep.rule.parse()? },
            };
            emit(&a.sweep.out, &capacity_csv(&capacity_sweep(&config)?))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invariant(msg)) => {
            eprintln!("invariant violation: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
    }
}
