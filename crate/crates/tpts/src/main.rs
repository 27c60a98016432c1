use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use tpts::commands::{self, CliError};
use tpts::config::{self, RunConfig};
use tpts::selftest::{run_selftest, Hooks, DEFAULT_SEED};

/// Modulation engine and switched simulator for the three-phase
/// three-switch buck rectifier.
#[derive(Parser)]
#[command(name = "tpts", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML config file; unspecified keys take the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override a config key, e.g. `--set m=0.9`. May be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Self-test RNG seed.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Simulate one run and write trace.csv and metrics.txt.
    Simulate,
    /// Run all three schemes at the same operating point and tabulate them.
    Compare,
    /// Simulate every (scheme, m) pair of the sweep lists in parallel.
    Sweep,
    /// Check the modulator invariants at random operating points.
    Selftest,
    /// Print the configuration keys and the effective configuration.
    Config,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let text = match &cli.config {
        Some(path) => Some(fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?),
        None => None,
    };
    Ok(config::load(text.as_deref(), &cli.overrides)?)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load(cli)?;
    match cli.command {
        Command::Simulate => {
            let r = commands::simulate(&cfg, &cli.out)?;
            let m = &r.metrics;
            println!(
                "{} samples written to {}; |I1| = {:.4} A (mean i_dc {:.4} A), thd {:.3} %, mean v_out {:.2} V",
                r.trace.len(),
                cli.out.join("trace.csv").display(),
                m.source[0].fundamental.amplitude,
                m.mean_i_dc,
                100.0 * m.source[0].thd,
                m.mean_v_out
            );
        }
        Command::Compare => {
            let c = commands::compare(&cfg, &cli.out)?;
            print!("{}", c.text);
        }
        Command::Sweep => {
            let points = commands::sweep(&cfg, &cli.out)?;
            let failed: Vec<_> = points.iter().filter(|p| p.result.is_err()).collect();
            for p in &points {
                match &p.result {
                    Ok(x) => println!("{:<10} m={:<6} |I1| {:.4} A  v_out {:.2} V", p.scheme, p.m, x.fundamental, x.mean_v_out),
                    Err(e) => println!("{:<10} m={:<6} error: {e}", p.scheme, p.m),
                }
            }
            println!("summary written to {}", cli.out.join("summary.csv").display());
            if !failed.is_empty() {
                return Err(CliError::Failed(format!("{} of {} sweep points failed", failed.len(), points.len())));
            }
        }
        Command::Selftest => {
            let start = Instant::now();
            let report = run_selftest(cli.seed, cfg.selftest_points, &Hooks::default());
            print!("{}", report.render());
            println!("finished in {:.2} s", start.elapsed().as_secs_f64());
            if !report.passed() {
                return Err(CliError::Failed("self-test failed".into()));
            }
        }
        Command::Config => {
            println!("# keys");
            for (k, doc) in config::KEYS {
                println!("#   {k:<18} {doc}");
            }
            print!("{}", config::render(&cfg));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
