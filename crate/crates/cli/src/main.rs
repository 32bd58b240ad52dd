use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rdoa_cli::{report, run, Command, Overrides, ParseError, ProblemConfig};

#[derive(Parser)]
#[command(
    name = "rdoa",
    version,
    about = "Robust domain of attraction estimation and controller synthesis"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Problem configuration (TOML).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; `run.out` or `out/<command>` when absent.
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
    /// Paving resolution.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Required decrease margin.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Pave the decrease set W_N(L).
    Pave,
    /// Robust invariant set inside W_N(L).
    Rnis,
    /// Sublevel-set baseline.
    Levelset,
    /// Search quadratic-form Lyapunov candidates with PSO.
    Optimize,
    /// Extract and verify a feedback controller.
    Synth,
    /// Closed-loop Monte Carlo simulation.
    Simulate,
    /// Wall-time table over finished runs.
    Report {
        /// Run directories (each, or its subdirectories, holding manifest.json).
        dirs: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<ParseError>() { 2 } else { 1 })
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()?;
    }
    let cmd = match cli.command {
        Cmd::Report { dirs } => {
            let dirs = if dirs.is_empty() {
                vec![PathBuf::from("out")]
            } else {
                dirs
            };
            print!("{}", report::table(&report::collect(&dirs)?));
            return Ok(());
        }
        Cmd::Pave => Command::Pave,
        Cmd::Rnis => Command::Rnis,
        Cmd::Levelset => Command::Levelset,
        Cmd::Optimize => Command::Optimize,
        Cmd::Synth => Command::Synth,
        Cmd::Simulate => Command::Simulate,
    };
    let path = cli
        .config
        .ok_or_else(|| ParseError("--config is required".into()))?;
    let mut cfg = ProblemConfig::load(&path)?;
    cfg.apply(&Overrides {
        eps: cli.eps,
        alpha: cli.alpha,
        seed: cli.seed,
    })?;
    let out = cli
        .out
        .or_else(|| cfg.run.out.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(cmd.name()));
    run(cmd, &cfg, &out)?;
    Ok(())
}
