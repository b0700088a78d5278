use clap::{Parser, Subcommand};
use cosmic_strings::commands::{self, CommandError};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cosmic-strings", version, about = "Self-dual cosmic string solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the planar problem on a square grid.
    SolvePlanar {
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the radial problem for coincident strings at critical coupling.
    SolveRadial {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the invariants of a finished solve, or solve fresh and check.
    Verify {
        #[arg(required_unless_present = "artifact", conflicts_with = "artifact")]
        config: Option<PathBuf>,
        /// Directory written by a previous solve.
        #[arg(long)]
        artifact: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Radial solves over the product of `sweep.n` and `sweep.m`.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_dir(cfg: &cosmic_strings::config::JobConfig, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| cfg.output.dir.clone())
}

fn run(cli: Cli) -> Result<(), CommandError> {
    match cli.command {
        Command::SolvePlanar { config, out } => {
            let cfg = commands::load_config(&config)?;
            let dir = out_dir(&cfg, out);
            let s = commands::cmd_solve_planar(&cfg, &dir)?;
            println!(
                "planar: g0 = {:.6e}, residual = {:.3e}, flux = {:.6} (expected {:.6}), artifacts in {}",
                s.g0,
                s.residual,
                s.flux.area,
                s.flux.expected,
                dir.display()
            );
        }
        Command::SolveRadial { config, out } => {
            let cfg = commands::load_config(&config)?;
            let dir = out_dir(&cfg, out);
            let s = commands::cmd_solve_radial(&cfg, &dir)?;
            println!(
                "radial: g0 = {:.12}, t0 = {}, decay = {:.6} (expected {:.6}), flux = {:.6}, artifacts in {}",
                s.g0,
                s.t0,
                s.decay.rate,
                s.decay.expected,
                s.flux.area,
                dir.display()
            );
        }
        Command::Verify { config, artifact, out } => {
            let report = match (artifact, config) {
                (Some(dir), _) => commands::cmd_verify_artifact(&dir)?,
                (None, Some(path)) => {
                    let cfg = commands::load_config(&path)?;
                    commands::cmd_verify_fresh(&cfg, &out_dir(&cfg, out))?
                }
                (None, None) => unreachable!("clap requires one of config or --artifact"),
            };
            for c in &report.checks {
                println!("{} {}: {:.3e} (limit {:.3e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.limit);
            }
            if !report.passed {
                return Err(CommandError::Verification(report.failures()));
            }
        }
        Command::Sweep { config, out } => {
            let cfg = commands::load_config(&config)?;
            let dir = out_dir(&cfg, out);
            let rows = commands::cmd_sweep(&cfg, &dir)?;
            for r in &rows {
                println!("N = {}, m = {}: decay {:.6} (expected {:.6})", r.n, r.m, r.summary.decay.rate, r.summary.decay.expected);
            }
            println!("sweep table in {}", Path::new(&dir).join(cosmic_strings::io::SWEEP_FILE).display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
