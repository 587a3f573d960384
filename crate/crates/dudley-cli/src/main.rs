use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dudley_cli::config::{Format, RunConfig};
use dudley_cli::{commands, CliError, EXIT_CONFIG, EXIT_PASS, EXIT_VERDICT_FAILED};

#[derive(Parser)]
#[command(name = "dudley", version, about = "Monte Carlo experiments on relativistic jump-diffusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form top Lyapunov exponent alpha
    Alpha(Common),
    /// Simulate paths and export them
    Simulate(Common),
    /// Asymptotic estimates and their convergence rates
    Asymptotics(Common),
    /// Lyapunov slopes on the three graded directions
    Lyapunov(Common),
    /// Stable-manifold distance experiments
    Stable(Common),
    /// Deterministic invariant suite
    Check(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.paths {
            c.n_paths = v;
        }
        if let Some(v) = self.horizon {
            c.horizon = v;
        }
        if let Some(v) = self.dt {
            c.dt = v;
        }
        if let Some(v) = &self.out {
            c.out = Some(v.clone());
        }
        if let Some(v) = self.format {
            c.format = v;
        }
        c.validate()?;
        Ok(c)
    }
}

type Run = fn(&RunConfig) -> Result<commands::Outcome, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&Common, Run) = match &cli.command {
        Command::Alpha(c) => (c, commands::alpha),
        Command::Simulate(c) => (c, commands::simulate),
        Command::Asymptotics(c) => (c, commands::asymptotics),
        Command::Lyapunov(c) => (c, commands::lyapunov),
        Command::Stable(c) => (c, commands::stable),
        Command::Check(c) => (c, commands::check),
    };
    let is_text = matches!(cli.command, Command::Alpha(_) | Command::Check(_));
    let outcome = common.resolve().and_then(|c| run(&c));
    match outcome {
        Ok(o) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(o.text.as_bytes());
            if !is_text {
                for l in &o.lines {
                    eprintln!("{l}");
                }
            }
            ExitCode::from(if o.pass { EXIT_PASS } else { EXIT_VERDICT_FAILED } as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}
