use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use noisy_vqo::experiments::{self, config, CheckKind, ExperimentKind, RunOptions};
use noisy_vqo::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    QfiScan,
    Landscape,
    Convergence,
    BoundsAudit,
    ChannelValidate,
}

impl From<Command> for ExperimentKind {
    fn from(c: Command) -> Self {
        match c {
            Command::QfiScan => ExperimentKind::QfiScan,
            Command::Landscape => ExperimentKind::Landscape,
            Command::Convergence => ExperimentKind::Convergence,
            Command::BoundsAudit => ExperimentKind::BoundsAudit,
            Command::ChannelValidate => ExperimentKind::ChannelValidate,
        }
    }
}

/// Runs a noisy variational-optimization experiment and writes its CSV
/// files and manifest.
///
/// Exit status: 0 on success, 2 on a config error, 3 when a numerical
/// invariant is violated, 1 on any other failure.
#[derive(Debug, Parser)]
#[command(name = "noisy-vqo", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// JSON config, or the manifest of an earlier run. Missing keys take
    /// their defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory [default: out/<command>].
    #[arg(long)]
    out: Option<PathBuf>,

    /// Use the larger reference sizes.
    #[arg(long)]
    full: bool,

    /// Print the resolved default config and exit.
    #[arg(long)]
    print_defaults: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let kind = ExperimentKind::from(cli.command);
    if cli.print_defaults {
        println!("{}", config::to_pretty(&kind.defaults(cli.full)));
        return ExitCode::SUCCESS;
    }
    match run(&cli, kind) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::Invariant(_) => 3,
                _ => 1,
            })
        }
    }
}

fn run(cli: &Cli, kind: ExperimentKind) -> noisy_vqo::Result<ExitCode> {
    let (user, base_dir) = match &cli.config {
        Some(path) => (config::load(path)?, path.parent().map(|p| p.to_path_buf())),
        None => (config::Value::Object(Default::default()), None),
    };
    let opts = RunOptions { seed: cli.seed, full: cli.full, base_dir };
    let output = experiments::run(kind, user, &opts)?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
    for path in output.write_to(&dir)? {
        println!("wrote {}", path.display());
    }
    for c in &output.manifest.checks {
        let kind = match c.kind {
            CheckKind::Invariant => "invariant",
            CheckKind::Trend => "trend",
        };
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("[{status}] {kind} {}: {}", c.name, c.detail);
    }
    if output.failed_invariants().is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("error: numerical invariant violated");
        Ok(ExitCode::from(3))
    }
}
