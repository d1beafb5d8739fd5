use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hankel_lab::config::ExperimentConfig;
use hankel_lab::report::CheckKind;
use hankel_lab::runner::{run, RunOptions, Suite};

#[derive(Parser)]
#[command(name = "hankel-lab", version, about = "Numerical experiments for Hankel operators on weighted Fock spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment configuration; defaults to the gaussian weight, d = m = 1, symbol z₁.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for report.json and CSV tables.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker threads (all cores by default).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Treat failed empirical-band checks as failures.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Moment tables against closed forms, growth and class-S diagnostics.
    Moments,
    /// Diagonal kernel asymptotics and polyball coherence.
    KernelCheck,
    /// Bloch norms, Q route agreement, Lipschitz and Berezin-metric checks.
    Bloch,
    /// Mean-oscillation norms and route agreement.
    Bmo,
    /// Truncated Hankel spectra.
    Hankel,
    /// Hilbert–Schmidt sweeps and Schatten-class integrals.
    Schatten,
    /// Little-Bloch tails and spectral decay.
    Compactness,
    /// Bloch, Hankel and BMO norms side by side.
    Equivalence,
    /// Fejér-mean approximation in the Bloch seminorm.
    Fejer,
    /// Trace, Hilbert–Schmidt and contractivity identities.
    Identities,
}

impl Command {
    fn suite(self) -> Suite {
        match self {
            Command::Moments => Suite::Moments,
            Command::KernelCheck => Suite::KernelCheck,
            Command::Bloch => Suite::Bloch,
            Command::Bmo => Suite::Bmo,
            Command::Hankel => Suite::Hankel,
            Command::Schatten => Suite::Schatten,
            Command::Compactness => Suite::Compactness,
            Command::Equivalence => Suite::Equivalence,
            Command::Fejer => Suite::Fejer,
            Command::Identities => Suite::Identities,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_path(p),
        None => Ok(ExperimentConfig::new(hankel_lab::WeightFamily::Gaussian, 1, 1)),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions {
        seed: cli.seed,
        strict: cli.strict,
        jobs: cli.jobs,
    };
    let report = match run(cli.command.suite(), &cfg, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for c in report.checks() {
        let mark = match (c.pass, c.kind) {
            (true, _) => "pass",
            (false, CheckKind::Info) => "note",
            (false, _) => "FAIL",
        };
        println!("{mark} {:?} {}/{} value={:e} tol={:e}", c.kind, c.scenario, c.name, c.value, c.tolerance);
    }
    let out = cli.out.or_else(|| cfg.output.dir.clone());
    if let Some(dir) = out {
        match report.write(&dir) {
            Ok(files) => {
                for f in files {
                    println!("wrote {}", f.display());
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        for f in &report.failures {
            eprintln!("failed: {f}");
        }
        ExitCode::FAILURE
    }
}
