use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};

use tbgp_cli::{parse_config, run_subcommand, RunConfig, RunError, SimModel, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "tbgp", version, about = "Tight-binding reduction of the periodic Gross-Pitaevskii equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `[output] dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Accepted for interface stability; every algorithm is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Contrast parameter for the single-ε subcommands (overrides `[potential] eps`).
    #[arg(long, global = true)]
    eps: Option<f64>,
}

#[derive(clap::Subcommand, Debug)]
enum Command {
    /// Band structure and band edges.
    Bands,
    /// Wannier function and its asymptotic profile.
    Wannier,
    /// Coupling constants over the sweep's ε list.
    Couplings,
    /// Evolve the lattice or the continuum model.
    Simulate {
        #[arg(long, value_enum)]
        model: Model,
    },
    /// First-order correction and its residual.
    Correction,
    /// Full error-scaling sweep with pass/fail lines.
    Validate,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Model {
    Dnls,
    Gp,
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(eps) = cli.eps {
        anyhow::ensure!(eps.is_finite() && eps > 0.0, "--eps must be positive, got {eps}");
        cfg.eps = eps;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let cmd = match cli.command {
        Command::Bands => Subcommand::Bands,
        Command::Wannier => Subcommand::Wannier,
        Command::Couplings => Subcommand::Couplings,
        Command::Simulate { model: Model::Dnls } => Subcommand::Simulate(SimModel::Dnls),
        Command::Simulate { model: Model::Gp } => Subcommand::Simulate(SimModel::Gp),
        Command::Correction => Subcommand::Correction,
        Command::Validate => Subcommand::Validate,
    };
    match run_subcommand(cmd, &cfg) {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            if cfg.verbosity > 0 {
                for f in &summary.files {
                    eprintln!("wrote {}", f.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => report(&e),
    }
}

fn report(e: &RunError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
