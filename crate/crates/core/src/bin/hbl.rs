use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hbl_core::commands::{cmd_bellman, cmd_extremal, cmd_optimize, cmd_simulate, cmd_verify};
use hbl_core::{Error, ExperimentConfig, RunReport, SequenceKind};

/// Numerical experiments for the Hardy-operator Bellman function.
#[derive(Debug, Parser)]
#[command(name = "hbl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// ω_p(f^p/F) and B_p(f, F).
    Bellman(Flags),
    /// Closed-form extremal g₀, its discretization and sequence diagnostics.
    Extremal(Flags),
    /// Projected gradient ascent of Φ_p over the feasible set.
    Optimize(Flags),
    /// Sandwich sweep over a and the symmetrization property sweep.
    Simulate(Flags),
    /// The acceptance suite; exits 3 if any criterion fails.
    Verify(Flags),
}

#[derive(Debug, Args)]
struct Flags {
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    f: Option<f64>,
    #[arg(long = "F")]
    big_f: Option<f64>,
    #[arg(long)]
    cells: Option<usize>,
    /// Sandwich schedule, comma separated.
    #[arg(long, value_delimiter = ',')]
    a: Option<Vec<f64>>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    branching: Option<u32>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    step_size: Option<f64>,
    #[arg(long)]
    tol_obj: Option<f64>,
    #[arg(long)]
    kind: Option<String>,
    /// Sequence indices, comma separated.
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suites or criterion numbers, comma separated.
    #[arg(long)]
    only: Option<String>,
    /// Print the report without writing files.
    #[arg(long)]
    dry_run: bool,
}

impl Flags {
    fn resolve(self) -> Result<(ExperimentConfig, bool), Error> {
        let kind = self.kind.as_deref().map(str::parse::<SequenceKind>).transpose()?;
        let flags = ExperimentConfig {
            p: self.p,
            f: self.f,
            big_f: self.big_f,
            cells: self.cells,
            a: self.a,
            depth: self.depth,
            seed: self.seed,
            samples: self.samples,
            gamma: self.gamma,
            branching: self.branching,
            max_iters: self.max_iters,
            step_size: self.step_size,
            tol_obj: self.tol_obj,
            kind,
            ns: self.ns,
            out: self.out,
            only: self.only,
        };
        let base = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let cfg = base.overlay(flags);
        cfg.validate()?;
        Ok((cfg, self.dry_run))
    }
}

fn run(cli: Cli) -> Result<RunReport, Error> {
    let (flags, cmd): (Flags, fn(&ExperimentConfig) -> Result<RunReport, Error>) = match cli.command {
        Command::Bellman(f) => (f, cmd_bellman),
        Command::Extremal(f) => (f, cmd_extremal),
        Command::Optimize(f) => (f, cmd_optimize),
        Command::Simulate(f) => (f, cmd_simulate),
        Command::Verify(f) => (f, cmd_verify),
    };
    let (cfg, dry_run) = flags.resolve()?;
    let report = cmd(&cfg)?;
    if !dry_run {
        for path in report.write_to(&cfg.out_dir())? {
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            for (k, v) in &report.scalars {
                println!("{k} = {v:.16e}");
            }
            for c in &report.checks {
                let mark = if c.passed { "PASS" } else { "FAIL" };
                println!("[{mark}] {} {}: {}", c.id, c.name, c.detail);
            }
            if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("hbl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
