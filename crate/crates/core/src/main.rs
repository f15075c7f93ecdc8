use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use entshape::harness::{self, ConventionChoice, Experiment, ExperimentConfig, RunOutput, Status};
use entshape::Error;

#[derive(Parser)]
#[command(
    name = "entshape",
    version,
    about = "Post-channel distillation vs pre-channel shaping experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// `key = value` configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo runs
    #[arg(long, global = true)]
    runs: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["paper", "oracle", "both"])]
    convention: Option<String>,
    /// Extra `key=value` override, repeatable; same keys as the config file
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Depolarizing comparison at the benchmark point
    Table1,
    /// Amplitude-damping comparison
    Table2,
    /// Entropy-flow trajectories as CSV
    Flow,
    /// Noise-level sweep
    Sweep,
    /// E_R of a single state
    Er,
    /// Oracle self-check suite
    Check,
}

impl Command {
    fn experiment(self) -> Experiment {
        match self {
            Command::Table1 => Experiment::Table1,
            Command::Table2 => Experiment::Table2,
            Command::Flow => Experiment::Flow,
            Command::Sweep => Experiment::Sweep,
            Command::Er => Experiment::ErSingle,
            Command::Check => Experiment::Selfcheck,
        }
    }
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.experiment = cli.command.experiment();
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = cli.runs {
        cfg.runs = r;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if let Some(c) = &cli.convention {
        cfg.convention = c.parse::<ConventionChoice>()?;
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_summary(out: &RunOutput) {
    let r = &out.result;
    println!("{} (entshape {})", r.experiment, r.library_version);
    if !r.rows.is_empty() {
        println!(
            "{:<18} {:<8} {:>22} {:>22} {:>10}  status",
            "protocol", "conv", "E_R global / pair", "success prob.", "rate"
        );
        for row in &r.rows {
            let ps = row
                .success_probability
                .map(|s| format!("{:.4} ± {:.4}", s.mean, s.std))
                .unwrap_or_else(|| "deterministic".into());
            println!(
                "{:<18} {:<8} {:>22} {:>22} {:>10.4}  {}",
                row.protocol,
                row.convention.as_deref().unwrap_or("-"),
                format!("{:.4} ± {:.4}", row.er_global_per_pair.mean, row.er_global_per_pair.std),
                ps,
                row.effective_rate,
                if row.converged { "ok" } else { "NOT CONVERGED" }
            );
        }
    }
    if !r.discrepancies.is_empty() {
        let bad = r
            .discrepancies
            .iter()
            .filter(|d| d.status == Status::Discrepancy)
            .count();
        println!(
            "claims: {} reproduced, {} discrepancies",
            r.discrepancies.len() - bad,
            bad
        );
    }
    for c in &r.checks {
        println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("wall clock: {:.2} s", r.wall_clock_seconds);
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Io { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if matches!(e, Error::Io { .. }) { 3 } else { 2 });
        }
    };
    let out = match harness::run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let written = match harness::write_outputs(&out) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    if !cli.quiet {
        print_summary(&out);
        for p in &written {
            println!("wrote {}", p.display());
        }
    }
    if out.result.all_checks_passed() {
        ExitCode::SUCCESS
    } else {
        if cli.quiet {
            eprintln!("self-check failed");
        }
        ExitCode::from(1)
    }
}
