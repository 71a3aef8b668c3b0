use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use windrisk_core::experiment::{
    run_comparison, run_phase_report, run_simulation, write_comparison, write_phase_report, write_simulation,
};
use windrisk_core::mcengine::with_threads;
use windrisk_core::{Error, ScenarioConfig};

/// Wind-event resilience risk of distribution feeders.
#[derive(Parser, Debug)]
#[command(name = "windrisk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the loss distribution and report VaR/CVaR.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Paired-seed comparison of several configurations.
    Compare {
        #[arg(long, required = true, num_args = 1..)]
        config: Vec<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Mean per-phase indicators at one wind speed.
    PhaseReport {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        omega: f64,
        #[command(flatten)]
        run: RunFlags,
    },
}

#[derive(Args, Debug, Clone)]
struct RunFlags {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; changes speed only.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

impl RunFlags {
    fn load(&self, path: &PathBuf) -> Result<ScenarioConfig, Error> {
        let mut config = ScenarioConfig::load(path)?;
        if let Some(seed) = self.seed {
            config.master_seed = seed;
        }
        if let Some(trials) = self.trials {
            config.n_trials = trials;
        }
        if let Some(alpha) = self.alpha {
            config.alpha = alpha;
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        config.validate()?;
        Ok(config)
    }
}

fn simulate(config: &PathBuf, run: &RunFlags) -> Result<(), Error> {
    let config = run.load(config)?;
    let sim = with_threads(run.threads, || run_simulation(&config))??;
    write_simulation(&sim, &config, &config.output_dir)?;
    let m = &sim.metrics;
    println!(
        "config={} profile={} alpha={} var_mwh={:.4} cvar_mwh={:.4}",
        m.config_label, m.profile_label, m.alpha, m.var_mwh, m.cvar_mwh
    );
    println!("artifacts written to {}", config.output_dir.display());
    Ok(())
}

fn compare(paths: &[PathBuf], run: &RunFlags) -> Result<(), Error> {
    let configs = paths.iter().map(|p| run.load(p)).collect::<Result<Vec<_>, _>>()?;
    let cmp = with_threads(run.threads, || run_comparison(&configs))??;
    let out = run.out.clone().unwrap_or_else(|| configs[0].output_dir.clone());
    write_comparison(&cmp, &out)?;
    println!("{:<8} {:>12} {:>12}  below_base", "config", "var_mwh", "cvar_mwh");
    for row in &cmp.rows {
        println!(
            "{:<8} {:>12.4} {:>12.4}  {}",
            row.config, row.var_mwh, row.cvar_mwh, row.below_base
        );
    }
    for row in cmp.flagged() {
        println!("warning: {} is not below the base configuration", row.config);
    }
    Ok(())
}

fn phase_report(config: &PathBuf, omega: f64, run: &RunFlags) -> Result<(), Error> {
    let config = run.load(config)?;
    let report = with_threads(run.threads, || run_phase_report(&config, omega))??;
    write_phase_report(&report, &config.output_dir)?;
    println!(
        "config={} omega={} phase1_load_loss_kw={:.3} phase2_duration_h={:.3} phase3_restored_kw={:.3} loss_mwh={:.4}",
        report.config,
        report.wind_speed,
        report.phase1_load_loss_kw,
        report.phase2_duration_h,
        report.phase3_restored_kw,
        report.loss_mwh
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Simulate { config, run } => simulate(config, run),
        Command::Compare { config, run } => compare(config, run),
        Command::PhaseReport { config, omega, run } => phase_report(config, *omega, run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
