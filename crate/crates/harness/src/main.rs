use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use manakov::{sample_path, SchemeKind};
use manakov_harness::study::{run_convergence_study, run_scheme_comparison, run_soliton_check};
use manakov_harness::{output, ExperimentConfig, HarnessError, OUT_DIR_ENV};

/// Convergence studies and scheme comparisons for the stochastic Manakov equation.
#[derive(Parser)]
#[command(name = "manakov", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Strong-convergence ladder on fixed Brownian paths.
    Converge(Common),
    /// All configured schemes on one path against a fine Crank–Nicolson run.
    Compare(Common),
    /// Deterministic runs against the exact soliton (gamma forced to 0).
    SolitonCheck(Common),
    /// Writes the reference-level Brownian path as a binary dump.
    PathDump(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Restrict to one seed (default: every configured seed, or the first
    /// one for single-path commands).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; takes precedence over MANAKOV_OUT and the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Restrict to these schemes (repeatable).
    #[arg(long = "scheme")]
    schemes: Vec<SchemeKind>,
    /// Replace a configuration value, as key=value (repeatable).
    #[arg(long = "override")]
    overrides: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf), HarnessError> {
        let mut cfg = ExperimentConfig::load_with_overrides(&self.config, &self.overrides)?;
        if !self.schemes.is_empty() {
            cfg.schemes = self.schemes.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seeds = vec![seed];
        }
        cfg.validate()?;
        let out = self
            .out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| cfg.out_dir.clone());
        Ok((cfg, out))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Converge(c)
        | Command::Compare(c)
        | Command::SolitonCheck(c)
        | Command::PathDump(c) => c,
    };
    let (cfg, out) = match common.load() {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(1);
        }
    };
    match run(&cli.command, &cfg, &out) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Returns whether every required run completed.
fn run(
    command: &Command,
    cfg: &ExperimentConfig,
    out: &std::path::Path,
) -> Result<bool, HarnessError> {
    let seed = cfg.seeds[0];
    match command {
        Command::Converge(_) => {
            let report = run_convergence_study(cfg)?;
            let files = output::emit_study(&report, out)?;
            for o in &report.orders {
                match o.fit {
                    Some(f) => println!(
                        "{:<10} {:<7} slope {:.4} residual {:.4}",
                        o.scheme, o.norm, f.slope, f.residual
                    ),
                    None => println!("{:<10} {:<7} no fit", o.scheme, o.norm),
                }
            }
            println!("wrote {} files to {}", files.len(), out.display());
            if !report.references_completed() {
                eprintln!("a reference run did not complete");
                return Ok(false);
            }
            Ok(true)
        }
        Command::Compare(_) => {
            let report = run_scheme_comparison(cfg, seed)?;
            output::emit_comparison(&report, out)?;
            println!("seed {seed}, N = {}", report.n_steps);
            println!(
                "{:<10} {:>12} {:>12} {:>12} {:>10}  status",
                "scheme", "err2", "errInf", "massDrift", "wall[s]"
            );
            for r in &report.rows {
                println!(
                    "{:<10} {:>12.4e} {:>12.4e} {:>12.4e} {:>10.3}  {}",
                    r.scheme, r.err2, r.err_inf, r.mass_drift, r.wall_seconds, r.status
                );
            }
            if !report.reference.status.is_completed() {
                eprintln!("reference run ended with {}", report.reference.status);
                return Ok(false);
            }
            Ok(true)
        }
        Command::SolitonCheck(_) => {
            let report = run_soliton_check(cfg)?;
            output::emit_soliton(&report, out)?;
            let mut ok = true;
            for (scheme, r) in &report.results {
                let slope = r.fit.map_or("-".to_string(), |f| format!("{:.3}", f.slope));
                println!("{scheme:<10} slope {slope}");
                for i in 0..r.steps.len() {
                    println!(
                        "  N {:>6}  err_L2 {:.4e}  peak drift {:.3e}  {}",
                        r.steps[i], r.errors_l2[i], r.peak_drift[i], r.statuses[i]
                    );
                }
                if *scheme == SchemeKind::CrankNicolson {
                    ok &= r.statuses.iter().all(|s| s.is_completed());
                }
            }
            Ok(ok)
        }
        Command::PathDump(_) => {
            let path = sample_path(seed, cfg.n_fine(), cfg.dt_at(cfg.levels))?;
            std::fs::create_dir_all(out)?;
            let file = out.join(format!("path_seed{seed}_N{}.bin", path.n_steps()));
            let mut buf = Vec::new();
            path.write_binary(&mut buf)?;
            std::fs::write(&file, buf)?;
            println!("wrote {}", file.display());
            Ok(true)
        }
    }
}
