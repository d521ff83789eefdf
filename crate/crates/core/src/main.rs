use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use safem::harness::{self, ExperimentKind, Ladder, OutputPrefix, RunConfig};
use safem::Error;

#[derive(Parser)]
#[command(version, about = "Finite-element spectra of the Laplacian on intervals under self-adjoint boundary conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory or file-name prefix; overrides the config.
    #[arg(long)]
    out: Option<String>,
    /// Number of eigenpairs; overrides the config.
    #[arg(long)]
    k: Option<usize>,
    /// Resolution N or a comma-separated ladder; overrides the config.
    #[arg(long)]
    n: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Lowest eigenpairs at one resolution.
    Solve(Common),
    /// Errors against a reference spectrum over a resolution ladder.
    Converge(Common),
    /// Condition number of the boundary matrix and its bound.
    Condition(Common),
    /// Eigenvalue sensitivity along a path of boundary unitaries.
    Stability(Common),
    /// Invariance of the boundary condition under a symmetry group.
    Symmetry(Common),
}

fn load(common: &Common) -> Result<(RunConfig, OutputPrefix), Error> {
    let mut config = RunConfig::from_path(&common.config)?;
    if let Some(k) = common.k {
        config.k = k;
    }
    if let Some(n) = &common.n {
        config.n = Some(Ladder::parse(n)?);
    }
    let out = common
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| "out/".to_string());
    Ok((config, OutputPrefix(out)))
}

fn run(cli: Cli) -> Result<(), Error> {
    let (kind, common) = match &cli.command {
        Command::Solve(c) => (ExperimentKind::Solve, c),
        Command::Converge(c) => (ExperimentKind::Converge, c),
        Command::Condition(c) => (ExperimentKind::Condition, c),
        Command::Stability(c) => (ExperimentKind::Stability, c),
        Command::Symmetry(c) => (ExperimentKind::Symmetry, c),
    };
    let (config, out) = load(common)?;
    let mut written = Vec::new();
    match kind {
        ExperimentKind::Solve => {
            let report = harness::run_solve(&config)?;
            println!("{}", harness::describe_solve(&report));
            written.extend(harness::write_solve(&report, &config, &out)?);
        }
        ExperimentKind::Converge => {
            let report = harness::run_convergence(&config)?;
            for (i, (e, h)) in report.eigenvalue_slopes.iter().zip(&report.h1_slopes).enumerate() {
                println!("mode {i}: eigenvalue slope {e:.4}, H1 slope {h:.4}");
            }
            written.push(out.write("convergence.csv", &report.table())?);
            written.push(out.write("convergence_slopes.csv", &report.slope_table())?);
        }
        ExperimentKind::Condition => {
            let report = harness::run_condition(&config)?;
            for r in &report.rows {
                let flag = if r.ill_conditioned { " (ill-conditioned: increase N)" } else { "" };
                println!(
                    "N = {}: kappa(F) = {:.6e}, bound {:.6e}{flag}",
                    r.resolution, r.kappa, r.kappa_bound
                );
            }
            written.push(out.write("condition.csv", &report.table())?);
            if !report.trials.is_empty() {
                let violations = report.trials.iter().filter(|t| t.kappa > t.kappa_bound).count();
                println!("{} random trials, {violations} above the bound", report.trials.len());
                written.push(out.write("condition_trials.csv", &report.trial_table())?);
            }
        }
        ExperimentKind::Stability => {
            let report = harness::run_stability(&config)?;
            println!("perturbation size measured in the spectral norm");
            written.push(out.write("stability.csv", &report.table())?);
        }
        ExperimentKind::Symmetry => {
            let report = harness::run_symmetry(&config)?;
            println!(
                "invariant: {} (max commutator norm {:.6e})",
                report.invariant,
                report.max_commutator_norm()
            );
            if let Some(g) = report.offending_generator() {
                println!("generator {g} does not commute with U");
            }
            written.push(out.write("symmetry.csv", &report.table())?);
        }
    }
    for p in written {
        log::info!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
