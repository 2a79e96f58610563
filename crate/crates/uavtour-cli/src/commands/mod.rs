mod compare;
mod evaluate;
mod generate;
mod plot;
mod solve;
mod train;

use std::path::PathBuf;
use std::time::Instant;

use uavtour::energy::{self, EnergyParams};
use uavtour::exact;
use uavtour::heuristics::{self, AcoConfig};
use uavtour::instance::{self, Instance};
use uavtour::policy::{Checkpoint, DecodeMode, PolicyParams, rollout};
use uavtour::report::{Solver, SolveReport};

use crate::cli::{AcoArgs, Cli, Command};
use crate::errors::CliError;

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(args) => generate::run(args),
        Command::Solve(args) => solve::run(args),
        Command::Train(args) => train::run(args),
        Command::Evaluate(args) => evaluate::run(args),
        Command::Compare(args) => compare::run(args),
        Command::Plot(args) => plot::run(args),
    }
}

/// Physical parameters: --params supplies the physics, --omega always sets
/// the objective weight (it is an experiment variable, not a constant).
fn energy_params(omega: f64, params: &Option<PathBuf>) -> Result<EnergyParams, CliError> {
    let mut p = match params {
        None => EnergyParams::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            EnergyParams::from_toml(&text)?
        }
    };
    p.omega = omega;
    p.validate()?;
    Ok(p)
}

fn parse_solver(name: &str) -> Result<Solver, CliError> {
    name.parse::<Solver>().map_err(CliError::Usage)
}

fn aco_config(args: &AcoArgs) -> Result<AcoConfig, CliError> {
    let config = AcoConfig {
        n_ants: args.ants,
        n_iterations: args.iterations,
        evaporation: args.evaporation,
        pheromone_weight: args.pheromone_weight,
        visibility_weight: args.visibility_weight,
        rng_seed: args.aco_seed,
    };
    config.validate().map_err(CliError::Usage)?;
    Ok(config)
}

/// Loads instance files given explicitly and/or from a directory; directory
/// entries are sorted by filename so runs are order-stable.
fn load_instances(
    paths: &[PathBuf],
    dir: &Option<PathBuf>,
) -> Result<Vec<(String, Instance)>, CliError> {
    let mut files: Vec<PathBuf> = paths.to_vec();
    if let Some(d) = dir {
        let mut found = Vec::new();
        for entry in
            std::fs::read_dir(d).map_err(|e| CliError::Io(format!("{}: {e}", d.display())))?
        {
            let path = entry.map_err(|e| CliError::Io(e.to_string()))?.path();
            if path.extension().is_some_and(|x| x == "json") {
                found.push(path);
            }
        }
        found.sort();
        files.extend(found);
    }
    if files.is_empty() {
        return Err(CliError::Usage(
            "no instances: pass --instances files or --dir".into(),
        ));
    }
    let mut out = Vec::with_capacity(files.len());
    for path in files {
        let inst = instance::load(&path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        out.push((name, inst));
    }
    Ok(out)
}

fn load_checkpoint(path: &PathBuf) -> Result<Checkpoint, CliError> {
    Ok(Checkpoint::load(path)?)
}

/// Greedy-decode inference wrapped in the same report shape the other
/// solvers emit; wall clock covers decoding only.
fn solve_drl(
    instance: &Instance,
    eparams: &EnergyParams,
    policy: &PolicyParams,
) -> Result<SolveReport, CliError> {
    let started = Instant::now();
    let out = rollout(instance, policy, eparams, DecodeMode::Greedy, 0)?;
    let wall = started.elapsed().as_secs_f64();
    let breakdown = energy::total_weighted_energy(eparams, instance, &out.rollout.tour)?;
    Ok(SolveReport::new(
        Solver::Drl,
        out.rollout.tour,
        breakdown,
        wall,
        instance,
        eparams,
    ))
}

fn run_solver(
    solver: Solver,
    instance: &Instance,
    eparams: &EnergyParams,
    aco: &AcoConfig,
    policy: Option<&PolicyParams>,
) -> Result<SolveReport, CliError> {
    match solver {
        Solver::Exact => Ok(exact::solve_exact(instance, eparams)?),
        Solver::Brute => Ok(exact::brute_force(instance, eparams)?),
        Solver::Greedy => Ok(heuristics::solve_greedy(instance, eparams)),
        Solver::Aco => Ok(heuristics::solve_aco(instance, eparams, aco)),
        Solver::Drl => {
            let policy =
                policy.ok_or_else(|| CliError::Usage("--solver drl needs --checkpoint".into()))?;
            solve_drl(instance, eparams, policy)
        }
    }
}
