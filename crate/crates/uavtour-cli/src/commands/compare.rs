use std::collections::BTreeMap;

use uavtour::exact::solve_exact;
use uavtour::report::Solver;

use crate::cli::CompareArgs;
use crate::csvout::{num, CsvFile};
use crate::errors::CliError;
use crate::workers;

struct Row {
    omega: f64,
    k: usize,
    name: String,
    seed: u64,
    solver: Solver,
    energy: f64,
    exact: f64,
}

/// Sweeps every requested solver over every instance at every omega and
/// reports per-instance ratios plus (omega, K, solver) means. The exact
/// optimum is recomputed per omega since the objective weight changes it.
pub fn run(args: CompareArgs) -> Result<(), CliError> {
    let solvers: Vec<Solver> = args
        .solvers
        .iter()
        .map(|s| super::parse_solver(s))
        .collect::<Result<_, _>>()?;
    if solvers.iter().any(|s| matches!(s, Solver::Exact | Solver::Brute)) {
        return Err(CliError::Usage(
            "compare always runs exact as the reference; list only heuristics and drl".into(),
        ));
    }
    let aco = super::aco_config(&args.aco)?;
    let policy = match &args.checkpoint {
        Some(path) => Some(super::load_checkpoint(path)?.policy),
        None => None,
    };
    if solvers.contains(&Solver::Drl) && policy.is_none() {
        return Err(CliError::Usage("drl in --solvers needs --checkpoint".into()));
    }
    let instances = super::load_instances(&[], &Some(args.dir.clone()))?;

    let mut items = Vec::new();
    for &omega in &args.omegas {
        for entry in &instances {
            items.push((omega, entry));
        }
    }
    let results: Vec<Result<Vec<Row>, CliError>> =
        workers::ordered_map(&items, workers::worker_count(), |(omega, (name, inst))| {
            let eparams = super::energy_params(*omega, &None)?;
            let exact = solve_exact(inst, &eparams)?;
            let reference = exact.energy();
            let mut rows = Vec::with_capacity(solvers.len());
            for &solver in &solvers {
                let report = super::run_solver(solver, inst, &eparams, &aco, policy.as_ref())?;
                rows.push(Row {
                    omega: *omega,
                    k: inst.clusters.len(),
                    name: name.clone(),
                    seed: inst.seed,
                    solver,
                    energy: report.energy(),
                    exact: reference,
                });
            }
            Ok(rows)
        });

    let mut ratios = CsvFile::new(
        "uavtour.compare-ratios.v1",
        "omega,k,instance,seed,solver,energy_j,exact_j,ratio",
    );
    // (omega in row order, k, solver name) -> (sum of ratios, count)
    let mut groups: BTreeMap<(usize, usize, &'static str), (f64, usize)> = BTreeMap::new();
    let mut omega_order: Vec<f64> = Vec::new();
    for result in results {
        for row in result? {
            let ratio = row.energy / row.exact;
            ratios.row(&[
                num(row.omega),
                row.k.to_string(),
                row.name,
                row.seed.to_string(),
                row.solver.name().to_string(),
                num(row.energy),
                num(row.exact),
                num(ratio),
            ]);
            let omega_idx = match omega_order.iter().position(|&w| w == row.omega) {
                Some(i) => i,
                None => {
                    omega_order.push(row.omega);
                    omega_order.len() - 1
                }
            };
            let slot = groups.entry((omega_idx, row.k, row.solver.name())).or_insert((0.0, 0));
            slot.0 += ratio;
            slot.1 += 1;
        }
    }

    let mut sweep = CsvFile::new(
        "uavtour.compare-sweep.v1",
        "omega,k,solver,mean_ratio,instances",
    );
    for ((omega_idx, k, solver), (sum, count)) in &groups {
        sweep.row(&[
            num(omega_order[*omega_idx]),
            k.to_string(),
            solver.to_string(),
            num(sum / *count as f64),
            count.to_string(),
        ]);
    }

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.out_dir.display())))?;
    ratios.write_to(Some(&args.out_dir.join("ratios.csv")))?;
    sweep.write_to(Some(&args.out_dir.join("sweep.csv")))?;
    println!(
        "compared {} solvers x {} omegas x {} instances -> {}",
        solvers.len(),
        args.omegas.len(),
        instances.len(),
        args.out_dir.display()
    );
    Ok(())
}
