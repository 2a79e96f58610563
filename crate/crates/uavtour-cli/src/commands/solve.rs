use uavtour::report::SolveReport;

use crate::cli::SolveArgs;
use crate::csvout::{num, CsvFile};
use crate::errors::CliError;
use crate::workers;

/// One row per (instance, solver). The primary CSV carries no wall-clock
/// column so repeated runs are byte-identical; timings go to the optional
/// sidecar instead.
pub fn run(args: SolveArgs) -> Result<(), CliError> {
    let solver = super::parse_solver(&args.solver)?;
    let eparams = super::energy_params(args.omega, &args.params)?;
    let aco = super::aco_config(&args.aco)?;
    let policy = match &args.checkpoint {
        Some(path) => Some(super::load_checkpoint(path)?.policy),
        None => None,
    };
    if solver == uavtour::report::Solver::Drl && policy.is_none() {
        return Err(CliError::Usage("--solver drl needs --checkpoint".into()));
    }
    let instances = super::load_instances(&args.instances, &args.dir)?;

    let results: Vec<Result<SolveReport, CliError>> = workers::ordered_map(
        &instances,
        workers::worker_count(),
        |(_, inst)| super::run_solver(solver, inst, &eparams, &aco, policy.as_ref()),
    );

    let mut csv = CsvFile::new(
        "uavtour.solve.v1",
        "instance,seed,solver,omega,total_j,ground_intra_j,ground_ch_tx_j,uav_flight_j,uav_collect_j,tour",
    );
    let mut timings = CsvFile::new("uavtour.solve-timings.v1", "instance,solver,wall_s");
    for ((name, _), result) in instances.iter().zip(results) {
        let report = result?;
        let b = &report.breakdown;
        csv.row(&[
            name.clone(),
            report.fingerprint.instance_seed.to_string(),
            report.solver.name().to_string(),
            num(report.fingerprint.omega),
            num(b.total_weighted),
            num(b.ground_intra),
            num(b.ground_ch_tx),
            num(b.uav_flight),
            num(b.uav_collect),
            report.tour.to_compact(),
        ]);
        timings.row(&[
            name.clone(),
            report.solver.name().to_string(),
            num(report.wall_clock),
        ]);
    }
    csv.write_to(args.out.as_deref())?;
    if let Some(path) = &args.timings {
        timings.write_to(Some(path))?;
    }
    Ok(())
}
