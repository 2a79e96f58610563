use uavtour::instance;

use crate::cli::PlotArgs;
use crate::errors::CliError;
use crate::svg;

pub fn run(args: PlotArgs) -> Result<(), CliError> {
    let solver = super::parse_solver(&args.solver)?;
    let eparams = super::energy_params(args.omega, &args.params)?;
    let aco = super::aco_config(&args.aco)?;
    let policy = match &args.checkpoint {
        Some(path) => Some(super::load_checkpoint(path)?.policy),
        None => None,
    };
    let inst = instance::load(&args.instance)?;
    let report = super::run_solver(solver, &inst, &eparams, &aco, policy.as_ref())?;
    let image = svg::render(&inst, &report.tour);
    std::fs::write(&args.out, image)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.out.display())))?;
    println!(
        "{}: {} tour, {:.3} J weighted -> {}",
        args.instance.display(),
        report.solver.name(),
        report.energy(),
        args.out.display()
    );
    Ok(())
}
