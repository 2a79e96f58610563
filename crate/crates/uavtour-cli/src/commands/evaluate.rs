use uavtour::instance::{generate, Instance};
use uavtour::seeds;
use uavtour::training;

use crate::cli::EvaluateArgs;
use crate::csvout::{num, CsvFile};
use crate::errors::CliError;

const TAG_EVALUATE: u64 = 101;

/// Benchmarks a checkpoint against greedy, ACO, and exact on a held-out set:
/// either a directory of saved instances or a freshly derived batch.
pub fn run(args: EvaluateArgs) -> Result<(), CliError> {
    let ckpt = super::load_checkpoint(&args.checkpoint)?;
    let eparams = super::energy_params(args.omega, &None)?;
    let aco = super::aco_config(&args.aco)?;

    let instances: Vec<Instance> = match &args.dir {
        Some(_) => super::load_instances(&[], &args.dir)?
            .into_iter()
            .map(|(_, inst)| inst)
            .collect(),
        None => {
            let k = args.k.unwrap_or(ckpt.trained_k);
            (0..args.count)
                .map(|i| {
                    let seed = seeds::derive(args.seed, TAG_EVALUATE, i as u64);
                    generate(k, args.n, args.zeta, seed, args.area)
                })
                .collect::<Result<_, _>>()?
        }
    };

    let eval = training::evaluate(&ckpt.policy, &instances, &eparams, &aco)?;

    let mut csv = CsvFile::new(
        "uavtour.evaluate.v1",
        "instance_seed,drl_j,greedy_j,aco_j,exact_j,drl_ratio,greedy_ratio,aco_ratio",
    );
    for row in &eval.rows {
        csv.row(&[
            row.instance_seed.to_string(),
            num(row.drl),
            num(row.greedy),
            num(row.aco),
            num(row.exact),
            num(row.ratio(row.drl)),
            num(row.ratio(row.greedy)),
            num(row.ratio(row.aco)),
        ]);
    }
    let n = eval.rows.len().max(1) as f64;
    let mean = |f: &dyn Fn(&training::EvalRow) -> f64| eval.rows.iter().map(|r| f(r)).sum::<f64>() / n;
    csv.row(&[
        "mean".to_string(),
        num(mean(&|r| r.drl)),
        num(mean(&|r| r.greedy)),
        num(mean(&|r| r.aco)),
        num(mean(&|r| r.exact)),
        num(eval.mean_drl_ratio()),
        num(eval.mean_greedy_ratio()),
        num(eval.mean_aco_ratio()),
    ]);
    csv.write_to(args.out.as_deref())?;
    eprintln!(
        "mean ratios vs exact: drl {:.4}, greedy {:.4}, aco {:.4} ({} instances)",
        eval.mean_drl_ratio(),
        eval.mean_greedy_ratio(),
        eval.mean_aco_ratio(),
        eval.rows.len()
    );
    Ok(())
}
