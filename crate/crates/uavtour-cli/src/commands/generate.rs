use uavtour::instance::{self, generate};
use uavtour::seeds;

use crate::cli::GenerateArgs;
use crate::errors::CliError;

/// Domain tag for instance-seed derivation; distinct from the tags used
/// inside training so generated corpora never alias the training stream.
const TAG_GENERATE: u64 = 100;

pub fn run(args: GenerateArgs) -> Result<(), CliError> {
    if args.k < 1 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    if args.n < 2 {
        return Err(CliError::Usage("--n must be at least 2".into()));
    }
    if !(args.zeta > 0.0) || !(args.area > 0.0) {
        return Err(CliError::Usage("--zeta and --area must be positive".into()));
    }
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.out_dir.display())))?;
    for i in 0..args.count {
        let seed = seeds::derive(args.seed, TAG_GENERATE, i as u64);
        let inst = generate(args.k, args.n, args.zeta, seed, args.area)?;
        let path = args.out_dir.join(format!("inst_{i:04}.json"));
        instance::save(&inst, &path)?;
    }
    println!(
        "wrote {} instances (K={}, N={}) to {}",
        args.count,
        args.k,
        args.n,
        args.out_dir.display()
    );
    Ok(())
}
