use std::path::PathBuf;

use serde::Deserialize;
use uavtour::training::{train, TrainConfig};

use crate::cli::TrainArgs;
use crate::errors::CliError;

/// Keys present in a --config file win over the corresponding flags.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigOverride {
    batch_size: Option<usize>,
    steps: Option<u64>,
    k: Option<usize>,
    n: Option<usize>,
    zeta: Option<f64>,
    area: Option<f64>,
    actor_lr: Option<f64>,
    critic_lr: Option<f64>,
    seed: Option<u64>,
    embed_dim: Option<usize>,
    eval_every: Option<u64>,
    eval_count: Option<usize>,
    checkpoint: Option<PathBuf>,
    log: Option<PathBuf>,
}

pub fn run(args: TrainArgs) -> Result<(), CliError> {
    let mut config = TrainConfig {
        batch_size: args.batch_size,
        n_steps: args.steps,
        k: args.k,
        n: args.n,
        zeta: args.zeta,
        area: args.area,
        actor_lr: args.actor_lr,
        critic_lr: args.critic_lr,
        seed: args.seed,
        embed_dim: args.embed_dim,
        eval_every: args.eval_every,
        eval_count: args.eval_count,
        checkpoint_path: args.checkpoint,
        log_path: args.log,
    };
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let over: ConfigOverride = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        apply(&mut config, over);
    }
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let outcome = train(&config)?;
    println!(
        "trained {} steps (total {}), checkpoint {}",
        outcome.steps_run,
        outcome.checkpoint.steps_done,
        config.checkpoint_path.display()
    );
    println!(
        "eval ratio: initial {:.4}, final {:.4}",
        outcome.initial_eval_ratio, outcome.final_eval_ratio
    );
    Ok(())
}

fn apply(config: &mut TrainConfig, over: ConfigOverride) {
    if let Some(v) = over.batch_size {
        config.batch_size = v;
    }
    if let Some(v) = over.steps {
        config.n_steps = v;
    }
    if let Some(v) = over.k {
        config.k = v;
    }
    if let Some(v) = over.n {
        config.n = v;
    }
    if let Some(v) = over.zeta {
        config.zeta = v;
    }
    if let Some(v) = over.area {
        config.area = v;
    }
    if let Some(v) = over.actor_lr {
        config.actor_lr = v;
    }
    if let Some(v) = over.critic_lr {
        config.critic_lr = v;
    }
    if let Some(v) = over.seed {
        config.seed = v;
    }
    if let Some(v) = over.embed_dim {
        config.embed_dim = v;
    }
    if let Some(v) = over.eval_every {
        config.eval_every = v;
    }
    if let Some(v) = over.eval_count {
        config.eval_count = v;
    }
    if let Some(v) = over.checkpoint {
        config.checkpoint_path = v;
    }
    if let Some(v) = over.log {
        config.log_path = Some(v);
    }
}
