//! Policy-gradient training: batches of fresh instances, sampled rollouts,
//! advantage = reward minus critic estimate, simultaneous actor and critic
//! Adam updates, periodic greedy-decode evaluation against the exact solver.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{self, EnergyParams};
use crate::exact;
use crate::heuristics::{self, AcoConfig};
use crate::instance::{self, Instance};
use crate::numerics::{AdamState, NumericsError};
use crate::policy::{
    Checkpoint, CriticParams, DecodeMode, PolicyError, PolicyParams, critic_forward, rollout,
};
use crate::seeds;

// Independent random streams derived from the config seed.
const TAG_POLICY_INIT: u64 = 1;
const TAG_CRITIC_INIT: u64 = 2;
const TAG_TRAIN_INSTANCE: u64 = 3;
const TAG_ROLLOUT: u64 = 4;
const TAG_EVAL_INSTANCE: u64 = 5;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Instance(#[from] instance::InstanceError),
    #[error(transparent)]
    Energy(#[from] energy::EnergyError),
    #[error(transparent)]
    Exact(#[from] exact::ExactError),
    #[error("checkpoint at {path} was trained with embed_dim {found}, config wants {want}")]
    DimMismatch {
        path: String,
        found: usize,
        want: usize,
    },
    #[error("non-finite loss or gradient; update aborted, last saved checkpoint is intact")]
    Diverged,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub n_steps: u64,
    pub k: usize,
    pub n: usize,
    pub zeta: f64,
    pub area: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub seed: u64,
    pub embed_dim: usize,
    /// Evaluate and checkpoint every this many steps (and at the end).
    pub eval_every: u64,
    /// Held-out evaluation set size.
    pub eval_count: usize,
    pub checkpoint_path: PathBuf,
    /// Append per-step statistics here as CSV when set.
    pub log_path: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            n_steps: 10_000,
            k: 4,
            n: 20,
            zeta: 100.0,
            area: 1000.0,
            actor_lr: 1e-4,
            critic_lr: 1e-4,
            seed: 0,
            embed_dim: 64,
            eval_every: 500,
            eval_count: 30,
            checkpoint_path: PathBuf::from("checkpoint.json"),
            log_path: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size < 1 {
            return Err(TrainError::BadConfig("batch_size must be >= 1".into()));
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return Err(TrainError::BadConfig("learning rates must be > 0".into()));
        }
        if self.embed_dim < 1 {
            return Err(TrainError::BadConfig("embed_dim must be >= 1".into()));
        }
        if self.eval_every < 1 {
            return Err(TrainError::BadConfig("eval_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// Gradients are rescaled when their global norm exceeds this.
const GRAD_CLIP: f64 = 2.0;

/// Per-step statistics, also one row of the training log.
#[derive(Debug, Clone, Copy)]
pub struct StepStats {
    /// Mean raw reward over the batch, J (negative energy).
    pub mean_reward: f64,
    /// Global actor gradient norm before clipping, in normalized units.
    pub actor_grad_norm: f64,
    /// Mean squared error of the critic over the batch.
    pub critic_loss: f64,
}

fn global_norm(params: &[&crate::numerics::Param]) -> f64 {
    params
        .iter()
        .flat_map(|p| p.grad.data().iter())
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt()
}

fn clip_grads(params: Vec<&mut crate::numerics::Param>, max_norm: f64) {
    let norm = params
        .iter()
        .flat_map(|p| p.grad.data().iter())
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for p in params {
            for g in p.grad.data_mut() {
                *g *= scale;
            }
        }
    }
}

/// One batch update: sample a rollout per instance, weight each log-prob
/// gradient by (normalized reward - critic value) / B, fit the critic to the
/// normalized rewards with MSE, clip both gradient sets, apply Adam.
#[allow(clippy::too_many_arguments)]
pub fn reinforce_step(
    instances: &[Instance],
    rollout_seeds: &[u64],
    eparams: &EnergyParams,
    policy: &mut PolicyParams,
    critic: &mut CriticParams,
    actor_opt: &mut AdamState,
    critic_opt: &mut AdamState,
    norm_const: f64,
) -> Result<StepStats, TrainError> {
    assert_eq!(instances.len(), rollout_seeds.len());
    let b = instances.len() as f64;
    let mut reward_sum = 0.0;
    let mut critic_loss = 0.0;
    for (inst, &seed) in instances.iter().zip(rollout_seeds) {
        let mut taped = rollout(inst, policy, eparams, DecodeMode::Sample, seed)?;
        let r_norm = taped.rollout.reward / norm_const;
        reward_sum += taped.rollout.reward;
        let mut value = critic_forward(&taped.context, critic)?;
        let advantage = r_norm - value.value();
        // Ascend advantage-weighted log-probability = descend its negation.
        taped.accumulate_scaled_grad(-advantage / b, policy)?;
        critic_loss += value.accumulate_mse_grad(r_norm, 1.0 / b, critic)?;
    }
    let actor_grad_norm = global_norm(&policy.params());
    let critic_grad_norm = global_norm(&critic.params());
    // Bail before clipping or Adam so neither net moves on a poisoned batch;
    // the checkpoint on disk stays at the last good state.
    if !(reward_sum.is_finite()
        && critic_loss.is_finite()
        && actor_grad_norm.is_finite()
        && critic_grad_norm.is_finite())
    {
        return Err(TrainError::Diverged);
    }
    clip_grads(policy.params_mut(), GRAD_CLIP);
    clip_grads(critic.params_mut(), GRAD_CLIP);
    actor_opt.step(&mut policy.params_mut())?;
    critic_opt.step(&mut critic.params_mut())?;
    Ok(StepStats {
        mean_reward: reward_sum / b,
        actor_grad_norm,
        critic_loss,
    })
}

/// Training result: the final checkpoint plus the evaluation trajectory.
#[derive(Debug)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    /// Greedy-decode mean energy ratio vs exact on the held-out set before
    /// this run's first update (or at the resume point).
    pub initial_eval_ratio: f64,
    pub final_eval_ratio: f64,
    pub steps_run: u64,
}

fn generate_batch(config: &TrainConfig, step: u64) -> Result<(Vec<Instance>, Vec<u64>), TrainError> {
    let b = config.batch_size as u64;
    let mut instances = Vec::with_capacity(config.batch_size);
    let mut rollout_seeds = Vec::with_capacity(config.batch_size);
    for i in 0..b {
        let idx = step * b + i;
        let inst_seed = seeds::derive(config.seed, TAG_TRAIN_INSTANCE, idx);
        instances.push(instance::generate(
            config.k,
            config.n,
            config.zeta,
            inst_seed,
            config.area,
        )?);
        rollout_seeds.push(seeds::derive(config.seed, TAG_ROLLOUT, idx));
    }
    Ok((instances, rollout_seeds))
}

/// Greedy-decode mean energy ratio against precomputed exact optima.
fn eval_ratio(
    policy: &PolicyParams,
    eval_set: &[(Instance, f64)],
    eparams: &EnergyParams,
) -> Result<f64, TrainError> {
    let mut total = 0.0;
    for (inst, exact_energy) in eval_set {
        let out = rollout(inst, policy, eparams, DecodeMode::Greedy, 0)?;
        total += -out.rollout.reward / exact_energy;
    }
    Ok(total / eval_set.len() as f64)
}

struct TrainLog {
    file: Option<std::fs::File>,
}

impl TrainLog {
    fn open(path: &Option<PathBuf>) -> Result<Self, TrainError> {
        let file = match path {
            None => None,
            Some(p) => {
                let fresh = !p.exists();
                let mut f = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(p)
                    .map_err(|source| TrainError::Io {
                        path: p.display().to_string(),
                        source,
                    })?;
                if fresh {
                    writeln!(f, "step,mean_reward,actor_grad_norm,critic_loss,eval_ratio")
                        .map_err(|source| TrainError::Io {
                            path: p.display().to_string(),
                            source,
                        })?;
                }
                Some(f)
            }
        };
        Ok(Self { file })
    }

    fn row(&mut self, step: u64, stats: &StepStats, eval: Option<f64>) {
        if let Some(f) = &mut self.file {
            let eval_col = eval.map_or(String::new(), |r| format!("{:.9e}", r));
            // Log failures should not kill a long training run.
            let _ = writeln!(
                f,
                "{},{:.9e},{:.9e},{:.9e},{}",
                step, stats.mean_reward, stats.actor_grad_norm, stats.critic_loss, eval_col
            );
        }
    }
}

/// Runs (or resumes) REINFORCE-with-baseline training.
///
/// Everything is a pure function of the config: instance streams, rollout
/// sampling, and initialization all derive from `config.seed`, so two runs
/// with the same config produce identical checkpoints. If the checkpoint
/// path already holds a compatible checkpoint, training continues from it
/// (the instance stream is indexed by absolute step, so a resumed run
/// retraces the exact schedule of an uninterrupted one).
pub fn train(config: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    let eparams = EnergyParams::default();

    let mut ckpt = if config.checkpoint_path.exists() {
        let loaded = Checkpoint::load(&config.checkpoint_path)?;
        if loaded.embed_dim != config.embed_dim {
            return Err(TrainError::DimMismatch {
                path: config.checkpoint_path.display().to_string(),
                found: loaded.embed_dim,
                want: config.embed_dim,
            });
        }
        loaded
    } else {
        let policy = PolicyParams::new(
            config.embed_dim,
            seeds::derive(config.seed, TAG_POLICY_INIT, 0),
        );
        let critic = CriticParams::new(
            config.embed_dim,
            seeds::derive(config.seed, TAG_CRITIC_INIT, 0),
        );
        // Rewards are divided by the mean greedy energy of the first batch,
        // making advantages O(1) regardless of omega and joule scale.
        let (first_batch, _) = generate_batch(config, 0)?;
        let mut total = 0.0;
        for inst in &first_batch {
            total += heuristics::solve_greedy(inst, &eparams).energy();
        }
        let actor_sizes = policy.sizes();
        let critic_sizes = critic.sizes();
        Checkpoint {
            version: 1,
            embed_dim: config.embed_dim,
            trained_k: config.k,
            norm_const: total / first_batch.len() as f64,
            steps_done: 0,
            policy,
            critic,
            actor_opt: Some(AdamState::new(config.actor_lr, &actor_sizes)),
            critic_opt: Some(AdamState::new(config.critic_lr, &critic_sizes)),
        }
    };

    // Held-out evaluation set with exact optima, fixed across the run.
    let mut eval_set = Vec::with_capacity(config.eval_count);
    for i in 0..config.eval_count {
        let s = seeds::derive(config.seed, TAG_EVAL_INSTANCE, i as u64);
        let inst = instance::generate(config.k, config.n, config.zeta, s, config.area)?;
        let best = exact::solve_exact(&inst, &eparams)?;
        eval_set.push((inst, best.energy()));
    }

    let mut actor_opt = ckpt
        .actor_opt
        .take()
        .unwrap_or_else(|| AdamState::new(config.actor_lr, &ckpt.policy.sizes()));
    let mut critic_opt = ckpt
        .critic_opt
        .take()
        .unwrap_or_else(|| AdamState::new(config.critic_lr, &ckpt.critic.sizes()));

    let initial_eval_ratio = eval_ratio(&ckpt.policy, &eval_set, &eparams)?;
    let mut log = TrainLog::open(&config.log_path)?;

    let start = ckpt.steps_done;
    if start >= config.n_steps {
        // Nothing to do; report the checkpoint as-is.
        ckpt.actor_opt = Some(actor_opt);
        ckpt.critic_opt = Some(critic_opt);
        if !config.checkpoint_path.exists() {
            ckpt.save(&config.checkpoint_path)?;
        }
        return Ok(TrainOutcome {
            initial_eval_ratio,
            final_eval_ratio: initial_eval_ratio,
            checkpoint: ckpt,
            steps_run: 0,
        });
    }

    // Persist the starting state so an abort always leaves a loadable model.
    {
        let mut snapshot = ckpt.clone();
        snapshot.actor_opt = Some(actor_opt.clone());
        snapshot.critic_opt = Some(critic_opt.clone());
        snapshot.save(&config.checkpoint_path)?;
    }

    let mut last_ratio = initial_eval_ratio;
    for step in start..config.n_steps {
        let (instances, rollout_seeds) = generate_batch(config, step)?;
        let stats = reinforce_step(
            &instances,
            &rollout_seeds,
            &eparams,
            &mut ckpt.policy,
            &mut ckpt.critic,
            &mut actor_opt,
            &mut critic_opt,
            ckpt.norm_const,
        )?;
        let done = step + 1;
        let at_eval = done % config.eval_every == 0 || done == config.n_steps;
        let eval = if at_eval {
            let r = eval_ratio(&ckpt.policy, &eval_set, &eparams)?;
            last_ratio = r;
            Some(r)
        } else {
            None
        };
        log.row(done, &stats, eval);
        if at_eval {
            ckpt.steps_done = done;
            let mut snapshot = ckpt.clone();
            snapshot.actor_opt = Some(actor_opt.clone());
            snapshot.critic_opt = Some(critic_opt.clone());
            snapshot.save(&config.checkpoint_path)?;
        }
    }

    ckpt.steps_done = config.n_steps;
    ckpt.actor_opt = Some(actor_opt);
    ckpt.critic_opt = Some(critic_opt);
    ckpt.save(&config.checkpoint_path)?;
    Ok(TrainOutcome {
        initial_eval_ratio,
        final_eval_ratio: last_ratio,
        steps_run: config.n_steps - start,
        checkpoint: ckpt,
    })
}

/// Side-by-side energies of all four solvers on one instance.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EvalRow {
    pub instance_seed: u64,
    pub drl: f64,
    pub greedy: f64,
    pub aco: f64,
    pub exact: f64,
}

impl EvalRow {
    pub fn ratio(&self, energy: f64) -> f64 {
        energy / self.exact
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub rows: Vec<EvalRow>,
}

impl Evaluation {
    pub fn mean_drl_ratio(&self) -> f64 {
        self.mean(|r| r.drl / r.exact)
    }

    pub fn mean_greedy_ratio(&self) -> f64 {
        self.mean(|r| r.greedy / r.exact)
    }

    pub fn mean_aco_ratio(&self) -> f64 {
        self.mean(|r| r.aco / r.exact)
    }

    fn mean(&self, f: impl Fn(&EvalRow) -> f64) -> f64 {
        self.rows.iter().map(f).sum::<f64>() / self.rows.len() as f64
    }
}

/// Runs DRL (greedy decode), greedy, ACO, and exact on every instance.
pub fn evaluate(
    policy: &PolicyParams,
    instances: &[Instance],
    eparams: &EnergyParams,
    aco: &AcoConfig,
) -> Result<Evaluation, TrainError> {
    let mut rows = Vec::with_capacity(instances.len());
    for inst in instances {
        let drl = -rollout(inst, policy, eparams, DecodeMode::Greedy, 0)?
            .rollout
            .reward;
        let greedy = heuristics::solve_greedy(inst, eparams).energy();
        let aco_energy = heuristics::solve_aco(inst, eparams, aco).energy();
        let exact_energy = exact::solve_exact(inst, eparams)?.energy();
        rows.push(EvalRow {
            instance_seed: inst.seed,
            drl,
            greedy,
            aco: aco_energy,
            exact: exact_energy,
        });
    }
    Ok(Evaluation { rows })
}
