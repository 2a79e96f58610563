use std::path::PathBuf;

use uavtour::energy::EnergyParams;
use uavtour::heuristics::AcoConfig;
use uavtour::instance;
use uavtour::numerics::AdamState;
use uavtour::policy::{Checkpoint, CriticParams, DecodeMode, PolicyParams, critic_forward, rollout};
use uavtour::training::{self, TrainConfig, TrainError};

fn tiny_config(dir: &std::path::Path, n_steps: u64) -> TrainConfig {
    TrainConfig {
        batch_size: 4,
        n_steps,
        k: 2,
        n: 4,
        embed_dim: 8,
        eval_every: 2,
        eval_count: 2,
        checkpoint_path: dir.join("ckpt.json"),
        log_path: None,
        ..TrainConfig::default()
    }
}

/// A zero advantage scales every log-probability gradient by zero, so the
/// actor accumulates an exactly zero gradient and Adam leaves it in place.
#[test]
fn zero_advantage_produces_exactly_zero_actor_update() {
    let eparams = EnergyParams::default();
    let inst = instance::generate(3, 5, 100.0, 7, 1000.0).unwrap();
    let mut policy = PolicyParams::new(8, 1);
    let before: Vec<Vec<f64>> = policy
        .params()
        .iter()
        .map(|p| p.value.data().to_vec())
        .collect();

    let mut taped = rollout(&inst, &policy, &eparams, DecodeMode::Sample, 3).unwrap();
    taped.accumulate_scaled_grad(0.0, &mut policy).unwrap();
    for p in policy.params() {
        assert!(p.grad.data().iter().all(|&g| g == 0.0));
    }

    let sizes = policy.sizes();
    let mut opt = AdamState::new(1e-4, &sizes);
    opt.step(&mut policy.params_mut()).unwrap();
    let after: Vec<Vec<f64>> = policy
        .params()
        .iter()
        .map(|p| p.value.data().to_vec())
        .collect();
    assert_eq!(before, after);
}

/// Replays a batch-of-one update by hand: same rollout, advantage from the
/// critic, clip, Adam. The trainer must land on bitwise-identical parameters.
#[test]
fn single_sample_update_matches_hand_computed_gradient() {
    let eparams = EnergyParams::default();
    let inst = instance::generate(2, 4, 100.0, 21, 1000.0).unwrap();
    let norm_const = 700.0;
    let seed = 5;

    let mut policy_expected = PolicyParams::new(8, 2);
    let mut critic_expected = CriticParams::new(8, 3);
    let mut policy_actual = policy_expected.clone();
    let mut critic_actual = critic_expected.clone();

    let mut taped = rollout(&inst, &policy_expected, &eparams, DecodeMode::Sample, seed).unwrap();
    let r_norm = taped.rollout.reward / norm_const;
    let mut value = critic_forward(&taped.context, &critic_expected).unwrap();
    let advantage = r_norm - value.value();
    taped
        .accumulate_scaled_grad(-advantage, &mut policy_expected)
        .unwrap();
    let expected_loss = value
        .accumulate_mse_grad(r_norm, 1.0, &mut critic_expected)
        .unwrap();
    assert!(expected_loss >= 0.0);
    for params in [
        policy_expected.params_mut(),
        critic_expected.params_mut(),
    ] {
        let norm = params
            .iter()
            .flat_map(|p| p.grad.data().iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt();
        if norm > 2.0 {
            for p in params {
                for g in p.grad.data_mut() {
                    *g *= 2.0 / norm;
                }
            }
        }
    }
    let mut opt_a = AdamState::new(1e-4, &policy_expected.sizes());
    let mut opt_c = AdamState::new(1e-4, &critic_expected.sizes());
    opt_a.step(&mut policy_expected.params_mut()).unwrap();
    opt_c.step(&mut critic_expected.params_mut()).unwrap();

    let mut opt_a2 = AdamState::new(1e-4, &policy_actual.sizes());
    let mut opt_c2 = AdamState::new(1e-4, &critic_actual.sizes());
    let stats = training::reinforce_step(
        &[inst],
        &[seed],
        &eparams,
        &mut policy_actual,
        &mut critic_actual,
        &mut opt_a2,
        &mut opt_c2,
        norm_const,
    )
    .unwrap();

    assert_eq!(stats.mean_reward, taped.rollout.reward);
    assert!((stats.critic_loss - expected_loss).abs() <= 1e-15);
    for (exp, act) in policy_expected.params().iter().zip(policy_actual.params()) {
        assert_eq!(exp.value.data(), act.value.data());
    }
    for (exp, act) in critic_expected.params().iter().zip(critic_actual.params()) {
        assert_eq!(exp.value.data(), act.value.data());
    }
}

#[test]
fn critic_loss_is_never_negative_and_rewards_are_negative_energies() {
    let eparams = EnergyParams::default();
    let mut policy = PolicyParams::new(8, 11);
    let mut critic = CriticParams::new(8, 12);
    let mut opt_a = AdamState::new(1e-4, &policy.sizes());
    let mut opt_c = AdamState::new(1e-4, &critic.sizes());
    for step in 0..5u64 {
        let instances: Vec<_> = (0..3)
            .map(|i| instance::generate(2, 3, 100.0, step * 10 + i, 1000.0).unwrap())
            .collect();
        let seeds: Vec<u64> = (0..3).map(|i| 1000 + step * 3 + i).collect();
        let stats = training::reinforce_step(
            &instances,
            &seeds,
            &eparams,
            &mut policy,
            &mut critic,
            &mut opt_a,
            &mut opt_c,
            500.0,
        )
        .unwrap();
        assert!(stats.critic_loss >= 0.0);
        assert!(stats.mean_reward < 0.0);
        assert!(stats.actor_grad_norm >= 0.0);
    }
}

#[test]
fn zero_step_training_returns_the_initialized_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path(), 0);
    let out = training::train(&config).unwrap();
    assert_eq!(out.steps_run, 0);
    assert_eq!(out.checkpoint.steps_done, 0);
    assert_eq!(out.initial_eval_ratio, out.final_eval_ratio);
    assert_eq!(out.checkpoint.trained_k, 2);

    // A second zero-step run reproduces the same initialized state.
    let dir2 = tempfile::tempdir().unwrap();
    let config2 = tiny_config(dir2.path(), 0);
    training::train(&config2).unwrap();
    let a = std::fs::read(&config.checkpoint_path).unwrap();
    let b = std::fs::read(&config2.checkpoint_path).unwrap();
    assert_eq!(a, b);
}

#[test]
fn identical_configs_produce_identical_checkpoints() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let out_a = training::train(&tiny_config(dir_a.path(), 3)).unwrap();
    let out_b = training::train(&tiny_config(dir_b.path(), 3)).unwrap();
    assert_eq!(out_a.steps_run, 3);
    assert_eq!(out_a.final_eval_ratio, out_b.final_eval_ratio);
    let a = std::fs::read(dir_a.path().join("ckpt.json")).unwrap();
    let b = std::fs::read(dir_b.path().join("ckpt.json")).unwrap();
    assert_eq!(a, b);
}

/// Interrupting and resuming must retrace the uninterrupted schedule: the
/// instance stream is indexed by absolute step, not by wall-clock history.
#[test]
fn resumed_training_is_bitwise_identical_to_one_shot() {
    let dir_once = tempfile::tempdir().unwrap();
    let dir_resumed = tempfile::tempdir().unwrap();
    training::train(&tiny_config(dir_once.path(), 4)).unwrap();

    let first_half = tiny_config(dir_resumed.path(), 2);
    training::train(&first_half).unwrap();
    let resumed = training::train(&tiny_config(dir_resumed.path(), 4)).unwrap();
    assert_eq!(resumed.steps_run, 2);

    let a = std::fs::read(dir_once.path().join("ckpt.json")).unwrap();
    let b = std::fs::read(dir_resumed.path().join("ckpt.json")).unwrap();
    assert_eq!(a, b);
}

/// A poisoned normalization constant drives the advantage to infinity; the
/// step must abort before applying updates, leaving the saved state loadable.
#[test]
fn divergence_aborts_without_corrupting_the_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path(), 1);
    training::train(&config).unwrap();

    let mut ckpt = Checkpoint::load(&config.checkpoint_path).unwrap();
    ckpt.norm_const = 0.0;
    ckpt.save(&config.checkpoint_path).unwrap();

    let err = training::train(&tiny_config(dir.path(), 3)).unwrap_err();
    assert!(matches!(err, TrainError::Diverged), "got {err:?}");
    let reloaded = Checkpoint::load(&config.checkpoint_path).unwrap();
    assert_eq!(reloaded.steps_done, 1);
}

#[test]
fn resume_with_a_different_width_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    training::train(&tiny_config(dir.path(), 1)).unwrap();
    let mut wider = tiny_config(dir.path(), 2);
    wider.embed_dim = 16;
    let err = training::train(&wider).unwrap_err();
    assert!(matches!(err, TrainError::DimMismatch { .. }), "got {err:?}");
}

#[test]
fn training_log_matches_the_documented_schema_and_appends_on_resume() {
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("train.csv");
    let mut config = tiny_config(dir.path(), 4);
    config.log_path = Some(log_path.clone());
    training::train(&config).unwrap();

    let text = std::fs::read_to_string(&log_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "step,mean_reward,actor_grad_norm,critic_loss,eval_ratio"
    );
    assert_eq!(lines.len(), 5);
    for (i, line) in lines[1..].iter().enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 5);
        assert_eq!(cols[0].parse::<u64>().unwrap(), i as u64 + 1);
        assert!(cols[1].parse::<f64>().unwrap() < 0.0);
        assert!(cols[2].parse::<f64>().unwrap() >= 0.0);
        assert!(cols[3].parse::<f64>().unwrap() >= 0.0);
        let step = i as u64 + 1;
        if step % 2 == 0 {
            assert!(cols[4].parse::<f64>().unwrap() > 0.99);
        } else {
            assert!(cols[4].is_empty());
        }
    }

    let mut longer = tiny_config(dir.path(), 6);
    longer.log_path = Some(log_path.clone());
    training::train(&longer).unwrap();
    let text = std::fs::read_to_string(&log_path).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert_eq!(
        text.lines().filter(|l| l.starts_with("step,")).count(),
        1,
        "resume must not repeat the header"
    );
}

#[test]
fn config_validation_rejects_degenerate_fields() {
    let ok = TrainConfig::default();
    assert!(ok.validate().is_ok());
    let cases = [
        TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        },
        TrainConfig {
            actor_lr: 0.0,
            ..TrainConfig::default()
        },
        TrainConfig {
            critic_lr: -1.0,
            ..TrainConfig::default()
        },
        TrainConfig {
            embed_dim: 0,
            ..TrainConfig::default()
        },
        TrainConfig {
            eval_every: 0,
            ..TrainConfig::default()
        },
    ];
    for bad in cases {
        let err = bad.validate().unwrap_err();
        assert!(matches!(err, TrainError::BadConfig(_)), "got {err:?}");
    }
}

#[test]
fn default_config_is_the_desk_scale_setup() {
    let config = TrainConfig::default();
    assert_eq!(config.batch_size, 64);
    assert_eq!(config.n_steps, 10_000);
    assert_eq!(config.k, 4);
    assert_eq!(config.n, 20);
    assert_eq!(config.embed_dim, 64);
    assert_eq!(config.actor_lr, 1e-4);
    assert_eq!(config.critic_lr, 1e-4);
}

#[test]
fn evaluation_normalizes_exact_to_one() {
    let eparams = EnergyParams::default();
    let policy = PolicyParams::new(8, 17);
    let aco = AcoConfig {
        n_iterations: 10,
        ..AcoConfig::default()
    };
    let instances: Vec<_> = (0..3)
        .map(|i| instance::generate(2, 3, 100.0, 300 + i, 1000.0).unwrap())
        .collect();
    let eval = training::evaluate(&policy, &instances, &eparams, &aco).unwrap();
    assert_eq!(eval.rows.len(), 3);
    for row in &eval.rows {
        assert_eq!(row.ratio(row.exact), 1.0);
        let tol = 1e-9 * row.exact;
        assert!(row.drl >= row.exact - tol);
        assert!(row.greedy >= row.exact - tol);
        assert!(row.aco >= row.exact - tol);
    }
    let by_hand: f64 =
        eval.rows.iter().map(|r| r.drl / r.exact).sum::<f64>() / eval.rows.len() as f64;
    assert_eq!(eval.mean_drl_ratio(), by_hand);
    assert!(eval.mean_greedy_ratio() >= 1.0 - 1e-12);
    assert!(eval.mean_aco_ratio() >= 1.0 - 1e-12);
}

/// The checkpoint written mid-run (at an eval point) must be a usable resume
/// anchor: loading it and continuing matches never having stopped.
#[test]
fn checkpoint_written_at_eval_points_is_loadable(){
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path(), 2);
    let out = training::train(&config).unwrap();
    let loaded = Checkpoint::load(&config.checkpoint_path).unwrap();
    assert_eq!(loaded.steps_done, 2);
    assert_eq!(loaded.embed_dim, 8);
    assert!(loaded.norm_const > 0.0);
    assert_eq!(loaded.norm_const, out.checkpoint.norm_const);
    assert!(loaded.actor_opt.is_some());
    assert!(loaded.critic_opt.is_some());
}
