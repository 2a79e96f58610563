//! The learned solver's networks: a linear set encoder, an LSTM decoder with
//! additive attention and logit clipping that emits a cluster order, the
//! one-step-lookahead head selection rule, and a small critic that estimates
//! tour reward from the first decoding step's attention context.
//!
//! All matrices are column-major in spirit: embeddings live in a
//! [D x (K+1)] matrix whose column 0 is the depot, and decoder state vectors
//! are [D x 1] matrices, so every combination is an explicit matmul.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{self, EnergyParams};
use crate::instance::{Instance, Point};
use crate::numerics::{AdamState, NumericsError, Param, Tape, Tensor, Var};
use crate::tour::Tour;

/// Pre-softmax scores are squashed to [-LOGIT_CLIP, LOGIT_CLIP].
pub const LOGIT_CLIP: f64 = 10.0;

/// Width of the per-element input feature vector.
pub const FEATURE_DIM: usize = 4;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Energy(#[from] energy::EnergyError),
    #[error("checkpoint version {0} is not supported")]
    Version(u32),
    #[error("checkpoint is corrupt: {0}")]
    Corrupt(String),
    #[error("failed to parse checkpoint: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn uniform_param(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: f64) -> Param {
    let data = (0..rows * cols)
        .map(|_| rng.gen_range(-bound..bound))
        .collect();
    Param::new(Tensor::matrix(rows, cols, data).expect("init shape"))
}

/// Actor weights. The LSTM is a single cell of width `d` with stacked gate
/// order (input, forget, candidate, output).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyParams {
    pub d: usize,
    pub w_b: Param,
    pub lstm_wx: Param,
    pub lstm_wh: Param,
    pub lstm_b: Param,
    pub phi_a: Param,
    pub w1: Param,
    pub w2: Param,
    pub phi_g: Param,
    pub w3: Param,
    pub w4: Param,
}

impl PolicyParams {
    /// Fresh weights, uniform in [-1/sqrt(d), 1/sqrt(d)].
    pub fn new(d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = 1.0 / (d as f64).sqrt();
        Self {
            d,
            w_b: uniform_param(&mut rng, d, FEATURE_DIM, b),
            lstm_wx: uniform_param(&mut rng, 4 * d, d, b),
            lstm_wh: uniform_param(&mut rng, 4 * d, d, b),
            lstm_b: uniform_param(&mut rng, 4 * d, 1, b),
            phi_a: uniform_param(&mut rng, 1, d, b),
            w1: uniform_param(&mut rng, d, d, b),
            w2: uniform_param(&mut rng, d, d, b),
            phi_g: uniform_param(&mut rng, 1, d, b),
            w3: uniform_param(&mut rng, d, d, b),
            w4: uniform_param(&mut rng, d, d, b),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![
            &mut self.w_b,
            &mut self.lstm_wx,
            &mut self.lstm_wh,
            &mut self.lstm_b,
            &mut self.phi_a,
            &mut self.w1,
            &mut self.w2,
            &mut self.phi_g,
            &mut self.w3,
            &mut self.w4,
        ]
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![
            &self.w_b,
            &self.lstm_wx,
            &self.lstm_wh,
            &self.lstm_b,
            &self.phi_a,
            &self.w1,
            &self.w2,
            &self.phi_g,
            &self.w3,
            &self.w4,
        ]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.params().iter().map(|p| p.value.numel()).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.params().iter().all(|p| p.value.all_finite())
    }

    fn restore_grads(&mut self) {
        for p in self.params_mut() {
            p.reset_grad_shape();
        }
    }
}

/// Critic weights: linear-ReLU-linear from the attention context to one
/// scalar value in normalized reward units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticParams {
    pub d: usize,
    pub fc1_w: Param,
    pub fc1_b: Param,
    pub fc2_w: Param,
    pub fc2_b: Param,
}

impl CriticParams {
    pub fn new(d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = 1.0 / (d as f64).sqrt();
        let mut critic = Self {
            d,
            fc1_w: uniform_param(&mut rng, d, d, b),
            fc1_b: uniform_param(&mut rng, d, 1, b),
            fc2_w: uniform_param(&mut rng, 1, d, b),
            fc2_b: uniform_param(&mut rng, 1, 1, b),
        };
        // Rewards arrive normalized by the mean greedy energy, so their mean
        // is -1 by construction. Starting the value head there keeps early
        // advantages zero-mean; otherwise the shared offset swamps the
        // per-tour signal until the critic catches up, and the uniform
        // log-prob pressure drives the clipped logits into tanh saturation
        // they cannot recover from.
        critic.fc2_b.value.data_mut()[0] = -1.0;
        critic
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![
            &mut self.fc1_w,
            &mut self.fc1_b,
            &mut self.fc2_w,
            &mut self.fc2_b,
        ]
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.fc1_w, &self.fc1_b, &self.fc2_w, &self.fc2_b]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.params().iter().map(|p| p.value.numel()).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.params().iter().all(|p| p.value.all_finite())
    }

    fn restore_grads(&mut self) {
        for p in self.params_mut() {
            p.reset_grad_shape();
        }
    }
}

/// Input features as a [FEATURE_DIM x (K+1)] matrix; column 0 is the depot.
///
/// A cluster is summarized permutation-invariantly by its centroid and the
/// mean absolute deviation of its node coordinates; the depot contributes
/// its coordinates with zero spread. Everything is normalized by the area
/// side so features live in [0, 1].
pub fn features(instance: &Instance) -> Tensor {
    let k = instance.num_clusters();
    let a = instance.area;
    let mut cols: Vec<[f64; FEATURE_DIM]> = Vec::with_capacity(k + 1);
    cols.push([instance.depot.x() / a, instance.depot.y() / a, 0.0, 0.0]);
    for cluster in &instance.clusters {
        let n = cluster.len() as f64;
        // Summing in sorted order makes the embedding bit-identical under
        // any renumbering of a cluster's nodes, not just equal in value.
        let cx = ordered_sum(cluster.iter().map(Point::x)) / n;
        let cy = ordered_sum(cluster.iter().map(Point::y)) / n;
        let madx = ordered_sum(cluster.iter().map(|p| (p.x() - cx).abs())) / n;
        let mady = ordered_sum(cluster.iter().map(|p| (p.y() - cy).abs())) / n;
        cols.push([cx / a, cy / a, madx / a, mady / a]);
    }
    let mut data = vec![0.0; FEATURE_DIM * (k + 1)];
    for (c, col) in cols.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            data[r * (k + 1) + c] = *v;
        }
    }
    Tensor::matrix(FEATURE_DIM, k + 1, data).expect("feature shape")
}

fn ordered_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    v.iter().sum()
}

/// Head for the next cluster: the node minimizing the one-step weighted cost
/// from the previous hover point (ground + entering leg + collection). Ties
/// go to the lowest node index.
pub fn select_cluster_head(params: &EnergyParams, prev: Point, cluster: &[Point]) -> usize {
    let mut best = f64::INFINITY;
    let mut pick = 0;
    for v in 0..cluster.len() {
        let cost = energy::edge_cost(params, prev, cluster, v);
        if cost < best {
            best = cost;
            pick = v;
        }
    }
    pick
}

/// Distribution and diagnostics of one decoding step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    /// Probabilities over the K+1 elements; masked entries are exactly 0.
    pub probs: Vec<f64>,
    /// Clipped logits before masking, all within [-LOGIT_CLIP, LOGIT_CLIP].
    pub clipped_logits: Vec<f64>,
}

struct ActorVars {
    w_b: Var,
    lstm_wx: Var,
    lstm_wh: Var,
    lstm_b: Var,
    phi_a: Var,
    w1: Var,
    w2: Var,
    phi_g: Var,
    w3: Var,
    w4: Var,
}

/// One decoding episode: owns the tape, the embedded element set, and the
/// decoder state. Step 0 (the depot) is fixed by construction; each
/// `decode_step` advances the LSTM with the previous element's embedding and
/// returns the masked step distribution for the caller to pick from.
pub struct Episode {
    tape: Tape,
    vars: ActorVars,
    embeddings: Var,
    w1e: Var,
    w3e: Var,
    ones_row: Var,
    hidden: Var,
    cell: Var,
    /// Mask over elements: 0 selectable, -inf forbidden. Depot is masked from
    /// the first decode step on.
    mask: Vec<f64>,
    prev: usize,
    steps_taken: usize,
    k: usize,
    d: usize,
    first_context: Option<Tensor>,
}

impl Episode {
    pub fn new(instance: &Instance, policy: &PolicyParams) -> Result<Self, PolicyError> {
        let k = instance.num_clusters();
        let d = policy.d;
        let mut tape = Tape::new();
        let vars = ActorVars {
            w_b: tape.leaf(policy.w_b.value.clone()),
            lstm_wx: tape.leaf(policy.lstm_wx.value.clone()),
            lstm_wh: tape.leaf(policy.lstm_wh.value.clone()),
            lstm_b: tape.leaf(policy.lstm_b.value.clone()),
            phi_a: tape.leaf(policy.phi_a.value.clone()),
            w1: tape.leaf(policy.w1.value.clone()),
            w2: tape.leaf(policy.w2.value.clone()),
            phi_g: tape.leaf(policy.phi_g.value.clone()),
            w3: tape.leaf(policy.w3.value.clone()),
            w4: tape.leaf(policy.w4.value.clone()),
        };
        let feats = tape.leaf(features(instance));
        let embeddings = tape.matmul(vars.w_b, feats)?;
        let w1e = tape.matmul(vars.w1, embeddings)?;
        let w3e = tape.matmul(vars.w3, embeddings)?;
        let ones_row = tape.leaf(Tensor::matrix(1, k + 1, vec![1.0; k + 1]).expect("ones"));
        let hidden = tape.leaf(Tensor::zeros(vec![d, 1]));
        let cell = tape.leaf(Tensor::zeros(vec![d, 1]));
        Ok(Self {
            tape,
            vars,
            embeddings,
            w1e,
            w3e,
            ones_row,
            hidden,
            cell,
            mask: vec![0.0; k + 1],
            prev: 0,
            steps_taken: 0,
            k,
            d,
            first_context: None,
        })
    }

    fn lstm_advance(&mut self, input: Var) -> Result<(), PolicyError> {
        let t = &mut self.tape;
        let zx = t.matmul(self.vars.lstm_wx, input)?;
        let zh = t.matmul(self.vars.lstm_wh, self.hidden)?;
        let zs = t.add(zx, zh)?;
        let z = t.add(zs, self.vars.lstm_b)?;
        let d = self.d;
        let i_gate = t.slice_rows(z, 0, d)?;
        let f_gate = t.slice_rows(z, d, d)?;
        let g_gate = t.slice_rows(z, 2 * d, d)?;
        let o_gate = t.slice_rows(z, 3 * d, d)?;
        let i = t.sigmoid(i_gate);
        let f = t.sigmoid(f_gate);
        let g = t.tanh(g_gate);
        let o = t.sigmoid(o_gate);
        let fc = t.mul(f, self.cell)?;
        let ig = t.mul(i, g)?;
        self.cell = t.add(fc, ig)?;
        let tc = t.tanh(self.cell);
        self.hidden = t.mul(o, tc)?;
        Ok(())
    }

    /// Runs one decoding step and selects an element via `pick`, which
    /// receives the masked distribution and must return an index with
    /// non-zero probability. Returns (choice, log-probability node).
    pub fn decode_step(
        &mut self,
        pick: impl FnOnce(&StepOutput) -> usize,
    ) -> Result<(usize, Var, StepOutput), PolicyError> {
        // The depot is fixed as the first tour element; once decoding starts
        // it can never be selected again.
        if self.steps_taken == 0 {
            self.mask[0] = f64::NEG_INFINITY;
        }
        let input = self.tape.column(self.embeddings, self.prev)?;
        self.lstm_advance(input)?;

        let t = &mut self.tape;
        // Attention over all elements (unmasked, per the model definition).
        let w2h = t.matmul(self.vars.w2, self.hidden)?;
        let w2h_b = t.matmul(w2h, self.ones_row)?;
        let pre_a = t.add(self.w1e, w2h_b)?;
        let tan_a = t.tanh(pre_a);
        let u = t.matmul(self.vars.phi_a, tan_a)?;
        let a = t.softmax(u)?;
        let a_col = t.transpose(a)?;
        let context = t.matmul(self.embeddings, a_col)?;
        if self.first_context.is_none() {
            self.first_context = Some(t.value(context).clone());
        }

        // Glimpse logits, clipped, then masked.
        let w4g = t.matmul(self.vars.w4, context)?;
        let w4g_b = t.matmul(w4g, self.ones_row)?;
        let pre_g = t.add(self.w3e, w4g_b)?;
        let tan_g = t.tanh(pre_g);
        let raw = t.matmul(self.vars.phi_g, tan_g)?;
        let squashed = t.tanh(raw);
        let clipped = t.scale(squashed, LOGIT_CLIP);
        let mask_leaf = t.leaf(Tensor::matrix(1, self.k + 1, self.mask.clone()).expect("mask"));
        let masked = t.add(clipped, mask_leaf)?;
        let probs = t.softmax(masked)?;

        let out = StepOutput {
            probs: t.value(probs).data().to_vec(),
            clipped_logits: t.value(clipped).data().to_vec(),
        };
        let choice = pick(&out);
        let logp = t.log_at(probs, choice)?;
        self.mask[choice] = f64::NEG_INFINITY;
        self.prev = choice;
        self.steps_taken += 1;
        Ok((choice, logp, out))
    }

    pub fn tape_mut(&mut self) -> &mut Tape {
        &mut self.tape
    }

    /// Attention context of the first decode step, detached from the tape.
    pub fn first_context(&self) -> Option<&Tensor> {
        self.first_context.as_ref()
    }

    /// Adds this tape's accumulated gradients into the parameter buffers.
    /// Call after `backward` passes on vars from this episode.
    pub fn harvest_grads(&self, into: &mut PolicyParams) {
        let order = [
            self.vars.w_b,
            self.vars.lstm_wx,
            self.vars.lstm_wh,
            self.vars.lstm_b,
            self.vars.phi_a,
            self.vars.w1,
            self.vars.w2,
            self.vars.phi_g,
            self.vars.w3,
            self.vars.w4,
        ];
        for (var, param) in order.iter().zip(into.params_mut()) {
            param.accumulate_grad(self.tape.grad(*var));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeMode {
    /// Draw each step from the step distribution (training exploration).
    Sample,
    /// Take the modal action each step (evaluation).
    Greedy,
}

/// Result of decoding one instance into a tour.
#[derive(Debug, Clone)]
pub struct Rollout {
    pub tour: Tour,
    /// Sum of log-probabilities of the K cluster selections; always <= 0.
    pub log_prob: f64,
    /// Negative total weighted energy, J.
    pub reward: f64,
}

/// A rollout plus the tape that produced it, for gradient extraction.
pub struct TapedRollout {
    pub rollout: Rollout,
    /// Detached first-step attention context, the critic's input.
    pub context: Tensor,
    episode: Episode,
    logp_sum: Var,
}

impl TapedRollout {
    /// Backpropagates `coeff * log_prob` and adds the gradients into
    /// `params`. Use once per rollout.
    pub fn accumulate_scaled_grad(
        &mut self,
        coeff: f64,
        params: &mut PolicyParams,
    ) -> Result<(), PolicyError> {
        let scaled = self.episode.tape_mut().scale(self.logp_sum, coeff);
        self.episode.tape_mut().backward(scaled)?;
        self.episode.harvest_grads(params);
        Ok(())
    }
}

/// Decodes a full tour: the depot first, then K cluster selections with
/// heads chosen by `select_cluster_head` as each cluster is emitted.
pub fn rollout(
    instance: &Instance,
    policy: &PolicyParams,
    params: &EnergyParams,
    mode: DecodeMode,
    seed: u64,
) -> Result<TapedRollout, PolicyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut episode = Episode::new(instance, policy)?;
    let k = instance.num_clusters();
    let mut at = instance.depot;
    let mut stops = Vec::with_capacity(k);
    let mut logp_sum: Option<Var> = None;
    for _ in 0..k {
        let (choice, logp, _) = episode.decode_step(|out| match mode {
            DecodeMode::Sample => sample_index(&out.probs, &mut rng),
            DecodeMode::Greedy => argmax_index(&out.probs),
        })?;
        let cluster_idx = choice - 1;
        let head = select_cluster_head(params, at, &instance.clusters[cluster_idx]);
        at = instance.node(cluster_idx, head);
        stops.push((cluster_idx, head));
        logp_sum = Some(match logp_sum {
            Some(acc) => episode.tape_mut().add(acc, logp)?,
            None => logp,
        });
    }
    let logp_sum = logp_sum.expect("K >= 1");
    let tour = Tour::from_pairs(&stops);
    let breakdown = energy::total_weighted_energy(params, instance, &tour)?;
    let context = episode
        .first_context()
        .expect("at least one decode step ran")
        .clone();
    let log_prob = episode.tape_mut().value(logp_sum).data()[0];
    Ok(TapedRollout {
        rollout: Rollout {
            tour,
            log_prob,
            reward: -breakdown.total_weighted,
        },
        context,
        episode,
        logp_sum,
    })
}

fn sample_index(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let mut draw = rng.gen::<f64>();
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last_positive = i;
        draw -= p;
        if draw <= 0.0 {
            return i;
        }
    }
    last_positive
}

fn argmax_index(probs: &[f64]) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut pick = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > best {
            best = p;
            pick = i;
        }
    }
    pick
}

/// Critic forward pass on a detached context; keeps its tape for training.
pub struct CriticEval {
    tape: Tape,
    vars: [Var; 4],
    value_var: Var,
    value: f64,
}

impl CriticEval {
    pub fn value(&self) -> f64 {
        self.value
    }

    /// Backpropagates `weight * (value - target)^2` and adds gradients into
    /// `params`. Use once per evaluation.
    pub fn accumulate_mse_grad(
        &mut self,
        target: f64,
        weight: f64,
        params: &mut CriticParams,
    ) -> Result<f64, PolicyError> {
        let t = &mut self.tape;
        let shape = t.value(self.value_var).shape().to_vec();
        let neg_target = t.leaf(Tensor::new(shape, vec![-target]).expect("scalar shape"));
        let diff = t.add(self.value_var, neg_target)?;
        let sq = t.mul(diff, diff)?;
        let loss = t.scale(sq, weight);
        let loss_value = t.value(loss).data()[0];
        t.backward(loss)?;
        for (var, param) in self.vars.iter().zip(params.params_mut()) {
            param.accumulate_grad(self.tape.grad(*var));
        }
        Ok(loss_value)
    }
}

/// Runs the critic on a first-step attention context.
pub fn critic_forward(context: &Tensor, critic: &CriticParams) -> Result<CriticEval, PolicyError> {
    let mut tape = Tape::new();
    let fc1_w = tape.leaf(critic.fc1_w.value.clone());
    let fc1_b = tape.leaf(critic.fc1_b.value.clone());
    let fc2_w = tape.leaf(critic.fc2_w.value.clone());
    let fc2_b = tape.leaf(critic.fc2_b.value.clone());
    let x = tape.leaf(context.clone());
    let z1 = tape.matmul(fc1_w, x)?;
    let z1b = tape.add(z1, fc1_b)?;
    let h = tape.relu(z1b);
    let z2 = tape.matmul(fc2_w, h)?;
    let v = tape.add(z2, fc2_b)?;
    let value = tape.value(v).data()[0];
    Ok(CriticEval {
        tape,
        vars: [fc1_w, fc1_b, fc2_w, fc2_b],
        value_var: v,
        value,
    })
}

/// Critic estimate for an instance: embeds it, runs the first decode step to
/// obtain the attention context (no gradient flows to the actor), then
/// applies the value head.
pub fn critic_value(
    instance: &Instance,
    policy: &PolicyParams,
    critic: &CriticParams,
) -> Result<f64, PolicyError> {
    let mut episode = Episode::new(instance, policy)?;
    episode.decode_step(argmax_pick)?;
    let context = episode.first_context().expect("step ran").clone();
    Ok(critic_forward(&context, critic)?.value())
}

fn argmax_pick(out: &StepOutput) -> usize {
    argmax_index(&out.probs)
}

const CHECKPOINT_VERSION: u32 = 1;

/// Serialized model state. Optimizer state is carried so training can resume
/// deterministically; inference ignores it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub embed_dim: usize,
    /// Cluster count of the training distribution (informational; the model
    /// itself is size-agnostic).
    pub trained_k: usize,
    /// Rewards were divided by this during training.
    pub norm_const: f64,
    /// Training steps completed.
    pub steps_done: u64,
    pub policy: PolicyParams,
    pub critic: CriticParams,
    pub actor_opt: Option<AdamState>,
    pub critic_opt: Option<AdamState>,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<(), PolicyError> {
        let body = serde_json::to_string(self)?;
        std::fs::write(path, body).map_err(|source| PolicyError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        let body = std::fs::read_to_string(path).map_err(|source| PolicyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut ckpt: Checkpoint = serde_json::from_str(&body)?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(PolicyError::Version(ckpt.version));
        }
        ckpt.policy.restore_grads();
        ckpt.critic.restore_grads();
        if !ckpt.policy.all_finite() || !ckpt.critic.all_finite() {
            return Err(PolicyError::Corrupt("non-finite weights".into()));
        }
        if ckpt.policy.d != ckpt.embed_dim || ckpt.critic.d != ckpt.embed_dim {
            return Err(PolicyError::Corrupt(format!(
                "embed_dim {} does not match tensor width",
                ckpt.embed_dim
            )));
        }
        Ok(ckpt)
    }
}
