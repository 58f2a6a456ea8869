//! Proximal policy optimization over the learn-to-defer environment.
//!
//! One training iteration collects `rollout_parallelism` complete episodes
//! from a frozen parameter snapshot and then runs `epochs_per_batch` passes
//! of clipped-surrogate updates with Adam. All randomness is derived from
//! `(seed, iteration, episode)` and all reductions run in a fixed order, so
//! results do not depend on the thread count.

use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coloring::Coloring;
use crate::env::{action_from, episode_solves, run_episode, Env, EnvConfig, EnvMode, Episode};
use crate::error::{Error, Result};
use crate::graph::ConflictGraph;
use crate::policy::{backward, forward, log_softmax_grad, sample_actions, Observation, Policy, PolicyParams};
use crate::rng::{derive_seed_path, rng_from_seed};
use crate::verify::{local_color_counts, max_closed_rank, Dof, VectorAssignment};
use crate::linalg::binary_vector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// One iteration = one rollout collection followed by one update.
    pub iterations: usize,
    pub lr: f64,
    pub grad_clip_norm: f64,
    pub rollout_parallelism: usize,
    pub clip_eps: f64,
    pub value_coeff: f64,
    pub entropy_coeff: f64,
    pub epochs_per_batch: usize,
    /// Minibatches per epoch.
    pub minibatches: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub hidden: usize,
    pub num_layers: usize,
    /// Environment template. `k` is the alphabet the network is built for.
    pub env: EnvConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 5000,
            lr: 1e-3,
            grad_clip_norm: 0.2,
            rollout_parallelism: 20,
            clip_eps: 0.2,
            value_coeff: 0.5,
            entropy_coeff: 0.01,
            epochs_per_batch: 4,
            minibatches: 4,
            gamma: 1.0,
            gae_lambda: 0.95,
            hidden: crate::policy::DEFAULT_HIDDEN,
            num_layers: crate::policy::DEFAULT_LAYERS,
            env: EnvConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return bad("clip_eps must lie in (0, 1)");
        }
        if !(self.lr > 0.0 && self.grad_clip_norm > 0.0) {
            return bad("lr and grad_clip_norm must be positive");
        }
        if self.rollout_parallelism == 0 || self.epochs_per_batch == 0 || self.minibatches == 0 {
            return bad("rollout_parallelism, epochs_per_batch and minibatches must be positive");
        }
        if self.hidden == 0 || self.num_layers == 0 {
            return bad("network must have at least one layer of positive width");
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gamma and gae_lambda must lie in [0, 1]");
        }
        if self.value_coeff < 0.0 || self.entropy_coeff < 0.0 {
            return bad("loss coefficients must be non-negative");
        }
        self.env.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// One environment step as seen by the learner.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub obs: Observation,
    pub actions: Vec<u32>,
    /// Joint log-probability (sum over deferred nodes).
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
    pub done: bool,
    /// Summed per-node entropy of the sampling distribution.
    pub entropy: f64,
}

#[derive(Debug, Clone)]
pub struct EpisodeTrace {
    pub graph_index: usize,
    pub steps: Vec<StepRecord>,
    pub success: bool,
    pub total_reward: f64,
}

#[derive(Debug, Clone)]
pub struct RolloutBatch {
    pub episodes: Vec<EpisodeTrace>,
}

impl RolloutBatch {
    pub fn num_steps(&self) -> usize {
        self.episodes.iter().map(|e| e.steps.len()).sum()
    }

    pub fn mean_reward(&self) -> f64 {
        self.episodes.iter().map(|e| e.total_reward).sum::<f64>() / self.episodes.len().max(1) as f64
    }

    pub fn success_ratio(&self) -> f64 {
        self.episodes.iter().filter(|e| e.success).count() as f64 / self.episodes.len().max(1) as f64
    }

    /// Mean entropy per deferred node over all steps.
    pub fn mean_entropy(&self) -> f64 {
        let (sum, nodes) = self
            .episodes
            .iter()
            .flat_map(|e| &e.steps)
            .fold((0.0, 0usize), |(s, n), st| (s + st.entropy, n + st.obs.len()));
        if nodes == 0 {
            0.0
        } else {
            sum / nodes as f64
        }
    }

    /// Order-sensitive hash of every recorded number.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |x: u64| {
            h ^= x;
            h = h.wrapping_mul(0x0100_0000_01b3);
        };
        for e in &self.episodes {
            mix(e.graph_index as u64);
            mix(u64::from(e.success));
            for s in &e.steps {
                s.obs.nodes.iter().for_each(|&v| mix(v as u64));
                s.obs.features.iter().for_each(|x| mix(x.to_bits()));
                s.actions.iter().for_each(|&a| mix(u64::from(a)));
                for x in [s.log_prob, s.value, s.reward, s.entropy] {
                    mix(x.to_bits());
                }
                mix(u64::from(s.done));
            }
        }
        h
    }
}

fn row_entropy(probs: &Array2<f64>, log_probs: &Array2<f64>) -> Vec<f64> {
    probs
        .rows()
        .into_iter()
        .zip(log_probs.rows())
        .map(|(p, lp)| -p.iter().zip(lp.iter()).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

/// Runs one sampled episode and records everything PPO needs.
pub fn trace_episode(g: &ConflictGraph, env_cfg: &EnvConfig, params: &PolicyParams, seed: u64) -> Result<EpisodeTrace> {
    let mut env = Env::new(g, env_cfg.clone())?;
    let mut rng = rng_from_seed(seed);
    let mut steps = Vec::new();
    let mut total = 0.0;
    loop {
        let obs = env.observe();
        let f = forward(&obs, params)?;
        let actions = sample_actions(&f.probs, &mut rng);
        let log_prob = actions.iter().enumerate().map(|(i, &a)| f.log_probs[[i, a as usize]]).sum();
        let entropy = row_entropy(&f.probs, &f.log_probs).iter().sum();
        let out = env.step(&action_from(&obs.nodes, &actions))?;
        total += out.reward;
        steps.push(StepRecord {
            obs,
            actions,
            log_prob,
            value: f.value,
            reward: out.reward,
            done: out.done,
            entropy,
        });
        if out.done {
            return Ok(EpisodeTrace {
                graph_index: 0,
                steps,
                success: out.success,
                total_reward: total,
            });
        }
    }
}

/// Collects `cfg.rollout_parallelism` episodes from one frozen snapshot.
/// Episode `e` of iteration `it` draws its graph and actions from
/// `derive_seed_path(cfg.seed, [it, e])`.
pub fn collect_rollouts(graphs: &[ConflictGraph], params: &PolicyParams, cfg: &TrainConfig, iteration: u64) -> Result<RolloutBatch> {
    if graphs.is_empty() {
        return Err(Error::InvalidParameter("no training graphs".into()));
    }
    let episodes = (0..cfg.rollout_parallelism)
        .into_par_iter()
        .map(|e| {
            let seed = derive_seed_path(cfg.seed, &[iteration, e as u64]);
            let gi = rng_from_seed(seed).gen_range(0..graphs.len());
            let mut tr = trace_episode(&graphs[gi], &cfg.env, params, derive_seed_path(seed, &[1]))?;
            tr.graph_index = gi;
            Ok(tr)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RolloutBatch { episodes })
}

/// Generalized advantage estimates and value targets for one episode. The
/// final step is terminal (success or time limit) so it bootstraps from 0.
pub fn gae(steps: &[StepRecord], gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = steps.len();
    let mut adv = vec![0.0; n];
    let mut next_value = 0.0;
    let mut running = 0.0;
    for t in (0..n).rev() {
        let not_done = if steps[t].done { 0.0 } else { 1.0 };
        let delta = steps[t].reward + gamma * next_value * not_done - steps[t].value;
        running = delta + gamma * lambda * not_done * running;
        adv[t] = running;
        next_value = steps[t].value;
    }
    let returns = adv.iter().zip(steps).map(|(a, s)| a + s.value).collect();
    (adv, returns)
}

/// Per-sample PPO loss terms.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossParts {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub clipped: bool,
    pub ratio: f64,
}

impl LossParts {
    pub fn total(&self, cfg: &TrainConfig) -> f64 {
        self.policy + cfg.value_coeff * self.value - cfg.entropy_coeff * self.entropy
    }
}

/// Loss of one step record and its gradient.
pub fn sample_loss_grad(
    step: &StepRecord,
    advantage: f64,
    ret: f64,
    params: &PolicyParams,
    cfg: &TrainConfig,
) -> Result<(LossParts, PolicyParams)> {
    let f = forward(&step.obs, params)?;
    let lp: f64 = step.actions.iter().enumerate().map(|(i, &a)| f.log_probs[[i, a as usize]]).sum();
    let ratio = (lp - step.log_prob).exp();
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * advantage;
    let d_lp = if unclipped <= clipped { -advantage * ratio } else { 0.0 };

    let mut coeffs = Array2::zeros(f.log_probs.raw_dim());
    for (i, &a) in step.actions.iter().enumerate() {
        coeffs[[i, a as usize]] = d_lp;
    }
    let mut d_logits = log_softmax_grad(&f.probs, &coeffs);
    let ent = row_entropy(&f.probs, &f.log_probs);
    if cfg.entropy_coeff != 0.0 {
        for (i, h) in ent.iter().enumerate() {
            for k in 0..d_logits.ncols() {
                let p = f.probs[[i, k]];
                d_logits[[i, k]] += cfg.entropy_coeff * p * (f.log_probs[[i, k]] + h);
            }
        }
    }
    let err = f.value - ret;
    let grad = backward(params, &f.cache, &d_logits, 2.0 * cfg.value_coeff * err);
    let parts = LossParts {
        policy: -unclipped.min(clipped),
        value: err * err,
        entropy: ent.iter().sum(),
        clipped: unclipped > clipped,
        ratio,
    };
    Ok((parts, grad))
}

/// Adam optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub m: PolicyParams,
    pub v: PolicyParams,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(like: &PolicyParams) -> Self {
        Self {
            m: like.zeros_like(),
            v: like.zeros_like(),
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, params: &mut PolicyParams, grad: &PolicyParams, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grad.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut());
        for (((p, g), m), v) in tensors {
            ndarray::Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            });
        }
    }
}

/// Diagnostics of one [`ppo_update`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    /// Largest gradient norm before clipping.
    pub max_grad_norm: f64,
    /// Largest gradient norm actually applied.
    pub max_applied_norm: f64,
    pub steps: usize,
}

/// Samples summed per sequential chunk; chunk sums are then added in order.
const REDUCE_CHUNK: usize = 8;

/// Clipped-surrogate update. Advantages are normalized over the batch.
/// Returns the new parameters; `params` itself is never modified, and an
/// error is returned if any loss or parameter becomes non-finite.
pub fn ppo_update(
    batch: &RolloutBatch,
    params: &PolicyParams,
    adam: &mut Adam,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(PolicyParams, UpdateStats)> {
    let mut samples: Vec<(&StepRecord, f64, f64)> = Vec::with_capacity(batch.num_steps());
    for e in &batch.episodes {
        let (adv, ret) = gae(&e.steps, cfg.gamma, cfg.gae_lambda);
        samples.extend(e.steps.iter().zip(adv).zip(ret).map(|((s, a), r)| (s, a, r)));
    }
    if samples.is_empty() {
        return Err(Error::InvalidParameter("empty rollout batch".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let std = (samples.iter().map(|s| (s.1 - mean).powi(2)).sum::<f64>() / n).sqrt();
    for s in &mut samples {
        s.1 = if std > 1e-8 { (s.1 - mean) / std } else { s.1 - mean };
    }

    let mut new_params = params.clone();
    let mut stats = UpdateStats::default();
    let mut rng = rng_from_seed(seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let per_batch = samples.len().div_ceil(cfg.minibatches);
    for _ in 0..cfg.epochs_per_batch {
        order.shuffle(&mut rng);
        for mb in order.chunks(per_batch) {
            let current = &new_params;
            let partials = mb
                .par_chunks(REDUCE_CHUNK)
                .map(|chunk| {
                    let mut acc: Option<(PolicyParams, LossParts, usize)> = None;
                    for &i in chunk {
                        let (s, a, r) = samples[i];
                        let (parts, g) = sample_loss_grad(s, a, r, current, cfg)?;
                        match acc.as_mut() {
                            None => acc = Some((g, parts, usize::from(parts.clipped))),
                            Some((sum, lp, clips)) => {
                                sum.add_scaled(1.0, &g);
                                lp.policy += parts.policy;
                                lp.value += parts.value;
                                lp.entropy += parts.entropy;
                                *clips += usize::from(parts.clipped);
                            }
                        }
                    }
                    Ok(acc.expect("chunks are non-empty"))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut it = partials.into_iter();
            let (mut grad, mut loss, mut clips) = it.next().expect("minibatch is non-empty");
            for (g, l, c) in it {
                grad.add_scaled(1.0, &g);
                loss.policy += l.policy;
                loss.value += l.value;
                loss.entropy += l.entropy;
                clips += c;
            }
            let m = mb.len() as f64;
            grad.scale(1.0 / m);
            let total = (loss.policy + cfg.value_coeff * loss.value - cfg.entropy_coeff * loss.entropy) / m;
            let norm = grad.norm();
            if !total.is_finite() || !norm.is_finite() {
                return Err(Error::Diverged {
                    iteration: 0,
                    reason: format!("non-finite loss {total} or gradient norm {norm}"),
                });
            }
            if norm > cfg.grad_clip_norm {
                grad.scale(cfg.grad_clip_norm / norm);
            }
            stats.max_grad_norm = stats.max_grad_norm.max(norm);
            stats.max_applied_norm = stats.max_applied_norm.max(grad.norm());
            adam.step(&mut new_params, &grad, cfg.lr);
            if !new_params.is_finite() {
                return Err(Error::Diverged {
                    iteration: 0,
                    reason: "non-finite parameters after update".into(),
                });
            }
            stats.policy_loss += loss.policy;
            stats.value_loss += loss.value;
            stats.entropy += loss.entropy;
            stats.clip_fraction += clips as f64;
            stats.steps += 1;
        }
    }
    let denom = n * cfg.epochs_per_batch as f64;
    stats.policy_loss /= denom;
    stats.value_loss /= denom;
    stats.entropy /= denom;
    stats.clip_fraction /= denom;
    Ok((new_params, stats))
}

/// One row of the training curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub iteration: usize,
    pub mean_reward: f64,
    pub success_ratio: f64,
    pub entropy: f64,
}

pub fn write_curve_csv(rows: &[CurveRow], w: impl std::io::Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_curve_csv(r: impl std::io::Read) -> Result<Vec<CurveRow>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Resumable training state.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub cfg: TrainConfig,
    pub params: PolicyParams,
    pub adam: Adam,
    /// Iterations completed so far.
    pub iteration: usize,
    pub curve: Vec<CurveRow>,
}

#[derive(Serialize, Deserialize)]
struct TrainerState {
    config: TrainConfig,
    iteration: usize,
    adam_t: u64,
}

impl Trainer {
    pub fn new(cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let params = PolicyParams::new(
            cfg.env.alphabet(),
            cfg.hidden,
            cfg.num_layers,
            derive_seed_path(cfg.seed, &[u64::MAX]),
        );
        Ok(Self {
            adam: Adam::new(&params),
            params,
            cfg,
            iteration: 0,
            curve: Vec::new(),
        })
    }

    /// One collect + update cycle. On error nothing is committed, so
    /// `self.params` stays at the last good snapshot.
    pub fn step(&mut self, graphs: &[ConflictGraph]) -> Result<&CurveRow> {
        let it = self.iteration;
        let checksum = self.params.checksum();
        let batch = collect_rollouts(graphs, &self.params, &self.cfg, it as u64)?;
        debug_assert_eq!(checksum, self.params.checksum());
        let mut adam = self.adam.clone();
        let update_seed = derive_seed_path(self.cfg.seed, &[it as u64, u64::MAX]);
        let (params, stats) = ppo_update(&batch, &self.params, &mut adam, &self.cfg, update_seed).map_err(|e| match e {
            Error::Diverged { reason, .. } => Error::Diverged { iteration: it, reason },
            other => other,
        })?;
        log::debug!(
            "iteration {it}: reward {:.4} success {:.3} policy {:.4} value {:.4} clip {:.3}",
            batch.mean_reward(),
            batch.success_ratio(),
            stats.policy_loss,
            stats.value_loss,
            stats.clip_fraction
        );
        self.params = params;
        self.adam = adam;
        self.iteration += 1;
        self.curve.push(CurveRow {
            iteration: it,
            mean_reward: batch.mean_reward(),
            success_ratio: batch.success_ratio(),
            entropy: batch.mean_entropy(),
        });
        Ok(self.curve.last().expect("just pushed"))
    }

    /// Runs until `cfg.iterations` iterations are complete.
    pub fn run(&mut self, graphs: &[ConflictGraph]) -> Result<()> {
        self.run_until(graphs, self.cfg.iterations)
    }

    pub fn run_until(&mut self, graphs: &[ConflictGraph], iterations: usize) -> Result<()> {
        while self.iteration < iterations {
            self.step(graphs)?;
        }
        Ok(())
    }

    /// Writes `params.ckpt`, the Adam moments, `state.json` and `curve.csv`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.params.save(&dir.join("params.ckpt"))?;
        self.adam.m.save(&dir.join("adam_m.ckpt"))?;
        self.adam.v.save(&dir.join("adam_v.ckpt"))?;
        let state = TrainerState {
            config: self.cfg.clone(),
            iteration: self.iteration,
            adam_t: self.adam.t,
        };
        let mut f = std::fs::File::create(dir.join("state.json"))?;
        serde_json::to_writer_pretty(&mut f, &state)?;
        f.write_all(b"\n")?;
        write_curve_csv(&self.curve, std::fs::File::create(dir.join("curve.csv"))?)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let state: TrainerState = serde_json::from_reader(std::fs::File::open(dir.join("state.json"))?)?;
        state.config.validate()?;
        let params = PolicyParams::load(&dir.join("params.ckpt"))?;
        let mut adam = Adam::new(&params);
        adam.m = PolicyParams::load(&dir.join("adam_m.ckpt"))?;
        adam.v = PolicyParams::load(&dir.join("adam_v.ckpt"))?;
        adam.t = state.adam_t;
        let curve = read_curve_csv(std::fs::File::open(dir.join("curve.csv"))?)?;
        if curve.len() != state.iteration || params.alphabet != state.config.env.alphabet() {
            return Err(Error::Checkpoint("trainer state is inconsistent".into()));
        }
        Ok(Self {
            cfg: state.config,
            params,
            adam,
            iteration: state.iteration,
            curve,
        })
    }
}

/// Trains from scratch on `graphs` and returns the final parameters and curve.
pub fn train(graphs: &[ConflictGraph], cfg: &TrainConfig) -> Result<(PolicyParams, Vec<CurveRow>)> {
    let mut t = Trainer::new(cfg.clone())?;
    t.run(graphs)?;
    Ok((t.params, t.curve))
}

/// Degrees of freedom of a solved episode: the reciprocal of the colors used
/// (coloring), of the largest local color count (local), or of the largest
/// closed-neighborhood rank (matrix). `None` if the episode did not solve.
pub fn episode_dof(g: &ConflictGraph, cfg: &EnvConfig, ep: &Episode) -> Option<Dof> {
    if !episode_solves(g, cfg, ep) {
        return None;
    }
    if g.is_empty() {
        return Some(Ratio::from_integer(1));
    }
    let denom = match cfg.mode {
        EnvMode::Coloring => {
            let mut used = ep.state.values.clone();
            used.sort_unstable();
            used.dedup();
            used.len()
        }
        EnvMode::LocalColoring => {
            let c = Coloring::new(ep.state.values.clone(), cfg.k as u32).ok()?;
            local_color_counts(g, &c).into_iter().max().unwrap_or(1)
        }
        EnvMode::MatrixRankReduction => {
            let per_node = ep.state.values.iter().map(|&v| vec![binary_vector(v as usize, cfg.r)]).collect();
            let va = VectorAssignment::from_node_vectors(per_node).ok()?;
            max_closed_rank(g, &va).ok()?
        }
    };
    Some(Ratio::new(1, denom.max(1) as u64))
}

/// Best of `n` seeded episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct BestOf {
    pub best: Episode,
    pub best_index: usize,
    pub dof: Option<Dof>,
    pub successes: usize,
}

/// Runs `n` episodes (seeds `derive_seed_path(seed, [i])`) and keeps the best:
/// solved before unsolved, then larger DoF, then fewer steps, then lower index.
pub fn evaluate_best_of_n(
    policy: &dyn Policy,
    g: &ConflictGraph,
    cfg: &EnvConfig,
    n: usize,
    seed: u64,
) -> Result<BestOf> {
    if n == 0 {
        return Err(Error::InvalidParameter("best-of-n needs n >= 1".into()));
    }
    let runs = (0..n)
        .into_par_iter()
        .map(|i| {
            let ep = run_episode(g, cfg, policy, derive_seed_path(seed, &[i as u64]))?;
            let dof = episode_dof(g, cfg, &ep);
            Ok((i, ep, dof))
        })
        .collect::<Result<Vec<_>>>()?;
    let successes = runs.iter().filter(|r| r.2.is_some()).count();
    let (best_index, best, dof) = runs
        .into_iter()
        .min_by(|a, b| {
            b.2.is_some()
                .cmp(&a.2.is_some())
                .then(b.2.cmp(&a.2))
                .then(a.1.steps.cmp(&b.1.steps))
                .then(a.0.cmp(&b.0))
        })
        .expect("n >= 1");
    Ok(BestOf {
        best,
        best_index,
        dof,
        successes,
    })
}
