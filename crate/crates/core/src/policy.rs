//! Graph-convolutional policy/value network with hand-written backprop,
//! plus the non-learned reference policies.
//!
//! Each layer computes `H' = ReLU(H W1 + Â H W2)` where `Â` is the
//! symmetrically normalized adjacency of the deferred subgraph with
//! self-loops. A linear head maps node embeddings to `A + 1` logits (index 0
//! is "defer"); the value head is a bias-free linear map of the sum-pooled
//! embeddings.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::env::{Env, EnvMode};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};

/// Network input: the deferred induced subgraph and its node features.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Graph node index of each row.
    pub nodes: Vec<usize>,
    /// Symmetrized adjacency in local indices, without self-loops.
    pub neighbors: Vec<Vec<usize>>,
    pub features: Array2<f64>,
}

impl Observation {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Degrees with the self-loop included, so isolated nodes get 1.
    pub fn degrees(&self) -> Vec<f64> {
        self.neighbors.iter().map(|n| n.len() as f64 + 1.0).collect()
    }
}

/// `Â X` for `Â = D^-1/2 (B + I) D^-1/2`.
pub fn propagate(neighbors: &[Vec<usize>], degrees: &[f64], x: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(x.raw_dim());
    let inv: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    for (i, nbrs) in neighbors.iter().enumerate() {
        let mut row = out.row_mut(i);
        row.scaled_add(inv[i] * inv[i], &x.row(i));
        for &j in nbrs {
            row.scaled_add(inv[i] * inv[j], &x.row(j));
        }
    }
    out
}

/// One layer: `ReLU(H W1 + Â H W2)`.
pub fn layer_forward(
    h: &Array2<f64>,
    neighbors: &[Vec<usize>],
    degrees: &[f64],
    w1: &Array2<f64>,
    w2: &Array2<f64>,
) -> Result<Array2<f64>> {
    if h.ncols() != w1.nrows() || w1.raw_dim() != w2.raw_dim() || neighbors.len() != h.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "layer input {:?} vs weights {:?}/{:?}",
            h.dim(),
            w1.dim(),
            w2.dim()
        )));
    }
    let z = h.dot(w1) + propagate(neighbors, degrees, h).dot(w2);
    Ok(z.mapv(|v| v.max(0.0)))
}

pub const DEFAULT_HIDDEN: usize = 128;
pub const DEFAULT_LAYERS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
}

/// All trainable weights. Also used as the container for gradients and
/// optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub alphabet: usize,
    pub input_dim: usize,
    pub layers: Vec<Layer>,
    /// hidden x (A+1)
    pub policy_w: Array2<f64>,
    /// 1 x (A+1)
    pub policy_b: Array2<f64>,
    /// hidden x 1
    pub value_w: Array2<f64>,
}

fn uniform(rng: &mut Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| (rng.gen::<f64>() * 2.0 - 1.0) * scale)
}

impl PolicyParams {
    /// Random initialization for alphabet size `alphabet` (A).
    pub fn new(alphabet: usize, hidden: usize, num_layers: usize, seed: u64) -> Self {
        let input_dim = 2 * (alphabet + 1) + 1;
        let mut rng = rng_from_seed(seed);
        let mut layers = Vec::with_capacity(num_layers);
        let mut d_in = input_dim;
        for _ in 0..num_layers {
            // Two summed branches, so each gets half the fan-in variance budget.
            let scale = (3.0 / d_in as f64).sqrt();
            layers.push(Layer {
                w1: uniform(&mut rng, d_in, hidden, scale),
                w2: uniform(&mut rng, d_in, hidden, scale),
            });
            d_in = hidden;
        }
        // Small heads keep the initial policy close to uniform.
        let head = 0.01 / (hidden as f64).sqrt();
        Self {
            alphabet,
            input_dim,
            layers,
            policy_w: uniform(&mut rng, hidden, alphabet + 1, head),
            policy_b: Array2::zeros((1, alphabet + 1)),
            value_w: uniform(&mut rng, hidden, 1, head),
        }
    }

    pub fn default_for(alphabet: usize, seed: u64) -> Self {
        Self::new(alphabet, DEFAULT_HIDDEN, DEFAULT_LAYERS, seed)
    }

    pub fn hidden(&self) -> usize {
        self.policy_w.nrows()
    }

    pub fn zeros_like(&self) -> Self {
        self.map(|a| Array2::zeros(a.raw_dim()))
    }

    fn map(&self, f: impl Fn(&Array2<f64>) -> Array2<f64>) -> Self {
        Self {
            alphabet: self.alphabet,
            input_dim: self.input_dim,
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    w1: f(&l.w1),
                    w2: f(&l.w2),
                })
                .collect(),
            policy_w: f(&self.policy_w),
            policy_b: f(&self.policy_b),
            value_w: f(&self.value_w),
        }
    }

    /// Tensors in checkpoint order.
    pub fn tensors(&self) -> Vec<&Array2<f64>> {
        let mut v: Vec<&Array2<f64>> = Vec::new();
        for l in &self.layers {
            v.push(&l.w1);
            v.push(&l.w2);
        }
        v.extend([&self.policy_w, &self.policy_b, &self.value_w]);
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut v: Vec<&mut Array2<f64>> = Vec::new();
        for l in &mut self.layers {
            v.push(&mut l.w1);
            v.push(&mut l.w2);
        }
        v.extend([&mut self.policy_w, &mut self.policy_b, &mut self.value_w]);
        v
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.tensors().iter().map(|t| t.iter().map(|x| x * x).sum::<f64>()).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, c: f64) {
        for t in self.tensors_mut() {
            t.mapv_inplace(|x| x * c);
        }
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, c: f64, other: &PolicyParams) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.scaled_add(c, b);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    /// Order-sensitive checksum of all entries.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for t in self.tensors() {
            for x in t.iter() {
                h ^= x.to_bits();
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }

    fn header(&self) -> CheckpointHeader {
        CheckpointHeader {
            version: CHECKPOINT_VERSION,
            alphabet: self.alphabet,
            input_dim: self.input_dim,
            shapes: self.tensors().iter().map(|t| [t.nrows(), t.ncols()]).collect(),
        }
    }

    /// Header line (JSON) followed by little-endian f64 tensors in
    /// declared order.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        serde_json::to_writer(&mut *w, &self.header())?;
        w.write_all(b"\n")?;
        for t in self.tensors() {
            for x in t.iter() {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Checkpoint("missing header line".into()))?;
        let header: CheckpointHeader = serde_json::from_slice(&bytes[..nl])?;
        if header.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {}", header.version)));
        }
        let n_layers = header
            .shapes
            .len()
            .checked_sub(3)
            .filter(|n| n % 2 == 0)
            .ok_or_else(|| Error::Checkpoint("unexpected tensor count".into()))?
            / 2;
        let body = &bytes[nl + 1..];
        let expected: usize = header.shapes.iter().map(|s| s[0] * s[1]).sum();
        if body.len() != expected * 8 {
            return Err(Error::Checkpoint(format!(
                "body has {} bytes, header declares {} values",
                body.len(),
                expected
            )));
        }
        let mut values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
        let mut tensors: Vec<Array2<f64>> = header
            .shapes
            .iter()
            .map(|s| Array2::from_shape_fn((s[0], s[1]), |_| values.next().expect("length checked")))
            .collect();
        let value_w = tensors.pop().expect("count checked");
        let policy_b = tensors.pop().expect("count checked");
        let policy_w = tensors.pop().expect("count checked");
        let mut it = tensors.into_iter();
        let layers = (0..n_layers)
            .map(|_| Layer {
                w1: it.next().expect("count checked"),
                w2: it.next().expect("count checked"),
            })
            .collect();
        let p = Self {
            alphabet: header.alphabet,
            input_dim: header.input_dim,
            layers,
            policy_w,
            policy_b,
            value_w,
        };
        p.check_shapes()?;
        Ok(p)
    }

    fn check_shapes(&self) -> Result<()> {
        let h = self.hidden();
        let mut d_in = self.input_dim;
        for l in &self.layers {
            if l.w1.dim() != (d_in, h) || l.w2.dim() != (d_in, h) {
                return Err(Error::Checkpoint("layer shapes do not chain".into()));
            }
            d_in = h;
        }
        if self.input_dim != 2 * (self.alphabet + 1) + 1
            || self.policy_w.dim() != (d_in, self.alphabet + 1)
            || self.policy_b.dim() != (1, self.alphabet + 1)
            || self.value_w.dim() != (d_in, 1)
        {
            return Err(Error::Checkpoint("head shapes do not match the alphabet".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(&mut std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    version: u32,
    #[serde(rename = "A")]
    alphabet: usize,
    input_dim: usize,
    shapes: Vec<[usize; 2]>,
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    neighbors: Vec<Vec<usize>>,
    degrees: Vec<f64>,
    /// Inputs to each layer (`inputs[0]` = features).
    inputs: Vec<Array2<f64>>,
    /// `Â H` for each layer input.
    propagated: Vec<Array2<f64>>,
    /// Pre-activations.
    pre: Vec<Array2<f64>>,
    /// Output embeddings of the last layer.
    pub embedding: Array2<f64>,
}

impl ForwardCache {
    /// Smallest |pre-activation|, used to avoid ReLU kinks in numeric checks.
    pub fn min_abs_preactivation(&self) -> f64 {
        self.pre
            .iter()
            .flat_map(|z| z.iter())
            .fold(f64::INFINITY, |m, z| m.min(z.abs()))
    }
}

#[derive(Debug, Clone)]
pub struct Forward {
    /// n x (A+1)
    pub logits: Array2<f64>,
    pub probs: Array2<f64>,
    pub log_probs: Array2<f64>,
    pub value: f64,
    pub cache: ForwardCache,
}

fn log_softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
        row.mapv_inplace(|x| x - lse);
    }
    out
}

/// Full forward pass. An empty observation yields empty outputs and value 0.
pub fn forward(obs: &Observation, p: &PolicyParams) -> Result<Forward> {
    if obs.features.ncols() != p.input_dim {
        return Err(Error::DimensionMismatch(format!(
            "observation has {} features, network expects {}",
            obs.features.ncols(),
            p.input_dim
        )));
    }
    let degrees = obs.degrees();
    let mut h = obs.features.clone();
    let mut inputs = Vec::with_capacity(p.layers.len());
    let mut propagated = Vec::with_capacity(p.layers.len());
    let mut pre = Vec::with_capacity(p.layers.len());
    for l in &p.layers {
        let ph = propagate(&obs.neighbors, &degrees, &h);
        let z = h.dot(&l.w1) + ph.dot(&l.w2);
        let next = z.mapv(|v| v.max(0.0));
        inputs.push(h);
        propagated.push(ph);
        pre.push(z);
        h = next;
    }
    let logits = h.dot(&p.policy_w) + &p.policy_b;
    let log_probs = log_softmax_rows(&logits);
    let probs = log_probs.mapv(f64::exp);
    let pooled = h.sum_axis(Axis(0));
    let value = pooled.dot(&p.value_w.column(0));
    Ok(Forward {
        logits,
        probs,
        log_probs,
        value,
        cache: ForwardCache {
            neighbors: obs.neighbors.clone(),
            degrees,
            inputs,
            propagated,
            pre,
            embedding: h,
        },
    })
}

/// Per-node action distributions over `{0..A}` (0 = defer).
pub fn policy_forward(obs: &Observation, p: &PolicyParams) -> Result<Array2<f64>> {
    Ok(forward(obs, p)?.probs)
}

pub fn value_forward(obs: &Observation, p: &PolicyParams) -> Result<f64> {
    Ok(forward(obs, p)?.value)
}

/// Gradients of a scalar loss given `dL/dlogits` and `dL/dvalue`.
pub fn backward(p: &PolicyParams, cache: &ForwardCache, d_logits: &Array2<f64>, d_value: f64) -> PolicyParams {
    let mut g = p.zeros_like();
    let h = &cache.embedding;
    g.policy_w = h.t().dot(d_logits);
    g.policy_b = d_logits.sum_axis(Axis(0)).insert_axis(Axis(0));
    let pooled = h.sum_axis(Axis(0));
    g.value_w = (&pooled * d_value).insert_axis(Axis(1));
    let mut dh = d_logits.dot(&p.policy_w.t());
    let vw: Array1<f64> = p.value_w.column(0).to_owned() * d_value;
    for mut row in dh.rows_mut() {
        row += &vw;
    }
    for (li, l) in p.layers.iter().enumerate().rev() {
        let mut dz = dh;
        ndarray::Zip::from(&mut dz)
            .and(&cache.pre[li])
            .for_each(|d, &z| {
                if z <= 0.0 {
                    *d = 0.0;
                }
            });
        g.layers[li].w1 = cache.inputs[li].t().dot(&dz);
        g.layers[li].w2 = cache.propagated[li].t().dot(&dz);
        if li == 0 {
            break;
        }
        dh = dz.dot(&l.w1.t()) + propagate(&cache.neighbors, &cache.degrees, &dz.dot(&l.w2.t()));
    }
    g
}

/// `dL/dlogits` for `L = sum(coeffs * log_softmax(logits))`.
pub fn log_softmax_grad(probs: &Array2<f64>, coeffs: &Array2<f64>) -> Array2<f64> {
    let totals = coeffs.sum_axis(Axis(1));
    let mut d = coeffs.clone();
    for ((mut row, p), t) in d.rows_mut().into_iter().zip(probs.rows()).zip(totals.iter()) {
        row.scaled_add(-t, &p);
    }
    d
}

/// Outcome of comparing analytic gradients with finite differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Entries skipped because a probe step crossed a ReLU kink.
    pub kinked: usize,
}

fn relu_pattern(cache: &ForwardCache) -> Vec<bool> {
    cache.pre.iter().flat_map(|z| z.iter().map(|&v| v > 0.0)).collect()
}

/// Probe loss `sum(coeffs * log_probs) + value_coeff * value`, with the
/// activation pattern it was evaluated under.
fn probe_loss(obs: &Observation, p: &PolicyParams, coeffs: &Array2<f64>, value_coeff: f64) -> (f64, Vec<bool>) {
    let f = forward(obs, p).expect("shapes checked by caller");
    ((&f.log_probs * coeffs).sum() + value_coeff * f.value, relu_pattern(&f.cache))
}

/// Compares every parameter gradient (or every `stride`-th one) of a random
/// probe loss against a five-point finite difference with step `h`.
///
/// Entries whose probe steps change the ReLU activation pattern are skipped
/// and counted in `kinked`; entries where both magnitudes are below `1e-12`
/// are skipped as numerically zero.
pub fn gradient_check(obs: &Observation, p: &PolicyParams, seed: u64, h: f64, stride: usize) -> Result<GradCheck> {
    let mut rng = rng_from_seed(seed);
    let f = forward(obs, p)?;
    let pattern = relu_pattern(&f.cache);
    let coeffs = Array2::from_shape_fn(f.log_probs.raw_dim(), |_| rng.gen::<f64>() * 2.0 - 1.0);
    let value_coeff = rng.gen::<f64>() * 2.0 - 1.0;
    let analytic = backward(p, &f.cache, &log_softmax_grad(&f.probs, &coeffs), value_coeff);
    let mut probe = p.clone();
    let mut out = GradCheck {
        max_rel_error: 0.0,
        checked: 0,
        kinked: 0,
    };
    let mut flat = 0usize;
    let grads = analytic.tensors();
    for (ti, g) in grads.iter().enumerate() {
        for idx in 0..g.len() {
            flat += 1;
            if (flat - 1) % stride.max(1) != 0 {
                continue;
            }
            let (r, c) = (idx / g.ncols(), idx % g.ncols());
            let orig = probe.tensors()[ti][[r, c]];
            let mut at = |step: f64| {
                probe.tensors_mut()[ti][[r, c]] = orig + step;
                probe_loss(obs, &probe, &coeffs, value_coeff)
            };
            let probes = [at(2.0 * h), at(h), at(-h), at(-2.0 * h)];
            probe.tensors_mut()[ti][[r, c]] = orig;
            if probes.iter().any(|(_, pat)| *pat != pattern) {
                out.kinked += 1;
                continue;
            }
            let [p2, p1, m1, m2] = probes.map(|(l, _)| l);
            let numeric = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
            let a = g[[r, c]];
            let scale = a.abs().max(numeric.abs());
            if scale < 1e-12 {
                continue;
            }
            out.checked += 1;
            out.max_rel_error = out.max_rel_error.max((a - numeric).abs() / scale);
        }
    }
    Ok(out)
}

/// Samples one value per row from a probability matrix.
pub fn sample_actions(probs: &Array2<f64>, rng: &mut Rng) -> Vec<u32> {
    probs
        .rows()
        .into_iter()
        .map(|row| {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (a, &pa) in row.iter().enumerate() {
                acc += pa;
                if u < acc {
                    return a as u32;
                }
            }
            (row.len() - 1) as u32
        })
        .collect()
}

/// Anything that can pick values for the deferred nodes of an environment.
/// The returned vector is aligned with `obs.nodes`.
pub trait Policy: Sync {
    fn act(&self, env: &Env<'_>, obs: &Observation, rng: &mut Rng) -> Vec<u32>;
}

/// The trained network, sampling from its per-node distributions.
#[derive(Debug, Clone)]
pub struct LearnedPolicy {
    pub params: PolicyParams,
}

impl Policy for LearnedPolicy {
    fn act(&self, env: &Env<'_>, obs: &Observation, rng: &mut Rng) -> Vec<u32> {
        if obs.is_empty() {
            return Vec::new();
        }
        assert_eq!(
            env.config().alphabet(),
            self.params.alphabet,
            "policy alphabet does not match the environment"
        );
        let probs = policy_forward(obs, &self.params).expect("observation matches params");
        sample_actions(&probs, rng)
    }
}

/// Uniform over `{0..A}` per node.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPolicy;

impl Policy for RandomPolicy {
    fn act(&self, env: &Env<'_>, obs: &Observation, rng: &mut Rng) -> Vec<u32> {
        let a = env.config().alphabet() as u32;
        obs.nodes.iter().map(|_| rng.gen_range(0..=a)).collect()
    }
}

/// Visits deferred nodes in index order; with probability `rho` gives each
/// the lowest value that keeps every constraint satisfied given the
/// assignments made so far (including earlier ones in the same step),
/// otherwise defers.
#[derive(Debug, Clone, Copy)]
pub struct GreedyDefer {
    pub rho: f64,
}

impl Default for GreedyDefer {
    fn default() -> Self {
        Self { rho: 0.5 }
    }
}

/// Whether `value` at node `v` keeps the partial assignment consistent.
pub fn value_fits(env: &Env<'_>, values: &[u32], v: usize, value: u32) -> bool {
    let g = env.graph();
    let cfg = env.config();
    match cfg.mode {
        EnvMode::Coloring | EnvMode::LocalColoring => {
            if g.neighbors(v).iter().any(|&u| values[u] == value) {
                return false;
            }
            if cfg.mode == EnvMode::LocalColoring {
                let mut trial = values.to_vec();
                trial[v] = value;
                let holders = std::iter::once(v).chain(g.out_neighbors(v).iter().copied());
                for i in holders {
                    let mut seen: Vec<u32> = env.closed_in(i).iter().map(|&j| trial[j]).filter(|&x| x != 0).collect();
                    seen.sort_unstable();
                    seen.dedup();
                    if seen.len() > cfg.r {
                        return false;
                    }
                }
            }
            true
        }
        EnvMode::MatrixRankReduction => {
            let mut trial = values.to_vec();
            trial[v] = value;
            let holders = std::iter::once(v).chain(g.out_neighbors(v).iter().copied());
            for i in holders {
                if trial[i] == 0 {
                    continue;
                }
                // Own vector must stay outside the span of the assigned in-neighbors.
                let open: Vec<&[i64]> = env
                    .closed_in(i)
                    .iter()
                    .filter(|&&j| j != i && trial[j] != 0)
                    .map(|&j| env.vector(trial[j]))
                    .collect();
                let mut all = open.clone();
                all.push(env.vector(trial[i]));
                let ro = crate::linalg::rank_exact(&open).expect("equal lengths");
                let rc = crate::linalg::rank_exact(&all).expect("equal lengths");
                if rc == ro {
                    return false;
                }
            }
            true
        }
    }
}

impl Policy for GreedyDefer {
    fn act(&self, env: &Env<'_>, obs: &Observation, rng: &mut Rng) -> Vec<u32> {
        let a = env.config().alphabet() as u32;
        let mut values = env.state().values.clone();
        obs.nodes
            .iter()
            .map(|&v| {
                if !rng.gen_bool(self.rho) {
                    return 0;
                }
                let pick = (1..=a).find(|&c| value_fits(env, &values, v, c)).unwrap_or(0);
                values[v] = pick;
                pick
            })
            .collect()
    }
}

/// Exact backtracking solver posing as a policy: completes the current state
/// in one step if any completion satisfies the mode's constraints, otherwise
/// defers everything. Only practical on small graphs.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExhaustivePolicy;

/// Exact rank condition at every fully assigned closed neighborhood that
/// contains `v`.
fn complete_fits(env: &Env<'_>, values: &[u32], v: usize) -> bool {
    let g = env.graph();
    let holders = std::iter::once(v).chain(g.out_neighbors(v).iter().copied());
    for i in holders {
        let closed = env.closed_in(i);
        if closed.iter().any(|&j| values[j] == 0) {
            continue;
        }
        let open: Vec<&[i64]> = closed.iter().filter(|&&j| j != i).map(|&j| env.vector(values[j])).collect();
        let mut all = open.clone();
        all.push(env.vector(values[i]));
        let ro = crate::linalg::rank_exact(&open).expect("equal lengths");
        let rc = crate::linalg::rank_exact(&all).expect("equal lengths");
        if rc != ro + 1 {
            return false;
        }
    }
    true
}

fn backtrack(env: &Env<'_>, order: &[usize], pos: usize, values: &mut Vec<u32>, max_used: u32) -> bool {
    if pos == order.len() {
        return true;
    }
    let v = order[pos];
    let cfg = env.config();
    let a = cfg.alphabet() as u32;
    let limit = match cfg.mode {
        // Unused colors are interchangeable.
        EnvMode::Coloring | EnvMode::LocalColoring => a.min(max_used + 1),
        EnvMode::MatrixRankReduction => a,
    };
    for c in 1..=limit {
        values[v] = c;
        let ok = match cfg.mode {
            EnvMode::MatrixRankReduction => complete_fits(env, values, v),
            _ => {
                values[v] = 0;
                let fits = value_fits(env, values, v, c);
                values[v] = c;
                fits
            }
        };
        if ok && backtrack(env, order, pos + 1, values, max_used.max(c)) {
            return true;
        }
    }
    values[v] = 0;
    false
}

impl Policy for ExhaustivePolicy {
    fn act(&self, env: &Env<'_>, obs: &Observation, _rng: &mut Rng) -> Vec<u32> {
        let mut values = env.state().values.clone();
        let max_used = values.iter().copied().max().unwrap_or(0);
        if backtrack(env, &obs.nodes, 0, &mut values, max_used) {
            obs.nodes.iter().map(|&v| values[v]).collect()
        } else {
            vec![0; obs.len()]
        }
    }
}
