//! The learn-to-defer environment and the K-selector outer loop.
//!
//! Each step the agent assigns a value to every deferred node (0 keeps it
//! deferred). Conflicting assignments are rolled back by clean-up rules, so
//! an episode ends either with every node assigned, which is always a valid
//! solution, or at the iteration limit.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::coloring::{greedy_sli, Coloring};
use crate::error::{Error, Result};
use crate::graph::ConflictGraph;
use crate::linalg::{binary_vector, rank_exact};
use crate::policy::{Observation, Policy};
use crate::rng::{derive_seed_path, rng_from_seed};
use crate::verify::{local_color_counts, realize_osia, realize_subspace, realize_tdma, Mode, Scheme, VectorAssignment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvMode {
    Coloring,
    LocalColoring,
    MatrixRankReduction,
}

/// Largest vector length supported in matrix mode.
pub const MAX_MATRIX_RANK: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub mode: EnvMode,
    /// Number of colors in the coloring modes.
    pub k: usize,
    /// Local color bound, or vector length in matrix mode.
    pub r: usize,
    /// Columns per node; the environment itself only handles `b = 1`.
    pub b: usize,
    /// Iteration limit B.
    pub max_iters: usize,
    /// Clean-up II is active while `t < ceil(alpha * B)`.
    pub alpha: f64,
    /// Weight of the early-termination reward.
    pub beta: f64,
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            mode: EnvMode::Coloring,
            k: 1,
            r: 1,
            b: 1,
            max_iters: 32,
            alpha: 0.5,
            beta: 0.5,
            seed: 0,
        }
    }
}

impl EnvConfig {
    pub fn coloring(k: usize) -> Self {
        Self {
            k,
            r: k,
            ..Self::default()
        }
    }

    pub fn local(k: usize, r: usize) -> Self {
        Self {
            mode: EnvMode::LocalColoring,
            k,
            r,
            ..Self::default()
        }
    }

    pub fn matrix(r: usize) -> Self {
        Self {
            mode: EnvMode::MatrixRankReduction,
            k: (1 << r) - 1,
            r,
            ..Self::default()
        }
    }

    pub fn with_max_iters(mut self, b: usize) -> Self {
        self.max_iters = b;
        self
    }

    /// Size A of the action alphabet (values `1..=A`, plus 0 for defer).
    pub fn alphabet(&self) -> usize {
        match self.mode {
            EnvMode::Coloring | EnvMode::LocalColoring => self.k,
            EnvMode::MatrixRankReduction => (1usize << self.r) - 1,
        }
    }

    /// Width of the node feature vector.
    pub fn feature_dim(&self) -> usize {
        2 * (self.alphabet() + 1) + 1
    }

    /// First iteration at which clean-up II is no longer applied.
    pub fn local_cutoff(&self) -> usize {
        (self.alpha * self.max_iters as f64).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("iteration limit must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha={} outside (0,1]", self.alpha)));
        }
        if self.b != 1 {
            return Err(Error::InvalidParameter(
                "b > 1 must be handled by node splitting before building the environment".into(),
            ));
        }
        match self.mode {
            EnvMode::Coloring | EnvMode::LocalColoring if self.k == 0 => {
                Err(Error::InvalidParameter("K must be at least 1".into()))
            }
            EnvMode::LocalColoring if self.r == 0 => Err(Error::InvalidParameter("r must be at least 1".into())),
            EnvMode::MatrixRankReduction if !(1..=MAX_MATRIX_RANK).contains(&self.r) => Err(
                Error::InvalidParameter(format!("matrix mode needs 1 <= r <= {MAX_MATRIX_RANK}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Per-node values (0 = deferred) and the iteration counter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VertexState {
    pub values: Vec<u32>,
    pub t: usize,
}

impl VertexState {
    pub fn deferred(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.values[i] == 0).collect()
    }

    pub fn num_assigned(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(|&v| v != 0)
    }
}

/// Nodes reset by each clean-up stage in one step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rollbacks {
    pub edge_conflicts: usize,
    pub local_excess: usize,
    pub rank_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub state: VertexState,
    pub reward: f64,
    pub reward_assign: f64,
    pub reward_time: f64,
    pub done: bool,
    /// Every node assigned.
    pub success: bool,
    pub rollbacks: Rollbacks,
}

/// Values for (a subset of) nodes, keyed by node index.
pub type Action = BTreeMap<usize, u32>;

/// Builds an action from values aligned with `nodes`.
pub fn action_from(nodes: &[usize], values: &[u32]) -> Action {
    nodes.iter().copied().zip(values.iter().copied()).collect()
}

/// All-zero state with `t = 0`.
pub fn reset(g: &ConflictGraph) -> VertexState {
    VertexState {
        values: vec![0; g.num_nodes()],
        t: 0,
    }
}

/// `(R_assign, R_time)` for a transition. `R_time` uses the iteration count
/// after the step and is paid only when the next state is complete.
pub fn reward_components(state: &VertexState, next: &VertexState, cfg: &EnvConfig) -> (f64, f64) {
    let n = state.values.len();
    let r_c = if n == 0 {
        0.0
    } else {
        (next.num_assigned() as f64 - state.num_assigned() as f64) / n as f64
    };
    let r_t = if next.is_complete() {
        (cfg.max_iters as f64 - next.t as f64) / cfg.max_iters as f64
    } else {
        0.0
    };
    (r_c, r_t)
}

/// An environment bound to one graph.
#[derive(Debug, Clone)]
pub struct Env<'g> {
    g: &'g ConflictGraph,
    cfg: EnvConfig,
    closed: Vec<Vec<usize>>,
    undirected: Vec<(usize, usize)>,
    vectors: Vec<Vec<i64>>,
    state: VertexState,
}

impl<'g> Env<'g> {
    pub fn new(g: &'g ConflictGraph, cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        let vectors = match cfg.mode {
            EnvMode::MatrixRankReduction => (1..=cfg.alphabet()).map(|k| binary_vector(k, cfg.r)).collect(),
            _ => Vec::new(),
        };
        Ok(Self {
            g,
            closed: (0..g.num_nodes()).map(|i| g.closed_in(i)).collect(),
            undirected: g.undirected_edges(),
            vectors,
            state: reset(g),
            cfg,
        })
    }

    pub fn graph(&self) -> &'g ConflictGraph {
        self.g
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn state(&self) -> &VertexState {
        &self.state
    }

    pub fn reset(&mut self) -> &VertexState {
        self.state = reset(self.g);
        &self.state
    }

    pub fn closed_in(&self, i: usize) -> &[usize] {
        &self.closed[i]
    }

    /// Vector for a matrix-mode value.
    pub fn vector(&self, value: u32) -> &[i64] {
        &self.vectors[value as usize - 1]
    }

    /// Distinct assigned values in the closed in-neighborhood of `i`.
    fn local_values(&self, values: &[u32], i: usize) -> BTreeSet<u32> {
        self.closed[i].iter().map(|&j| values[j]).filter(|&v| v != 0).collect()
    }

    /// True iff the fully assigned closed in-neighborhood of `i` violates
    /// `r_closed - r_open = 1`.
    fn rank_violation(&self, values: &[u32], i: usize) -> bool {
        let open: Vec<&[i64]> = self.closed[i]
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| self.vector(values[j]))
            .collect();
        let mut all = open.clone();
        all.push(self.vector(values[i]));
        let ro = rank_exact(&open).expect("equal lengths");
        let rc = rank_exact(&all).expect("equal lengths");
        rc - ro != 1
    }

    pub fn step(&mut self, action: &Action) -> Result<StepOutcome> {
        let n = self.g.num_nodes();
        let a_max = self.cfg.alphabet() as u32;
        let deferred = self.state.deferred();
        if action.len() != deferred.len() {
            return Err(Error::InvalidAction(format!(
                "action covers {} nodes, {} are deferred",
                action.len(),
                deferred.len()
            )));
        }
        let mut next = self.state.values.clone();
        for (&i, &v) in action {
            if i >= n || self.state.values[i] != 0 {
                return Err(Error::InvalidAction(format!("node {i} is not deferred")));
            }
            if v > a_max {
                return Err(Error::InvalidAction(format!("value {v} outside 0..={a_max}")));
            }
            next[i] = v;
        }

        // Violations are collected on the post-update snapshot, then applied together.
        let mut rollbacks = Rollbacks::default();
        let mut reset_set = BTreeSet::new();
        match self.cfg.mode {
            EnvMode::Coloring | EnvMode::LocalColoring => {
                let mut hit = BTreeSet::new();
                for &(u, v) in &self.undirected {
                    if next[u] != 0 && next[u] == next[v] {
                        hit.insert(u);
                        hit.insert(v);
                    }
                }
                rollbacks.edge_conflicts = hit.len();
                reset_set.extend(hit);
                if self.cfg.mode == EnvMode::LocalColoring && self.state.t < self.cfg.local_cutoff() {
                    let mut hit = BTreeSet::new();
                    for i in 0..n {
                        if self.local_values(&next, i).len() > self.cfg.r {
                            hit.extend(self.closed[i].iter().copied());
                        }
                    }
                    rollbacks.local_excess = hit.len();
                    reset_set.extend(hit);
                }
            }
            EnvMode::MatrixRankReduction => {
                let mut hit = BTreeSet::new();
                for i in 0..n {
                    if self.closed[i].iter().all(|&j| next[j] != 0) && self.rank_violation(&next, i) {
                        hit.extend(self.closed[i].iter().copied());
                    }
                }
                rollbacks.rank_violations = hit.len();
                reset_set.extend(hit);
            }
        }
        for i in reset_set {
            next[i] = 0;
        }

        let next_state = VertexState {
            values: next,
            t: self.state.t + 1,
        };
        let (r_c, r_t) = reward_components(&self.state, &next_state, &self.cfg);
        let success = next_state.is_complete();
        let done = success || next_state.t >= self.cfg.max_iters;
        self.state = next_state.clone();
        Ok(StepOutcome {
            state: next_state,
            reward: r_c + self.cfg.beta * r_t,
            reward_assign: r_c,
            reward_time: r_t,
            done,
            success,
            rollbacks,
        })
    }

    /// Observation of the current state: the deferred induced subgraph with
    /// per-node features `[t/B, in-neighbor one-hot sums, out-neighbor
    /// one-hot sums]`, sums taken over the alphabet `{0..A}`.
    pub fn observe(&self) -> Observation {
        observe(&self.state, self.g, &self.cfg)
    }
}

/// Free-function form of [`Env::observe`].
pub fn observe(state: &VertexState, g: &ConflictGraph, cfg: &EnvConfig) -> Observation {
    let nodes = state.deferred();
    let a1 = cfg.alphabet() + 1;
    let mut features = Array2::<f64>::zeros((nodes.len(), 2 * a1 + 1));
    let mut local = vec![usize::MAX; g.num_nodes()];
    for (li, &v) in nodes.iter().enumerate() {
        local[v] = li;
    }
    let tfrac = state.t as f64 / cfg.max_iters as f64;
    let mut neighbors = vec![Vec::new(); nodes.len()];
    for (li, &v) in nodes.iter().enumerate() {
        features[[li, 0]] = tfrac;
        for &u in g.in_neighbors(v) {
            features[[li, 1 + state.values[u] as usize]] += 1.0;
        }
        for &u in g.out_neighbors(v) {
            features[[li, 1 + a1 + state.values[u] as usize]] += 1.0;
        }
        for &u in g.neighbors(v) {
            if local[u] != usize::MAX {
                neighbors[li].push(local[u]);
            }
        }
    }
    Observation {
        nodes,
        neighbors,
        features,
    }
}

/// Result of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub state: VertexState,
    pub success: bool,
    pub steps: usize,
    pub total_reward: f64,
}

/// Runs one episode of `policy` on `g` with its own seeded RNG.
pub fn run_episode(g: &ConflictGraph, cfg: &EnvConfig, policy: &dyn Policy, seed: u64) -> Result<Episode> {
    let mut env = Env::new(g, cfg.clone())?;
    let mut rng = rng_from_seed(seed);
    let mut total = 0.0;
    loop {
        let obs = env.observe();
        let values = policy.act(&env, &obs, &mut rng);
        let out = env.step(&action_from(&obs.nodes, &values))?;
        total += out.reward;
        if out.done {
            return Ok(Episode {
                success: out.success,
                steps: out.state.t,
                state: out.state,
                total_reward: total,
            });
        }
    }
}

/// Whether a finished episode is a solution of the kind the mode asks for.
/// Local mode additionally requires the local bound, which clean-up II stops
/// enforcing after the cutoff.
pub fn episode_solves(g: &ConflictGraph, cfg: &EnvConfig, ep: &Episode) -> bool {
    if !ep.success {
        return false;
    }
    match cfg.mode {
        EnvMode::Coloring | EnvMode::MatrixRankReduction => true,
        EnvMode::LocalColoring => {
            let c = Coloring::new(ep.state.values.clone(), cfg.k as u32).expect("env values are in range");
            local_color_counts(g, &c).into_iter().all(|n| n <= cfg.r)
        }
    }
}

/// Settings for [`k_selector`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorConfig {
    /// Template for iteration limit, alpha, beta and seed.
    pub env: EnvConfig,
    /// Episodes tried per (K, r) setting before declaring failure.
    pub attempts: usize,
    /// Extra colors above the minimal K tried in the local r-descent.
    pub local_k_slack: usize,
    /// Largest vector length tried in matrix mode.
    pub max_matrix_rank: usize,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            attempts: 1,
            local_k_slack: 1,
            max_matrix_rank: 6,
        }
    }
}

/// Outcome of [`k_selector`].
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub k: usize,
    pub r: usize,
    pub values: Vec<u32>,
    pub scheme: Option<Scheme>,
    /// True when no learned episode succeeded and the greedy solution was used.
    pub greedy_fallback: bool,
    pub episodes: usize,
}

struct Searcher<'a> {
    g: &'a ConflictGraph,
    policy: &'a dyn Policy,
    cfg: &'a SelectorConfig,
    episodes: usize,
}

impl Searcher<'_> {
    /// Up to `attempts` episodes at the given setting; first success wins.
    fn solve(&mut self, mode: EnvMode, k: usize, r: usize) -> Result<Option<Episode>> {
        let mut env = self.cfg.env.clone();
        env.mode = mode;
        env.k = k;
        env.r = r;
        if mode == EnvMode::MatrixRankReduction {
            env.k = (1 << r) - 1;
        }
        let tag = match mode {
            EnvMode::Coloring => 0,
            EnvMode::LocalColoring => 1,
            EnvMode::MatrixRankReduction => 2,
        };
        for attempt in 0..self.cfg.attempts.max(1) {
            self.episodes += 1;
            let seed = derive_seed_path(env.seed, &[tag, k as u64, r as u64, attempt as u64]);
            let ep = run_episode(self.g, &env, self.policy, seed)?;
            if episode_solves(self.g, &env, &ep) {
                return Ok(Some(ep));
            }
        }
        Ok(None)
    }
}

/// Descends K (and r) with the given policy, keeping the smallest setting
/// that an episode solves. Starts from the greedy SLI color count, which also
/// serves as the fallback, so a solution is always returned.
///
/// Coloring mode yields a TDMA scheme, local mode an OSIA scheme and matrix
/// mode an SSIA scheme.
pub fn k_selector(g: &ConflictGraph, mode: EnvMode, policy: &dyn Policy, cfg: &SelectorConfig) -> Result<Selection> {
    let greedy = greedy_sli(g);
    let k0 = greedy.num_colors() as usize;
    if g.is_empty() {
        return Ok(Selection {
            k: 0,
            r: 0,
            values: Vec::new(),
            scheme: None,
            greedy_fallback: true,
            episodes: 0,
        });
    }
    let mut s = Searcher {
        g,
        policy,
        cfg,
        episodes: 0,
    };
    let greedy_local = local_color_counts(g, &greedy).into_iter().max().unwrap_or(1);
    match mode {
        EnvMode::Coloring | EnvMode::LocalColoring => {
            let mut best: Option<(usize, Vec<u32>)> = None;
            let mut k = k0;
            while k >= 1 {
                match s.solve(EnvMode::Coloring, k, k)? {
                    Some(ep) => best = Some((k, ep.state.values)),
                    None => break,
                }
                k -= 1;
            }
            let fallback = best.is_none();
            let (k_star, values) = best.unwrap_or((k0, greedy.colors().to_vec()));
            let coloring = Coloring::new(values.clone(), k_star as u32)?;
            if mode == EnvMode::Coloring {
                let scheme = realize_tdma(g, &coloring)?;
                return Ok(Selection {
                    k: k_star,
                    r: k_star,
                    values,
                    scheme: Some(scheme),
                    greedy_fallback: fallback,
                    episodes: s.episodes,
                });
            }
            let mut best_local = (k_star, local_color_counts(g, &coloring).into_iter().max().unwrap_or(1), values);
            if fallback && greedy_local < best_local.1 {
                best_local = (k0, greedy_local, greedy.colors().to_vec());
            }
            for k in k_star..=(k_star + cfg.local_k_slack).min(g.num_nodes()) {
                let mut r = best_local.1.min(k);
                while r > 1 {
                    r -= 1;
                    match s.solve(EnvMode::LocalColoring, k, r)? {
                        Some(ep) => {
                            let c = Coloring::new(ep.state.values.clone(), k as u32)?;
                            let got = local_color_counts(g, &c).into_iter().max().unwrap_or(1);
                            best_local = (k, got, ep.state.values);
                            r = got;
                        }
                        None => break,
                    }
                }
            }
            let (k_best, r_best, values) = best_local;
            let coloring = Coloring::new(values.clone(), k_best as u32)?;
            let scheme = realize_osia(g, &coloring)?;
            Ok(Selection {
                k: k_best,
                r: r_best,
                values,
                scheme: Some(scheme),
                greedy_fallback: fallback,
                episodes: s.episodes,
            })
        }
        EnvMode::MatrixRankReduction => {
            let r0 = k0.min(cfg.max_matrix_rank).min(MAX_MATRIX_RANK);
            let mut best: Option<(usize, Vec<u32>)> = None;
            let mut r = r0;
            while r >= 1 {
                match s.solve(EnvMode::MatrixRankReduction, 0, r)? {
                    Some(ep) => best = Some((r, ep.state.values)),
                    None => break,
                }
                r -= 1;
            }
            let fallback = best.is_none() || best.as_ref().is_some_and(|b| b.0 > k0);
            let (r_star, values, vectors) = match best {
                Some((r, values)) if r <= k0 => {
                    let vs = values.iter().map(|&v| vec![binary_vector(v as usize, r)]).collect();
                    (r, values, vs)
                }
                // Unit vectors of the greedy coloring.
                _ => {
                    let vs = greedy
                        .colors()
                        .iter()
                        .map(|&c| vec![(1..=k0).map(|j| i64::from(j == c as usize)).collect()])
                        .collect();
                    (k0, greedy.colors().to_vec(), vs)
                }
            };
            let va = VectorAssignment::from_node_vectors(vectors)?;
            let scheme = realize_subspace(g, &va, Mode::Ssia, cfg.env.seed)?;
            Ok(Selection {
                k: va.distinct_used(),
                r: r_star,
                values,
                scheme: Some(scheme),
                greedy_fallback: fallback,
                episodes: s.episodes,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{ExhaustivePolicy, RandomPolicy};
    use crate::testutil::random_digraph;
    use proptest::prelude::*;

    fn triangle() -> ConflictGraph {
        ConflictGraph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    #[test]
    fn reset_is_all_deferred() {
        let g = random_digraph(6, 0.3, 1);
        let env = Env::new(&g, EnvConfig::coloring(3)).unwrap();
        assert_eq!(env.state().values, vec![0; 6]);
        assert_eq!(env.state().t, 0);
    }

    #[test]
    fn empty_graph_terminates_immediately() {
        let g = ConflictGraph::from_edges(0, []).unwrap();
        let mut env = Env::new(&g, EnvConfig::coloring(2)).unwrap();
        let out = env.step(&Action::new()).unwrap();
        assert!(out.done && out.success);
    }

    #[test]
    fn adjacent_equal_colors_roll_back() {
        let g = ConflictGraph::from_edges(3, [(0, 1)]).unwrap();
        let mut env = Env::new(&g, EnvConfig::coloring(2)).unwrap();
        let out = env.step(&action_from(&[0, 1, 2], &[1, 1, 2])).unwrap();
        assert_eq!(out.state.values, vec![0, 0, 2]);
        assert_eq!(out.rollbacks.edge_conflicts, 2);
        assert!((out.reward_assign - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn previously_colored_nodes_can_be_rolled_back() {
        let g = ConflictGraph::from_edges(2, [(0, 1)]).unwrap();
        let mut env = Env::new(&g, EnvConfig::coloring(2)).unwrap();
        env.step(&action_from(&[0, 1], &[1, 0])).unwrap();
        let out = env.step(&action_from(&[1], &[1])).unwrap();
        assert_eq!(out.state.values, vec![0, 0]);
        assert!((out.reward_assign + 0.5).abs() < 1e-12);
    }

    #[test]
    fn invalid_actions_are_rejected() {
        let g = triangle();
        let mut env = Env::new(&g, EnvConfig::coloring(3)).unwrap();
        assert!(env.step(&action_from(&[0, 1, 2], &[1, 2, 4])).is_err());
        assert!(env.step(&action_from(&[0, 1], &[1, 2])).is_err());
        env.step(&action_from(&[0, 1, 2], &[1, 0, 0])).unwrap();
        assert!(env.step(&action_from(&[0, 1], &[1, 2])).is_err());
    }

    #[test]
    fn local_cutoff_switches_to_plain_coloring() {
        let g = triangle();
        let cfg = EnvConfig::local(3, 1).with_max_iters(4);
        let mut env = Env::new(&g, cfg).unwrap();
        let full = action_from(&[0, 1, 2], &[1, 2, 3]);
        for _ in 0..2 {
            let out = env.step(&full).unwrap();
            assert_eq!(out.state.values, vec![0, 0, 0]);
            assert_eq!(out.rollbacks.local_excess, 3);
        }
        let out = env.step(&full).unwrap();
        assert!(out.success);
        assert_eq!(out.state.values, vec![1, 2, 3]);
    }

    #[test]
    fn reward_arithmetic() {
        let cfg = EnvConfig::coloring(3);
        let mk = |assigned: usize, t: usize| VertexState {
            values: (0..10).map(|i| u32::from(i < assigned)).collect(),
            t,
        };
        let (rc, rt) = reward_components(&mk(3, 0), &mk(7, 1), &cfg);
        assert!((rc - 0.4).abs() < 1e-12 && rt == 0.0);
        let (rc, _) = reward_components(&mk(7, 1), &mk(3, 2), &cfg);
        assert!((rc + 0.4).abs() < 1e-12);
        let (_, rt) = reward_components(&mk(3, 7), &mk(10, 8), &cfg);
        assert!((rt - 0.75).abs() < 1e-12);
    }

    #[test]
    fn observation_shape_and_counts() {
        let g = ConflictGraph::from_edges(3, [(0, 2), (1, 2), (2, 0)]).unwrap();
        let cfg = EnvConfig::coloring(3);
        let mut env = Env::new(&g, cfg.clone()).unwrap();
        let obs = env.observe();
        assert_eq!(obs.features.dim(), (3, cfg.feature_dim()));
        assert_eq!(obs.features[[2, 1]], 2.0);
        env.step(&action_from(&[0, 1, 2], &[1, 2, 0])).unwrap();
        let obs = env.observe();
        assert_eq!(obs.nodes, vec![2]);
        let row = obs.features.row(0);
        assert!((row[0] - 1.0 / 32.0).abs() < 1e-12);
        // In-neighbors hold colors 1 and 2, the out-neighbor holds color 1.
        assert_eq!(row[2] + row[3], 2.0);
        assert_eq!(row[1 + 4 + 1], 1.0);
        assert_eq!(row.iter().skip(1).sum::<f64>(), 3.0);
    }

    #[test]
    fn selector_on_triangle_and_edgeless() {
        let cfg = SelectorConfig::default();
        let sel = k_selector(&triangle(), EnvMode::Coloring, &ExhaustivePolicy, &cfg).unwrap();
        assert_eq!(sel.k, 3);
        let e = ConflictGraph::from_edges(4, []).unwrap();
        let sel = k_selector(&e, EnvMode::Coloring, &ExhaustivePolicy, &cfg).unwrap();
        assert_eq!(sel.k, 1);
    }

    #[test]
    fn random_policy_colors_triangle() {
        let g = triangle();
        let cfg = EnvConfig::coloring(3);
        let ok = (0..1000)
            .filter(|&s| run_episode(&g, &cfg, &RandomPolicy, s).unwrap().success)
            .count();
        assert!(ok >= 990, "{ok}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn step_postconditions_hold(n in 1usize..9, p in 0.0f64..0.7, seed in 0u64..10_000, mode in 0usize..3) {
            let g = random_digraph(n, p, seed);
            let cfg = match mode {
                0 => EnvConfig::coloring(3),
                1 => EnvConfig::local(3, 2),
                _ => EnvConfig::matrix(3),
            }.with_max_iters(12);
            let mut env = Env::new(&g, cfg.clone()).unwrap();
            let mut rng = rng_from_seed(seed);
            let mut total_assign = 0.0;
            loop {
                let obs = env.observe();
                let vals = RandomPolicy.act(&env, &obs, &mut rng);
                let t_before = env.state().t;
                let out = env.step(&action_from(&obs.nodes, &vals)).unwrap();
                total_assign += out.reward_assign;
                let v = &out.state.values;
                if mode < 2 {
                    for &(a, b) in g.edges() {
                        prop_assert!(v[a] == 0 || v[a] != v[b]);
                    }
                }
                if mode == 1 && t_before < cfg.local_cutoff() {
                    for i in 0..n {
                        let set: BTreeSet<u32> = g.closed_in(i).iter().map(|&j| v[j]).filter(|&x| x != 0).collect();
                        prop_assert!(set.len() <= 2);
                    }
                }
                if mode == 2 {
                    for i in 0..n {
                        if g.closed_in(i).iter().all(|&j| v[j] != 0) {
                            prop_assert!(!env.rank_violation(v, i));
                        }
                    }
                }
                if out.done {
                    prop_assert!(out.success || out.state.t == cfg.max_iters);
                    break;
                }
            }
            // With beta = 0 the episode return telescopes to the assigned fraction.
            prop_assert!((total_assign - env.state().num_assigned() as f64 / n as f64).abs() < 1e-9);
        }
    }
}
