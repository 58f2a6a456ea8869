//! Vertex colorings and the classical coloring algorithms: smallest-last
//! greedy with Kempe interchange, TabuCol, and DSATUR branch-and-bound.
//!
//! All algorithms act on the underlying undirected graph of a
//! [`ConflictGraph`]. Colors are 1-based.

use std::collections::VecDeque;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ConflictGraph;
use crate::rng::rng_from_seed;

/// A total vertex coloring with colors in `1..=num_colors`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coloring {
    colors: Vec<u32>,
    num_colors: u32,
}

impl Coloring {
    pub fn new(colors: Vec<u32>, num_colors: u32) -> Result<Self> {
        if let Some((v, &c)) = colors
            .iter()
            .enumerate()
            .find(|(_, &c)| c == 0 || c > num_colors)
        {
            return Err(Error::InvalidColoring(format!(
                "node {v} has color {c} outside 1..={num_colors}"
            )));
        }
        Ok(Self { colors, num_colors })
    }

    /// Builds a coloring with `num_colors` equal to the largest color used.
    pub fn from_colors(colors: Vec<u32>) -> Result<Self> {
        let k = colors.iter().copied().max().unwrap_or(0);
        Self::new(colors, k)
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn color(&self, v: usize) -> u32 {
        self.colors[v]
    }

    pub fn colors(&self) -> &[u32] {
        &self.colors
    }

    pub fn num_colors(&self) -> u32 {
        self.num_colors
    }

    /// Number of distinct colors actually used.
    pub fn used_colors(&self) -> u32 {
        let mut seen: Vec<u32> = self.colors.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len() as u32
    }

    /// Relabels colors to `1..=used` preserving first-appearance order.
    pub fn compacted(&self) -> Coloring {
        let mut map = std::collections::BTreeMap::new();
        let colors = self
            .colors
            .iter()
            .map(|c| {
                let next = map.len() as u32 + 1;
                *map.entry(*c).or_insert(next)
            })
            .collect();
        let k = map.len() as u32;
        Coloring {
            colors,
            num_colors: k,
        }
    }

    /// True iff no undirected edge of `g` is monochromatic.
    pub fn is_proper(&self, g: &ConflictGraph) -> bool {
        self.colors.len() == g.num_nodes()
            && g.edges()
                .iter()
                .all(|&(u, v)| self.colors[u] != self.colors[v])
    }
}

/// A b-fold coloring: every node gets a sorted set of `b` distinct colors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FractionalColoring {
    sets: Vec<Vec<u32>>,
    num_colors: u32,
}

impl FractionalColoring {
    pub fn new(sets: Vec<Vec<u32>>, num_colors: u32) -> Result<Self> {
        let b = sets.first().map_or(0, Vec::len);
        for (v, set) in sets.iter().enumerate() {
            if set.len() != b {
                return Err(Error::InvalidColoring(format!(
                    "node {v} has {} colors, expected {b}",
                    set.len()
                )));
            }
            if set.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidColoring(format!(
                    "color set of node {v} is not sorted and distinct"
                )));
            }
            if set.iter().any(|&c| c == 0 || c > num_colors) {
                return Err(Error::InvalidColoring(format!(
                    "node {v} uses a color outside 1..={num_colors}"
                )));
            }
        }
        Ok(Self { sets, num_colors })
    }

    /// Replicates a scalar coloring b times: color `c` becomes
    /// `{(c-1)b+1, …, cb}`.
    pub fn replicate(c: &Coloring, b: usize) -> Self {
        let b32 = b as u32;
        let sets = c
            .colors()
            .iter()
            .map(|&col| ((col - 1) * b32 + 1..=col * b32).collect())
            .collect();
        Self {
            sets,
            num_colors: c.num_colors() * b32,
        }
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn b(&self) -> usize {
        self.sets.first().map_or(0, Vec::len)
    }

    pub fn set(&self, v: usize) -> &[u32] {
        &self.sets[v]
    }

    pub fn sets(&self) -> &[Vec<u32>] {
        &self.sets
    }

    pub fn num_colors(&self) -> u32 {
        self.num_colors
    }
}

fn lowest_free_color(g: &ConflictGraph, colors: &[u32], v: usize, k: u32) -> Option<u32> {
    let mut used = vec![false; k as usize + 1];
    for &u in g.neighbors(v) {
        let c = colors[u];
        if c != 0 && c <= k {
            used[c as usize] = true;
        }
    }
    (1..=k).find(|&c| !used[c as usize])
}

/// Smallest-last vertex order: repeatedly remove a minimum-degree vertex
/// (lowest index on ties); the coloring order is the reverse removal order.
pub fn smallest_last_order(g: &ConflictGraph) -> Vec<usize> {
    let n = g.num_nodes();
    let mut degree: Vec<usize> = (0..n).map(|v| g.neighbors(v).len()).collect();
    let mut removed = vec![false; n];
    let mut removal = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !removed[v])
            .min_by_key(|&v| (degree[v], v))
            .expect("a vertex remains");
        removed[v] = true;
        removal.push(v);
        for &u in g.neighbors(v) {
            if !removed[u] {
                degree[u] -= 1;
            }
        }
    }
    removal.reverse();
    removal
}

/// Tries to free one of the colors `1..=k` at `v` by swapping a two-color
/// Kempe chain. On success the swap is applied and the freed color returned.
fn kempe_interchange(g: &ConflictGraph, colors: &mut [u32], v: usize, k: u32) -> Option<u32> {
    for a in 1..=k {
        for b in 1..=k {
            if a == b {
                continue;
            }
            let a_nbrs: Vec<usize> = g
                .neighbors(v)
                .iter()
                .copied()
                .filter(|&u| colors[u] == a)
                .collect();
            if a_nbrs.is_empty() {
                continue;
            }
            let mut in_chain = vec![false; g.num_nodes()];
            let mut queue: VecDeque<usize> = a_nbrs.iter().copied().collect();
            for &u in &a_nbrs {
                in_chain[u] = true;
            }
            while let Some(u) = queue.pop_front() {
                for &w in g.neighbors(u) {
                    if !in_chain[w] && (colors[w] == a || colors[w] == b) {
                        in_chain[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            let blocked = g
                .neighbors(v)
                .iter()
                .any(|&u| colors[u] == b && in_chain[u]);
            if blocked {
                continue;
            }
            for (u, flag) in in_chain.iter().enumerate() {
                if *flag {
                    colors[u] = if colors[u] == a { b } else { a };
                }
            }
            return Some(a);
        }
    }
    None
}

/// Smallest-last greedy coloring with two-color interchange before opening
/// a new color.
pub fn greedy_sli(g: &ConflictGraph) -> Coloring {
    let n = g.num_nodes();
    let mut colors = vec![0u32; n];
    let mut k = 0u32;
    for v in smallest_last_order(g) {
        let c = match lowest_free_color(g, &colors, v, k) {
            Some(c) => c,
            None => match (k >= 2).then(|| kempe_interchange(g, &mut colors, v, k)).flatten() {
                Some(c) => c,
                None => {
                    k += 1;
                    k
                }
            },
        };
        colors[v] = c;
    }
    Coloring::new(colors, k).expect("greedy colors are in range")
}

/// Sequential greedy coloring in the given vertex order (no interchange).
pub fn greedy_in_order(g: &ConflictGraph, order: &[usize]) -> Coloring {
    let mut colors = vec![0u32; g.num_nodes()];
    for &v in order {
        colors[v] = lowest_free_color(g, &colors, v, g.num_nodes() as u32).unwrap_or(1);
    }
    Coloring::from_colors(colors).expect("greedy colors are in range")
}

/// Default TabuCol tabu tenure.
pub const DEFAULT_TABU_TENURE: usize = 7;

/// TabuCol local search for a conflict-free k-coloring. Returns `None` when
/// no zero-conflict assignment is reached within `max_iters` moves.
pub fn tabucol(
    g: &ConflictGraph,
    k: usize,
    max_iters: usize,
    tenure: usize,
    seed: u64,
) -> Option<Coloring> {
    let n = g.num_nodes();
    if n == 0 {
        return Some(Coloring::new(Vec::new(), k as u32).expect("empty coloring"));
    }
    if k == 0 {
        return None;
    }
    let mut rng = rng_from_seed(seed);
    let mut col: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    // gamma[v*k + c] = number of neighbors of v colored c
    let mut gamma = vec![0usize; n * k];
    for v in 0..n {
        for &u in g.neighbors(v) {
            gamma[v * k + col[u]] += 1;
        }
    }
    let mut conflicts: usize = (0..n).map(|v| gamma[v * k + col[v]]).sum::<usize>() / 2;
    let mut best = conflicts;
    let mut tabu_until = vec![0usize; n * k];

    let mut iter = 0;
    while conflicts > 0 && iter < max_iters {
        let mut best_move: Option<(usize, usize)> = None;
        let mut best_delta = i64::MAX;
        let mut ties = 0u32;
        for v in 0..n {
            let cur = col[v];
            if gamma[v * k + cur] == 0 {
                continue;
            }
            for c in 0..k {
                if c == cur {
                    continue;
                }
                let delta = gamma[v * k + c] as i64 - gamma[v * k + cur] as i64;
                let is_tabu = tabu_until[v * k + c] > iter;
                let aspirates = (conflicts as i64 + delta) < best as i64;
                if is_tabu && !aspirates {
                    continue;
                }
                if delta < best_delta {
                    best_delta = delta;
                    best_move = Some((v, c));
                    ties = 1;
                } else if delta == best_delta {
                    ties += 1;
                    if rng.gen_range(0..ties) == 0 {
                        best_move = Some((v, c));
                    }
                }
            }
        }
        let (v, c) = match best_move {
            Some(m) => m,
            None => {
                // Every move is tabu: take a random recoloring of a conflicting vertex.
                let conflicting: Vec<usize> =
                    (0..n).filter(|&v| gamma[v * k + col[v]] > 0).collect();
                if k == 1 {
                    break;
                }
                let v = conflicting[rng.gen_range(0..conflicting.len())];
                let mut c = rng.gen_range(0..k - 1);
                if c >= col[v] {
                    c += 1;
                }
                (v, c)
            }
        };
        let old = col[v];
        conflicts = (conflicts as i64 + gamma[v * k + c] as i64 - gamma[v * k + old] as i64) as usize;
        for &u in g.neighbors(v) {
            gamma[u * k + old] -= 1;
            gamma[u * k + c] += 1;
        }
        col[v] = c;
        tabu_until[v * k + old] = iter + tenure;
        best = best.min(conflicts);
        iter += 1;
    }
    (conflicts == 0).then(|| {
        Coloring::new(col.into_iter().map(|c| c as u32 + 1).collect(), k as u32)
            .expect("tabu colors are in range")
    })
}

/// Outcome of [`exact_chromatic`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChromaticResult {
    /// Proven lower bound on χ.
    pub lower: u32,
    /// Number of colors of `witness`; equals χ when `exact`.
    pub upper: u32,
    pub witness: Coloring,
    /// False when the expansion budget ran out before closing the interval.
    pub exact: bool,
    pub expansions: u64,
}

impl ChromaticResult {
    pub fn chi(&self) -> Option<u32> {
        self.exact.then_some(self.upper)
    }
}

fn greedy_clique(g: &ConflictGraph) -> Vec<usize> {
    let n = g.num_nodes();
    let mut best = Vec::new();
    for seed in 0..n {
        let mut clique = vec![seed];
        let mut cand: Vec<usize> = g.neighbors(seed).to_vec();
        while !cand.is_empty() {
            let &v = cand
                .iter()
                .max_by_key(|&&v| {
                    let deg = cand.iter().filter(|&&u| g.neighbors(v).binary_search(&u).is_ok()).count();
                    (deg, std::cmp::Reverse(v))
                })
                .expect("nonempty");
            clique.push(v);
            cand.retain(|&u| u != v && g.neighbors(v).binary_search(&u).is_ok());
        }
        if clique.len() > best.len() {
            best = clique;
        }
    }
    best
}

fn dsatur_greedy(g: &ConflictGraph) -> Coloring {
    let n = g.num_nodes();
    let mut colors = vec![0u32; n];
    let mut sat: Vec<std::collections::BTreeSet<u32>> = vec![Default::default(); n];
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| colors[v] == 0)
            .max_by_key(|&v| (sat[v].len(), g.neighbors(v).len(), std::cmp::Reverse(v)))
            .expect("uncolored vertex");
        let c = (1..).find(|c| !sat[v].contains(c)).expect("free color");
        colors[v] = c;
        for &u in g.neighbors(v) {
            sat[u].insert(c);
        }
    }
    Coloring::from_colors(colors).expect("dsatur colors are in range")
}

struct BranchAndBound<'a> {
    g: &'a ConflictGraph,
    colors: Vec<u32>,
    // nbr_count[v * stride + c]: neighbors of v currently colored c
    nbr_count: Vec<u32>,
    saturation: Vec<u32>,
    stride: usize,
    best: u32,
    best_colors: Vec<u32>,
    lower: u32,
    expansions: u64,
    budget: u64,
    aborted: bool,
}

impl BranchAndBound<'_> {
    fn assign(&mut self, v: usize, c: u32) {
        self.colors[v] = c;
        for &u in self.g.neighbors(v) {
            let slot = &mut self.nbr_count[u * self.stride + c as usize];
            if *slot == 0 {
                self.saturation[u] += 1;
            }
            *slot += 1;
        }
    }

    fn unassign(&mut self, v: usize) {
        let c = self.colors[v];
        self.colors[v] = 0;
        for &u in self.g.neighbors(v) {
            let slot = &mut self.nbr_count[u * self.stride + c as usize];
            *slot -= 1;
            if *slot == 0 {
                self.saturation[u] -= 1;
            }
        }
    }

    fn search(&mut self, colored: usize, max_used: u32) {
        if self.aborted || self.best == self.lower {
            return;
        }
        self.expansions += 1;
        if self.expansions > self.budget {
            self.aborted = true;
            return;
        }
        let n = self.g.num_nodes();
        if colored == n {
            if max_used < self.best {
                self.best = max_used;
                self.best_colors = self.colors.clone();
            }
            return;
        }
        let mut pick = usize::MAX;
        let mut key = (0u32, 0usize);
        for v in 0..n {
            if self.colors[v] != 0 {
                continue;
            }
            let unc_deg = self.g.neighbors(v).iter().filter(|&&u| self.colors[u] == 0).count();
            let k = (self.saturation[v], unc_deg);
            if pick == usize::MAX || k > key {
                pick = v;
                key = k;
            }
        }
        let v = pick;
        let limit = (max_used + 1).min(self.best - 1);
        for c in 1..=limit {
            if self.nbr_count[v * self.stride + c as usize] != 0 {
                continue;
            }
            self.assign(v, c);
            self.search(colored + 1, max_used.max(c));
            self.unassign(v);
            if self.aborted || self.best == self.lower {
                return;
            }
        }
    }
}

/// Exact chromatic number by DSATUR branch-and-bound, with a greedy clique
/// lower bound and the better of DSATUR/SLI as the initial upper bound.
/// `budget` caps the number of search-node expansions; when exhausted the
/// result is an interval (`exact == false`).
pub fn exact_chromatic(g: &ConflictGraph, budget: u64) -> ChromaticResult {
    let n = g.num_nodes();
    if n == 0 {
        return ChromaticResult {
            lower: 0,
            upper: 0,
            witness: Coloring::new(Vec::new(), 0).expect("empty coloring"),
            exact: true,
            expansions: 0,
        };
    }
    let lower = greedy_clique(g).len() as u32;
    let ds = dsatur_greedy(g);
    let sli = greedy_sli(g);
    let start = if sli.num_colors() < ds.num_colors() { sli } else { ds };
    if start.num_colors() == lower {
        return ChromaticResult {
            lower,
            upper: lower,
            witness: start,
            exact: true,
            expansions: 0,
        };
    }
    let stride = start.num_colors() as usize + 1;
    let mut bb = BranchAndBound {
        g,
        colors: vec![0; n],
        nbr_count: vec![0; n * stride],
        saturation: vec![0; n],
        stride,
        best: start.num_colors(),
        best_colors: start.colors().to_vec(),
        lower,
        expansions: 0,
        budget,
        aborted: false,
    };
    bb.search(0, 0);
    let upper = bb.best;
    let witness = Coloring::new(bb.best_colors, upper).expect("witness colors are in range");
    ChromaticResult {
        lower: if bb.aborted { lower } else { upper },
        upper,
        witness,
        exact: !bb.aborted,
        expansions: bb.expansions,
    }
}
