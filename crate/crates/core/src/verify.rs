//! Certification of interference-alignment schemes.
//!
//! Every scheme is checked from scratch: coloring validity, the local and
//! fractional-local conditions, per-node rank reduction, receiver
//! decodability, and the exact symmetric DoF.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use num_rational::Ratio;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::coloring::{Coloring, FractionalColoring};
use crate::error::{Error, Result};
use crate::graph::{build_conflict_graph, ConflictGraph, TopologyInstance};
use crate::linalg::{mds_default, rank_exact};
use crate::rng::rng_from_seed;

/// Exact symmetric DoF in lowest terms.
pub type Dof = Ratio<u64>;

/// Per-node beamforming columns drawn from a shared pool of vectors.
///
/// A node with an empty index list is unassigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorAssignment {
    vectors: Vec<Vec<i64>>,
    columns: Vec<Vec<usize>>,
    dim: usize,
}

impl VectorAssignment {
    pub fn new(vectors: Vec<Vec<i64>>, columns: Vec<Vec<usize>>) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch(
                "pool vectors have different lengths".into(),
            ));
        }
        let b = columns.iter().map(Vec::len).max().unwrap_or(0);
        for (i, cols) in columns.iter().enumerate() {
            if !cols.is_empty() && cols.len() != b {
                return Err(Error::DimensionMismatch(format!(
                    "node {i} has {} columns, others have {b}",
                    cols.len()
                )));
            }
            if let Some(&bad) = cols.iter().find(|&&c| c >= vectors.len()) {
                return Err(Error::InvalidParameter(format!(
                    "node {i} refers to vector {bad}, pool has {}",
                    vectors.len()
                )));
            }
        }
        Ok(Self {
            vectors,
            columns,
            dim,
        })
    }

    /// Builds an assignment from explicit per-node columns, pooling
    /// identical vectors.
    pub fn from_node_vectors(per_node: Vec<Vec<Vec<i64>>>) -> Result<Self> {
        let mut pool: Vec<Vec<i64>> = Vec::new();
        let mut index: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
        let columns = per_node
            .into_iter()
            .map(|vs| {
                vs.into_iter()
                    .map(|v| {
                        *index.entry(v.clone()).or_insert_with(|| {
                            pool.push(v);
                            pool.len() - 1
                        })
                    })
                    .collect()
            })
            .collect();
        Self::new(pool, columns)
    }

    pub fn num_nodes(&self) -> usize {
        self.columns.len()
    }

    /// Length of every vector (the blocklength).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Columns per assigned node.
    pub fn b(&self) -> usize {
        self.columns.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_total(&self) -> bool {
        self.columns.iter().all(|c| !c.is_empty())
    }

    pub fn vectors(&self) -> &[Vec<i64>] {
        &self.vectors
    }

    pub fn indices(&self, node: usize) -> &[usize] {
        &self.columns[node]
    }

    pub fn node_vectors(&self, node: usize) -> impl Iterator<Item = &[i64]> {
        self.columns[node].iter().map(|&c| self.vectors[c].as_slice())
    }

    /// Number of distinct pool vectors in use.
    pub fn distinct_used(&self) -> usize {
        self.columns.iter().flatten().collect::<BTreeSet<_>>().len()
    }

    /// Applies the integer linear map `proj` (rows of length `dim`) to every
    /// pool vector.
    pub fn project(&self, proj: &[Vec<i64>]) -> Result<Self> {
        if proj.iter().any(|row| row.len() != self.dim) {
            return Err(Error::DimensionMismatch("projection width".into()));
        }
        let vectors = self
            .vectors
            .iter()
            .map(|v| {
                proj.iter()
                    .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
                    .collect()
            })
            .collect();
        Self::new(vectors, self.columns.clone())
    }
}

/// True iff no undirected edge of `g` joins two nodes of the same color.
pub fn check_coloring(g: &ConflictGraph, c: &Coloring) -> bool {
    c.len() == g.num_nodes()
        && (0..g.num_nodes()).all(|u| g.out_neighbors(u).iter().all(|&v| c.color(u) != c.color(v)))
}

/// Number of distinct colors in each closed in-neighborhood.
pub fn local_color_counts(g: &ConflictGraph, c: &Coloring) -> Vec<usize> {
    (0..g.num_nodes())
        .map(|i| {
            g.closed_in(i)
                .iter()
                .map(|&j| c.color(j))
                .collect::<BTreeSet<_>>()
                .len()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalCheck {
    /// Distinct colors seen in each closed in-neighborhood.
    pub counts: Vec<usize>,
    pub ok: bool,
}

/// Checks the (K, r)-local condition. The base coloring must be proper and
/// use colors in `1..=K`.
pub fn check_local_coloring(g: &ConflictGraph, c: &Coloring, k: u32, r: usize) -> Result<LocalCheck> {
    if !check_coloring(g, c) {
        return Err(Error::InvalidColoring("base coloring is not proper".into()));
    }
    if c.colors().iter().any(|&col| col > k) {
        return Err(Error::InvalidColoring(format!("coloring uses a color above K={k}")));
    }
    let counts = local_color_counts(g, c);
    let ok = counts.iter().all(|&n| n <= r);
    Ok(LocalCheck { counts, ok })
}

/// Size of the color union over each closed in-neighborhood.
pub fn fractional_local_counts(g: &ConflictGraph, fc: &FractionalColoring) -> Vec<usize> {
    (0..g.num_nodes())
        .map(|i| {
            g.closed_in(i)
                .iter()
                .flat_map(|&j| fc.set(j).iter().copied())
                .collect::<BTreeSet<_>>()
                .len()
        })
        .collect()
}

/// Checks the (K, r, b)-fractional-local condition: adjacent sets are
/// disjoint and each closed in-neighborhood uses at most `r` colors.
pub fn check_fractional_local_coloring(
    g: &ConflictGraph,
    fc: &FractionalColoring,
    k: u32,
    r: usize,
    b: usize,
) -> Result<bool> {
    if fc.len() != g.num_nodes() {
        return Err(Error::InvalidColoring(format!(
            "{} color sets for {} nodes",
            fc.len(),
            g.num_nodes()
        )));
    }
    if let Some(v) = (0..fc.len()).find(|&v| fc.set(v).len() != b) {
        return Err(Error::InvalidColoring(format!(
            "node {v} has {} colors, expected {b}",
            fc.set(v).len()
        )));
    }
    if fc.sets().iter().flatten().any(|&c| c > k) {
        return Err(Error::InvalidColoring(format!("color above K={k}")));
    }
    let disjoint = g.edges().iter().all(|&(u, v)| {
        let su = fc.set(u);
        fc.set(v).iter().all(|c| su.binary_search(c).is_err())
    });
    Ok(disjoint && fractional_local_counts(g, fc).iter().all(|&n| n <= r))
}

/// Ranks of the stacked columns over the open and closed in-neighborhood of
/// `i`, as `(r_open, r_closed)`.
pub fn neighborhood_ranks(g: &ConflictGraph, va: &VectorAssignment, i: usize) -> Result<(usize, usize)> {
    if va.num_nodes() != g.num_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "assignment covers {} nodes, graph has {}",
            va.num_nodes(),
            g.num_nodes()
        )));
    }
    if i >= g.num_nodes() {
        return Err(Error::NodeOutOfRange {
            node: i,
            num_nodes: g.num_nodes(),
        });
    }
    let closed = g.closed_in(i);
    if let Some(&j) = closed.iter().find(|&&j| va.indices(j).is_empty()) {
        return Err(Error::InvalidParameter(format!(
            "node {j} in the neighborhood of {i} is unassigned"
        )));
    }
    let open: Vec<&[i64]> = closed
        .iter()
        .filter(|&&j| j != i)
        .flat_map(|&j| va.node_vectors(j))
        .collect();
    let mut all = open.clone();
    all.extend(va.node_vectors(i));
    Ok((rank_exact(&open)?, rank_exact(&all)?))
}

/// True iff every node satisfies `r_closed - r_open = b` and
/// `max r_closed <= r`.
pub fn check_matrix_rank_reduction(g: &ConflictGraph, va: &VectorAssignment, r: usize, b: usize) -> bool {
    if va.num_nodes() != g.num_nodes() || (0..va.num_nodes()).any(|i| va.indices(i).len() != b) {
        return false;
    }
    (0..g.num_nodes()).all(|i| match neighborhood_ranks(g, va, i) {
        Ok((open, closed)) => closed - open == b && closed <= r,
        Err(_) => false,
    })
}

/// Largest closed-neighborhood rank, the minimal blocklength for `va`.
pub fn max_closed_rank(g: &ConflictGraph, va: &VectorAssignment) -> Result<usize> {
    (0..g.num_nodes()).try_fold(0, |m, i| Ok(m.max(neighborhood_ranks(g, va, i)?.1)))
}

/// Decodability at every receiver of `topo`. `beamformers[k]` holds the
/// columns of the k-th demand (sorted demand order). Interference at a
/// destination stacks the columns of every other demand whose source has a
/// link to it.
pub fn check_decodability(topo: &TopologyInstance, beamformers: &[Vec<Vec<i64>>]) -> Result<bool> {
    let demands = topo.demands();
    if beamformers.len() != demands.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} beamformers for {} demands",
            beamformers.len(),
            demands.len()
        )));
    }
    let x = beamformers.iter().flatten().map(Vec::len).next().unwrap_or(0);
    if beamformers.iter().flatten().any(|v| v.len() != x) {
        return Err(Error::DimensionMismatch("beamformers have different row counts".into()));
    }
    for (a, &(_, dest)) in demands.iter().enumerate() {
        let interference: Vec<&Vec<i64>> = demands
            .iter()
            .enumerate()
            .filter(|&(o, &(src, _))| o != a && topo.has_link(src, dest))
            .flat_map(|(o, _)| beamformers[o].iter())
            .collect();
        let mut stacked = interference.clone();
        stacked.extend(beamformers[a].iter());
        if rank_exact(&stacked)? - rank_exact(&interference)? != beamformers[a].len() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Graph-level decodability: `r_closed - r_open` equals the node's column
/// count at every node.
pub fn check_decodability_graph(g: &ConflictGraph, va: &VectorAssignment) -> Result<bool> {
    for i in 0..g.num_nodes() {
        let (open, closed) = neighborhood_ranks(g, va, i)?;
        if closed - open != va.indices(i).len() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "OSIA")]
    Osia,
    #[serde(rename = "OVIA")]
    Ovia,
    #[serde(rename = "SSIA")]
    Ssia,
    #[serde(rename = "SVIA")]
    Svia,
    #[serde(rename = "TDMA")]
    Tdma,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Osia => "OSIA",
            Mode::Ovia => "OVIA",
            Mode::Ssia => "SSIA",
            Mode::Svia => "SVIA",
            Mode::Tdma => "TDMA",
        })
    }
}

/// A realized IA scheme together with the graph it was built for.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheme {
    pub mode: Mode,
    /// Number of colors (coloring modes) or distinct vectors (subspace modes).
    pub k: usize,
    pub r: usize,
    pub b: usize,
    /// Blocklength: the length of every beamforming vector.
    pub x: usize,
    /// Color sets for the coloring-based modes.
    pub colors: Option<Vec<Vec<u32>>>,
    pub assignment: VectorAssignment,
    pub d_sym: Dof,
    certified: bool,
    pub graph: ConflictGraph,
    pub topology: Option<TopologyInstance>,
}

/// Outcome of [`verify_scheme`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub ok: bool,
    pub failures: Vec<String>,
    pub d_sym: Option<Dof>,
}

fn dof_formula(mode: Mode, k: usize, r: usize, b: usize, x: usize) -> Option<Dof> {
    let (num, den) = match mode {
        Mode::Osia => (1, r),
        Mode::Ovia => (b, r),
        Mode::Ssia | Mode::Svia => (b, x),
        Mode::Tdma => (1, k),
    };
    (den > 0).then(|| Ratio::new(num as u64, den as u64))
}

/// Re-derives every condition a scheme of its mode must satisfy.
pub fn verify_scheme(s: &Scheme) -> Certificate {
    let mut failures = Vec::new();
    let g = &s.graph;
    let va = &s.assignment;
    let n = g.num_nodes();
    if n == 0 {
        failures.push("graph has no nodes".into());
    }
    if va.num_nodes() != n {
        failures.push(format!("assignment covers {} of {n} nodes", va.num_nodes()));
    } else if !va.is_total() {
        failures.push("assignment is not total".into());
    } else if (0..n).any(|i| va.indices(i).len() != s.b) {
        failures.push(format!("some node does not have exactly b={} columns", s.b));
    }
    if va.dim() != s.x {
        failures.push(format!("vectors have length {}, blocklength is {}", va.dim(), s.x));
    }
    match s.mode {
        Mode::Osia | Mode::Tdma | Mode::Ovia => match &s.colors {
            None => failures.push("coloring mode without color sets".into()),
            Some(sets) => {
                let k = s.k as u32;
                match FractionalColoring::new(sets.clone(), k) {
                    Err(e) => failures.push(e.to_string()),
                    Ok(fc) if fc.len() == n => {
                        if s.mode != Mode::Ovia && s.b != 1 {
                            failures.push("scalar mode with b != 1".into());
                        }
                        let r = if s.mode == Mode::Tdma { s.k } else { s.r };
                        match check_fractional_local_coloring(g, &fc, k, r, s.b) {
                            Ok(true) => {}
                            Ok(false) => failures.push(format!("not a ({},{r},{})-local coloring", s.k, s.b)),
                            Err(e) => failures.push(e.to_string()),
                        }
                        let expect_x = if s.mode == Mode::Tdma { s.k } else { s.r };
                        if s.x != expect_x {
                            failures.push(format!("blocklength {} differs from {expect_x}", s.x));
                        }
                    }
                    Ok(_) => failures.push("color sets do not match node count".into()),
                }
            }
        },
        Mode::Ssia | Mode::Svia => {}
    }
    if failures.is_empty() {
        let reduces = check_matrix_rank_reduction(g, va, s.x, s.b);
        if !reduces {
            failures.push("matrix rank reduction fails".into());
        }
        match max_closed_rank(g, va) {
            Ok(m) if matches!(s.mode, Mode::Ssia | Mode::Svia) && m != s.r => {
                failures.push(format!("r={} but largest closed rank is {m}", s.r))
            }
            Ok(_) => {}
            Err(e) => failures.push(e.to_string()),
        }
        if let Some(topo) = &s.topology {
            if build_conflict_graph(topo).edges() != g.edges() {
                failures.push("topology does not induce the stored graph".into());
            } else {
                let beams: Vec<Vec<Vec<i64>>> = (0..n)
                    .map(|i| va.node_vectors(i).map(<[i64]>::to_vec).collect())
                    .collect();
                match check_decodability(topo, &beams) {
                    Ok(true) => {}
                    Ok(false) => failures.push("a receiver cannot decode".into()),
                    Err(e) => failures.push(e.to_string()),
                }
            }
        }
    }
    let d_sym = dof_formula(s.mode, s.k, s.r, s.b, s.x);
    if failures.is_empty() {
        if d_sym != Some(s.d_sym) {
            failures.push(format!("stored d_sym {} does not match the formula", s.d_sym));
        }
        if d_sym != Some(Ratio::new(s.b as u64, s.x as u64)) {
            failures.push("d_sym differs from b/x".into());
        }
    }
    Certificate {
        ok: failures.is_empty(),
        failures,
        d_sym,
    }
}

/// Exact symmetric DoF of a certified scheme.
pub fn dof(s: &Scheme) -> Result<Dof> {
    if !s.certified {
        return Err(Error::Uncertified);
    }
    dof_formula(s.mode, s.k, s.r, s.b, s.x).ok_or(Error::Uncertified)
}

impl Scheme {
    /// Assembles a scheme and certifies it; errors if any check fails.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        mode: Mode,
        k: usize,
        r: usize,
        b: usize,
        colors: Option<Vec<Vec<u32>>>,
        assignment: VectorAssignment,
        graph: ConflictGraph,
    ) -> Result<Scheme> {
        let x = assignment.dim();
        let d_sym = dof_formula(mode, k, r, b, x)
            .ok_or_else(|| Error::InvalidParameter("zero blocklength".into()))?;
        let mut s = Scheme {
            mode,
            k,
            r,
            b,
            x,
            colors,
            assignment,
            d_sym,
            certified: false,
            graph,
            topology: None,
        };
        s.certify()?;
        Ok(s)
    }

    /// Attaches the topology the graph came from and re-certifies, adding
    /// the receiver-level decodability check.
    pub fn with_topology(mut self, topo: TopologyInstance) -> Result<Scheme> {
        self.topology = Some(topo);
        self.certified = false;
        self.certify()?;
        Ok(self)
    }

    pub fn certify(&mut self) -> Result<()> {
        let cert = verify_scheme(self);
        self.certified = cert.ok;
        if cert.ok {
            Ok(())
        } else {
            log::debug!("scheme rejected: {:?}", cert.failures);
            Err(Error::Uncertified)
        }
    }

    pub fn is_certified(&self) -> bool {
        self.certified
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SchemeFile::from(self)).expect("scheme serializes")
    }

    /// Parses a scheme; the certified flag is taken from the file and must be
    /// re-established with [`verify_scheme`] before being trusted.
    pub fn from_json(text: &str) -> Result<Scheme> {
        let f: SchemeFile = serde_json::from_str(text)?;
        f.into_scheme()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Scheme> {
        Scheme::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct SchemeFile {
    mode: Mode,
    #[serde(rename = "K")]
    k: usize,
    r: usize,
    b: usize,
    x: usize,
    assignment: BTreeMap<usize, Vec<usize>>,
    vectors: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    colors: Option<BTreeMap<usize, Vec<u32>>>,
    d_sym: String,
    certified: bool,
    graph: ConflictGraph,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    topology: Option<TopologyInstance>,
}

impl From<&Scheme> for SchemeFile {
    fn from(s: &Scheme) -> Self {
        SchemeFile {
            mode: s.mode,
            k: s.k,
            r: s.r,
            b: s.b,
            x: s.x,
            assignment: (0..s.assignment.num_nodes())
                .map(|i| (i, s.assignment.indices(i).to_vec()))
                .collect(),
            vectors: s.assignment.vectors().to_vec(),
            colors: s
                .colors
                .as_ref()
                .map(|c| c.iter().cloned().enumerate().collect()),
            d_sym: format!("{}/{}", s.d_sym.numer(), s.d_sym.denom()),
            certified: s.certified,
            graph: s.graph.clone(),
            topology: s.topology.clone(),
        }
    }
}

fn dense<T>(map: BTreeMap<usize, T>, n: usize, what: &str) -> Result<Vec<T>> {
    if map.len() != n || map.keys().enumerate().any(|(i, &k)| i != k) {
        return Err(Error::InvalidParameter(format!("{what} must list nodes 0..{n}")));
    }
    Ok(map.into_values().collect())
}

impl SchemeFile {
    fn into_scheme(self) -> Result<Scheme> {
        let n = self.graph.num_nodes();
        let (num, den) = self
            .d_sym
            .split_once('/')
            .and_then(|(a, b)| Some((a.trim().parse::<u64>().ok()?, b.trim().parse::<u64>().ok()?)))
            .filter(|&(_, d)| d > 0)
            .ok_or_else(|| Error::InvalidParameter(format!("bad d_sym '{}'", self.d_sym)))?;
        let colors = self.colors.map(|c| dense(c, n, "colors")).transpose()?;
        let assignment = VectorAssignment::new(self.vectors, dense(self.assignment, n, "assignment")?)?;
        Ok(Scheme {
            mode: self.mode,
            k: self.k,
            r: self.r,
            b: self.b,
            x: self.x,
            colors,
            assignment,
            d_sym: Ratio::new(num, den),
            certified: self.certified,
            graph: self.graph,
            topology: self.topology,
        })
    }
}

/// One-to-one scalar IA: each color becomes a column of an `r x K` MDS
/// generator, with `r` the largest number of colors in any closed
/// in-neighborhood.
pub fn realize_osia(g: &ConflictGraph, c: &Coloring) -> Result<Scheme> {
    if g.is_empty() {
        return Err(Error::InvalidGraph("no messages to schedule".into()));
    }
    let k = c.num_colors() as usize;
    let r = local_color_counts(g, c).into_iter().max().unwrap_or(1);
    let family = mds_default(k, r)?;
    let cols = c.colors().iter().map(|&col| vec![col as usize - 1]).collect();
    let va = VectorAssignment::new(family.vectors, cols)?;
    let sets = c.colors().iter().map(|&col| vec![col]).collect();
    Scheme::build(Mode::Osia, k, r, 1, Some(sets), va, g.clone())
}

/// TDMA: one time slot per color.
pub fn realize_tdma(g: &ConflictGraph, c: &Coloring) -> Result<Scheme> {
    if g.is_empty() {
        return Err(Error::InvalidGraph("no messages to schedule".into()));
    }
    let k = c.num_colors() as usize;
    let units = (0..k)
        .map(|i| (0..k).map(|j| i64::from(i == j)).collect())
        .collect();
    let cols = c.colors().iter().map(|&col| vec![col as usize - 1]).collect();
    let va = VectorAssignment::new(units, cols)?;
    let sets = c.colors().iter().map(|&col| vec![col]).collect();
    Scheme::build(Mode::Tdma, k, k, 1, Some(sets), va, g.clone())
}

/// One-to-one vector IA from a b-fold coloring.
pub fn realize_ovia(g: &ConflictGraph, fc: &FractionalColoring) -> Result<Scheme> {
    if g.is_empty() {
        return Err(Error::InvalidGraph("no messages to schedule".into()));
    }
    let k = fc.num_colors() as usize;
    let r = fractional_local_counts(g, fc).into_iter().max().unwrap_or(1);
    let family = mds_default(k, r)?;
    let cols = fc
        .sets()
        .iter()
        .map(|s| s.iter().map(|&c| c as usize - 1).collect())
        .collect();
    let va = VectorAssignment::new(family.vectors, cols)?;
    Scheme::build(Mode::Ovia, k, r, fc.b(), Some(fc.sets().to_vec()), va, g.clone())
}

/// Number of random projections tried when shrinking subspace vectors.
pub const PROJECTION_ATTEMPTS: usize = 64;

/// Shrinks `va` to blocklength `max r_closed` by a seeded random integer
/// projection, keeping the original if no attempt preserves decodability.
pub fn compress_blocklength(g: &ConflictGraph, va: &VectorAssignment, seed: u64) -> Result<VectorAssignment> {
    let target = max_closed_rank(g, va)?;
    if target >= va.dim() || target == 0 {
        return Ok(va.clone());
    }
    let b = va.b();
    let mut rng = rng_from_seed(seed);
    for _ in 0..PROJECTION_ATTEMPTS {
        let proj: Vec<Vec<i64>> = (0..target)
            .map(|_| (0..va.dim()).map(|_| rng.gen_range(-3..=3)).collect())
            .collect();
        let candidate = va.project(&proj)?;
        if check_matrix_rank_reduction(g, &candidate, target, b) {
            return Ok(candidate);
        }
    }
    Ok(va.clone())
}

/// Subspace scalar/vector IA from an explicit assignment satisfying the
/// rank-reduction condition. The blocklength is compressed to the largest
/// closed rank when a projection is found.
pub fn realize_subspace(g: &ConflictGraph, va: &VectorAssignment, mode: Mode, seed: u64) -> Result<Scheme> {
    if !matches!(mode, Mode::Ssia | Mode::Svia) {
        return Err(Error::InvalidParameter(format!("{mode} is not a subspace mode")));
    }
    if g.is_empty() {
        return Err(Error::InvalidGraph("no messages to schedule".into()));
    }
    let va = compress_blocklength(g, va, seed)?;
    let r = max_closed_rank(g, &va)?;
    let k = va.distinct_used();
    let b = va.b();
    Scheme::build(mode, k, r, b, None, va, g.clone())
}

/// Subspace vector IA: merges a one-column-per-copy assignment of the
/// b-split graph into `b` columns per original node.
pub fn realize_svia(g: &ConflictGraph, b: usize, split: &VectorAssignment, seed: u64) -> Result<Scheme> {
    if split.num_nodes() != g.num_nodes() * b || b == 0 {
        return Err(Error::DimensionMismatch(format!(
            "split assignment has {} nodes, expected {}",
            split.num_nodes(),
            g.num_nodes() * b
        )));
    }
    let cols = (0..g.num_nodes())
        .map(|v| (0..b).flat_map(|c| split.indices(v * b + c).iter().copied()).collect())
        .collect();
    let merged = VectorAssignment::new(split.vectors().to_vec(), cols)?;
    realize_subspace(g, &merged, Mode::Svia, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::node_splitting_graph;
    use crate::testutil::random_digraph;
    use proptest::prelude::*;

    fn triangle() -> ConflictGraph {
        ConflictGraph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    #[test]
    fn coloring_check_triangle() {
        let g = triangle();
        assert!(check_coloring(&g, &Coloring::new(vec![1, 2, 3], 3).unwrap()));
        assert!(!check_coloring(&g, &Coloring::new(vec![1, 1, 2], 3).unwrap()));
    }

    #[test]
    fn local_check_triangle_and_k_equals_r() {
        let g = triangle();
        let c = Coloring::new(vec![1, 2, 3], 3).unwrap();
        let lc = check_local_coloring(&g, &c, 3, 2).unwrap();
        assert!(lc.ok);
        assert_eq!(lc.counts, vec![2, 2, 2]);
        assert!(!check_local_coloring(&g, &c, 3, 1).unwrap().ok);
        assert!(check_local_coloring(&g, &Coloring::new(vec![1, 1, 2], 2).unwrap(), 2, 2).is_err());
        assert!(check_local_coloring(&g, &c, 2, 3).is_err());
    }

    #[test]
    fn local_check_brute_force_triangle() {
        // Over all 27 assignments, exactly the 6 proper ones are (3,2)-local.
        let g = triangle();
        let mut ok = 0;
        for code in 0..27u32 {
            let cols = vec![code % 3 + 1, code / 3 % 3 + 1, code / 9 + 1];
            let c = Coloring::new(cols, 3).unwrap();
            if let Ok(lc) = check_local_coloring(&g, &c, 3, 2) {
                ok += lc.ok as u32;
            }
        }
        assert_eq!(ok, 6);
    }

    #[test]
    fn fractional_b1_matches_scalar() {
        let g = random_digraph(7, 0.4, 5);
        let c = crate::coloring::greedy_sli(&g);
        let fc = FractionalColoring::replicate(&c, 1);
        for r in 1..=c.num_colors() as usize {
            assert_eq!(
                check_fractional_local_coloring(&g, &fc, c.num_colors(), r, 1).unwrap(),
                check_local_coloring(&g, &c, c.num_colors(), r).unwrap().ok
            );
        }
        assert!(check_fractional_local_coloring(&g, &fc, c.num_colors(), 7, 2).is_err());
    }

    #[test]
    fn isolated_node_ranks() {
        let g = ConflictGraph::from_edges(2, []).unwrap();
        let va = VectorAssignment::new(vec![vec![1, 0]], vec![vec![0], vec![0]]).unwrap();
        assert_eq!(neighborhood_ranks(&g, &va, 0).unwrap(), (0, 1));
        let partial = VectorAssignment::new(vec![vec![1]], vec![vec![0], vec![]]).unwrap();
        let h = ConflictGraph::from_edges(2, [(1, 0)]).unwrap();
        assert!(neighborhood_ranks(&h, &partial, 0).is_err());
    }

    #[test]
    fn vector_inside_interference_span_fails() {
        let g = ConflictGraph::from_edges(3, [(0, 2), (1, 2)]).unwrap();
        let va = VectorAssignment::from_node_vectors(vec![
            vec![vec![1, 0]],
            vec![vec![0, 1]],
            vec![vec![1, 1]],
        ])
        .unwrap();
        assert!(!check_matrix_rank_reduction(&g, &va, 2, 1));
    }

    #[test]
    fn shared_vector_between_mutual_interferers_is_not_decodable() {
        let topo = TopologyInstance::new(2, 2, [(0, 0), (0, 1), (1, 0), (1, 1)], [(0, 0), (1, 1)]).unwrap();
        assert!(!check_decodability(&topo, &[vec![vec![1, 0]], vec![vec![1, 0]]]).unwrap());
        assert!(check_decodability(&topo, &[vec![vec![1, 0]], vec![vec![0, 1]]]).unwrap());
        assert!(check_decodability(&topo, &[vec![vec![1, 0]], vec![vec![1]]]).is_err());
    }

    #[test]
    fn tdma_dof_is_one_over_colors() {
        let g = ConflictGraph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 3)]).unwrap();
        let s = realize_tdma(&g, &Coloring::new(vec![1, 2, 3, 4], 4).unwrap()).unwrap();
        assert_eq!(dof(&s).unwrap(), Ratio::new(1, 4));
    }

    #[test]
    fn uncertified_scheme_has_no_dof() {
        let g = triangle();
        let s = realize_osia(&g, &Coloring::new(vec![1, 2, 3], 3).unwrap()).unwrap();
        let mut bad = s.clone();
        bad.certified = false;
        assert!(matches!(dof(&bad), Err(Error::Uncertified)));
        let text = s.to_json();
        let back = Scheme::from_json(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn tampered_scheme_fails_verification() {
        let g = triangle();
        let s = realize_osia(&g, &Coloring::new(vec![1, 2, 3], 3).unwrap()).unwrap();
        let mut t = s.clone();
        t.d_sym = Ratio::new(1, 1);
        assert!(!verify_scheme(&t).ok);
        let mut u = s.clone();
        u.colors = Some(vec![vec![1], vec![1], vec![2]]);
        assert!(!verify_scheme(&u).ok);
    }

    #[test]
    fn blocklength_minus_one_is_not_enough() {
        // With x = max r_closed fixed, no projection to x-1 rows can keep
        // every receiver decodable.
        for seed in 0..20 {
            let g = random_digraph(6, 0.4, seed);
            let c = crate::coloring::greedy_sli(&g);
            let s = realize_osia(&g, &c).unwrap();
            if s.x < 2 {
                continue;
            }
            let mut rng = rng_from_seed(seed);
            for _ in 0..20 {
                let proj: Vec<Vec<i64>> = (0..s.x - 1)
                    .map(|_| (0..s.x).map(|_| rng.gen_range(-5..=5)).collect())
                    .collect();
                let p = s.assignment.project(&proj).unwrap();
                assert!(!check_matrix_rank_reduction(&g, &p, s.x - 1, 1));
            }
        }
    }

    proptest! {
        #[test]
        fn coloring_check_matches_scan(n in 1usize..9, p in 0.0f64..0.8, seed in 0u64..10_000,
                                       cols in proptest::collection::vec(1u32..4, 9)) {
            let g = random_digraph(n, p, seed);
            let c = Coloring::new(cols[..n].to_vec(), 3).unwrap();
            let mut scan = true;
            for u in 0..n {
                for v in 0..n {
                    if g.has_edge(u, v) && cols[u] == cols[v] {
                        scan = false;
                    }
                }
            }
            prop_assert_eq!(check_coloring(&g, &c), scan);
        }

        #[test]
        fn osia_from_any_proper_coloring_certifies(n in 1usize..9, p in 0.0f64..0.8, seed in 0u64..10_000) {
            let g = random_digraph(n, p, seed);
            let c = crate::coloring::greedy_sli(&g);
            let s = realize_osia(&g, &c).unwrap();
            prop_assert!(s.is_certified());
            prop_assert!(check_matrix_rank_reduction(&g, &s.assignment, s.r, 1));
            prop_assert_eq!(dof(&s).unwrap(), Ratio::new(1, s.r as u64));
        }

        #[test]
        fn merged_split_colorings_are_fractional_local(n in 1usize..8, p in 0.0f64..0.7, seed in 0u64..10_000, b in 2usize..4) {
            let g = random_digraph(n, p, seed);
            let split = node_splitting_graph(&g, b).unwrap();
            let c = crate::coloring::greedy_sli(&split);
            let fc = crate::graph::merge_split_coloring(&g, b, &c).unwrap();
            let r = *fractional_local_counts(&g, &fc).iter().max().unwrap();
            prop_assert!(check_fractional_local_coloring(&g, &fc, fc.num_colors(), r, b).unwrap());
            let s = realize_ovia(&g, &fc).unwrap();
            prop_assert_eq!(dof(&s).unwrap(), Ratio::new(b as u64, r as u64));
        }

        #[test]
        fn svia_from_split_osia_certifies(n in 1usize..7, p in 0.0f64..0.7, seed in 0u64..10_000) {
            let g = random_digraph(n, p, seed);
            let split = node_splitting_graph(&g, 2).unwrap();
            let c = crate::coloring::greedy_sli(&split);
            let inner = realize_osia(&split, &c).unwrap();
            let s = realize_svia(&g, 2, &inner.assignment, seed).unwrap();
            prop_assert!(s.is_certified());
            prop_assert!(s.d_sym >= Ratio::new(2, inner.x as u64));
        }
    }
}
