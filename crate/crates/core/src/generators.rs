//! Random instance families and dataset labeling.
//!
//! Bipartite families (ER, PA, HH, wireless) produce a [`TopologyInstance`];
//! GEO and BA produce conflict graphs directly, with both edge directions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coloring::exact_chromatic;
use crate::error::{Error, Result};
use crate::graph::{build_conflict_graph, ConflictGraph, TopologyInstance};
use crate::rng::{derive_seed, rng_from_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Er,
    Pa,
    Hh,
    Geo,
    Ba,
    Wireless,
}

impl Family {
    fn params(self) -> &'static [(&'static str, f64)] {
        match self {
            Family::Er => &[("p", 0.2)],
            Family::Pa => &[("p_new", 0.2), ("max_degree", 7.0)],
            Family::Hh => &[("max_degree", 6.0)],
            Family::Geo => &[("radius", 0.2)],
            Family::Ba => &[("m", 7.0)],
            Family::Wireless => &[
                ("density", f64::NAN),
                ("percentile", f64::NAN),
                ("area_side", 1000.0),
                ("min_distance", 2.0),
                ("max_distance", 65.0),
                ("pathloss_exponent", 4.0),
                ("breakpoint", 72.0),
                ("signal_weight", 0.0),
            ],
        }
    }

    /// True for families drawn as bipartite topologies.
    pub fn is_bipartite(self) -> bool {
        !matches!(self, Family::Geo | Family::Ba)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Er => "er",
            Family::Pa => "pa",
            Family::Hh => "hh",
            Family::Geo => "geo",
            Family::Ba => "ba",
            Family::Wireless => "wireless",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "er" => Family::Er,
            "pa" => Family::Pa,
            "hh" => Family::Hh,
            "geo" => Family::Geo,
            "ba" => Family::Ba,
            "wireless" | "wirelessnet" | "wireless_net" => Family::Wireless,
            other => return Err(Error::InvalidParameter(format!("unknown family '{other}'"))),
        })
    }
}

/// How demanded messages are picked from the link set of a bipartite draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemandRule {
    /// A uniformly random perfect matching of sources to destinations; the
    /// demanded pairs are added to the link set.
    AllUnicast,
    /// Draw `ceil(q * |links|)` candidate links without replacement and take
    /// a random maximal matching among them.
    CandidateFraction,
}

impl FromStr for DemandRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-unicast" => Ok(DemandRule::AllUnicast),
            "candidate-fraction" => Ok(DemandRule::CandidateFraction),
            other => Err(Error::InvalidParameter(format!("unknown demand rule '{other}'"))),
        }
    }
}

/// Full description of one random draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub family: Family,
    /// Sources (or node count for GEO/BA).
    pub num_sources: usize,
    /// Destinations (ignored for GEO/BA).
    pub num_destinations: usize,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Demand fraction for [`DemandRule::CandidateFraction`].
    pub q: f64,
    pub demand_rule: DemandRule,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(family: Family, num_sources: usize, num_destinations: usize, seed: u64) -> Self {
        Self {
            family,
            num_sources,
            num_destinations,
            params: BTreeMap::new(),
            q: 0.2,
            demand_rule: DemandRule::AllUnicast,
            seed,
        }
    }

    pub fn param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn with_demand_rule(mut self, rule: DemandRule, q: f64) -> Self {
        self.demand_rule = rule;
        self.q = q;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn get(&self, name: &str) -> f64 {
        self.params.get(name).copied().unwrap_or_else(|| {
            self.family
                .params()
                .iter()
                .find(|(k, _)| *k == name)
                .map_or(f64::NAN, |p| p.1)
        })
    }

    fn validate(&self) -> Result<()> {
        let known = self.family.params();
        if let Some(k) = self.params.keys().find(|k| !known.iter().any(|(n, _)| n == k)) {
            return Err(Error::InvalidParameter(format!(
                "parameter '{k}' does not apply to family {}",
                self.family
            )));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(Error::InvalidParameter(format!("q={} outside [0,1]", self.q)));
        }
        Ok(())
    }

    pub fn wireless_config(&self) -> Result<WirelessConfig> {
        let density = self.get("density");
        let percentile = self.get("percentile");
        let threshold = match (density.is_nan(), percentile.is_nan()) {
            (false, true) => Threshold::Density(density),
            (true, false) => Threshold::Percentile(percentile),
            _ => {
                return Err(Error::InvalidParameter(
                    "wireless needs exactly one of 'density' or 'percentile'".into(),
                ))
            }
        };
        let cfg = WirelessConfig {
            area_side: self.get("area_side"),
            min_distance: self.get("min_distance"),
            max_distance: self.get("max_distance"),
            pathloss_exponent: self.get("pathloss_exponent"),
            breakpoint: self.get("breakpoint"),
            signal_weight: self.get("signal_weight"),
            threshold,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A generated instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Topology(TopologyInstance),
    Graph(ConflictGraph),
}

impl Instance {
    pub fn conflict_graph(&self) -> ConflictGraph {
        match self {
            Instance::Topology(t) => build_conflict_graph(t),
            Instance::Graph(g) => g.clone(),
        }
    }

    pub fn topology(&self) -> Option<&TopologyInstance> {
        match self {
            Instance::Topology(t) => Some(t),
            Instance::Graph(_) => None,
        }
    }
}

/// Draws one instance; identical specs give identical instances.
pub fn generate(spec: &GenSpec) -> Result<Instance> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let (m, n) = (spec.num_sources, spec.num_destinations);
    let links = match spec.family {
        Family::Er => {
            let p = spec.get("p");
            check_prob("p", p)?;
            let mut links = BTreeSet::new();
            for s in 0..m {
                for d in 0..n {
                    if rng.gen_bool(p) {
                        links.insert((s, d));
                    }
                }
            }
            links
        }
        Family::Pa => pa_links(m, n, spec.get("p_new"), spec.get("max_degree"), &mut rng)?,
        Family::Hh => hh_links(m, n, spec.get("max_degree"), &mut rng)?,
        Family::Geo => return geo_graph(m, spec.get("radius"), &mut rng).map(Instance::Graph),
        Family::Ba => return ba_graph(m, spec.get("m"), &mut rng).map(Instance::Graph),
        Family::Wireless => {
            if m != n {
                return Err(Error::InvalidParameter(
                    "wireless networks have equal numbers of sources and destinations".into(),
                ));
            }
            let cfg = spec.wireless_config()?;
            return generate_wireless(m, &cfg, spec.seed).map(Instance::Topology);
        }
    };
    select_demands(m, n, links, spec.demand_rule, spec.q, &mut rng).map(Instance::Topology)
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name}={p} outside [0,1]")))
    }
}

fn positive_count(name: &str, v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidParameter(format!("{name}={v} must be a positive integer")))
    }
}

fn select_demands(
    m: usize,
    n: usize,
    mut links: BTreeSet<(usize, usize)>,
    rule: DemandRule,
    q: f64,
    rng: &mut Rng,
) -> Result<TopologyInstance> {
    let demands: Vec<(usize, usize)> = match rule {
        DemandRule::AllUnicast => {
            let k = m.min(n);
            let mut srcs: Vec<usize> = (0..m).collect();
            let mut dsts: Vec<usize> = (0..n).collect();
            srcs.shuffle(rng);
            dsts.shuffle(rng);
            let pairs: Vec<_> = srcs.into_iter().zip(dsts).take(k).collect();
            links.extend(pairs.iter().copied());
            pairs
        }
        DemandRule::CandidateFraction => {
            let all: Vec<_> = links.iter().copied().collect();
            let take = (q * all.len() as f64).ceil() as usize;
            let mut candidates: Vec<_> = all.choose_multiple(rng, take.min(all.len())).copied().collect();
            candidates.shuffle(rng);
            let mut used_s = BTreeSet::new();
            let mut used_d = BTreeSet::new();
            candidates
                .into_iter()
                .filter(|&(s, d)| {
                    if used_s.contains(&s) || used_d.contains(&d) {
                        false
                    } else {
                        used_s.insert(s);
                        used_d.insert(d);
                        true
                    }
                })
                .collect()
        }
    };
    TopologyInstance::new(m, n, links, demands)
}

/// Bipartite preferential attachment: every source draws a degree in
/// `1..=max_degree`; each stub goes to an untouched destination with
/// probability `p_new`, otherwise to a destination chosen proportionally to
/// its current degree.
fn pa_links(m: usize, n: usize, p_new: f64, max_degree: f64, rng: &mut Rng) -> Result<BTreeSet<(usize, usize)>> {
    check_prob("p_new", p_new)?;
    let max_degree = positive_count("max_degree", max_degree)?.min(n);
    let mut links = BTreeSet::new();
    if n == 0 {
        return Ok(links);
    }
    let mut degree = vec![0usize; n];
    // Destination multiset weighted by degree.
    let mut urn: Vec<usize> = Vec::new();
    for s in 0..m {
        let deg = rng.gen_range(1..=max_degree);
        let mut placed = 0;
        let mut attempts = 0;
        while placed < deg && attempts < 50 * max_degree {
            attempts += 1;
            let fresh: Vec<usize> = (0..n).filter(|&d| degree[d] == 0).collect();
            let d = if urn.is_empty() || (!fresh.is_empty() && rng.gen_bool(p_new)) {
                if fresh.is_empty() {
                    rng.gen_range(0..n)
                } else {
                    fresh[rng.gen_range(0..fresh.len())]
                }
            } else {
                urn[rng.gen_range(0..urn.len())]
            };
            if links.insert((s, d)) {
                degree[d] += 1;
                urn.push(d);
                placed += 1;
            }
        }
    }
    Ok(links)
}

/// Gale–Ryser test for a bipartite degree-sequence pair.
fn bipartite_graphical(a: &[usize], b: &[usize]) -> bool {
    if a.iter().sum::<usize>() != b.iter().sum::<usize>() {
        return false;
    }
    let mut a = a.to_vec();
    a.sort_unstable_by(|x, y| y.cmp(x));
    let mut lhs = 0;
    for k in 1..=a.len() {
        lhs += a[k - 1];
        let rhs: usize = b.iter().map(|&bj| bj.min(k)).sum();
        if lhs > rhs {
            return false;
        }
    }
    true
}

/// Bipartite Havel–Hakimi: random degree sequences in `1..=max_degree`
/// redrawn until graphical, then each source (largest remaining first) links
/// to the destinations of largest remaining degree.
fn hh_links(m: usize, n: usize, max_degree: f64, rng: &mut Rng) -> Result<BTreeSet<(usize, usize)>> {
    let max_degree = positive_count("max_degree", max_degree)?;
    if m == 0 || n == 0 {
        return Ok(BTreeSet::new());
    }
    const RETRIES: usize = 100_000;
    for _ in 0..RETRIES {
        let a: Vec<usize> = (0..m).map(|_| rng.gen_range(1..=max_degree.min(n))).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=max_degree.min(m))).collect();
        if !bipartite_graphical(&a, &b) {
            continue;
        }
        let mut rem_a = a;
        let mut rem_b = b;
        let mut links = BTreeSet::new();
        while let Some(s) = (0..m).filter(|&s| rem_a[s] > 0).max_by_key(|&s| (rem_a[s], std::cmp::Reverse(s))) {
            let mut dsts: Vec<usize> = (0..n).filter(|&d| rem_b[d] > 0).collect();
            dsts.sort_by_key(|&d| (std::cmp::Reverse(rem_b[d]), d));
            if dsts.len() < rem_a[s] {
                break;
            }
            for &d in &dsts[..rem_a[s]] {
                links.insert((s, d));
                rem_b[d] -= 1;
            }
            rem_a[s] = 0;
        }
        if rem_a.iter().all(|&x| x == 0) && rem_b.iter().all(|&x| x == 0) {
            return Ok(links);
        }
    }
    Err(Error::InvalidParameter(format!(
        "no graphical degree sequences found for {m}x{n} with max degree {max_degree}"
    )))
}

fn geo_graph(n: usize, radius: f64, rng: &mut Rng) -> Result<ConflictGraph> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius={radius} must be positive")));
    }
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let (dx, dy) = (pts[u].0 - pts[v].0, pts[u].1 - pts[v].1);
            if dx * dx + dy * dy <= radius * radius {
                edges.push((u, v));
            }
        }
    }
    ConflictGraph::from_undirected_edges(n, edges)
}

/// Barabási–Albert: `m` seed nodes, then each new node attaches to `m`
/// distinct existing nodes picked proportionally to degree.
fn ba_graph(n: usize, m: f64, rng: &mut Rng) -> Result<ConflictGraph> {
    let m = positive_count("m", m)?;
    if m >= n {
        return Err(Error::InvalidParameter(format!("m={m} must be below node count {n}")));
    }
    let mut edges = Vec::new();
    let mut urn: Vec<usize> = Vec::new();
    let mut targets: Vec<usize> = (0..m).collect();
    for v in m..n {
        for &t in &targets {
            edges.push((t, v));
            urn.push(t);
            urn.push(v);
        }
        let mut next = BTreeSet::new();
        while next.len() < m {
            next.insert(urn[rng.gen_range(0..urn.len())]);
        }
        targets = next.into_iter().collect();
    }
    ConflictGraph::from_undirected_edges(n, edges)
}

/// How interference links are thresholded in a wireless draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    /// Keep the strongest `round(d * n(n-1))` cross links.
    Density(f64),
    /// Keep the strongest `round((1 - t) * n(n-1))` cross links, i.e. those
    /// above the `t`-quantile of cross-link strength.
    Percentile(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WirelessConfig {
    pub area_side: f64,
    pub min_distance: f64,
    pub max_distance: f64,
    pub pathloss_exponent: f64,
    pub breakpoint: f64,
    /// Weight of the victim's own path loss when ranking cross links:
    /// strength is `signal_weight * loss(d, d) - loss(s, d)` in dB. At 0 the
    /// ranking uses absolute loss; at 1 it ranks by interference-to-signal
    /// ratio, so receivers with weak desired links collect more interferers.
    pub signal_weight: f64,
    pub threshold: Threshold,
}

impl Default for WirelessConfig {
    fn default() -> Self {
        Self {
            area_side: 1000.0,
            min_distance: 2.0,
            max_distance: 65.0,
            pathloss_exponent: 4.0,
            breakpoint: 72.0,
            signal_weight: 0.0,
            threshold: Threshold::Density(0.4),
        }
    }
}

impl WirelessConfig {
    pub fn with_threshold(mut self, threshold: Threshold) -> Self {
        self.threshold = threshold;
        self
    }

    fn validate(&self) -> Result<()> {
        let positive = [self.area_side, self.min_distance, self.pathloss_exponent, self.breakpoint];
        if positive.iter().any(|v| !(*v > 0.0)) || self.max_distance < self.min_distance || !(self.signal_weight >= 0.0) {
            return Err(Error::InvalidParameter("wireless geometry must be positive".into()));
        }
        if self.max_distance >= self.area_side {
            return Err(Error::InvalidParameter("link distance exceeds the area".into()));
        }
        let t = match self.threshold {
            Threshold::Density(t) | Threshold::Percentile(t) => t,
        };
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidParameter(format!("threshold {t} outside (0,1]")));
        }
        Ok(())
    }

    /// Two-slope log-distance path loss in dB (free-space slope up to the
    /// breakpoint, `pathloss_exponent` beyond).
    pub fn path_loss_db(&self, distance: f64) -> f64 {
        let d = distance.max(1.0);
        if d <= self.breakpoint {
            20.0 * d.log10()
        } else {
            20.0 * self.breakpoint.log10() + 10.0 * self.pathloss_exponent * (d / self.breakpoint).log10()
        }
    }
}

/// Receiver placements redrawn this many times before giving up.
const PLACEMENT_RETRIES: usize = 10_000;

/// Places `n_pairs` transmitter/receiver pairs and keeps the strongest cross
/// links per the threshold rule. Every pair is demanded.
pub fn generate_wireless(n_pairs: usize, cfg: &WirelessConfig, seed: u64) -> Result<TopologyInstance> {
    cfg.validate()?;
    let mut rng = rng_from_seed(seed);
    let side = cfg.area_side;
    let mut tx = Vec::with_capacity(n_pairs);
    let mut rx = Vec::with_capacity(n_pairs);
    for i in 0..n_pairs {
        let t = (rng.gen::<f64>() * side, rng.gen::<f64>() * side);
        let mut placed = None;
        for _ in 0..PLACEMENT_RETRIES {
            let dist = rng.gen_range(cfg.min_distance..=cfg.max_distance);
            let angle = rng.gen::<f64>() * std::f64::consts::TAU;
            let r = (t.0 + dist * angle.cos(), t.1 + dist * angle.sin());
            if (0.0..=side).contains(&r.0) && (0.0..=side).contains(&r.1) {
                placed = Some(r);
                break;
            }
        }
        let r = placed.ok_or_else(|| Error::InvalidParameter(format!("could not place receiver {i}")))?;
        tx.push(t);
        rx.push(r);
    }
    let n_cross = n_pairs * n_pairs.saturating_sub(1);
    let keep = match cfg.threshold {
        Threshold::Density(d) => (d * n_cross as f64).round() as usize,
        Threshold::Percentile(t) => ((1.0 - t) * n_cross as f64).round() as usize,
    };
    let mut cross: Vec<(f64, usize, usize)> = Vec::with_capacity(n_cross);
    for s in 0..n_pairs {
        for d in 0..n_pairs {
            if s != d {
                let dist = ((tx[s].0 - rx[d].0).powi(2) + (tx[s].1 - rx[d].1).powi(2)).sqrt();
                let own = ((tx[d].0 - rx[d].0).powi(2) + (tx[d].1 - rx[d].1).powi(2)).sqrt();
                cross.push((cfg.path_loss_db(dist) - cfg.signal_weight * cfg.path_loss_db(own), s, d));
            }
        }
    }
    // Strongest interference first; ties by index for determinism.
    cross.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let links = (0..n_pairs)
        .map(|i| (i, i))
        .chain(cross.iter().take(keep).map(|&(_, s, d)| (s, d)));
    TopologyInstance::new(n_pairs, n_pairs, links, (0..n_pairs).map(|i| (i, i)))
}

/// One line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    /// Chromatic number of the undirected conflict graph; `None` when the
    /// labeling budget ran out.
    pub chi: Option<u32>,
    pub family: Family,
    pub seed: u64,
    pub graph: ConflictGraph,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_bounds: Option<[u32; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologyInstance>,
}

/// Draws `count` instances from `template`; instance `i` uses seed
/// `derive_seed(template.seed, i)`.
pub fn generate_dataset(template: &GenSpec, count: usize) -> Result<Vec<DatasetRecord>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(template.seed, i as u64);
            let inst = generate(&template.clone().with_seed(seed))?;
            Ok(DatasetRecord {
                id: format!("{}-{}x{}-{i:06}", template.family, template.num_sources, template.num_destinations),
                chi: None,
                family: template.family,
                seed,
                graph: inst.conflict_graph(),
                chi_bounds: None,
                topology: inst.topology().cloned(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LabelStats {
    pub labeled: usize,
    pub unlabeled: usize,
}

/// Annotates every record with χ; records whose search exceeds `budget`
/// expansions keep `chi = None` and get the proven interval instead.
pub fn label_dataset(records: &mut [DatasetRecord], budget: u64) -> LabelStats {
    records.par_iter_mut().for_each(|rec| {
        let res = exact_chromatic(&rec.graph, budget);
        rec.chi = res.chi();
        rec.chi_bounds = (!res.exact).then_some([res.lower, res.upper]);
    });
    let labeled = records.iter().filter(|r| r.chi.is_some()).count();
    let stats = LabelStats {
        labeled,
        unlabeled: records.len() - labeled,
    };
    if stats.unlabeled > 0 {
        log::warn!("{} of {} instances exceeded the labeling budget", stats.unlabeled, records.len());
    }
    stats
}

pub fn write_jsonl(path: &Path, records: &[DatasetRecord]) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<DatasetRecord>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
