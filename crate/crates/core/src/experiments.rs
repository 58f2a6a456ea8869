//! Experiment drivers: per-instance method runs, aggregate tables, scheme
//! re-verification and cross-family transfer.
//!
//! Seeds: instance `id` under command seed `s` uses
//! `derive_seed_path(s, [fnv1a(id), method_tag])`, so a given instance gets
//! the same randomness regardless of its position in a dataset.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coloring::{exact_chromatic, greedy_sli, tabucol, Coloring, FractionalColoring, DEFAULT_TABU_TENURE};
use crate::env::{k_selector, EnvConfig, EnvMode, SelectorConfig};
use crate::error::{Error, Result};
use crate::generators::DatasetRecord;
use crate::graph::{merge_split_coloring, node_splitting_graph, ConflictGraph};
use crate::policy::{GreedyDefer, LearnedPolicy, PolicyParams};
use crate::ppo::evaluate_best_of_n;
use crate::rng::derive_seed_path;
use crate::verify::{realize_osia, realize_ovia, realize_subspace, realize_svia, realize_tdma, verify_scheme, Dof, Mode, Scheme};

/// A solving method as it appears in result tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    Sli,
    TabuCol,
    Lcg,
    Osia,
    Ovia(usize),
    Ssia,
    Svia(usize),
    Tdma,
}

impl Method {
    fn tag(self) -> u64 {
        match self {
            Method::Sli => 0,
            Method::TabuCol => 1,
            Method::Lcg => 2,
            Method::Osia => 3,
            Method::Ovia(b) => 4 + 16 * b as u64,
            Method::Ssia => 5,
            Method::Svia(b) => 6 + 16 * b as u64,
            Method::Tdma => 7,
        }
    }

    /// Coloring methods are judged by whether they reach χ colors.
    pub fn is_coloring(self) -> bool {
        matches!(self, Method::Sli | Method::TabuCol | Method::Lcg | Method::Tdma)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Sli => f.write_str("SLI"),
            Method::TabuCol => f.write_str("TabuCol"),
            Method::Lcg => f.write_str("LCG"),
            Method::Osia => f.write_str("OSIA"),
            Method::Ovia(b) => write!(f, "OVIA-{b}"),
            Method::Ssia => f.write_str("SSIA"),
            Method::Svia(b) => write!(f, "SVIA-{b}"),
            Method::Tdma => f.write_str("TDMA"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let order = |rest: &str| -> Result<usize> {
            rest.parse::<usize>()
                .ok()
                .filter(|&b| b >= 1)
                .ok_or_else(|| Error::InvalidParameter(format!("bad vector order in method {s:?}")))
        };
        match s.to_ascii_uppercase().as_str() {
            "SLI" => Ok(Method::Sli),
            "TABUCOL" => Ok(Method::TabuCol),
            "LCG" => Ok(Method::Lcg),
            "OSIA" => Ok(Method::Osia),
            "SSIA" => Ok(Method::Ssia),
            "TDMA" => Ok(Method::Tdma),
            u if u.starts_with("OVIA-") => Ok(Method::Ovia(order(&u[5..])?)),
            u if u.starts_with("SVIA-") => Ok(Method::Svia(order(&u[5..])?)),
            _ => Err(Error::InvalidParameter(format!("unknown method {s:?}"))),
        }
    }
}

impl TryFrom<String> for Method {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

/// One row of a results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub dataset: String,
    pub method: Method,
    pub instance_id: String,
    /// A certified scheme was produced.
    pub success: bool,
    #[serde(rename = "K")]
    pub k: usize,
    pub r: usize,
    pub b: usize,
    pub x: usize,
    /// Exact `n/d`; `0` for failures.
    pub d_sym: String,
    pub wall_time_s: f64,
    pub seed: u64,
}

impl ExperimentRecord {
    pub fn dof(&self) -> Option<Dof> {
        self.success.then(|| parse_dof(&self.d_sym)).flatten()
    }
}

pub fn format_dof(d: Dof) -> String {
    format!("{}/{}", d.numer(), d.denom())
}

pub fn parse_dof(s: &str) -> Option<Dof> {
    let (n, d) = s.split_once('/')?;
    let d: u64 = d.trim().parse().ok()?;
    let n: u64 = n.trim().parse().ok()?;
    (d > 0).then(|| Dof::new(n, d))
}

/// Settings shared by all methods of a run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub tabu_iters: usize,
    /// Episodes per setting for learned and reference policies.
    pub best_of: usize,
    /// Environment template (iteration limit, alpha, beta).
    pub env: EnvConfig,
    pub rho: f64,
    /// Required for [`Method::Lcg`].
    pub policy: Option<PolicyParams>,
    /// Where certified schemes are written as `<method>/<instance_id>.json`.
    pub scheme_dir: Option<PathBuf>,
    /// Record wall-clock times; off gives byte-identical CSVs.
    pub timing: bool,
    /// Expansion budget when TDMA needs an exact coloring.
    pub exact_budget: u64,
    /// Largest blocklength tried by the subspace methods.
    pub max_matrix_rank: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            tabu_iters: 1000,
            best_of: 20,
            env: EnvConfig::default(),
            rho: 0.5,
            policy: None,
            scheme_dir: None,
            timing: true,
            exact_budget: 5_000_000,
            max_matrix_rank: SelectorConfig::default().max_matrix_rank,
        }
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

pub fn instance_seed(cfg_seed: u64, id: &str, method: Method) -> u64 {
    derive_seed_path(cfg_seed, &[fnv1a(id), method.tag()])
}

fn selector_cfg(cfg: &RunConfig, seed: u64) -> SelectorConfig {
    let mut env = cfg.env.clone();
    env.seed = seed;
    SelectorConfig {
        env,
        attempts: cfg.best_of.max(1),
        max_matrix_rank: cfg.max_matrix_rank,
        ..SelectorConfig::default()
    }
}

fn better(a: Scheme, b: Scheme) -> Scheme {
    if b.d_sym > a.d_sym {
        b
    } else {
        a
    }
}

/// Coloring with the fewest colors found by the local-coloring selector.
fn osia_scheme(g: &ConflictGraph, cfg: &RunConfig, id: &str) -> Result<Scheme> {
    let policy = GreedyDefer { rho: cfg.rho };
    let sel = k_selector(g, EnvMode::LocalColoring, &policy, &selector_cfg(cfg, instance_seed(cfg.seed, id, Method::Osia)))?;
    let c = Coloring::new(sel.values, sel.k as u32)?.compacted();
    realize_osia(g, &c)
}

/// Runs one method on one instance. `Ok(None)` means the method produced
/// no solution (e.g. TabuCol did not reach χ colors).
pub fn solve_instance(method: Method, rec: &DatasetRecord, cfg: &RunConfig) -> Result<Option<Scheme>> {
    let g = &rec.graph;
    if g.is_empty() {
        return Ok(None);
    }
    let seed = instance_seed(cfg.seed, &rec.id, method);
    let scheme = match method {
        Method::Sli => Some(realize_tdma(g, &greedy_sli(g))?),
        Method::TabuCol => match rec.chi {
            Some(chi) => tabucol(g, chi as usize, cfg.tabu_iters, DEFAULT_TABU_TENURE, seed)
                .map(|c| realize_tdma(g, &c.compacted()))
                .transpose()?,
            None => None,
        },
        Method::Lcg => {
            let params = cfg
                .policy
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("LCG needs a trained checkpoint".into()))?;
            let mut env = cfg.env.clone();
            env.mode = EnvMode::Coloring;
            env.k = params.alphabet;
            env.r = params.alphabet;
            let pol = LearnedPolicy { params: params.clone() };
            let best = evaluate_best_of_n(&pol, g, &env, cfg.best_of, seed)?;
            if best.dof.is_some() {
                let c = Coloring::new(best.best.state.values, env.k as u32)?.compacted();
                Some(realize_tdma(g, &c)?)
            } else {
                None
            }
        }
        Method::Tdma => {
            let res = exact_chromatic(g, cfg.exact_budget);
            Some(realize_tdma(g, &res.witness.compacted())?)
        }
        Method::Osia => Some(osia_scheme(g, cfg, &rec.id)?),
        Method::Ovia(b) => {
            let split = node_splitting_graph(g, b)?;
            let policy = GreedyDefer { rho: cfg.rho };
            let sel = k_selector(&split, EnvMode::LocalColoring, &policy, &selector_cfg(cfg, seed))?;
            let split_coloring = Coloring::new(sel.values, sel.k as u32)?;
            let own = realize_ovia(g, &merge_split_coloring(g, b, &split_coloring)?)?;
            // A b-fold copy of the scalar solution is always available.
            let osia = osia_scheme(g, cfg, &rec.id)?;
            let colors = Coloring::new(
                osia.colors.as_ref().expect("OSIA carries colors").iter().map(|s| s[0]).collect(),
                osia.k as u32,
            )?;
            let replicated = realize_ovia(g, &FractionalColoring::replicate(&colors, b))?;
            Some(better(own, replicated))
        }
        Method::Ssia => {
            let policy = GreedyDefer { rho: cfg.rho };
            let sel = k_selector(g, EnvMode::MatrixRankReduction, &policy, &selector_cfg(cfg, seed))?;
            let own = sel.scheme.expect("non-empty graph yields a scheme");
            // One-to-one alignment is a special case of subspace alignment.
            let osia = osia_scheme(g, cfg, &rec.id)?;
            let from_osia = realize_subspace(g, &osia.assignment, Mode::Ssia, seed)?;
            Some(better(own, from_osia))
        }
        Method::Svia(b) => {
            let split = node_splitting_graph(g, b)?;
            let policy = GreedyDefer { rho: cfg.rho };
            let sel = k_selector(&split, EnvMode::MatrixRankReduction, &policy, &selector_cfg(cfg, seed))?;
            let split_scheme = sel.scheme.expect("non-empty graph yields a scheme");
            let own = realize_svia(g, b, &split_scheme.assignment, seed)?;
            let ovia = solve_instance(Method::Ovia(b), rec, cfg)?.expect("OVIA always yields a scheme");
            let from_ovia = realize_subspace(g, &ovia.assignment, Mode::Svia, seed)?;
            Some(better(own, from_ovia))
        }
    };
    Ok(scheme)
}

/// Per-method summary of one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub dataset: String,
    pub method: Method,
    pub instances: usize,
    /// Instances with a known χ.
    pub labeled: usize,
    pub successes: usize,
    /// Coloring methods: labeled instances solved with exactly χ colors.
    pub optimal: Option<usize>,
    pub optimal_ratio: Option<f64>,
    /// Certified DoF value -> number of instances.
    pub dof_counts: BTreeMap<Dof, usize>,
}

impl Aggregate {
    /// Instances whose certified DoF is at least `threshold`.
    pub fn at_least(&self, threshold: Dof) -> usize {
        self.dof_counts.range(threshold..).map(|(_, c)| c).sum()
    }
}

#[derive(Debug, Clone, Default)]
pub struct TableOutput {
    /// Sorted by (dataset, method, instance id).
    pub records: Vec<ExperimentRecord>,
    pub aggregates: Vec<Aggregate>,
    /// Certified schemes keyed by (method, instance id).
    pub schemes: BTreeMap<(Method, String), Scheme>,
}

/// Runs every method on every instance. Only schemes that pass
/// [`verify_scheme`] count as successes.
pub fn run_table(dataset: &str, records: &[DatasetRecord], methods: &[Method], cfg: &RunConfig) -> Result<TableOutput> {
    if methods.contains(&Method::Lcg) && cfg.policy.is_none() {
        return Err(Error::InvalidParameter("LCG needs a trained checkpoint".into()));
    }
    let jobs: Vec<(Method, &DatasetRecord)> = methods.iter().flat_map(|&m| records.iter().map(move |r| (m, r))).collect();
    let results = jobs
        .par_iter()
        .map(|&(method, rec)| {
            let start = Instant::now();
            let scheme = solve_instance(method, rec, cfg)?;
            let wall = if cfg.timing { start.elapsed().as_secs_f64() } else { 0.0 };
            let certified = scheme.filter(|s| {
                let cert = verify_scheme(s);
                if !cert.ok {
                    log::error!("{method} produced an uncertified scheme for {}: {:?}", rec.id, cert.failures);
                }
                cert.ok
            });
            let record = ExperimentRecord {
                dataset: dataset.to_string(),
                method,
                instance_id: rec.id.clone(),
                success: certified.is_some(),
                k: certified.as_ref().map_or(0, |s| s.k),
                r: certified.as_ref().map_or(0, |s| s.r),
                b: certified.as_ref().map_or(0, |s| s.b),
                x: certified.as_ref().map_or(0, |s| s.x),
                d_sym: certified.as_ref().map_or("0".into(), |s| format_dof(s.d_sym)),
                wall_time_s: wall,
                seed: instance_seed(cfg.seed, &rec.id, method),
            };
            Ok((record, certified))
        })
        .collect::<Result<Vec<_>>>()?;

    let chi_of: BTreeMap<&str, Option<u32>> = records.iter().map(|r| (r.id.as_str(), r.chi)).collect();
    let mut out = TableOutput::default();
    for (rec, scheme) in results {
        if let Some(s) = scheme {
            if let Some(dir) = &cfg.scheme_dir {
                let d = dir.join(rec.method.to_string());
                std::fs::create_dir_all(&d)?;
                s.save(&d.join(format!("{}.json", rec.instance_id)))?;
            }
            out.schemes.insert((rec.method, rec.instance_id.clone()), s);
        }
        out.records.push(rec);
    }
    out.records.sort_by(|a, b| {
        (a.dataset.as_str(), a.method.to_string(), a.instance_id.as_str()).cmp(&(
            b.dataset.as_str(),
            b.method.to_string(),
            b.instance_id.as_str(),
        ))
    });
    for &method in methods {
        let rows: Vec<&ExperimentRecord> = out.records.iter().filter(|r| r.method == method).collect();
        let labeled = rows.iter().filter(|r| chi_of[r.instance_id.as_str()].is_some()).count();
        let mut dof_counts = BTreeMap::new();
        for d in rows.iter().filter_map(|r| r.dof()) {
            *dof_counts.entry(d).or_insert(0) += 1;
        }
        let optimal = method.is_coloring().then(|| {
            rows.iter()
                .filter(|r| r.success && chi_of[r.instance_id.as_str()] == Some(r.k as u32))
                .count()
        });
        out.aggregates.push(Aggregate {
            dataset: dataset.to_string(),
            method,
            instances: rows.len(),
            labeled,
            successes: rows.iter().filter(|r| r.success).count(),
            optimal,
            optimal_ratio: optimal.map(|o| if labeled == 0 { 0.0 } else { o as f64 / labeled as f64 }),
            dof_counts,
        });
    }
    Ok(out)
}

pub fn write_records_csv(records: &[ExperimentRecord], w: impl std::io::Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records_csv(r: impl std::io::Read) -> Result<Vec<ExperimentRecord>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Aggregates as CSV; the DoF histogram is packed as `d:count;d:count`.
pub fn write_aggregates_csv(aggs: &[Aggregate], w: impl std::io::Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["dataset", "method", "instances", "labeled", "successes", "optimal", "optimal_ratio", "dof_counts"])?;
    for a in aggs {
        let hist = a
            .dof_counts
            .iter()
            .rev()
            .map(|(d, c)| format!("{}:{c}", format_dof(*d)))
            .collect::<Vec<_>>()
            .join(";");
        out.write_record([
            a.dataset.clone(),
            a.method.to_string(),
            a.instances.to_string(),
            a.labeled.to_string(),
            a.successes.to_string(),
            a.optimal.map_or(String::new(), |o| o.to_string()),
            a.optimal_ratio.map_or(String::new(), |o| format!("{o:.6}")),
            hist,
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Certification outcome of one scheme file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileReport {
    pub path: PathBuf,
    pub ok: bool,
    pub d_sym: Option<Dof>,
    pub problems: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub files: Vec<FileReport>,
}

impl VerifyReport {
    pub fn all_ok(&self) -> bool {
        self.files.iter().all(|f| f.ok)
    }

    pub fn failures(&self) -> impl Iterator<Item = &FileReport> {
        self.files.iter().filter(|f| !f.ok)
    }
}

fn collect_json(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_json(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "json") {
            out.push(path);
        }
    }
    Ok(())
}

/// Re-verifies every `*.json` scheme below `dir` (recursively), in path order.
pub fn verify_all(dir: &Path) -> Result<VerifyReport> {
    let mut paths = Vec::new();
    collect_json(dir, &mut paths)?;
    paths.sort();
    let files = paths
        .into_par_iter()
        .map(|path| match Scheme::load(&path) {
            Ok(s) => {
                let cert = verify_scheme(&s);
                FileReport {
                    path,
                    ok: cert.ok,
                    d_sym: cert.d_sym,
                    problems: cert.failures,
                }
            }
            Err(e) => FileReport {
                path,
                ok: false,
                d_sym: None,
                problems: vec![format!("parse: {e}")],
            },
        })
        .collect();
    Ok(VerifyReport { files })
}

/// One cell of a transfer matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferCell {
    pub train: String,
    pub test: String,
    /// Labeled instances whose χ equals the model alphabet.
    pub evaluated: usize,
    pub optimal_ratio: Option<f64>,
    pub skipped: Option<String>,
}

/// Optimal ratio of each checkpoint on each dataset, using the LCG method.
/// Only instances with χ equal to the model alphabet are evaluated; a cell
/// with none is skipped with a reason.
pub fn transfer_eval(
    models: &[(String, PolicyParams)],
    datasets: &[(String, Vec<DatasetRecord>)],
    cfg: &RunConfig,
) -> Result<Vec<TransferCell>> {
    let mut cells = Vec::new();
    for (train, params) in models {
        for (test, records) in datasets {
            let matching: Vec<DatasetRecord> = records
                .iter()
                .filter(|r| r.chi == Some(params.alphabet as u32))
                .cloned()
                .collect();
            if matching.is_empty() {
                cells.push(TransferCell {
                    train: train.clone(),
                    test: test.clone(),
                    evaluated: 0,
                    optimal_ratio: None,
                    skipped: Some(format!("no instance with chromatic number {}", params.alphabet)),
                });
                continue;
            }
            let run = RunConfig {
                policy: Some(params.clone()),
                scheme_dir: None,
                ..cfg.clone()
            };
            let table = run_table(test, &matching, &[Method::Lcg], &run)?;
            cells.push(TransferCell {
                train: train.clone(),
                test: test.clone(),
                evaluated: matching.len(),
                optimal_ratio: table.aggregates[0].optimal_ratio,
                skipped: None,
            });
        }
    }
    Ok(cells)
}

pub fn write_transfer_csv(cells: &[TransferCell], w: impl std::io::Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["train", "test", "evaluated", "optimal_ratio", "skipped"])?;
    for c in cells {
        out.write_record([
            c.train.clone(),
            c.test.clone(),
            c.evaluated.to_string(),
            c.optimal_ratio.map_or(String::new(), |o| format!("{o:.6}")),
            c.skipped.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
