use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lcg_core::experiments::{
    run_table, transfer_eval, verify_all, write_aggregates_csv, write_records_csv, write_transfer_csv, Aggregate,
    Method, RunConfig,
};
use lcg_core::generators::{generate_dataset, label_dataset, read_jsonl, write_jsonl, DemandRule, Family, GenSpec};
use lcg_core::{DatasetRecord, EnvConfig, PolicyParams, TrainConfig, Trainer};
use log::info;

/// Interference alignment for topological interference management: dataset
/// generation, baselines, policy training, IA solving and certification.
#[derive(Parser)]
#[command(name = "lcg", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a dataset of conflict graphs as JSON lines.
    Gen(GenArgs),
    /// Annotate a dataset with exact chromatic numbers.
    Label(LabelArgs),
    /// Run the coloring baselines (SLI, TabuCol, TDMA).
    Baseline(BaselineArgs),
    /// Train the policy network with PPO.
    Train(TrainArgs),
    /// Build certified IA schemes for every instance.
    Solve(SolveArgs),
    /// Evaluate a trained checkpoint with best-of-n sampling.
    Eval(EvalArgs),
    /// Cross-dataset optimal-ratio matrix for several checkpoints.
    Transfer(TransferArgs),
    /// Re-certify every scheme file under a directory.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenArgs {
    /// er, pa, hh, geo, ba or wireless.
    #[arg(long)]
    family: Family,
    /// Sources (node count for geo/ba).
    #[arg(long)]
    sources: usize,
    /// Destinations; defaults to the number of sources.
    #[arg(long)]
    destinations: Option<usize>,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Family parameter as name=value, e.g. p=0.2 or density=0.4. Repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// all-unicast or candidate-fraction.
    #[arg(long, default_value = "all-unicast")]
    demand_rule: DemandRule,
    /// Demand fraction used by candidate-fraction.
    #[arg(long, default_value_t = 0.2)]
    q: f64,
    /// Label with exact chromatic numbers using this node budget.
    #[arg(long)]
    label_budget: Option<u64>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct LabelArgs {
    #[arg(long, short)]
    input: PathBuf,
    /// Output file; defaults to rewriting the input.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000_000)]
    budget: u64,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Labeled dataset (JSON lines).
    #[arg(long, short)]
    dataset: PathBuf,
    /// Name used in the CSV `dataset` column; defaults to the file stem.
    #[arg(long)]
    name: Option<String>,
    /// Keep only instances with this chromatic number.
    #[arg(long)]
    chi: Option<u32>,
    /// Keep at most this many instances (after filtering).
    #[arg(long)]
    limit: Option<usize>,
}

impl DataArgs {
    fn load(&self) -> Result<(String, Vec<DatasetRecord>)> {
        let mut records = read_jsonl(&self.dataset).with_context(|| format!("reading {}", self.dataset.display()))?;
        if let Some(chi) = self.chi {
            records.retain(|r| r.chi == Some(chi));
        }
        if let Some(limit) = self.limit {
            records.truncate(limit);
        }
        Ok((self.name.clone().unwrap_or_else(|| stem(&self.dataset)), records))
    }
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Episodes per setting for sampled policies.
    #[arg(long, default_value_t = 20)]
    best_of: usize,
    /// Iteration limit per episode.
    #[arg(long, default_value_t = 32)]
    max_iters: usize,
    #[arg(long, default_value_t = 1000)]
    tabu_iters: usize,
    /// Defer probability of the greedy reference policy.
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Write every certified scheme as <dir>/<method>/<instance>.json.
    #[arg(long)]
    scheme_dir: Option<PathBuf>,
    /// Leave wall-clock columns at zero so output is reproducible.
    #[arg(long)]
    no_timing: bool,
    /// Per-instance results CSV (stdout if omitted).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Per-method aggregate CSV.
    #[arg(long)]
    aggregates: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            seed: self.seed,
            tabu_iters: self.tabu_iters,
            best_of: self.best_of,
            env: EnvConfig::default().with_max_iters(self.max_iters),
            rho: self.rho,
            scheme_dir: self.scheme_dir.clone(),
            timing: !self.no_timing,
            ..RunConfig::default()
        }
    }
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated subset of sli, tabucol, tdma.
    #[arg(long, value_delimiter = ',', default_value = "sli,tabucol,tdma")]
    methods: Vec<Method>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Color alphabet of the network; defaults to --chi.
    #[arg(long)]
    alphabet: Option<usize>,
    /// JSON training configuration; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Trainer directory (checkpoint, optimizer state and learning curve).
    #[arg(long, short)]
    out: PathBuf,
    /// Continue from the state saved in --out.
    #[arg(long)]
    resume: bool,
    /// Save the trainer state every this many iterations.
    #[arg(long, default_value_t = 100)]
    save_every: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SolveMode {
    /// Vertex coloring by the trained policy (TDMA scheme).
    Color,
    /// Local coloring, one-to-one scalar alignment.
    Local,
    /// Fractional local coloring, one-to-one vector alignment (uses --b).
    Fractional,
    /// Matrix rank reduction, subspace scalar alignment (uses --r).
    Subspace,
    /// Subspace vector alignment on the node-splitting graph (uses --b).
    Svia,
}

#[derive(Args)]
struct SolveArgs {
    mode: SolveMode,
    /// Streams per message for `fractional` and `svia`.
    #[arg(long)]
    b: Option<usize>,
    /// Largest blocklength tried by `subspace`.
    #[arg(long)]
    r: Option<usize>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Trained parameters (required for `color`).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Trained parameters (`params.ckpt` or a trainer directory).
    #[arg(long)]
    checkpoint: PathBuf,
    /// Also run the named baselines on the same instances.
    #[arg(long, value_delimiter = ',')]
    compare: Vec<Method>,
}

#[derive(Args)]
struct TransferArgs {
    /// name=path of a checkpoint. Repeatable.
    #[arg(long = "model", value_parser = parse_named, required = true)]
    models: Vec<(String, PathBuf)>,
    /// name=path of a labeled dataset. Repeatable.
    #[arg(long = "dataset", value_parser = parse_named, required = true)]
    datasets: Vec<(String, PathBuf)>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct VerifyArgs {
    dir: PathBuf,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got '{s}'"))?;
    let v = v.parse().map_err(|e| format!("bad value in '{s}': {e}"))?;
    Ok((k.to_string(), v))
}

fn parse_named(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((k, v)) => Ok((k.to_string(), PathBuf::from(v))),
        None => Ok((stem(Path::new(s)), PathBuf::from(s))),
    }
}

fn stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned())
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn load_checkpoint(path: &Path) -> Result<PolicyParams> {
    let file = if path.is_dir() { path.join("params.ckpt") } else { path.to_path_buf() };
    PolicyParams::load(&file).with_context(|| format!("loading checkpoint {}", file.display()))
}

fn summarize(aggs: &[Aggregate]) {
    for a in aggs {
        let mut line = format!("{} {}: {}/{} succeeded", a.dataset, a.method, a.successes, a.instances);
        if let Some(ratio) = a.optimal_ratio {
            line += &format!(", optimal ratio {ratio:.3} over {} labeled", a.labeled);
            if a.labeled < a.instances {
                line += &format!(" (coverage {:.1}%)", 100.0 * a.labeled as f64 / a.instances.max(1) as f64);
            }
        }
        let dofs: Vec<String> = a.dof_counts.iter().rev().map(|(d, n)| format!("{d}:{n}")).collect();
        if !dofs.is_empty() {
            line += &format!(", d_sym counts [{}]", dofs.join(" "));
        }
        eprintln!("{line}");
    }
}

fn run_and_write(name: &str, records: &[DatasetRecord], methods: &[Method], cfg: &RunConfig, run: &RunArgs) -> Result<()> {
    info!("{} instances, methods {:?}", records.len(), methods.iter().map(|m| m.to_string()).collect::<Vec<_>>());
    let table = run_table(name, records, methods, cfg)?;
    write_records_csv(&table.records, output(run.out.as_deref())?)?;
    if let Some(p) = &run.aggregates {
        write_aggregates_csv(&table.aggregates, output(Some(p))?)?;
    }
    summarize(&table.aggregates);
    Ok(())
}

fn gen(a: GenArgs) -> Result<()> {
    let mut spec = GenSpec::new(a.family, a.sources, a.destinations.unwrap_or(a.sources), a.seed)
        .with_demand_rule(a.demand_rule, a.q);
    for (k, v) in a.params {
        spec = spec.param(&k, v);
    }
    let mut records = generate_dataset(&spec, a.count)?;
    if let Some(budget) = a.label_budget {
        let stats = label_dataset(&mut records, budget);
        eprintln!("labeled {}/{} instances", stats.labeled, records.len());
    }
    write_jsonl(&a.out, &records)?;
    eprintln!("wrote {} instances to {}", records.len(), a.out.display());
    Ok(())
}

fn label(a: LabelArgs) -> Result<()> {
    let mut records = read_jsonl(&a.input)?;
    let stats = label_dataset(&mut records, a.budget);
    let out = a.out.as_ref().unwrap_or(&a.input);
    write_jsonl(out, &records)?;
    let mut hist = std::collections::BTreeMap::new();
    for r in &records {
        *hist.entry(r.chi).or_insert(0usize) += 1;
    }
    eprintln!("labeled {}/{}; chromatic numbers:", stats.labeled, records.len());
    for (chi, n) in hist {
        eprintln!("  {}: {n}", chi.map_or("unlabeled".to_string(), |c| c.to_string()));
    }
    Ok(())
}

fn baseline(a: BaselineArgs) -> Result<()> {
    if let Some(m) = a.methods.iter().find(|m| !m.is_coloring() || **m == Method::Lcg) {
        bail!("{m} is not a baseline; use `solve` or `eval`");
    }
    let (name, records) = a.data.load()?;
    run_and_write(&name, &records, &a.methods, &a.run.config(), &a.run)
}

fn train(a: TrainArgs) -> Result<()> {
    let (_, records) = a.data.load()?;
    let graphs: Vec<_> = records.iter().map(|r| r.graph.clone()).collect();
    if graphs.is_empty() {
        bail!("no training graphs after filtering");
    }
    let mut trainer = if a.resume {
        Trainer::load(&a.out).with_context(|| format!("resuming from {}", a.out.display()))?
    } else {
        let mut cfg = match &a.config {
            Some(p) => TrainConfig::from_json(&std::fs::read_to_string(p)?)?,
            None => TrainConfig::default(),
        };
        let alphabet = a
            .alphabet
            .or(a.data.chi.map(|c| c as usize))
            .context("set --alphabet or --chi to fix the color alphabet")?;
        cfg.env = EnvConfig {
            max_iters: cfg.env.max_iters,
            ..EnvConfig::coloring(alphabet)
        };
        if let Some(seed) = a.seed {
            cfg.seed = seed;
        }
        Trainer::new(cfg)?
    };
    if let Some(n) = a.iterations {
        trainer.cfg.iterations = n;
    }
    info!("training on {} graphs for {} iterations", graphs.len(), trainer.cfg.iterations);
    while trainer.iteration < trainer.cfg.iterations {
        let row = trainer.step(&graphs)?;
        eprintln!(
            "iter {:>5}  reward {:>8.3}  success {:.2}  entropy {:.3}",
            row.iteration, row.mean_reward, row.success_ratio, row.entropy
        );
        if trainer.iteration % a.save_every.max(1) == 0 {
            trainer.save(&a.out)?;
        }
    }
    trainer.save(&a.out)?;
    eprintln!("saved trainer state to {}", a.out.display());
    Ok(())
}

fn solve(a: SolveArgs) -> Result<()> {
    let (name, records) = a.data.load()?;
    let mut cfg = a.run.config();
    let b = a.b.unwrap_or(2);
    if b == 0 || a.r == Some(0) {
        bail!("--b and --r must be positive");
    }
    match (a.mode, a.b, a.r) {
        (SolveMode::Fractional | SolveMode::Svia, _, Some(_)) => bail!("--r only applies to `subspace`"),
        (SolveMode::Subspace, Some(_), _) => bail!("--b does not apply to `subspace`"),
        (SolveMode::Color | SolveMode::Local, b, r) if b.is_some() || r.is_some() => {
            bail!("--b and --r do not apply to `{:?}`", a.mode)
        }
        _ => {}
    }
    let method = match a.mode {
        SolveMode::Color => {
            let path = a.checkpoint.as_deref().context("`solve color` needs --checkpoint")?;
            cfg.policy = Some(load_checkpoint(path)?);
            Method::Lcg
        }
        SolveMode::Local => Method::Osia,
        SolveMode::Fractional => Method::Ovia(b),
        SolveMode::Subspace => {
            if let Some(r) = a.r {
                cfg.max_matrix_rank = r;
            }
            Method::Ssia
        }
        SolveMode::Svia => Method::Svia(b),
    };
    run_and_write(&name, &records, &[method], &cfg, &a.run)
}

fn eval(a: EvalArgs) -> Result<()> {
    let (name, records) = a.data.load()?;
    let mut cfg = a.run.config();
    cfg.policy = Some(load_checkpoint(&a.checkpoint)?);
    let mut methods = vec![Method::Lcg];
    methods.extend(a.compare.iter().copied().filter(|m| *m != Method::Lcg));
    run_and_write(&name, &records, &methods, &cfg, &a.run)
}

fn transfer(a: TransferArgs) -> Result<()> {
    let models = a
        .models
        .iter()
        .map(|(n, p)| Ok((n.clone(), load_checkpoint(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let datasets = a
        .datasets
        .iter()
        .map(|(n, p)| Ok((n.clone(), read_jsonl(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let cells = transfer_eval(&models, &datasets, &a.run.config())?;
    for c in &cells {
        match (&c.skipped, c.optimal_ratio) {
            (Some(reason), _) => eprintln!("{} -> {}: skipped ({reason})", c.train, c.test),
            (None, Some(r)) => eprintln!("{} -> {}: {r:.3} over {}", c.train, c.test, c.evaluated),
            (None, None) => eprintln!("{} -> {}: no labeled instances", c.train, c.test),
        }
    }
    write_transfer_csv(&cells, output(a.run.out.as_deref())?)?;
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<()> {
    let report = verify_all(&a.dir)?;
    for f in report.failures() {
        eprintln!("FAIL {}: {}", f.path.display(), f.problems.join("; "));
    }
    let total = report.files.len();
    let bad = report.failures().count();
    println!("{}/{total} schemes certified", total - bad);
    if !report.all_ok() {
        bail!("{bad} scheme file(s) failed certification");
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Label(a) => label(a),
        Command::Baseline(a) => baseline(a),
        Command::Train(a) => train(a),
        Command::Solve(a) => solve(a),
        Command::Eval(a) => eval(a),
        Command::Transfer(a) => transfer(a),
        Command::Verify(a) => verify(a),
    }
}
