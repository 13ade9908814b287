use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use grash::config::{self, FileConfig};
use grash::exec::Parallel;
use grash::runlog::{self, EvalReport, RunManifest, TrialLog};
use grash::{checkpoint, ladder, tsv};
use grash_core::analysis::{transferability_sweep, SweepParams, Technique};
use grash_core::eval::{evaluate_with, FilterIndex};
use grash_core::reduce::{core_decomposition, k_core, random_walk_for_fidelity, random_walk_sample, triple_sample, CoreLadder};
use grash_core::search::{final_train, run_search, GraphReduction, ModelSpec, SearchParams, Variant};
use grash_core::synthetic::{self, SyntheticParams};
use grash_core::{
    sample_configs, split_train_valid, DatasetSplit, HyperparamConfig, KnowledgeGraph, Norm,
    Scorer, SearchSpace,
};
use serde::Serialize;
use serde_json::json;

macro_rules! out {
    ($($t:tt)*) => {
        writeln!(std::io::stdout().lock(), $($t)*)?
    };
}

/// Successive-halving hyperparameter search for knowledge graph embeddings.
#[derive(Parser)]
#[command(name = "grash", version)]
struct Cli {
    /// Suppress progress output on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect, split or generate datasets.
    #[command(subcommand)]
    Dataset(DatasetCmd),
    /// Reduce a graph by triple sampling, random walks or a k-core.
    Reduce(ReduceArgs),
    /// Work with the hyperparameter search space.
    #[command(subcommand)]
    Space(SpaceCmd),
    /// Run a successive-halving search and train the winner at full fidelity.
    Search(SearchArgs),
    /// Train one configuration at full fidelity.
    Train(TrainArgs),
    /// Evaluate a checkpoint with filtered link-prediction metrics.
    Eval(EvalArgs),
    /// Measure how well low-fidelity rankings transfer to full fidelity.
    Transfer(TransferArgs),
}

#[derive(Subcommand)]
enum DatasetCmd {
    /// Print entity, relation, triple and degree counts of every split.
    Stats {
        /// Dataset directory or triple file.
        path: PathBuf,
    },
    /// Hold out validation (and test) triples from a triple file.
    Split {
        /// Triple file, or a dataset directory whose train split is used.
        path: PathBuf,
        #[arg(long)]
        valid_size: usize,
        #[arg(long, default_value_t = 0)]
        test_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic clustered graph as a dataset directory.
    Synthetic {
        #[arg(long, default_value_t = 5000)]
        entities: usize,
        #[arg(long, default_value_t = 20)]
        relations: usize,
        #[arg(long, default_value_t = 50_000)]
        triples: usize,
        #[arg(long, default_value_t = 10)]
        clusters: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 2500)]
        valid_size: usize,
        #[arg(long, default_value_t = 2500)]
        test_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
enum Method {
    Triple,
    Walk,
    Kcore,
}

#[derive(Args)]
struct ReduceArgs {
    /// Dataset directory or triple file; its training split is reduced.
    dataset: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    /// Target share of the triples, in (0, 1].
    #[arg(long)]
    target: Option<f64>,
    /// Core order (kcore only).
    #[arg(long)]
    k: Option<usize>,
    /// Number of walk starts (walk only, instead of --target).
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long, default_value_t = 10)]
    length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Core ladder to reuse; computed and written to the run directory if absent.
    #[arg(long)]
    ladder: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum SpaceCmd {
    /// Sample configurations as JSON lines.
    Sample {
        #[arg(short, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "complex")]
        model: String,
        /// default | desk
        #[arg(long)]
        preset: Option<String>,
        /// TOML run configuration whose space is used.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write configs.jsonl here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the search space as JSON.
    Show {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Default)]
struct ModelArgs {
    /// complex | transe | rotate
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// TransE distance: l1 | l2
    #[arg(long)]
    norm: Option<String>,
}

#[derive(Args)]
struct SearchArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    /// Total budget in full training runs.
    #[arg(long)]
    budget: Option<f64>,
    /// Number of sampled configurations.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    eta: Option<usize>,
    /// epoch | graph | combined
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    max_epochs: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// kcore | triple | walk
    #[arg(long)]
    reduction: Option<String>,
    #[arg(long)]
    walk_length: Option<usize>,
    #[arg(long)]
    valid_size: Option<usize>,
    /// default | desk
    #[arg(long)]
    space_preset: Option<String>,
    /// Epochs of the final training run (defaults to --max-epochs).
    #[arg(long)]
    final_epochs: Option<f64>,
    /// Core ladder to reuse for k-core reduction.
    #[arg(long)]
    ladder: Option<PathBuf>,
    /// Skip the final full-fidelity training run.
    #[arg(long)]
    no_final: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Hyperparameters as JSON, e.g. best_config.json of a search run.
    #[arg(long)]
    hyperparams: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    epochs: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
enum SplitChoice {
    Valid,
    Test,
    Both,
}

#[derive(Args)]
struct EvalArgs {
    checkpoint: PathBuf,
    dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitChoice::Both)]
    split: SplitChoice,
    /// Also write report.json and a manifest here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TransferArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    /// Number of sampled configurations.
    #[arg(long)]
    configs: Option<usize>,
    /// Comma-separated: epoch, triple, walk, kcore, combined.
    #[arg(long, value_delimiter = ',')]
    techniques: Option<Vec<String>>,
    /// Comma-separated per-trial budgets in (0, 1].
    #[arg(long, value_delimiter = ',')]
    budgets: Option<Vec<f64>>,
    #[arg(long)]
    max_epochs: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    walk_length: Option<usize>,
    #[arg(long)]
    valid_size: Option<usize>,
    #[arg(long)]
    space_preset: Option<String>,
    #[arg(long)]
    ladder: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// An invalid argument or configuration value; exits with status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(Usage(msg.into()).into())
}

fn usage_of(e: impl std::fmt::Display) -> anyhow::Error {
    Usage(e.to_string()).into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().collect();
    let ctx = Ctx { argv, progress: !cli.quiet, started: runlog::unix_now() };
    let result = match cli.command {
        Command::Dataset(c) => dataset_cmd(&ctx, c),
        Command::Reduce(a) => reduce_cmd(&ctx, a),
        Command::Space(c) => space_cmd(c),
        Command::Search(a) => search_cmd(&ctx, a),
        Command::Train(a) => train_cmd(&ctx, a),
        Command::Eval(a) => eval_cmd(&ctx, a),
        Command::Transfer(a) => transfer_cmd(&ctx, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<std::io::Error>().is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe) => ExitCode::SUCCESS,
        Err(e) => {
            let code = if e.is::<Usage>() { 2 } else { 1 };
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            let msg = msg.replace('\n', " ");
            eprintln!("grash: error: {msg}");
            ExitCode::from(code)
        }
    }
}

struct Ctx {
    argv: Vec<String>,
    progress: bool,
    started: u64,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if self.progress {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn manifest(&self, command: &str, config: impl Serialize, dataset: Option<&Path>, seeds: &[(&str, u64)], summary: serde_json::Value) -> anyhow::Result<RunManifest> {
        let (dataset, dataset_sha256) = match dataset {
            Some(p) => (Some(p.display().to_string()), Some(tsv::dataset_hash(p)?)),
            None => (None, None),
        };
        Ok(RunManifest {
            command: command.into(),
            argv: self.argv.clone(),
            config: serde_json::to_value(config)?,
            dataset,
            dataset_sha256,
            seeds: seeds.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            started_unix: self.started,
            finished_unix: runlog::unix_now(),
            summary,
        })
    }
}

fn create_dir(out: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))
}

fn load_config(path: Option<&Path>) -> anyhow::Result<FileConfig> {
    match path {
        Some(p) => FileConfig::load(p).map_err(usage_of),
        None => Ok(FileConfig::default()),
    }
}

fn resolve_model(flags: &ModelArgs, file: &config::ModelSection) -> anyhow::Result<ModelSpec> {
    let d = ModelSpec::default();
    let scorer: Scorer = match flags.model.as_ref().or(file.scorer.as_ref()) {
        Some(s) => s.parse().map_err(usage_of)?,
        None => d.scorer,
    };
    let norm = match flags.norm.as_ref().or(file.norm.as_ref()).map(|s| s.to_ascii_lowercase()) {
        None => d.norm,
        Some(s) if s == "l1" => Norm::L1,
        Some(s) if s == "l2" => Norm::L2,
        Some(s) => return usage(format!("norm must be l1 or l2, got {s:?}")),
    };
    let dim = flags.dim.or(file.dim).unwrap_or(d.dim);
    if dim == 0 || (scorer.is_complex() && !dim.is_multiple_of(2)) {
        return usage(format!("dim must be positive, and even for {}; got {dim}", scorer.name()));
    }
    Ok(ModelSpec { scorer, dim, norm })
}

fn resolve_space(flag: Option<&str>, file: &FileConfig) -> anyhow::Result<SearchSpace> {
    let space = file.search_space(flag).map_err(usage_of)?;
    space.validate().map_err(usage_of)?;
    Ok(space)
}

fn require_dataset(flag: Option<PathBuf>, file: &FileConfig) -> anyhow::Result<PathBuf> {
    match flag.or_else(|| file.dataset.clone()) {
        Some(p) => Ok(p),
        None => usage("a dataset is required (--dataset or `dataset` in the config file)"),
    }
}

fn out_dir(flag: Option<PathBuf>, file: &FileConfig, command: &str) -> PathBuf {
    flag.or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("grash-runs").join(command))
}

fn executor(workers: Option<usize>) -> anyhow::Result<Parallel> {
    let w = workers.unwrap_or(1);
    if w == 0 {
        return usage("workers must be at least 1");
    }
    Parallel::new(w).context("cannot start worker threads")
}

fn load_dataset(path: &Path) -> anyhow::Result<DatasetSplit> {
    let d = tsv::load_dataset(path)?;
    if d.train.is_empty() {
        bail!("{}: training split is empty", path.display());
    }
    Ok(d)
}

/// The ladder from `path` if it exists, else computed and saved to `save`.
fn obtain_ladder(path: Option<&Path>, graph: &KnowledgeGraph, save: &Path, ctx: &Ctx) -> anyhow::Result<CoreLadder> {
    let l = match path {
        Some(p) if p.is_file() => ladder::read_for(p, graph)?,
        _ => {
            ctx.note("computing core decomposition");
            core_decomposition(graph)
        }
    };
    ladder::write(save, &l)?;
    Ok(l)
}

// ---------------------------------------------------------------- dataset

/// Degree statistics of the entities and relations occurring in `triples`.
fn split_stats(triples: &[grash_core::Triple], n_ent: usize, n_rel: usize) -> grash_core::GraphStats {
    let mut deg = vec![0u32; n_ent];
    let mut rel = vec![false; n_rel];
    for t in triples {
        deg[t.s as usize] += 1;
        deg[t.o as usize] += 1;
        rel[t.p as usize] = true;
    }
    let used: Vec<u32> = deg.into_iter().filter(|&d| d > 0).collect();
    grash_core::GraphStats {
        entities: used.len(),
        relations: rel.iter().filter(|&&r| r).count(),
        triples: triples.len(),
        min_degree: used.iter().copied().min().unwrap_or(0),
        mean_degree: used.iter().map(|&d| d as f64).sum::<f64>() / used.len().max(1) as f64,
        max_degree: used.iter().copied().max().unwrap_or(0),
    }
}

fn dataset_cmd(ctx: &Ctx, cmd: DatasetCmd) -> anyhow::Result<()> {
    match cmd {
        DatasetCmd::Stats { path } => {
            let d = load_dataset(&path)?;
            out!("dataset   {}", path.display());
            out!("entities  {}", d.num_entities());
            out!("relations {}", d.num_relations());
            for (name, triples) in [("train", &d.train), ("valid", &d.valid), ("test", &d.test)] {
                if triples.is_empty() {
                    continue;
                }
                let s = split_stats(triples, d.num_entities(), d.num_relations());
                out!(
                    "{name:<5} triples {:>9}  entities {:>8}  relations {:>5}  degree min {} mean {:.2} max {}",
                    s.triples, s.entities, s.relations, s.min_degree, s.mean_degree, s.max_degree
                );
            }
            if d.dropped_valid + d.dropped_test > 0 {
                out!(
                    "dropped   {} valid and {} test triples with entities or relations unseen in train",
                    d.dropped_valid, d.dropped_test
                );
            }
            Ok(())
        }
        DatasetCmd::Split { path, valid_size, test_size, seed, out } => {
            let source = if path.is_dir() { path.join(tsv::SPLIT_FILES[0]) } else { path.clone() };
            let (g, dups) = tsv::load_graph(&source)?;
            if valid_size == 0 {
                return usage("valid-size must be at least 1");
            }
            if valid_size + test_size >= g.num_triples() {
                return usage(format!(
                    "valid-size + test-size must be below the number of triples ({})",
                    g.num_triples()
                ));
            }
            let held = split_train_valid(&g, valid_size + test_size, seed)?;
            let mut valid = held.valid;
            let keep = ((valid.len() * valid_size) as f64 / (valid_size + test_size) as f64).round() as usize;
            let test = valid.split_off(keep);
            let d = DatasetSplit { valid, test, ..held };
            create_dir(&out)?;
            tsv::write_dataset(&out, &d)?;
            let summary = json!({
                "duplicates_dropped": dups,
                "train": d.train.len(),
                "valid": d.valid.len(),
                "test": d.test.len(),
                "held_out_dropped": d.dropped_valid,
            });
            let cfg = json!({"valid_size": valid_size, "test_size": test_size});
            runlog::write_json(&out.join(runlog::MANIFEST), &ctx.manifest("dataset split", cfg, Some(&source), &[("split", seed)], summary)?)?;
            ctx.note(format!(
                "wrote {} train, {} valid, {} test triples to {}",
                d.train.len(),
                d.valid.len(),
                d.test.len(),
                out.display()
            ));
            Ok(())
        }
        DatasetCmd::Synthetic { entities, relations, triples, clusters, alpha, noise, valid_size, test_size, seed, out } => {
            let p = SyntheticParams { entities, relations, triples, clusters, alpha, noise, seed };
            let d = synthetic::dataset(&p, valid_size, test_size).map_err(usage_of)?;
            create_dir(&out)?;
            tsv::write_dataset(&out, &d)?;
            let summary = json!({"entities": d.num_entities(), "train": d.train.len(), "valid": d.valid.len(), "test": d.test.len()});
            let cfg = json!({"params": p, "valid_size": valid_size, "test_size": test_size});
            runlog::write_json(&out.join(runlog::MANIFEST), &ctx.manifest("dataset synthetic", cfg, None, &[("synthetic", seed)], summary)?)?;
            ctx.note(format!("wrote synthetic dataset to {}", out.display()));
            Ok(())
        }
    }
}

// ----------------------------------------------------------------- reduce

fn reduce_cmd(ctx: &Ctx, a: ReduceArgs) -> anyhow::Result<()> {
    let d = load_dataset(&a.dataset)?;
    let g = d.train_graph()?;
    if let Some(t) = a.target {
        if !(t > 0.0 && t <= 1.0) {
            return usage(format!("target must be in (0, 1], got {t}"));
        }
    }
    create_dir(&a.out)?;
    let mut extra = json!({});
    let sub = match a.method {
        Method::Triple => {
            let Some(t) = a.target else { return usage("--method triple needs --target") };
            triple_sample(&g, t, a.seed)?
        }
        Method::Walk => {
            if a.length == 0 {
                return usage("length must be at least 1");
            }
            match (a.target, a.starts) {
                (Some(t), None) => random_walk_for_fidelity(&g, t, a.length, a.seed)?,
                (None, Some(s)) => random_walk_sample(&g, s, a.length, a.seed).map_err(|e| match e {
                    grash_core::Error::TooManyStarts { .. } => usage_of(e),
                    e => e.into(),
                })?,
                _ => return usage("--method walk needs exactly one of --target and --starts"),
            }
        }
        Method::Kcore => {
            let l = obtain_ladder(a.ladder.as_deref(), &g, &a.out.join("ladder.txt"), ctx)?;
            let k = match (a.target, a.k) {
                (Some(t), None) => {
                    let choice = grash_core::reduce::select_core_for_fidelity(&l, t);
                    if choice.overshoot {
                        ctx.note(format!("warning: even the {}-core is above the target", choice.k));
                    }
                    extra = json!({"overshoot": choice.overshoot});
                    choice.k
                }
                (None, Some(k)) => k,
                _ => return usage("--method kcore needs exactly one of --target and --k"),
            };
            k_core(&g, k, &l).map_err(|e| match e {
                grash_core::Error::EmptyCore { .. } => usage_of(e),
                e => e.into(),
            })?
        }
    };
    let triples: Vec<grash_core::Triple> = sub.graph.triples().to_vec();
    tsv::write_triples(&a.out.join("triples.txt"), sub.graph.vocabulary(), &triples)?;
    let summary = json!({
        "provenance": sub.provenance,
        "entities": sub.graph.num_entities(),
        "relations": sub.graph.num_relations(),
        "triples": sub.graph.num_triples(),
        "parent_entities": sub.parent_entity_count,
        "parent_triples": sub.parent_triple_count,
        "triple_fraction": sub.triple_fraction(),
        "extra": extra,
    });
    out!(
        "{} triples ({:.4} of {}), {} entities",
        sub.graph.num_triples(),
        sub.triple_fraction(),
        sub.parent_triple_count,
        sub.graph.num_entities()
    );
    let cfg = json!({
        "method": format!("{:?}", a.method).to_lowercase(),
        "target": a.target, "k": a.k, "starts": a.starts, "length": a.length,
    });
    let m = ctx.manifest("reduce", cfg, Some(&a.dataset), &[("reduce", a.seed)], summary)?;
    runlog::write_json(&a.out.join(runlog::MANIFEST), &m)?;
    Ok(())
}

// ------------------------------------------------------------------ space

fn space_cmd(cmd: SpaceCmd) -> anyhow::Result<()> {
    match cmd {
        SpaceCmd::Sample { n, seed, model, preset, config, out } => {
            let file = load_config(config.as_deref())?;
            let space = resolve_space(preset.as_deref(), &file)?;
            let scorer: Scorer = model.parse().map_err(usage_of)?;
            let configs = sample_configs(&space, n, seed, scorer)?;
            let mut text = String::new();
            for c in &configs {
                text.push_str(&serde_json::to_string(c)?);
                text.push('\n');
            }
            match out {
                Some(dir) => {
                    create_dir(&dir)?;
                    let p = dir.join("configs.jsonl");
                    fs::write(&p, text).with_context(|| format!("cannot write {}", p.display()))?;
                    runlog::write_json(&dir.join("space.json"), &space)?;
                }
                None => write!(std::io::stdout().lock(), "{text}")?,
            }
            Ok(())
        }
        SpaceCmd::Show { preset, config } => {
            let file = load_config(config.as_deref())?;
            out!("{}", serde_json::to_string_pretty(&resolve_space(preset.as_deref(), &file)?)?);
            Ok(())
        }
    }
}

// ----------------------------------------------------------------- search

#[derive(Serialize)]
struct SearchSettings {
    dataset: PathBuf,
    out: PathBuf,
    workers: usize,
    params: SearchParams,
    final_epochs: Option<f64>,
    space: SearchSpace,
}

fn parse_reduction(name: &str, walk_length: usize) -> anyhow::Result<GraphReduction> {
    match name {
        "kcore" => Ok(GraphReduction::KCore),
        "triple" => Ok(GraphReduction::TripleSample),
        "walk" => Ok(GraphReduction::RandomWalk { walk_length }),
        _ => usage(format!("reduction must be kcore, triple or walk; got {name:?}")),
    }
}

fn resolve_search(a: &SearchArgs, file: &FileConfig) -> anyhow::Result<SearchSettings> {
    let s = &file.search;
    let d = SearchParams::default();
    let variant: Variant = match a.variant.as_ref().or(s.variant.as_ref()) {
        Some(v) => v.parse().map_err(usage_of)?,
        None => d.variant,
    };
    let walk_length = a.walk_length.or(s.walk_length).unwrap_or(10);
    let reduction = parse_reduction(a.reduction.as_deref().or(s.reduction.as_deref()).unwrap_or("kcore"), walk_length)?;
    let params = SearchParams {
        budget: a.budget.or(s.budget).unwrap_or(d.budget),
        num_configs: a.trials.or(s.trials).unwrap_or(d.num_configs),
        eta: a.eta.or(s.eta).unwrap_or(d.eta),
        max_epochs: a.max_epochs.or(s.max_epochs).unwrap_or(d.max_epochs),
        variant,
        valid_size: a.valid_size.or(s.valid_size).unwrap_or(d.valid_size),
        reduction,
        seed: a.seed.or(s.seed).unwrap_or(d.seed),
        model: resolve_model(&a.model, &file.model)?,
    };
    params.validate().map_err(usage_of)?;
    let final_epochs = a.final_epochs.or(s.final_epochs);
    if let Some(e) = final_epochs {
        if !(e > 0.0 && e.is_finite()) {
            return usage("final_epochs must be positive");
        }
    }
    let workers = a.workers.or(file.workers).unwrap_or(1);
    if workers == 0 {
        return usage("workers must be at least 1");
    }
    Ok(SearchSettings {
        dataset: require_dataset(a.dataset.clone(), file)?,
        out: out_dir(a.out.clone(), file, "search"),
        workers,
        params,
        final_epochs,
        space: resolve_space(a.space_preset.as_deref(), file)?,
    })
}

fn eval_report(valid: Option<grash_core::RankingReport>, test: Option<grash_core::RankingReport>) -> EvalReport {
    let strip = |r: grash_core::RankingReport| grash_core::RankingReport { ranks: Vec::new(), ..r };
    EvalReport { valid: valid.map(strip), test: test.map(strip) }
}

fn search_cmd(ctx: &Ctx, a: SearchArgs) -> anyhow::Result<()> {
    let file = load_config(a.config.as_deref())?;
    let st = resolve_search(&a, &file)?;
    let p = &st.params;
    let d = load_dataset(&st.dataset)?;
    let g = d.train_graph()?;
    let exec = executor(Some(st.workers))?;
    create_dir(&st.out)?;
    let ladder = match (p.variant, p.reduction) {
        (Variant::Epoch, _) | (_, GraphReduction::TripleSample | GraphReduction::RandomWalk { .. }) => None,
        _ => Some(obtain_ladder(a.ladder.as_deref(), &g, &st.out.join("ladder.txt"), ctx)?),
    };
    let configs = sample_configs(&st.space, p.num_configs, p.seed, p.model.scorer)?;
    ctx.note(format!(
        "search: {} configs, eta {}, budget {}, variant {}, {} train triples",
        p.num_configs,
        p.eta,
        p.budget,
        p.variant.name(),
        g.num_triples()
    ));
    let trials_path = st.out.join(runlog::TRIALS);
    let f = fs::File::create(&trials_path).with_context(|| format!("cannot create {}", trials_path.display()))?;
    let mut log = TrialLog::new(BufWriter::new(f), &configs, ctx.progress);
    let outcome = run_search(&g, &configs, p, ladder.as_ref(), &exec, &mut log);
    log.finish(&trials_path)?;
    let outcome = outcome?;
    for w in &outcome.schedule.warnings {
        ctx.note(format!("warning: {w}"));
    }
    runlog::write_json(&st.out.join(runlog::SCHEDULE), &outcome.schedule)?;
    runlog::write_json(&st.out.join(runlog::BEST_CONFIG), &outcome.best)?;
    ctx.note(format!("best: {} (budget spent {:.3} of {})", outcome.best.summary(), outcome.ledger.spent, p.budget));

    let mut summary = json!({
        "rounds": outcome.schedule.rounds.len(),
        "best_config_id": outcome.best.id,
        "budget_spent": outcome.ledger.spent,
        "per_round": outcome.ledger.per_round,
        "survivors": outcome.survivors,
        "round_graphs": outcome.rounds,
        "warnings": outcome.schedule.warnings,
    });
    let final_epochs = st.final_epochs.unwrap_or(p.max_epochs);
    if !a.no_final {
        ctx.note(format!("final training for {final_epochs} epochs"));
        let fin = final_train(&d, &outcome.best, &p.model, final_epochs, p.seed)?;
        checkpoint::write(&st.out.join(runlog::CHECKPOINT), &fin.model, &d.vocab)?;
        let report = eval_report(Some(fin.valid), fin.test);
        runlog::write_json(&st.out.join(runlog::REPORT), &report)?;
        for (name, r) in [("valid", &report.valid), ("test", &report.test)] {
            if let Some(r) = r {
                ctx.note(runlog::format_report(name, r));
            }
        }
        summary["final_valid_mrr"] = json!(report.valid.as_ref().map(|r| r.mrr));
        summary["final_test_mrr"] = json!(report.test.as_ref().map(|r| r.mrr));
    }
    let seeds = [("search", p.seed), ("final", p.seed)];
    let m = ctx.manifest("search", &st, Some(&st.dataset), &seeds, summary)?;
    runlog::write_json(&st.out.join(runlog::MANIFEST), &m)?;
    Ok(())
}

// ------------------------------------------------------------------ train

fn train_cmd(ctx: &Ctx, a: TrainArgs) -> anyhow::Result<()> {
    let file = load_config(a.config.as_deref())?;
    let dataset = require_dataset(a.dataset.clone(), &file)?;
    let model = resolve_model(&a.model, &file.model)?;
    let epochs = a.epochs.or(file.search.final_epochs).or(file.search.max_epochs).unwrap_or(20.0);
    if !(epochs > 0.0 && epochs.is_finite()) {
        return usage("epochs must be positive");
    }
    let seed = a.seed.or(file.search.seed).unwrap_or(0);
    let out = out_dir(a.out.clone(), &file, "train");
    let hp: HyperparamConfig = runlog::read_json(&a.hyperparams).map_err(usage_of)?;
    let d = load_dataset(&dataset)?;
    create_dir(&out)?;
    ctx.note(format!("training {} for {epochs} epochs", hp.summary()));
    let fin = final_train(&d, &hp, &model, epochs, seed)?;
    checkpoint::write(&out.join(runlog::CHECKPOINT), &fin.model, &d.vocab)?;
    let report = eval_report(Some(fin.valid), fin.test);
    runlog::write_json(&out.join(runlog::REPORT), &report)?;
    for (name, r) in [("valid", &report.valid), ("test", &report.test)] {
        if let Some(r) = r {
            out!("{}", runlog::format_report(name, r));
        }
    }
    let cfg = json!({"model": model, "epochs": epochs, "hyperparams": hp});
    let summary = json!({"epoch_losses": fin.trace.epoch_losses, "valid_mrr": report.valid.as_ref().map(|r| r.mrr)});
    let m = ctx.manifest("train", cfg, Some(&dataset), &[("train", seed)], summary)?;
    runlog::write_json(&out.join(runlog::MANIFEST), &m)?;
    Ok(())
}

// ------------------------------------------------------------------- eval

fn eval_cmd(ctx: &Ctx, a: EvalArgs) -> anyhow::Result<()> {
    let (model, vocab) = checkpoint::read(&a.checkpoint)?;
    let d = load_dataset(&a.dataset)?;
    if vocab != d.vocab {
        bail!(
            "{} does not match the vocabulary of {} ({} / {} entities, {} / {} relations)",
            a.checkpoint.display(),
            a.dataset.display(),
            vocab.entities.len(),
            d.vocab.entities.len(),
            vocab.relations.len(),
            d.vocab.relations.len()
        );
    }
    let filter = FilterIndex::new(d.all_triples());
    let want = |s: SplitChoice| a.split == s || a.split == SplitChoice::Both;
    let run = |triples: &[grash_core::Triple], on: bool| (on && !triples.is_empty()).then(|| evaluate_with(&model, triples, &filter));
    let report = eval_report(run(&d.valid, want(SplitChoice::Valid)), run(&d.test, want(SplitChoice::Test)));
    if report.valid.is_none() && report.test.is_none() {
        bail!("{}: no evaluation triples in the requested split", a.dataset.display());
    }
    for (name, r) in [("valid", &report.valid), ("test", &report.test)] {
        if let Some(r) = r {
            out!("{}", runlog::format_report(name, r));
        }
    }
    if let Some(out) = &a.out {
        create_dir(out)?;
        runlog::write_json(&out.join(runlog::REPORT), &report)?;
        let cfg = json!({"checkpoint": a.checkpoint, "split": format!("{:?}", a.split).to_lowercase()});
        let m = ctx.manifest("eval", cfg, Some(&a.dataset), &[], json!({}))?;
        runlog::write_json(&out.join(runlog::MANIFEST), &m)?;
    }
    Ok(())
}

// --------------------------------------------------------------- transfer

#[derive(Serialize)]
struct TransferSettings {
    dataset: PathBuf,
    out: PathBuf,
    workers: usize,
    configs: usize,
    points: Vec<(String, f64)>,
    sweep: SweepParams,
    space: SearchSpace,
}

fn transfer_cmd(ctx: &Ctx, a: TransferArgs) -> anyhow::Result<()> {
    let file = load_config(a.config.as_deref())?;
    let t = &file.transfer;
    let s = &file.search;
    let techniques: Vec<Technique> = a
        .techniques
        .clone()
        .or_else(|| t.techniques.clone())
        .unwrap_or_else(|| Technique::ALL.iter().map(|t| t.name().to_string()).collect())
        .iter()
        .map(|n| n.trim().parse().map_err(usage_of))
        .collect::<anyhow::Result<_>>()?;
    let budgets = a.budgets.clone().or_else(|| t.budgets.clone()).unwrap_or_else(|| vec![0.01, 0.05, 0.1, 0.25, 0.5]);
    if let Some(b) = budgets.iter().find(|b| !(**b > 0.0 && **b <= 1.0)) {
        return usage(format!("budgets must be in (0, 1], got {b}"));
    }
    let n = a.configs.or(t.configs).unwrap_or(30);
    if n < 2 {
        return usage("configs must be at least 2 for a rank correlation");
    }
    let sweep = SweepParams {
        model: resolve_model(&a.model, &file.model)?,
        max_epochs: a.max_epochs.or(s.max_epochs).unwrap_or(20.0),
        valid_size: a.valid_size.or(s.valid_size).unwrap_or(5000),
        walk_length: a.walk_length.or(s.walk_length).unwrap_or(10),
        seed: a.seed.or(s.seed).unwrap_or(0),
    };
    if !(sweep.max_epochs > 0.0 && sweep.max_epochs.is_finite()) {
        return usage("max_epochs must be positive");
    }
    if sweep.valid_size == 0 || sweep.walk_length == 0 {
        return usage("valid_size and walk_length must be at least 1");
    }
    let points: Vec<(Technique, f64)> = techniques.iter().flat_map(|&t| budgets.iter().map(move |&b| (t, b))).collect();
    let st = TransferSettings {
        dataset: require_dataset(a.dataset.clone(), &file)?,
        out: out_dir(a.out.clone(), &file, "transfer"),
        workers: a.workers.or(file.workers).unwrap_or(1),
        configs: n,
        points: points.iter().map(|(t, b)| (t.name().to_string(), *b)).collect(),
        sweep,
        space: resolve_space(a.space_preset.as_deref(), &file)?,
    };
    let exec = executor(Some(st.workers))?;
    let d = load_dataset(&st.dataset)?;
    let g = d.train_graph()?;
    create_dir(&st.out)?;
    let needs_ladder = points.iter().any(|(t, b)| matches!(t, Technique::KCore | Technique::Combined) && *b < 1.0);
    let ladder = if needs_ladder { Some(obtain_ladder(a.ladder.as_deref(), &g, &st.out.join("ladder.txt"), ctx)?) } else { None };
    let configs = sample_configs(&st.space, n, st.sweep.seed, st.sweep.model.scorer)?;
    ctx.note(format!("transfer: {n} configs, {} points", points.len()));
    let outcome = transferability_sweep(&g, &configs, &points, &st.sweep, ladder.as_ref(), &exec)?;

    let mut table = String::from("technique\tbudget\tspearman\tepochs\ttriples\tcore_k\tcost\tfailed\n");
    for r in &outcome.reports {
        table.push_str(&format!(
            "{}\t{}\t{}\t{:.4}\t{}\t{}\t{:.6}\t{}\n",
            r.technique.name(),
            r.budget,
            r.spearman.map_or("nan".into(), |v| format!("{v:.4}")),
            r.epochs,
            r.graph_triples,
            r.core_k.map_or("-".into(), |k| k.to_string()),
            r.cost,
            r.failed
        ));
    }
    fs::write(st.out.join("transfer.tsv"), &table).context("cannot write transfer.tsv")?;
    runlog::write_json(&st.out.join("transfer.json"), &outcome)?;
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(table.as_bytes())?;
    let by_point: BTreeMap<String, Option<f64>> = outcome
        .reports
        .iter()
        .map(|r| (format!("{}@{}", r.technique.name(), r.budget), r.spearman))
        .collect();
    let m = ctx.manifest("transfer", &st, Some(&st.dataset), &[("sweep", st.sweep.seed)], json!({"spearman": by_point}))?;
    runlog::write_json(&st.out.join(runlog::MANIFEST), &m)?;
    Ok(())
}
