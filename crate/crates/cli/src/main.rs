//! `symcl` command-line front end.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use symcl::config::parse_config;
use symcl::eval::{
    evaluate_split, probe_report, students_t_test, train_probe, FilterIndex, ProbeConfig, RankingReport,
};
use symcl::experiment::{run_experiment, Ablation, ExperimentReport, ExperimentSpec};
use symcl::graph::{Dataset, EntityId};
use symcl::miner::{load_dict, mine_positive_dict, save_dict, structure_stats, MineOptions};
use symcl::par::Exec;
use symcl::seed;
use symcl::train::{load_checkpoint, save_checkpoint, train_with, EmbeddingTable};

#[derive(Parser)]
#[command(name = "symcl", version, about = "Relation-symmetrical contrastive training for knowledge graph embeddings")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Suppress progress output on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine the positive dictionary of a training file.
    Mine {
        #[arg(long)]
        train: PathBuf,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=3))]
        k: u32,
        #[arg(long)]
        out: PathBuf,
        /// Skip pivots whose union-graph degree exceeds this.
        #[arg(long)]
        max_degree: Option<usize>,
    },
    /// Count relation-symmetrical structures per hop count.
    Stats {
        #[arg(long)]
        train: PathBuf,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=3))]
        k: u32,
        #[arg(long)]
        max_degree: Option<usize>,
    },
    /// Train an embedding table and write a checkpoint.
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        valid: Option<PathBuf>,
        /// Include test entities in the vocabulary so the checkpoint covers them.
        #[arg(long)]
        test: Option<PathBuf>,
        /// Positive dictionary; without one the contrastive term is zero.
        #[arg(long)]
        dict: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Filtered link-prediction metrics on the test split.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        valid: Option<PathBuf>,
        #[arg(long)]
        test: PathBuf,
    },
    /// Linear-probe classification accuracy of frozen entity embeddings.
    Probe {
        #[arg(long)]
        ckpt: PathBuf,
        /// entity-label TAB class-label.
        #[arg(long)]
        labels: PathBuf,
        /// Held-out labels; without it a seeded fraction of --labels is held out.
        #[arg(long)]
        test_labels: Option<PathBuf>,
        /// Triple files the checkpoint was trained on, to rebuild entity ids.
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        valid: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long, default_value_t = 0.2)]
        holdout: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = ProbeConfig::default().learning_rate)]
        lr: f64,
        #[arg(long, default_value_t = ProbeConfig::default().steps)]
        steps: usize,
    },
    /// Two-sample t-test on comma- or line-separated numbers.
    Ttest {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Train and evaluate with and without the contrastive term.
    Experiment {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        valid: Option<PathBuf>,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "both")]
        ablation: Ablation,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        base_seed: u64,
        #[arg(long)]
        max_degree: Option<usize>,
        /// Train the runs of an arm concurrently.
        #[arg(long)]
        parallel_runs: bool,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

/// Flags that override configuration file values.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    negatives: Option<String>,
    #[arg(long)]
    margin: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    scorer: Option<String>,
    #[arg(long)]
    task_loss: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> Vec<(String, String)> {
        [
            ("k", &self.k),
            ("m", &self.m),
            ("alpha", &self.alpha),
            ("dim", &self.dim),
            ("lr", &self.lr),
            ("epochs", &self.epochs),
            ("batch_size", &self.batch_size),
            ("negatives", &self.negatives),
            ("margin", &self.margin),
            ("seed", &self.seed),
            ("scorer", &self.scorer),
            ("task_loss", &self.task_loss),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_owned(), v.clone())))
        .collect()
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Mine { .. } => "mine",
            Command::Stats { .. } => "stats",
            Command::Train { .. } => "train",
            Command::Eval { .. } => "eval",
            Command::Probe { .. } => "probe",
            Command::Ttest { .. } => "ttest",
            Command::Experiment { .. } => "experiment",
        }
    }
}

struct Out {
    json: bool,
    quiet: bool,
}

impl Out {
    fn progress(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn json(&self, value: &impl Serialize) -> Result<()> {
        println!("{}", serde_json::to_string(value)?);
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let name = cli.command.name();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("symcl {name}: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 1 for bad flag values, 3 for numeric blow-ups, 2 for everything else.
fn exit_code(e: &anyhow::Error) -> u8 {
    let Some(err) = e.chain().find_map(|c| c.downcast_ref::<symcl::Error>()) else {
        return 2;
    };
    match err.root() {
        symcl::Error::NonFiniteLoss { .. } => 3,
        symcl::Error::BadValue { line: None, .. } | symcl::Error::UnknownKey { line: 0, .. } => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        set_threads(n)?;
    }
    let out = Out {
        json: cli.json,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Mine {
            train,
            k,
            out: path,
            max_degree,
        } => mine(&out, &train, k, &path, max_degree),
        Command::Stats { train, k, max_degree } => stats(&out, &train, k, max_degree),
        Command::Train {
            train,
            valid,
            test,
            dict,
            config,
            out: path,
            overrides,
        } => train_cmd(
            &out,
            &train,
            valid.as_deref(),
            test.as_deref(),
            dict.as_deref(),
            config.as_deref(),
            &path,
            &overrides,
        ),
        Command::Eval {
            ckpt,
            train,
            valid,
            test,
        } => eval(&out, &ckpt, &train, valid.as_deref(), &test),
        Command::Probe {
            ckpt,
            labels,
            test_labels,
            train,
            valid,
            test,
            holdout,
            seed,
            lr,
            steps,
        } => probe(
            &out,
            &ckpt,
            &labels,
            test_labels.as_deref(),
            &train,
            valid.as_deref(),
            test.as_deref(),
            holdout,
            seed,
            &ProbeConfig { learning_rate: lr, steps },
        ),
        Command::Ttest { a, b } => ttest(&out, &a, &b),
        Command::Experiment {
            train,
            valid,
            test,
            config,
            ablation,
            runs,
            base_seed,
            max_degree,
            parallel_runs,
            out: path,
            overrides,
        } => {
            let spec = ExperimentSpec {
                train,
                valid,
                test,
                config: parse_config(config.as_deref(), &overrides.pairs())?,
                ablation,
                runs: runs as usize,
                base_seed,
                max_degree,
                parallel_runs,
            };
            experiment(&out, &spec, path.as_deref())
        }
    }
}

#[cfg(feature = "parallel")]
fn set_threads(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_: usize) -> Result<()> {
    Ok(())
}

fn load_dataset(train: &Path, valid: Option<&Path>, test: Option<&Path>) -> Result<Dataset> {
    Ok(Dataset::load(train, valid, test)?)
}

#[derive(Serialize)]
struct MineSummary<'a> {
    k: u32,
    entities: usize,
    positive_pairs: usize,
    anchors_with_positives: usize,
    out: &'a Path,
}

fn mine(out: &Out, train: &Path, k: u32, path: &Path, max_degree: Option<usize>) -> Result<()> {
    let ds = load_dataset(train, None, None)?;
    let opts = MineOptions {
        max_degree,
        ..Default::default()
    };
    let start = Instant::now();
    let dict = mine_positive_dict(&ds.graph, k, &opts)?.dict;
    out.progress(format!("mined in {:.3}s", start.elapsed().as_secs_f64()));
    save_dict(&dict, path)?;
    let summary = MineSummary {
        k,
        entities: dict.entity_count(),
        positive_pairs: dict.pair_count(),
        anchors_with_positives: (0..dict.entity_count() as u32)
            .filter(|&e| !dict.targets(EntityId(e)).is_empty())
            .count(),
        out: path,
    };
    if out.json {
        return out.json(&summary);
    }
    println!(
        "K={} entities={} pairs={} anchors_with_positives={} -> {}",
        summary.k,
        summary.entities,
        summary.positive_pairs,
        summary.anchors_with_positives,
        path.display()
    );
    Ok(())
}

fn stats(out: &Out, train: &Path, k: u32, max_degree: Option<usize>) -> Result<()> {
    let ds = load_dataset(train, None, None)?;
    let opts = MineOptions {
        max_degree,
        ..Default::default()
    };
    let start = Instant::now();
    let stats = structure_stats(&ds.graph, k, &opts)?;
    let seconds = start.elapsed().as_secs_f64();
    if out.json {
        #[derive(Serialize)]
        struct Row {
            k: u32,
            count: u64,
            total: u64,
            proportion: Option<f64>,
        }
        let rows: Vec<Row> = stats
            .per_k
            .iter()
            .map(|h| Row {
                k: h.k,
                count: h.rs_count,
                total: h.total_count,
                proportion: h.proportion(),
            })
            .collect();
        return out.json(&serde_json::json!({ "per_k": rows, "seconds": seconds }));
    }
    println!("{:>2}  {:>12}  {:>12}  {:>10}", "k", "count", "total", "proportion");
    for h in &stats.per_k {
        let p = h.proportion().map_or("-".to_owned(), |p| format!("{p:.6}"));
        println!("{:>2}  {:>12}  {:>12}  {:>10}", h.k, h.rs_count, h.total_count, p);
    }
    println!("elapsed {seconds:.3}s");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn train_cmd(
    out: &Out,
    train: &Path,
    valid: Option<&Path>,
    test: Option<&Path>,
    dict_path: Option<&Path>,
    config: Option<&Path>,
    path: &Path,
    overrides: &Overrides,
) -> Result<()> {
    let cfg = parse_config(config, &overrides.pairs())?;
    let ds = load_dataset(train, valid, test)?;
    let dict = dict_path.map(load_dict).transpose()?;
    if dict.is_none() && cfg.alpha > 0.0 {
        out.progress("no --dict given; training without the contrastive term");
    }
    let mut write_err = None;
    let outcome = train_with(&ds.graph, dict.as_ref(), &cfg, Exec::default(), |e| {
        if out.json {
            if let Err(err) = out.json(e) {
                write_err.get_or_insert(err);
            }
        } else if !out.quiet {
            println!(
                "epoch {:>4}  task {:.6}  contrastive {:.6}  total {:.6}",
                e.epoch, e.loss.task, e.loss.contrastive, e.loss.total
            );
        }
    })?;
    if let Some(err) = write_err {
        return Err(err);
    }
    save_checkpoint(&outcome.table, cfg.scorer, path)?;
    out.progress(format!("wrote {}", path.display()));
    Ok(())
}

fn checked_checkpoint(ckpt: &Path, ds: &Dataset) -> Result<(EmbeddingTable, symcl::train::ScorerKind)> {
    let (table, kind) = load_checkpoint(ckpt)?;
    if table.entity_count() < ds.entity_count() || table.relation_count() < ds.relation_count() {
        bail!(
            "{}: checkpoint covers {} entities / {} relations but the dataset has {} / {}; \
             pass the same --valid and --test files to train",
            ckpt.display(),
            table.entity_count(),
            table.relation_count(),
            ds.entity_count(),
            ds.relation_count()
        );
    }
    Ok((table, kind))
}

#[derive(Serialize)]
struct EvalSummary {
    mrr: f64,
    #[serde(rename = "hit@1")]
    hit1: f64,
    #[serde(rename = "hit@3")]
    hit3: f64,
    #[serde(rename = "hit@10")]
    hit10: f64,
    queries: usize,
}

impl From<&RankingReport> for EvalSummary {
    fn from(r: &RankingReport) -> Self {
        EvalSummary {
            mrr: r.mrr,
            hit1: r.hits_at(1),
            hit3: r.hits_at(3),
            hit10: r.hits_at(10),
            queries: r.n_queries,
        }
    }
}

fn eval(out: &Out, ckpt: &Path, train: &Path, valid: Option<&Path>, test: &Path) -> Result<()> {
    let ds = load_dataset(train, valid, Some(test))?;
    if ds.test.is_empty() {
        bail!("{}: no test triples", test.display());
    }
    let (table, kind) = checked_checkpoint(ckpt, &ds)?;
    let filter = FilterIndex::new(&ds.known_triples());
    let report = evaluate_split(&table, kind, &ds.test, &filter, Exec::default())?;
    let s = EvalSummary::from(&report);
    if out.json {
        return out.json(&s);
    }
    println!("MRR     {:.4}", s.mrr);
    println!("Hit@1   {:.4}", s.hit1);
    println!("Hit@3   {:.4}", s.hit3);
    println!("Hit@10  {:.4}", s.hit10);
    Ok(())
}

fn read_labels(path: &Path, ds: &Dataset) -> Result<Vec<(EntityId, String)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((entity, class)) = line.split_once('\t') else {
            bail!("{}:{}: expected entity TAB class", path.display(), i + 1);
        };
        let id = ds.entities.get(entity).ok_or_else(|| {
            anyhow::Error::new(symcl::Error::UnknownLabel {
                label: entity.to_owned(),
            })
            .context(format!("{}:{}", path.display(), i + 1))
        })?;
        rows.push((EntityId(id), class.to_owned()));
    }
    if rows.is_empty() {
        bail!("{}: no labelled entities", path.display());
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn probe(
    out: &Out,
    ckpt: &Path,
    labels: &Path,
    test_labels: Option<&Path>,
    train: &Path,
    valid: Option<&Path>,
    test: Option<&Path>,
    holdout: f64,
    seed: u64,
    cfg: &ProbeConfig,
) -> Result<()> {
    let ds = load_dataset(train, valid, test)?;
    let (table, _) = checked_checkpoint(ckpt, &ds)?;
    let mut fit = read_labels(labels, &ds)?;
    let held = match test_labels {
        Some(p) => read_labels(p, &ds)?,
        None => {
            if !(0.0..1.0).contains(&holdout) || holdout == 0.0 {
                bail!("--holdout must be in (0, 1)");
            }
            use rand::seq::SliceRandom;
            fit.shuffle(&mut seed::rng(seed, &[0x9b0]));
            let n = ((fit.len() as f64) * holdout).round().max(1.0) as usize;
            if n >= fit.len() {
                bail!("{}: too few labels to hold out {n}", labels.display());
            }
            fit.split_off(fit.len() - n)
        }
    };
    let classes: Vec<String> = fit
        .iter()
        .chain(&held)
        .map(|(_, c)| c.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let encode = |rows: &[(EntityId, String)]| -> Vec<(EntityId, usize)> {
        rows.iter().map(|(e, c)| (*e, index[c.as_str()])).collect()
    };
    let weights = train_probe(&table, &encode(&fit), classes.len(), cfg)?;
    let report = probe_report(&weights, &table, &encode(&held))?;
    if out.json {
        return out.json(&serde_json::json!({
            "accuracy": report.accuracy,
            "correct": report.correct,
            "total": report.total,
            "per_class": classes.iter().zip(&report.per_class)
                .map(|(c, n)| (c.clone(), n))
                .collect::<BTreeMap<_, _>>(),
        }));
    }
    println!("accuracy  {:.4}  ({}/{})", report.accuracy, report.correct, report.total);
    for (c, n) in classes.iter().zip(&report.per_class) {
        println!("  {c:<20} {}/{}", n.correct, n.total);
    }
    Ok(())
}

fn read_sample(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .with_context(|| format!("{}: '{s}' is not a number", path.display()))
        })
        .collect()
}

fn ttest(out: &Out, a: &Path, b: &Path) -> Result<()> {
    let r = students_t_test(&read_sample(a)?, &read_sample(b)?)?;
    if out.json {
        return out.json(&r);
    }
    println!("t   {:.6}", r.t_statistic);
    println!("df  {}", r.degrees_of_freedom);
    println!("p   {:.6}", r.p_value);
    Ok(())
}

fn experiment(out: &Out, spec: &ExperimentSpec, path: Option<&Path>) -> Result<()> {
    let report = run_experiment(spec)?;
    let json = serde_json::to_string_pretty(&report)?;
    if let Some(p) = path {
        fs::write(p, format!("{json}\n")).with_context(|| format!("writing {}", p.display()))?;
    }
    if out.json {
        println!("{json}");
    } else {
        print_experiment(&report);
    }
    Ok(())
}

fn print_experiment(r: &ExperimentReport) {
    println!(
        "dataset: {} entities, {} relations, {}/{}/{} triples",
        r.dataset.entities, r.dataset.relations, r.dataset.train, r.dataset.valid, r.dataset.test
    );
    if let Some(p) = r.positive_pairs {
        println!("positive pairs: {p}");
    }
    println!("{:<10} {:>6} {:>8} {:>8} {:>8} {:>8}", "arm", "seed", "MRR", "Hit@1", "Hit@3", "Hit@10");
    for arm in &r.arms {
        for run in &arm.runs {
            let m = &run.metrics;
            println!(
                "{:<10} {:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
                arm.arm, run.seed, m.mrr, m.hits[&1], m.hits[&3], m.hits[&10]
            );
        }
        let m = &arm.mean;
        println!(
            "{:<10} {:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            arm.arm, "mean", m.mrr, m.hits[&1], m.hits[&3], m.hits[&10]
        );
    }
    if let Some(t) = &r.ttest {
        println!("t-test on MRR: t={:.4} df={} p={:.6}", t.t_statistic, t.degrees_of_freedom, t.p_value);
    }
}
