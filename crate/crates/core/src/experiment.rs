//! With/without-contrastive comparison runs.
//!
//! Each arm trains `runs` times with seeds `base_seed + i`, evaluates the
//! test split under the filtered protocol and reports per-run and mean
//! metrics. With both arms, the two MRR samples go through a two-sample
//! t-test. The report holds no timings, so identical specs give identical
//! reports.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::{evaluate_split, students_t_test, FilterIndex, RankingReport, TTestReport, HITS_AT};
use crate::graph::Dataset;
use crate::miner::{mine_positive_dict, MineOptions, PositiveDict};
use crate::par::{self, Exec};
use crate::train::{train_with, LossBreakdown, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    BaselineOnly,
    SymclOnly,
    Both,
}

impl std::str::FromStr for Ablation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "baseline_only" | "baseline" => Ok(Ablation::BaselineOnly),
            "symcl_only" | "symcl" => Ok(Ablation::SymclOnly),
            "both" => Ok(Ablation::Both),
            _ => Err(format!("expected baseline-only, symcl-only or both, got '{s}'")),
        }
    }
}

impl Ablation {
    fn arms(self) -> &'static [Arm] {
        match self {
            Ablation::BaselineOnly => &[Arm::Baseline],
            Ablation::SymclOnly => &[Arm::Symcl],
            Ablation::Both => &[Arm::Baseline, Arm::Symcl],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Arm {
    Baseline,
    Symcl,
}

impl Arm {
    fn name(self) -> &'static str {
        match self {
            Arm::Baseline => "baseline",
            Arm::Symcl => "symcl",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub train: PathBuf,
    pub valid: Option<PathBuf>,
    pub test: PathBuf,
    pub config: TrainConfig,
    pub ablation: Ablation,
    pub runs: usize,
    pub base_seed: u64,
    pub max_degree: Option<usize>,
    /// Train the runs of an arm concurrently. Results are unchanged.
    pub parallel_runs: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub mrr: f64,
    pub hits: BTreeMap<u32, f64>,
}

impl From<&RankingReport> for Metrics {
    fn from(r: &RankingReport) -> Self {
        Metrics {
            mrr: r.mrr,
            hits: r.hits.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub seed: u64,
    #[serde(flatten)]
    pub metrics: Metrics,
    pub final_loss: Option<LossBreakdown>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmReport {
    pub arm: String,
    pub runs: Vec<RunResult>,
    pub mean: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub entities: usize,
    pub relations: usize,
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub dataset: DatasetSummary,
    pub config: TrainConfig,
    pub ablation: Ablation,
    pub runs: usize,
    pub base_seed: u64,
    /// Ordered positive pairs in the mined dictionary, when one was mined.
    pub positive_pairs: Option<usize>,
    pub arms: Vec<ArmReport>,
    pub ttest: Option<TTestReport>,
}

impl ExperimentReport {
    pub fn arm(&self, name: &str) -> Option<&ArmReport> {
        self.arms.iter().find(|a| a.arm == name)
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let ds = Dataset::load(&spec.train, spec.valid.as_deref(), Some(&spec.test))?;
    run_on_dataset(&ds, spec)
}

/// Runs the comparison on an already loaded dataset; `spec`'s paths are
/// ignored.
pub fn run_on_dataset(ds: &Dataset, spec: &ExperimentSpec) -> Result<ExperimentReport> {
    if spec.runs == 0 {
        return Err(Error::InvalidInput("runs must be at least 1".into()));
    }
    if ds.test.is_empty() {
        return Err(Error::InvalidInput("test split is empty".into()));
    }
    let needs_dict = spec.ablation.arms().contains(&Arm::Symcl);
    let dict = if needs_dict {
        let opts = MineOptions {
            max_degree: spec.max_degree,
            ..Default::default()
        };
        Some(
            mine_positive_dict(&ds.graph, spec.config.k, &opts)
                .map_err(|e| e.context("mining positive dictionary"))?
                .dict,
        )
    } else {
        None
    };
    let filter = FilterIndex::new(&ds.known_triples());

    let mut arms = Vec::new();
    for &arm in spec.ablation.arms() {
        let arm_dict = match arm {
            Arm::Baseline => None,
            Arm::Symcl => dict.as_ref(),
        };
        let seeds: Vec<u64> = (0..spec.runs as u64).map(|i| spec.base_seed + i).collect();
        let exec = if spec.parallel_runs { Exec::Parallel } else { Exec::Sequential };
        let runs = par::map(exec, &seeds, |&seed| run_once(ds, arm_dict, &spec.config, seed, &filter))
            .into_iter()
            .zip(&seeds)
            .map(|(r, seed)| r.map_err(|e| e.context(format!("arm {}, run seed {seed}", arm.name()))))
            .collect::<Result<Vec<_>>>()?;
        let mean = mean_metrics(&runs);
        arms.push(ArmReport {
            arm: arm.name().to_owned(),
            runs,
            mean,
        });
    }

    let ttest = if let [base, symcl] = arms.as_slice() {
        let a: Vec<f64> = symcl.runs.iter().map(|r| r.metrics.mrr).collect();
        let b: Vec<f64> = base.runs.iter().map(|r| r.metrics.mrr).collect();
        if a.len() >= 2 {
            Some(students_t_test(&a, &b)?)
        } else {
            None
        }
    } else {
        None
    };

    Ok(ExperimentReport {
        dataset: DatasetSummary {
            entities: ds.entity_count(),
            relations: ds.relation_count(),
            train: ds.train.len(),
            valid: ds.valid.len(),
            test: ds.test.len(),
        },
        config: spec.config.clone(),
        ablation: spec.ablation,
        runs: spec.runs,
        base_seed: spec.base_seed,
        positive_pairs: dict.as_ref().map(PositiveDict::pair_count),
        arms,
        ttest,
    })
}

fn run_once(
    ds: &Dataset,
    dict: Option<&PositiveDict>,
    base: &TrainConfig,
    seed: u64,
    filter: &FilterIndex,
) -> Result<RunResult> {
    let cfg = TrainConfig {
        seed,
        ..base.clone()
    };
    let outcome = train_with(&ds.graph, dict, &cfg, Exec::default(), |_| {})?;
    let report = evaluate_split(&outcome.table, cfg.scorer, &ds.test, filter, Exec::default())?;
    Ok(RunResult {
        seed,
        metrics: Metrics::from(&report),
        final_loss: outcome.log.last().map(|l| l.loss),
    })
}

fn mean_metrics(runs: &[RunResult]) -> Metrics {
    let n = runs.len() as f64;
    let mrr = runs.iter().map(|r| r.metrics.mrr).sum::<f64>() / n;
    let hits = HITS_AT
        .iter()
        .map(|&k| (k, runs.iter().map(|r| r.metrics.hits[&k]).sum::<f64>() / n))
        .collect();
    Metrics { mrr, hits }
}
