//! Embedding training with the combined task + contrastive objective.
//!
//! Each epoch shuffles the training triples, and for every mini-batch:
//! draws negatives, samples up to `m` positives for the head and tail of each
//! triple from the mined dictionary, evaluates
//! `task + alpha * contrastive` with analytic gradients and takes one Adam
//! step.

mod adam;
mod checkpoint;
mod embedding;
mod loss;
mod objective;
mod scorer;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Triple, UnionGraph};
use crate::miner::PositiveDict;
use crate::par::Exec;
use crate::seed;

pub use adam::Adam;
pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use embedding::{init_embeddings, EmbeddingTable};
pub use loss::{contrastive_loss, contrastive_loss_cosine, sigmoid, softplus, TaskLoss, NORM_EPS};
pub use objective::{
    combined_loss, gradients, task_loss, AnchorTerm, BatchPlan, Gradients, LossBreakdown, NegativeSampler,
};
pub use scorer::{score, score_vectors, ScorerKind};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainConfig {
    /// Hop bound the positive dictionary must have been mined with.
    pub k: u32,
    /// Positives sampled per anchor.
    pub m: usize,
    /// Weight of the contrastive term.
    pub alpha: f64,
    pub dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub n_negatives: usize,
    pub margin: f64,
    pub seed: u64,
    pub scorer: ScorerKind,
    pub task_loss: TaskLoss,
    /// Rescale entity rows to unit norm after every step.
    pub renormalize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            k: 2,
            m: 50,
            alpha: 0.001,
            dim: 200,
            learning_rate: 1e-3,
            epochs: 500,
            batch_size: 512,
            n_negatives: 10,
            margin: 1.0,
            seed: 0,
            scorer: ScorerKind::TransE,
            task_loss: default_task_loss(ScorerKind::TransE),
            renormalize: false,
        }
    }
}

/// Margin ranking for TransE, binary cross-entropy for DistMult.
pub fn default_task_loss(kind: ScorerKind) -> TaskLoss {
    match kind {
        ScorerKind::TransE => TaskLoss::MarginRanking,
        ScorerKind::DistMult => TaskLoss::BinaryCrossEntropy,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochLog {
    /// 1-based.
    pub epoch: usize,
    #[serde(flatten)]
    pub loss: LossBreakdown,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub table: EmbeddingTable,
    pub log: Vec<EpochLog>,
}

pub fn train(g: &UnionGraph, dict: Option<&PositiveDict>, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with(g, dict, cfg, Exec::default(), |_| {})
}

/// Trains from a fresh seeded table, calling `on_epoch` after each epoch.
pub fn train_with(
    g: &UnionGraph,
    dict: Option<&PositiveDict>,
    cfg: &TrainConfig,
    exec: Exec,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    if let Some(d) = dict {
        if d.k() != cfg.k {
            return Err(Error::KMismatch {
                dict: d.k(),
                config: cfg.k,
            });
        }
        // A dictionary mined from the training file alone covers a prefix of
        // the ids; entities past it simply have no positives.
        if d.entity_count() > g.entity_count() {
            return Err(Error::InvalidInput(format!(
                "dictionary covers {} entities, graph has only {}",
                d.entity_count(),
                g.entity_count()
            )));
        }
    }
    if g.triples().is_empty() {
        return Err(Error::InvalidInput("no training triples".into()));
    }
    if cfg.batch_size == 0 || cfg.n_negatives == 0 || cfg.dim == 0 {
        return Err(Error::InvalidInput("batch_size, negatives and dim must be positive".into()));
    }

    let mut table = init_embeddings(g.entity_count(), g.relation_count(), cfg.dim, cfg.seed);
    let mut opt = Adam::new(table.as_slice().len(), cfg.learning_rate);
    let sampler = NegativeSampler::new(g.entity_count(), g.triples().iter().copied());
    let mut order: Vec<Triple> = g.triples().to_vec();
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut seed::rng(cfg.seed, &[0, epoch as u64]));
        let (mut task, mut contrastive, mut batches) = (0.0, 0.0, 0usize);
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let plan = BatchPlan::build(batch, dict, cfg, &sampler, epoch, b)?;
            let (loss, grads) = gradients(&table, &plan, cfg, exec)?;
            if !loss.is_finite() || grads.data.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss { epoch: epoch + 1, batch: b });
            }
            opt.update(table.as_mut_slice(), &grads.data, exec);
            if cfg.renormalize {
                table.normalize_entities();
            }
            task += loss.task;
            contrastive += loss.contrastive;
            batches += 1;
        }
        let entry = EpochLog {
            epoch: epoch + 1,
            loss: LossBreakdown::new(task / batches as f64, contrastive / batches as f64, cfg.alpha),
        };
        on_epoch(&entry);
        log.push(entry);
    }
    Ok(TrainOutcome { table, log })
}
