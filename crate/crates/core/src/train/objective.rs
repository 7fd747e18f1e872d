//! The combined objective `task + alpha * contrastive` over one mini-batch,
//! with analytic gradients.

use std::collections::HashSet;

use rand::Rng;
use serde::Serialize;

use super::loss::{add_contrastive_grad, contrastive_loss};
use super::scorer::{add_score_grad, score};
use super::{EmbeddingTable, TrainConfig};
use crate::error::{Error, Result};
use crate::graph::{EntityId, Triple};
use crate::miner::{sample_positives, PositiveDict};
use crate::par::{self, Exec};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub task: f64,
    pub contrastive: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(task: f64, contrastive: f64, alpha: f64) -> Self {
        LossBreakdown {
            task,
            contrastive,
            total: task + alpha * contrastive,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.task.is_finite() && self.contrastive.is_finite() && self.total.is_finite()
    }
}

/// Corrupts heads or tails uniformly, rejecting corruptions that are known
/// training facts.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    entity_count: usize,
    known: HashSet<Triple>,
}

impl NegativeSampler {
    const MAX_TRIES: usize = 64;

    pub fn new(entity_count: usize, known: impl IntoIterator<Item = Triple>) -> Self {
        NegativeSampler {
            entity_count,
            known: known.into_iter().collect(),
        }
    }

    pub fn corrupt<R: Rng>(&self, triple: &Triple, rng: &mut R) -> Triple {
        let mut candidate = *triple;
        for _ in 0..Self::MAX_TRIES {
            candidate = *triple;
            let e = EntityId(rng.gen_range(0..self.entity_count) as u32);
            if rng.gen_bool(0.5) {
                candidate.head = e;
            } else {
                candidate.tail = e;
            }
            if !self.known.contains(&candidate) {
                break;
            }
        }
        candidate
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorTerm {
    pub anchor: EntityId,
    pub positives: Vec<EntityId>,
}

/// Everything random about one mini-batch, fixed up front so the loss is a
/// pure function of the embedding table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPlan {
    pub triples: Vec<Triple>,
    /// `n_negatives` corruptions per triple, stored contiguously.
    pub negatives: Vec<Triple>,
    pub n_negatives: usize,
    /// One entry per head and tail occurrence that has at least one positive.
    pub anchors: Vec<AnchorTerm>,
}

impl BatchPlan {
    /// Draws negatives from the `(seed, epoch, batch)` stream and positives
    /// from per-anchor `(seed, epoch, anchor)` streams.
    pub fn build(
        batch: &[Triple],
        dict: Option<&PositiveDict>,
        cfg: &TrainConfig,
        sampler: &NegativeSampler,
        epoch: usize,
        batch_index: usize,
    ) -> Result<Self> {
        if let Some(d) = dict {
            if d.k() != cfg.k {
                return Err(Error::KMismatch {
                    dict: d.k(),
                    config: cfg.k,
                });
            }
        }
        let mut rng = seed::rng(cfg.seed, &[1, epoch as u64, batch_index as u64]);
        let mut negatives = Vec::with_capacity(batch.len() * cfg.n_negatives);
        for t in batch {
            for _ in 0..cfg.n_negatives {
                negatives.push(sampler.corrupt(t, &mut rng));
            }
        }
        let mut anchors = Vec::new();
        if let Some(d) = dict {
            for t in batch {
                for anchor in [t.head, t.tail] {
                    let s = seed::derive(cfg.seed, &[2, epoch as u64, anchor.0 as u64]);
                    let positives = sample_positives(d, anchor, cfg.m, s);
                    if !positives.is_empty() {
                        anchors.push(AnchorTerm { anchor, positives });
                    }
                }
            }
        }
        Ok(BatchPlan {
            triples: batch.to_vec(),
            negatives,
            n_negatives: cfg.n_negatives,
            anchors,
        })
    }

    fn negatives_of(&self, i: usize) -> &[Triple] {
        &self.negatives[i * self.n_negatives..(i + 1) * self.n_negatives]
    }
}

/// Mean pair loss over every (positive, negative) pair.
pub fn task_loss(table: &EmbeddingTable, cfg: &TrainConfig, triples: &[Triple], negatives: &[Triple]) -> f64 {
    assert!(cfg.n_negatives >= 1 && negatives.len() == triples.len() * cfg.n_negatives);
    let mut sum = 0.0;
    for (i, t) in triples.iter().enumerate() {
        let sp = score(table, cfg.scorer, t);
        for n in &negatives[i * cfg.n_negatives..(i + 1) * cfg.n_negatives] {
            sum += cfg.task_loss.pair_term(sp, score(table, cfg.scorer, n), cfg.margin).0;
        }
    }
    sum / negatives.len() as f64
}

/// Gradient buffer with the same layout as [`EmbeddingTable`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub entity_count: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Gradients {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn entity(&self, e: EntityId) -> &[f64] {
        self.row(e.index())
    }
}

/// Unscaled loss and gradient rows contributed by one batch item.
struct ItemGrad {
    loss: f64,
    rows: Vec<(usize, Vec<f64>)>,
}

fn task_item(table: &EmbeddingTable, cfg: &TrainConfig, plan: &BatchPlan, i: usize, want_grad: bool) -> ItemGrad {
    let t = &plan.triples[i];
    let d = table.dim();
    let ec = table.entity_count();
    let sp = score(table, cfg.scorer, t);
    let mut loss = 0.0;
    let mut rows = Vec::new();
    let vecs = |x: &Triple| (table.entity(x.head), table.relation(x.relation), table.entity(x.tail));
    let rows_of = |x: &Triple| [x.head.index(), ec + x.relation.index(), x.tail.index()];
    let mut pos_coef = 0.0;
    for n in plan.negatives_of(i) {
        let (l, dpos, dneg) = cfg.task_loss.pair_term(sp, score(table, cfg.scorer, n), cfg.margin);
        loss += l;
        pos_coef += dpos;
        if want_grad && dneg != 0.0 {
            let mut g = [vec![0.0; d], vec![0.0; d], vec![0.0; d]];
            let [gh, gr, gt] = &mut g;
            add_score_grad(cfg.scorer, vecs(n), dneg, (gh, gr, gt));
            rows.extend(rows_of(n).into_iter().zip(g));
        }
    }
    if want_grad && pos_coef != 0.0 {
        let mut g = [vec![0.0; d], vec![0.0; d], vec![0.0; d]];
        let [gh, gr, gt] = &mut g;
        add_score_grad(cfg.scorer, vecs(t), pos_coef, (gh, gr, gt));
        rows.extend(rows_of(t).into_iter().zip(g));
    }
    ItemGrad { loss, rows }
}

fn anchor_item(table: &EmbeddingTable, term: &AnchorTerm, want_grad: bool) -> Result<ItemGrad> {
    let anchor = table.entity(term.anchor);
    let positives: Vec<&[f64]> = term.positives.iter().map(|p| table.entity(*p)).collect();
    let loss = contrastive_loss(anchor, &positives)?;
    let mut rows = Vec::new();
    if want_grad {
        let d = table.dim();
        let mut ga = vec![0.0; d];
        let mut gp = vec![vec![0.0; d]; positives.len()];
        add_contrastive_grad(anchor, &positives, 1.0, &mut ga, &mut gp)?;
        rows.push((term.anchor.index(), ga));
        rows.extend(term.positives.iter().map(|p| p.index()).zip(gp));
    }
    Ok(ItemGrad { loss, rows })
}

fn evaluate(
    table: &EmbeddingTable,
    plan: &BatchPlan,
    cfg: &TrainConfig,
    want_grad: bool,
    exec: Exec,
) -> Result<(LossBreakdown, Option<Gradients>)> {
    if plan.triples.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let idx: Vec<usize> = (0..plan.triples.len()).collect();
    let task_items = par::map(exec, &idx, |&i| task_item(table, cfg, plan, i, want_grad));
    let anchor_items: Vec<ItemGrad> = par::map(exec, &plan.anchors, |a| anchor_item(table, a, want_grad))
        .into_iter()
        .collect::<Result<_>>()?;

    let task_scale = 1.0 / plan.negatives.len() as f64;
    let contrastive_scale = if anchor_items.is_empty() {
        0.0
    } else {
        1.0 / anchor_items.len() as f64
    };
    let task = task_items.iter().map(|x| x.loss).sum::<f64>() * task_scale;
    let contrastive = anchor_items.iter().map(|x| x.loss).sum::<f64>() * contrastive_scale;
    let breakdown = LossBreakdown::new(task, contrastive, cfg.alpha);

    if !want_grad {
        return Ok((breakdown, None));
    }
    let d = table.dim();
    let mut data = vec![0.0; table.as_slice().len()];
    let mut accumulate = |items: &[ItemGrad], scale: f64| {
        for item in items {
            for (row, g) in &item.rows {
                let dst = &mut data[row * d..(row + 1) * d];
                for (x, v) in dst.iter_mut().zip(g) {
                    *x += scale * v;
                }
            }
        }
    };
    accumulate(&task_items, task_scale);
    accumulate(&anchor_items, cfg.alpha * contrastive_scale);
    Ok((
        breakdown,
        Some(Gradients {
            entity_count: table.entity_count(),
            dim: d,
            data,
        }),
    ))
}

/// Loss of one planned batch: task mean plus `alpha` times the contrastive
/// term averaged over anchor occurrences.
pub fn combined_loss(table: &EmbeddingTable, plan: &BatchPlan, cfg: &TrainConfig) -> Result<LossBreakdown> {
    evaluate(table, plan, cfg, false, Exec::Sequential).map(|(l, _)| l)
}

/// Loss and its gradient with respect to every table entry. Rows are
/// accumulated in plan order whatever `exec` is, so results are
/// bit-identical across worker counts.
pub fn gradients(
    table: &EmbeddingTable,
    plan: &BatchPlan,
    cfg: &TrainConfig,
    exec: Exec,
) -> Result<(LossBreakdown, Gradients)> {
    let (loss, grads) = evaluate(table, plan, cfg, true, exec)?;
    Ok((loss, grads.expect("gradients requested")))
}
