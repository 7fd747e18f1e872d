//! Filtered ranking of true triples against all corruptions of one side.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{EntityId, RelationId, Triple};
use crate::par::{self, Exec};
use crate::train::{score_vectors, EmbeddingTable, ScorerKind};

pub const HITS_AT: [u32; 3] = [1, 3, 10];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Head,
    Tail,
}

/// Known true triples indexed for filtering: `(h, r) -> tails` and
/// `(r, t) -> heads`.
#[derive(Debug, Clone, Default)]
pub struct FilterIndex {
    tails: HashMap<(EntityId, RelationId), HashSet<EntityId>>,
    heads: HashMap<(RelationId, EntityId), HashSet<EntityId>>,
}

impl FilterIndex {
    pub fn new<'a>(known: impl IntoIterator<Item = &'a Triple>) -> Self {
        let mut f = FilterIndex::default();
        for t in known {
            f.insert(*t);
        }
        f
    }

    pub fn insert(&mut self, t: Triple) {
        self.tails.entry((t.head, t.relation)).or_default().insert(t.tail);
        self.heads.entry((t.relation, t.tail)).or_default().insert(t.head);
    }

    fn known(&self, q: &Triple, side: Side) -> Option<&HashSet<EntityId>> {
        match side {
            Side::Tail => self.tails.get(&(q.head, q.relation)),
            Side::Head => self.heads.get(&(q.relation, q.tail)),
        }
    }
}

fn check_ids(table: &EmbeddingTable, q: &Triple) -> Result<()> {
    for e in [q.head, q.tail] {
        if e.index() >= table.entity_count() {
            return Err(Error::UnknownEntity {
                id: e.0,
                count: table.entity_count(),
            });
        }
    }
    if q.relation.index() >= table.relation_count() {
        return Err(Error::InvalidInput(format!("relation id {} outside table", q.relation.0)));
    }
    Ok(())
}

/// Rank of the query among every substitution on `side`, skipping
/// substitutions that are known true triples (other than the query).
///
/// Ties count half: `rank = 1 + higher + equal / 2`.
pub fn filtered_rank(
    table: &EmbeddingTable,
    kind: ScorerKind,
    query: &Triple,
    side: Side,
    filter: &FilterIndex,
) -> Result<f64> {
    check_ids(table, query)?;
    let r = table.relation(query.relation);
    let (fixed, truth) = match side {
        Side::Tail => (query.head, query.tail),
        Side::Head => (query.tail, query.head),
    };
    let fixed = table.entity(fixed);
    let score_with = |e: &[f64]| match side {
        Side::Tail => score_vectors(kind, fixed, r, e),
        Side::Head => score_vectors(kind, e, r, fixed),
    };
    let target = score_with(table.entity(truth));
    let known = filter.known(query, side);
    let (mut higher, mut equal) = (0u64, 0u64);
    for c in 0..table.entity_count() as u32 {
        let c = EntityId(c);
        if c == truth || known.is_some_and(|k| k.contains(&c)) {
            continue;
        }
        let s = score_with(table.entity(c));
        if s > target {
            higher += 1;
        } else if s == target {
            equal += 1;
        }
    }
    Ok(1.0 + higher as f64 + equal as f64 / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingReport {
    pub mrr: f64,
    /// Keyed by N in [`HITS_AT`].
    pub hits: BTreeMap<u32, f64>,
    pub n_queries: usize,
}

impl RankingReport {
    pub fn from_ranks(ranks: &[f64]) -> Self {
        assert!(!ranks.is_empty());
        let n = ranks.len() as f64;
        let recip: Vec<f64> = ranks.iter().map(|r| 1.0 / r).collect();
        let mrr = par::pairwise_sum(&recip) / n;
        let hits = HITS_AT
            .iter()
            .map(|&k| (k, ranks.iter().filter(|&&r| r <= k as f64).count() as f64 / n))
            .collect();
        RankingReport {
            mrr,
            hits,
            n_queries: ranks.len(),
        }
    }

    pub fn hits_at(&self, n: u32) -> f64 {
        self.hits.get(&n).copied().unwrap_or(f64::NAN)
    }
}

/// Ranks both the head and the tail corruption of every triple in `split`.
pub fn evaluate_split(
    table: &EmbeddingTable,
    kind: ScorerKind,
    split: &[Triple],
    filter: &FilterIndex,
    exec: Exec,
) -> Result<RankingReport> {
    if split.is_empty() {
        return Err(Error::InvalidInput("evaluation split is empty".into()));
    }
    let pairs: Vec<[f64; 2]> = par::map(exec, split, |t| -> Result<[f64; 2]> {
        Ok([
            filtered_rank(table, kind, t, Side::Head, filter)?,
            filtered_rank(table, kind, t, Side::Tail, filter)?,
        ])
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let ranks: Vec<f64> = pairs.into_iter().flatten().collect();
    Ok(RankingReport::from_ranks(&ranks))
}
