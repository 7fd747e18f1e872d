#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use symcl::graph::{Triple, UnionGraph};

/// Random multigraph with at most the given sizes; duplicate triples are
/// dropped, self-loops kept.
pub fn random_graph(seed: u64, max_entities: u32, max_triples: usize, max_relations: u32) -> UnionGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_entities);
    let r = rng.gen_range(1..=max_relations);
    let m = rng.gen_range(1..=max_triples);
    graph_from(n, r, (0..m).map(|_| (rng.gen_range(0..n), rng.gen_range(0..r), rng.gen_range(0..n))))
}

pub fn graph_from(n: u32, r: u32, rows: impl IntoIterator<Item = (u32, u32, u32)>) -> UnionGraph {
    let mut triples: Vec<Triple> = rows.into_iter().map(|(h, rel, t)| Triple::new(h, rel, t)).collect();
    let mut seen = std::collections::HashSet::new();
    triples.retain(|t| seen.insert(*t));
    UnionGraph::new(n as usize, r as usize, triples)
}

use symcl::graph::EntityId;
use symcl::train::{AnchorTerm, BatchPlan};

/// A batch plan over random ids; anchors get 1..=3 distinct positives.
pub fn random_plan(seed: u64, entities: u32, relations: u32, batch: usize, negatives: usize) -> BatchPlan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triple = |rng: &mut ChaCha8Rng| {
        Triple::new(rng.gen_range(0..entities), rng.gen_range(0..relations), rng.gen_range(0..entities))
    };
    let triples: Vec<Triple> = (0..batch).map(|_| triple(&mut rng)).collect();
    let negatives_list = (0..batch * negatives).map(|_| triple(&mut rng)).collect();
    let mut anchors = Vec::new();
    for t in &triples {
        for anchor in [t.head, t.tail] {
            let count = rng.gen_range(1..=3);
            let mut positives: Vec<EntityId> = Vec::new();
            while positives.len() < count {
                let p = EntityId(rng.gen_range(0..entities));
                if p != anchor && !positives.contains(&p) {
                    positives.push(p);
                }
            }
            anchors.push(AnchorTerm { anchor, positives });
        }
    }
    BatchPlan {
        triples,
        negatives: negatives_list,
        n_negatives: negatives,
        anchors,
    }
}
