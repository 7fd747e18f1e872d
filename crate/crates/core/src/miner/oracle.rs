//! Exhaustive anchor-centric enumeration used to cross-check the miner.
//!
//! This walks entity paths (not signed edges) and only afterwards asks which
//! relation sequences realise each half, so it shares no traversal code with
//! the pivot-centric miner. Exponential in `K`; meant for small graphs.

use std::collections::BTreeSet;

use super::relation_sequences;
use crate::graph::{EntityId, UnionGraph};

fn entity_neighbors(g: &UnionGraph, e: EntityId) -> Vec<EntityId> {
    let mut n: Vec<EntityId> = g.signed_neighbors(e).iter().map(|(_, x)| *x).collect();
    n.sort_unstable();
    n.dedup();
    n
}

/// Targets of `anchor`: far ends of simple `2k`-paths (`k <= k_bound`) whose
/// halves share a relation sequence when both are read towards the midpoint.
pub fn brute_force_oracle(g: &UnionGraph, anchor: EntityId, k_bound: u32) -> BTreeSet<EntityId> {
    let mut found = BTreeSet::new();
    if anchor.index() >= g.entity_count() {
        return found;
    }
    let mut path = vec![anchor];
    extend(g, &mut path, 2 * k_bound as usize, &mut found);
    found
}

fn extend(g: &UnionGraph, path: &mut Vec<EntityId>, max_len: usize, found: &mut BTreeSet<EntityId>) {
    let hops = path.len() - 1;
    if hops > 0 && hops.is_multiple_of(2) {
        let k = hops / 2;
        let target = path[hops];
        if !found.contains(&target) && halves_match(g, path, k) {
            found.insert(target);
        }
    }
    if hops == max_len {
        return;
    }
    for next in entity_neighbors(g, *path.last().unwrap()) {
        if path.contains(&next) {
            continue;
        }
        path.push(next);
        extend(g, path, max_len, found);
        path.pop();
    }
}

fn halves_match(g: &UnionGraph, path: &[EntityId], k: usize) -> bool {
    let first = &path[..=k];
    let second: Vec<EntityId> = path[k..].iter().rev().copied().collect();
    let (Some(a), Some(b)) = (relation_sequences(g, first), relation_sequences(g, &second)) else {
        return false;
    };
    a.iter().any(|s| b.contains(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{intern_graph, UnionGraph};

    #[test]
    fn empty_graph_has_no_targets() {
        let g = UnionGraph::new(3, 1, Vec::new());
        for e in 0..3 {
            assert!(brute_force_oracle(&g, EntityId(e), 3).is_empty());
        }
    }

    #[test]
    fn finds_shared_pivot() {
        let g = intern_graph(&[("Bob", "play", "Basketball"), ("Jones", "play", "Basketball")]).unwrap();
        let bob = EntityId(g.entities.get("Bob").unwrap());
        let jones = EntityId(g.entities.get("Jones").unwrap());
        assert_eq!(brute_force_oracle(&g.graph, bob, 1), BTreeSet::from([jones]));
    }
}
