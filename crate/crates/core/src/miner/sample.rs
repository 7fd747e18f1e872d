use rand::seq::index;

use super::PositiveDict;
use crate::graph::EntityId;
use crate::seed;

/// Up to `m` distinct targets of `anchor`, drawn uniformly without
/// replacement. Returns every target when there are at most `m`.
pub fn sample_positives(dict: &PositiveDict, anchor: EntityId, m: usize, seed: u64) -> Vec<EntityId> {
    let pool = dict.targets(anchor);
    if pool.len() <= m {
        return pool.to_vec();
    }
    let mut rng = seed::rng(seed, &[]);
    index::sample(&mut rng, pool.len(), m)
        .into_iter()
        .map(|i| pool[i])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn star(n: u32) -> PositiveDict {
        // entity 0..n all mutually positive
        let targets = (0..n)
            .map(|a| (0..n).filter(|&t| t != a).map(EntityId).collect())
            .collect();
        PositiveDict::from_targets(1, targets).unwrap()
    }

    #[test]
    fn fewer_candidates_than_m_returns_all() {
        let d = star(2);
        assert_eq!(sample_positives(&d, EntityId(0), 6, 1), vec![EntityId(1)]);
        let empty = PositiveDict::empty(1, 3);
        assert!(sample_positives(&empty, EntityId(0), 6, 1).is_empty());
    }

    #[test]
    fn sampling_is_deterministic_and_distinct() {
        let d = star(101);
        let a = sample_positives(&d, EntityId(0), 10, 42);
        let b = sample_positives(&d, EntityId(0), 10, 42);
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        assert_eq!(a.iter().collect::<HashSet<_>>().len(), 10);
        assert!(a.iter().all(|e| e.0 != 0));
        let c = sample_positives(&d, EntityId(0), 10, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn sampling_is_roughly_uniform() {
        let d = star(11);
        let mut hits = [0usize; 11];
        for s in 0..2000 {
            for e in sample_positives(&d, EntityId(0), 3, s) {
                hits[e.index()] += 1;
            }
        }
        // expected 600 per candidate
        assert!(hits[1..].iter().all(|&h| (450..750).contains(&h)), "{hits:?}");
    }
}
