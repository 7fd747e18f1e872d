//! Relation-symmetrical structure mining.
//!
//! A k-hop relation-symmetrical structure is a simple path of length `2k`
//! `anchor ~> pivot ~> target` whose two halves, each read towards the pivot,
//! carry the same signed relation sequence. The anchor and target are then
//! positives for each other.
//!
//! Mining is pivot-centric: for every pivot we walk outward up to `K` hops,
//! which yields every simple half-path ending at the pivot together with the
//! sequence read from its far end. Half-paths sharing a `(pivot, sequence)`
//! key form a group, and every pair of group members with disjoint node sets
//! is a structure. Pivots are independent, so the outer loop is
//! data-parallel; results are collected in pivot order.

mod dict_io;
mod oracle;
mod sample;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::graph::{EntityId, SignedRelation, UnionGraph};
use crate::par::{self, Exec};

pub use dict_io::{load_dict, read_dict, save_dict, write_dict, DICT_MAGIC, DICT_VERSION};
pub use oracle::brute_force_oracle;
pub use sample::sample_positives;

pub const MAX_HOPS: u32 = 3;

/// Signed relations along a path, in walking order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationSequence(pub Vec<SignedRelation>);

impl RelationSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn steps(&self) -> &[SignedRelation] {
        &self.0
    }
}

/// Every relation sequence realised by the entity path, one per combination
/// of parallel edges. `None` when some consecutive pair is not connected.
pub fn relation_sequences(g: &UnionGraph, path: &[EntityId]) -> Option<Vec<RelationSequence>> {
    assert!(path.len() >= 2, "a relation sequence needs at least two entities");
    let mut seqs: Vec<Vec<SignedRelation>> = vec![Vec::new()];
    for w in path.windows(2) {
        let options: Vec<SignedRelation> = g.edges_between(w[0], w[1]).collect();
        if options.is_empty() {
            return None;
        }
        seqs = seqs
            .into_iter()
            .flat_map(|s| {
                options.iter().map(move |&o| {
                    let mut next = s.clone();
                    next.push(o);
                    next
                })
            })
            .collect();
    }
    Some(seqs.into_iter().map(RelationSequence).collect())
}

/// One `anchor ~> pivot <~ target` structure. `half_sequence` is the signed
/// sequence of either half read towards the pivot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RSymStructure {
    pub anchor: EntityId,
    pub pivot: EntityId,
    pub target: EntityId,
    pub half_sequence: RelationSequence,
    pub k: u32,
}

/// Per-entity positive targets mined with hop bound `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositiveDict {
    k: u32,
    targets: Vec<Vec<EntityId>>,
}

impl PositiveDict {
    pub fn empty(k: u32, entity_count: usize) -> Self {
        PositiveDict {
            k,
            targets: vec![Vec::new(); entity_count],
        }
    }

    /// Builds a dictionary from explicit target lists, sorting and
    /// deduplicating each. Fails if the lists are not symmetric, reflexive
    /// entries exist, or an id is out of range.
    pub fn from_targets(k: u32, mut targets: Vec<Vec<EntityId>>) -> Result<Self> {
        let n = targets.len();
        for (a, list) in targets.iter_mut().enumerate() {
            list.sort_unstable();
            list.dedup();
            if let Some(bad) = list.iter().find(|t| t.index() >= n) {
                return Err(Error::InvalidInput(format!("target {} out of range", bad.0)));
            }
            if list.binary_search(&EntityId(a as u32)).is_ok() {
                return Err(Error::InvalidInput(format!("entity {a} lists itself as a target")));
            }
        }
        let dict = PositiveDict { k, targets };
        if !dict.is_symmetric() {
            return Err(Error::InvalidInput("target lists are not symmetric".into()));
        }
        Ok(dict)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn entity_count(&self) -> usize {
        self.targets.len()
    }

    /// Sorted targets of `e`; empty for unknown entities.
    pub fn targets(&self, e: EntityId) -> &[EntityId] {
        self.targets.get(e.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Number of ordered `(anchor, target)` pairs.
    pub fn pair_count(&self) -> usize {
        self.targets.iter().map(Vec::len).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        self.targets.iter().enumerate().all(|(a, list)| {
            list.iter()
                .all(|t| self.targets(*t).binary_search(&EntityId(a as u32)).is_ok())
        })
    }

    pub(crate) fn raw_targets(&self) -> &[Vec<EntityId>] {
        &self.targets
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MineOptions {
    /// Pivots with more signed edges than this are skipped. This is an
    /// approximation for very large graphs; leave `None` for exact mining.
    pub max_degree: Option<usize>,
    pub collect_structures: bool,
    pub exec: Exec,
}

#[derive(Debug, Clone)]
pub struct Mined {
    pub dict: PositiveDict,
    /// Sorted; empty unless [`MineOptions::collect_structures`] was set.
    pub structures: Vec<RSymStructure>,
}

/// Counts for one hop number `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct HopStats {
    pub k: u32,
    /// Relation-symmetrical `(anchor, pivot, target, sequence)` tuples.
    pub rs_count: u64,
    /// All `(anchor, pivot, target, full sequence)` tuples of simple
    /// `2k`-paths, split at the midpoint.
    pub total_count: u64,
}

impl HopStats {
    pub fn proportion(&self) -> Option<f64> {
        (self.total_count > 0).then(|| self.rs_count as f64 / self.total_count as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct StructureStats {
    pub per_k: Vec<HopStats>,
}

pub fn check_hop_bound(k: u32) -> Result<()> {
    if (1..=MAX_HOPS).contains(&k) {
        Ok(())
    } else {
        Err(Error::HopBoundExceeded(k))
    }
}

type Seq = SmallVec<[SignedRelation; 3]>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct HalfPath {
    seq: Seq,
    source: u32,
    /// Nodes strictly between source and pivot.
    interior: SmallVec<[u32; 2]>,
}

/// All simple half-paths of 1..=k_max hops ending at `pivot`, bucketed by hop
/// count and sorted by (sequence, source, interior).
fn half_paths(g: &UnionGraph, pivot: EntityId, k_max: usize) -> Vec<Vec<HalfPath>> {
    fn walk(
        g: &UnionGraph,
        path: &mut Vec<EntityId>,
        steps: &mut Vec<SignedRelation>,
        k_max: usize,
        out: &mut [Vec<HalfPath>],
    ) {
        let cur = *path.last().unwrap();
        for &(step, next) in g.signed_neighbors(cur) {
            if path.contains(&next) {
                continue;
            }
            path.push(next);
            steps.push(step);
            let hops = steps.len();
            // Read from the far end back to the pivot: reverse order, flipped.
            out[hops - 1].push(HalfPath {
                seq: steps.iter().rev().map(|s| s.flip()).collect(),
                source: next.0,
                interior: path[1..hops].iter().map(|e| e.0).collect(),
            });
            if hops < k_max {
                walk(g, path, steps, k_max, out);
            }
            path.pop();
            steps.pop();
        }
    }

    let mut out = vec![Vec::new(); k_max];
    let mut path = vec![pivot];
    let mut steps = Vec::with_capacity(k_max);
    walk(g, &mut path, &mut steps, k_max, &mut out);
    for level in &mut out {
        level.sort_unstable();
    }
    out
}

fn disjoint(a: &HalfPath, t: &HalfPath) -> bool {
    a.source != t.source
        && !t.interior.contains(&a.source)
        && !a.interior.contains(&t.source)
        && a.interior.iter().all(|x| !t.interior.contains(x))
}

/// Half-paths sharing a (sequence, source) key.
struct Block<'a> {
    paths: &'a [HalfPath],
}

impl Block<'_> {
    fn source(&self) -> u32 {
        self.paths[0].source
    }

    fn seq(&self) -> &Seq {
        &self.paths[0].seq
    }

    fn pairs_with(&self, other: &Block<'_>) -> bool {
        self.source() != other.source()
            && self
                .paths
                .iter()
                .any(|a| other.paths.iter().any(|t| disjoint(a, t)))
    }
}

fn blocks(level: &[HalfPath]) -> Vec<Block<'_>> {
    level
        .chunk_by(|x, y| x.seq == y.seq && x.source == y.source)
        .map(|paths| Block { paths })
        .collect()
}

#[derive(Default)]
struct PivotYield {
    pairs: Vec<(u32, u32)>,
    structures: Vec<RSymStructure>,
    hop_counts: Vec<(u64, u64)>,
}

#[derive(Clone, Copy)]
struct PivotWork {
    k_max: usize,
    structures: bool,
    totals: bool,
}

fn mine_pivot(g: &UnionGraph, pivot: EntityId, work: PivotWork) -> PivotYield {
    let mut out = PivotYield {
        hop_counts: vec![(0, 0); work.k_max],
        ..Default::default()
    };
    let levels = half_paths(g, pivot, work.k_max);
    for (hop, level) in levels.iter().enumerate() {
        let blocks = blocks(level);
        // Blocks are sorted by sequence, so equal-sequence blocks are adjacent.
        for group in blocks.chunk_by(|x, y| x.seq() == y.seq()) {
            for a in group {
                for t in group {
                    if !a.pairs_with(t) {
                        continue;
                    }
                    out.hop_counts[hop].0 += 1;
                    out.pairs.push((a.source(), t.source()));
                    if work.structures {
                        out.structures.push(RSymStructure {
                            anchor: EntityId(a.source()),
                            pivot,
                            target: EntityId(t.source()),
                            half_sequence: RelationSequence(a.seq().to_vec()),
                            k: hop as u32 + 1,
                        });
                    }
                }
            }
        }
        if work.totals {
            let mut total = 0u64;
            for a in &blocks {
                for t in &blocks {
                    if a.pairs_with(t) {
                        total += 1;
                    }
                }
            }
            out.hop_counts[hop].1 = total;
        }
    }
    out
}

fn run_pivots(g: &UnionGraph, work: PivotWork, opts: &MineOptions) -> Vec<PivotYield> {
    let cap = opts.max_degree;
    par::map_range(opts.exec, g.entity_count(), |p| {
        let pivot = EntityId(p as u32);
        if cap.is_some_and(|c| g.degree(pivot) > c) {
            return PivotYield {
                hop_counts: vec![(0, 0); work.k_max],
                ..Default::default()
            };
        }
        mine_pivot(g, pivot, work)
    })
}

/// Mines every k-hop relation-symmetrical structure for `k` in `1..=k_bound`
/// and collects the positive dictionary.
pub fn mine_positive_dict(g: &UnionGraph, k_bound: u32, opts: &MineOptions) -> Result<Mined> {
    check_hop_bound(k_bound)?;
    let work = PivotWork {
        k_max: k_bound as usize,
        structures: opts.collect_structures,
        totals: false,
    };
    let yields = run_pivots(g, work, opts);

    let mut targets: Vec<Vec<EntityId>> = vec![Vec::new(); g.entity_count()];
    let mut structures = Vec::new();
    for y in yields {
        for (a, t) in y.pairs {
            targets[a as usize].push(EntityId(t));
        }
        structures.extend(y.structures);
    }
    for list in &mut targets {
        list.sort_unstable();
        list.dedup();
    }
    structures.sort_unstable();
    Ok(Mined {
        dict: PositiveDict {
            k: k_bound,
            targets,
        },
        structures,
    })
}

/// Per-hop counts of relation-symmetrical structures against all
/// midpoint-split simple `2k`-paths.
pub fn structure_stats(g: &UnionGraph, k_bound: u32, opts: &MineOptions) -> Result<StructureStats> {
    check_hop_bound(k_bound)?;
    let work = PivotWork {
        k_max: k_bound as usize,
        structures: false,
        totals: true,
    };
    let yields = run_pivots(g, work, opts);
    let mut per_k: Vec<HopStats> = (1..=k_bound)
        .map(|k| HopStats {
            k,
            rs_count: 0,
            total_count: 0,
        })
        .collect();
    for y in yields {
        for (s, (rs, total)) in per_k.iter_mut().zip(y.hop_counts) {
            s.rs_count += rs;
            s.total_count += total;
        }
    }
    Ok(StructureStats { per_k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::intern_graph;

    fn exact() -> MineOptions {
        MineOptions {
            collect_structures: true,
            ..Default::default()
        }
    }

    fn id(g: &crate::graph::InternedGraph, label: &str) -> EntityId {
        EntityId(g.entities.get(label).unwrap())
    }

    #[test]
    fn relation_sequence_follows_direction() {
        let g = intern_graph(&[("Bob", "play", "Basketball"), ("Andy", "x", "Andy2")]).unwrap();
        let (bob, ball, andy) = (id(&g, "Bob"), id(&g, "Basketball"), id(&g, "Andy"));
        let play = g.relations.get("play").unwrap();
        assert_eq!(
            relation_sequences(&g.graph, &[bob, ball]),
            Some(vec![RelationSequence(vec![SignedRelation::forward(play)])])
        );
        assert_eq!(
            relation_sequences(&g.graph, &[ball, bob]),
            Some(vec![RelationSequence(vec![SignedRelation::inverse(play)])])
        );
        assert_eq!(relation_sequences(&g.graph, &[bob, andy]), None);
    }

    #[test]
    fn relation_sequences_enumerate_parallel_edges() {
        let g = intern_graph(&[("a", "r", "b"), ("a", "s", "b"), ("b", "t", "c")]).unwrap();
        let seqs = relation_sequences(&g.graph, &[EntityId(0), EntityId(1), EntityId(2)]).unwrap();
        assert_eq!(seqs.len(), 2);
    }

    #[test]
    fn shared_forward_relation_pairs_entities() {
        let g = intern_graph(&[("Bob", "play", "Basketball"), ("Jones", "play", "Basketball")]).unwrap();
        let mined = mine_positive_dict(&g.graph, 1, &exact()).unwrap();
        assert_eq!(mined.dict.targets(id(&g, "Bob")), &[id(&g, "Jones")]);
        assert_eq!(mined.dict.targets(id(&g, "Jones")), &[id(&g, "Bob")]);
        assert!(mined.dict.targets(id(&g, "Basketball")).is_empty());
        assert_eq!(mined.structures.len(), 2);
        assert!(mined.structures.iter().all(|s| s.pivot == id(&g, "Basketball") && s.k == 1));
    }

    #[test]
    fn shared_inverse_relation_pairs_entities() {
        let g = intern_graph(&[("Basketball", "played_by", "Bob"), ("Basketball", "played_by", "Jones")]).unwrap();
        let mined = mine_positive_dict(&g.graph, 1, &exact()).unwrap();
        assert_eq!(mined.dict.targets(id(&g, "Bob")), &[id(&g, "Jones")]);
        let s = &mined.structures[0];
        assert_eq!(s.half_sequence.steps()[0].sign, crate::graph::Sign::Inverse);
    }

    #[test]
    fn mixed_direction_chain_is_not_symmetric() {
        let g = intern_graph(&[("Bob", "r1", "P"), ("P", "r1", "Jones")]).unwrap();
        let mined = mine_positive_dict(&g.graph, 1, &exact()).unwrap();
        assert!(mined.dict.targets(id(&g, "Bob")).is_empty());
        assert_eq!(mined.dict.pair_count(), 0);
    }

    #[test]
    fn hop_bound_is_enforced() {
        let g = intern_graph(&[("a", "r", "b")]).unwrap();
        assert!(matches!(
            mine_positive_dict(&g.graph, 0, &exact()),
            Err(Error::HopBoundExceeded(0))
        ));
        assert!(matches!(
            structure_stats(&g.graph, 4, &exact()),
            Err(Error::HopBoundExceeded(4))
        ));
    }

    #[test]
    fn two_hop_halves_must_not_share_nodes() {
        // a -r-> t -s-> p and t -r-> q -s-> p share the same sequence, but
        // a ~> p <~ t would revisit t.
        let g = intern_graph(&[("a", "r", "t"), ("t", "s", "p"), ("t", "r", "q"), ("q", "s", "p")]).unwrap();
        let mined = mine_positive_dict(&g.graph, 2, &exact()).unwrap();
        let (a, t) = (id(&g, "a"), id(&g, "t"));
        assert!(!mined.dict.targets(a).contains(&t));
        assert_eq!(brute_force_oracle(&g.graph, a, 2), mined.dict.targets(a).iter().copied().collect());
    }

    #[test]
    fn stats_on_small_fixtures() {
        let g = intern_graph(&[("Bob", "play", "Basketball"), ("Jones", "play", "Basketball")]).unwrap();
        let s = structure_stats(&g.graph, 1, &exact()).unwrap();
        assert_eq!(s.per_k, vec![HopStats { k: 1, rs_count: 2, total_count: 2 }]);
        assert_eq!(s.per_k[0].proportion(), Some(1.0));

        let g = intern_graph(&[("a", "r", "b")]).unwrap();
        let s = structure_stats(&g.graph, 1, &exact()).unwrap();
        assert_eq!(s.per_k[0].total_count, 0);
        assert_eq!(s.per_k[0].proportion(), None);

        let g = intern_graph(&[("a", "r", "b"), ("b", "s", "c")]).unwrap();
        let s = structure_stats(&g.graph, 1, &exact()).unwrap();
        assert_eq!(s.per_k[0].total_count, 2);
        assert_eq!(s.per_k[0].rs_count, 0);
    }

    #[test]
    fn stats_rs_count_matches_structure_list() {
        let g = intern_graph(&[
            ("a", "r", "p"),
            ("b", "r", "p"),
            ("c", "r", "p"),
            ("p", "s", "q"),
            ("d", "s", "q"),
            ("a", "t", "d"),
        ])
        .unwrap();
        let mined = mine_positive_dict(&g.graph, 2, &exact()).unwrap();
        let stats = structure_stats(&g.graph, 2, &exact()).unwrap();
        for hs in &stats.per_k {
            let n = mined.structures.iter().filter(|s| s.k == hs.k).count() as u64;
            assert_eq!(hs.rs_count, n);
            assert!(hs.rs_count <= hs.total_count);
        }
    }

    #[test]
    fn degree_cap_skips_hub_pivots() {
        let g = intern_graph(&[("Bob", "play", "Basketball"), ("Jones", "play", "Basketball")]).unwrap();
        let opts = MineOptions {
            max_degree: Some(1),
            ..exact()
        };
        let mined = mine_positive_dict(&g.graph, 1, &opts).unwrap();
        assert_eq!(mined.dict.pair_count(), 0);
    }

    #[test]
    fn from_targets_validates() {
        assert!(PositiveDict::from_targets(1, vec![vec![EntityId(1)], vec![EntityId(0)]]).is_ok());
        assert!(PositiveDict::from_targets(1, vec![vec![EntityId(1)], vec![]]).is_err());
        assert!(PositiveDict::from_targets(1, vec![vec![EntityId(0)]]).is_err());
        assert!(PositiveDict::from_targets(1, vec![vec![EntityId(5)]]).is_err());
    }
}
