use proptest::prelude::*;
use symcl::eval::{
    classify, evaluate_split, filtered_rank, students_t_test, train_probe, FilterIndex, ProbeConfig, RankingReport,
    Side,
};
use symcl::graph::{EntityId, Triple};
use symcl::par::Exec;
use symcl::train::{init_embeddings, score, EmbeddingTable, ScorerKind};

const ENTITIES: usize = 12;
const RELATIONS: usize = 3;

fn kind(distmult: bool) -> ScorerKind {
    if distmult {
        ScorerKind::DistMult
    } else {
        ScorerKind::TransE
    }
}

fn triple() -> impl Strategy<Value = Triple> {
    (0..ENTITIES as u32, 0..RELATIONS as u32, 0..ENTITIES as u32).prop_map(|(h, r, t)| Triple::new(h, r, t))
}

fn side() -> impl Strategy<Value = Side> {
    prop_oneof![Just(Side::Head), Just(Side::Tail)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn rank_is_within_candidate_range(seed in 0u64..1000, q in triple(), known in prop::collection::vec(triple(), 0..30), s in side(), dm: bool) {
        let table = init_embeddings(ENTITIES, RELATIONS, 4, seed);
        let rank = filtered_rank(&table, kind(dm), &q, s, &FilterIndex::new(&known)).unwrap();
        prop_assert!(rank >= 1.0 && rank <= ENTITIES as f64);
    }

    #[test]
    fn filtering_never_worsens_rank(seed in 0u64..1000, q in triple(), known in prop::collection::vec(triple(), 0..30), s in side(), dm: bool) {
        let table = init_embeddings(ENTITIES, RELATIONS, 4, seed);
        let raw = filtered_rank(&table, kind(dm), &q, s, &FilterIndex::default()).unwrap();
        let filtered = filtered_rank(&table, kind(dm), &q, s, &FilterIndex::new(&known)).unwrap();
        prop_assert!(filtered <= raw);
    }

    #[test]
    fn query_itself_is_never_filtered(seed in 0u64..1000, q in triple(), s in side(), dm: bool) {
        let table = init_embeddings(ENTITIES, RELATIONS, 4, seed);
        let with_self = filtered_rank(&table, kind(dm), &q, s, &FilterIndex::new([&q])).unwrap();
        let without = filtered_rank(&table, kind(dm), &q, s, &FilterIndex::default()).unwrap();
        prop_assert_eq!(with_self, without);
    }

    #[test]
    fn raising_truth_score_never_worsens_rank(seed in 0u64..1000, h in 0..ENTITIES as u32, t in 1..ENTITIES as u32) {
        // DistMult with r = 1: pulling the true tail towards the head raises its score.
        let h = EntityId(h);
        let t = EntityId((h.0 + t) % ENTITIES as u32);
        let mut table = init_embeddings(ENTITIES, RELATIONS, 4, seed);
        table.relation_mut(symcl::graph::RelationId(0)).fill(1.0);
        let q = Triple { head: h, relation: symcl::graph::RelationId(0), tail: t };
        let before = filtered_rank(&table, ScorerKind::DistMult, &q, Side::Tail, &FilterIndex::default()).unwrap();
        let s0 = score(&table, ScorerKind::DistMult, &q);
        let hv = table.entity(h).to_vec();
        for (x, y) in table.entity_mut(t).iter_mut().zip(&hv) {
            *x += y;
        }
        prop_assert!(score(&table, ScorerKind::DistMult, &q) >= s0);
        let after = filtered_rank(&table, ScorerKind::DistMult, &q, Side::Tail, &FilterIndex::default()).unwrap();
        prop_assert!(after <= before);
    }

    #[test]
    fn metrics_are_ordered(seed in 0u64..1000, split in prop::collection::vec(triple(), 1..20), dm: bool) {
        let table = init_embeddings(ENTITIES, RELATIONS, 4, seed);
        let r = evaluate_split(&table, kind(dm), &split, &FilterIndex::new(&split), Exec::Sequential).unwrap();
        prop_assert!(r.hits_at(1) <= r.hits_at(3) && r.hits_at(3) <= r.hits_at(10));
        prop_assert!(r.hits_at(1) <= r.mrr && r.mrr <= 1.0 && r.mrr > 0.0);
        prop_assert_eq!(r.n_queries, 2 * split.len());
        let par = evaluate_split(&table, kind(dm), &split, &FilterIndex::new(&split), Exec::Parallel).unwrap();
        prop_assert_eq!(r, par);
    }

    #[test]
    fn ttest_is_antisymmetric(a in prop::collection::vec(0.0f64..1.0, 2..8), b in prop::collection::vec(0.0f64..1.0, 2..8)) {
        let ab = students_t_test(&a, &b).unwrap();
        let ba = students_t_test(&b, &a).unwrap();
        prop_assert!((ab.t_statistic + ba.t_statistic).abs() < 1e-12 || ab.t_statistic.is_infinite());
        prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.p_value));
        prop_assert_eq!(ab.degrees_of_freedom, (a.len() + b.len() - 2) as f64);
    }
}

#[test]
fn uniform_ranks_give_known_metrics() {
    let r = RankingReport::from_ranks(&[1.0, 2.0, 4.0, 20.0]);
    assert!((r.mrr - (1.0 + 0.5 + 0.25 + 0.05) / 4.0).abs() < 1e-15);
    assert_eq!((r.hits_at(1), r.hits_at(3), r.hits_at(10)), (0.25, 0.5, 0.75));
}

/// Builds samples whose t statistic is exactly `t` with `n_a + n_b - 2 = df`.
fn samples_with_t(t: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    // Both samples share the spread of {-1, 0, +1}-style offsets.
    let offsets: Vec<f64> = (0..n).map(|i| i as f64 - (n - 1) as f64 / 2.0).collect();
    let ss: f64 = offsets.iter().map(|x| x * x).sum();
    let df = (2 * n - 2) as f64;
    let se = (2.0 * ss / df * (2.0 / n as f64)).sqrt();
    let b = offsets.clone();
    let a = offsets.iter().map(|x| x + t * se).collect();
    (a, b)
}

#[test]
fn ttest_matches_reference_table() {
    // Two-sided critical values of Student's t.
    for (t, df, p) in [(2.776, 4, 0.05), (4.604, 4, 0.01), (4.303, 2, 0.05), (2.228, 10, 0.05)] {
        let n = df / 2 + 1;
        let (a, b) = samples_with_t(t, n);
        let r = students_t_test(&a, &b).unwrap();
        assert_eq!(r.degrees_of_freedom, df as f64);
        assert!((r.t_statistic - t).abs() < 1e-9, "{}", r.t_statistic);
        assert!((r.p_value - p).abs() < 5e-4, "df={df} t={t}: p={}", r.p_value);
    }
}

#[test]
fn ttest_degenerate_cases() {
    let same = students_t_test(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
    assert_eq!((same.t_statistic, same.p_value), (0.0, 1.0));
    let apart = students_t_test(&[2.0, 2.0], &[1.0, 1.0]).unwrap();
    assert_eq!(apart.p_value, 0.0);
    assert!(apart.t_statistic.is_infinite() && apart.t_statistic > 0.0);
    assert!(students_t_test(&[1.0], &[1.0, 2.0]).is_err());
}

#[test]
fn probe_predictions_follow_label_permutation() {
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for i in 0..30u32 {
        let class = (i % 3) as usize;
        let centre = [[3.0, 0.0], [0.0, 3.0], [-3.0, -3.0]][class];
        let jitter = (i as f64 * 0.77).sin() * 0.4;
        data.extend([centre[0] + jitter, centre[1] - jitter]);
        labels.push((EntityId(i), class));
    }
    let table = EmbeddingTable::from_data(30, 0, 2, data);
    let perm = [2usize, 0, 1];
    let relabeled: Vec<_> = labels.iter().map(|(e, c)| (*e, perm[*c])).collect();
    let cfg = ProbeConfig::default();
    let w = train_probe(&table, &labels, 3, &cfg).unwrap();
    let wp = train_probe(&table, &relabeled, 3, &cfg).unwrap();
    for (e, c) in &labels {
        let pred = classify(&w, &table, *e).unwrap();
        assert_eq!(pred, *c);
        assert_eq!(classify(&wp, &table, *e).unwrap(), perm[pred]);
    }
}
