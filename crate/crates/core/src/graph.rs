//! Interned knowledge graphs and the signed union-graph adjacency index.
//!
//! Every fact `(h, r, t)` is stored once in [`UnionGraph::triples`] and twice
//! in the adjacency index: as `h -(r, forward)-> t` and as
//! `t -(r, inverse)-> h`. Traversal over the index therefore walks the graph
//! together with its inverse.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationId(pub u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: u32, relation: u32, tail: u32) -> Self {
        Triple {
            head: EntityId(head),
            relation: RelationId(relation),
            tail: EntityId(tail),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Forward,
    Inverse,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Forward => Sign::Inverse,
            Sign::Inverse => Sign::Forward,
        }
    }
}

/// A relation together with the direction it is traversed in.
///
/// Ordering is by relation first, then sign, which fixes the adjacency order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignedRelation {
    pub relation: RelationId,
    pub sign: Sign,
}

impl SignedRelation {
    pub fn forward(relation: u32) -> Self {
        SignedRelation {
            relation: RelationId(relation),
            sign: Sign::Forward,
        }
    }

    pub fn inverse(relation: u32) -> Self {
        SignedRelation {
            relation: RelationId(relation),
            sign: Sign::Inverse,
        }
    }

    pub fn flip(self) -> Self {
        SignedRelation {
            relation: self.relation,
            sign: self.sign.flip(),
        }
    }
}

impl fmt::Display for SignedRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.sign {
            Sign::Forward => '+',
            Sign::Inverse => '-',
        };
        write!(f, "r{}{}", self.relation.0, s)
    }
}

/// Bidirectional label <-> dense id map, ids assigned in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    labels: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, label: &str) -> u32 {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len() as u32;
        self.labels.push(label.to_owned());
        self.index.insert(label.to_owned(), id);
        id
    }

    pub fn get(&self, label: &str) -> Option<u32> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: u32) -> Option<&str> {
        self.labels.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// The knowledge graph plus its inverse, indexed by source entity.
#[derive(Debug, Clone)]
pub struct UnionGraph {
    triples: Vec<Triple>,
    offsets: Vec<usize>,
    edges: Vec<(SignedRelation, EntityId)>,
    entity_count: usize,
    relation_count: usize,
}

impl UnionGraph {
    /// Builds the index. `triples` must already be deduplicated and every id
    /// must be below the given counts.
    pub fn new(entity_count: usize, relation_count: usize, triples: Vec<Triple>) -> Self {
        let mut degree = vec![0usize; entity_count + 1];
        for t in &triples {
            assert!(t.head.index() < entity_count && t.tail.index() < entity_count);
            assert!(t.relation.index() < relation_count);
            degree[t.head.index()] += 1;
            degree[t.tail.index()] += 1;
        }
        let mut offsets = Vec::with_capacity(entity_count + 1);
        let mut acc = 0;
        for d in &degree[..entity_count] {
            offsets.push(acc);
            acc += d;
        }
        offsets.push(acc);

        let mut cursor = offsets.clone();
        let placeholder = (SignedRelation::forward(0), EntityId(0));
        let mut edges = vec![placeholder; acc];
        for t in &triples {
            let h = t.head.index();
            edges[cursor[h]] = (
                SignedRelation {
                    relation: t.relation,
                    sign: Sign::Forward,
                },
                t.tail,
            );
            cursor[h] += 1;
            let tl = t.tail.index();
            edges[cursor[tl]] = (
                SignedRelation {
                    relation: t.relation,
                    sign: Sign::Inverse,
                },
                t.head,
            );
            cursor[tl] += 1;
        }
        for e in 0..entity_count {
            edges[offsets[e]..offsets[e + 1]].sort_unstable();
        }
        UnionGraph {
            triples,
            offsets,
            edges,
            entity_count,
            relation_count,
        }
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn entity_count(&self) -> usize {
        self.entity_count
    }

    pub fn relation_count(&self) -> usize {
        self.relation_count
    }

    /// Signed out-edges of `e`, sorted by (relation, sign, neighbor).
    pub fn signed_neighbors(&self, e: EntityId) -> &[(SignedRelation, EntityId)] {
        let i = e.index();
        &self.edges[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, e: EntityId) -> usize {
        let i = e.index();
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn signed_edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Signed relations leading from `from` to `to`.
    pub fn edges_between(
        &self,
        from: EntityId,
        to: EntityId,
    ) -> impl Iterator<Item = SignedRelation> + '_ {
        self.signed_neighbors(from)
            .iter()
            .filter(move |(_, n)| *n == to)
            .map(|(s, _)| *s)
    }
}

/// Result of interning a single list of raw triples.
#[derive(Debug, Clone)]
pub struct InternedGraph {
    pub graph: UnionGraph,
    pub entities: Vocab,
    pub relations: Vocab,
}

/// Interns raw `(head, relation, tail)` labels, removes duplicate triples and
/// builds the union graph.
pub fn intern_graph<S: AsRef<str>>(raw: &[(S, S, S)]) -> Result<InternedGraph> {
    if raw.is_empty() {
        return Err(Error::EmptyDataset {
            path: PathBuf::from("<memory>"),
        });
    }
    let mut entities = Vocab::new();
    let mut relations = Vocab::new();
    let mut triples = Vec::with_capacity(raw.len());
    let mut seen = HashSet::with_capacity(raw.len());
    for (i, (h, r, t)) in raw.iter().enumerate() {
        let (h, r, t) = (h.as_ref(), r.as_ref(), t.as_ref());
        if h.is_empty() || r.is_empty() || t.is_empty() {
            return Err(Error::MalformedTriple {
                path: PathBuf::from("<memory>"),
                line: i + 1,
                reason: "empty field".into(),
            });
        }
        let triple = Triple::new(entities.intern(h), relations.intern(r), entities.intern(t));
        if seen.insert(triple) {
            triples.push(triple);
        }
    }
    let graph = UnionGraph::new(entities.len(), relations.len(), triples);
    Ok(InternedGraph {
        graph,
        entities,
        relations,
    })
}

/// One `(head, relation, tail)` row as read from a triple file.
pub type RawTriple = (String, String, String);

/// Parses tab-separated triple text. `path` is only used for error messages.
pub fn parse_triples(text: &str, path: &Path) -> Result<Vec<RawTriple>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let malformed = |reason: String| Error::MalformedTriple {
            path: path.to_path_buf(),
            line: i + 1,
            reason,
        };
        if fields.len() != 3 {
            return Err(malformed(format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        if fields.iter().any(|f| f.is_empty()) {
            return Err(malformed("empty field".into()));
        }
        rows.push((fields[0].to_owned(), fields[1].to_owned(), fields[2].to_owned()));
    }
    Ok(rows)
}

pub fn read_triples(path: &Path) -> Result<Vec<RawTriple>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_triples(&text, path)
}

/// Train/valid/test splits sharing one vocabulary.
///
/// Entities are interned in the order train, valid, test, so the ids depend
/// only on file contents. The union graph is built from the train split but
/// sized for every entity of every split.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub entities: Vocab,
    pub relations: Vocab,
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
    pub graph: UnionGraph,
}

impl Dataset {
    pub fn from_splits(train: &[RawTriple], valid: &[RawTriple], test: &[RawTriple]) -> Result<Self> {
        Self::build(train, valid, test, Path::new("<memory>"))
    }

    pub fn load(train: &Path, valid: Option<&Path>, test: Option<&Path>) -> Result<Self> {
        let train_rows = read_triples(train)?;
        let valid_rows = valid.map(read_triples).transpose()?.unwrap_or_default();
        let test_rows = test.map(read_triples).transpose()?.unwrap_or_default();
        Self::build(&train_rows, &valid_rows, &test_rows, train)
    }

    fn build(train: &[RawTriple], valid: &[RawTriple], test: &[RawTriple], train_path: &Path) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyDataset {
                path: train_path.to_path_buf(),
            });
        }
        let mut entities = Vocab::new();
        let mut relations = Vocab::new();
        let mut split = |rows: &[RawTriple]| {
            let mut seen = HashSet::with_capacity(rows.len());
            let mut out = Vec::with_capacity(rows.len());
            for (h, r, t) in rows {
                let triple = Triple::new(entities.intern(h), relations.intern(r), entities.intern(t));
                if seen.insert(triple) {
                    out.push(triple);
                }
            }
            out
        };
        let train = split(train);
        let valid = split(valid);
        let test = split(test);
        let graph = UnionGraph::new(entities.len(), relations.len(), train.clone());
        Ok(Dataset {
            entities,
            relations,
            train,
            valid,
            test,
            graph,
        })
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    /// Every triple of every split, used for filtered ranking.
    pub fn known_triples(&self) -> HashSet<Triple> {
        self.train
            .iter()
            .chain(&self.valid)
            .chain(&self.test)
            .copied()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(rows: &[(&str, &str, &str)]) -> Vec<RawTriple> {
        rows.iter()
            .map(|(h, r, t)| (h.to_string(), r.to_string(), t.to_string()))
            .collect()
    }

    #[test]
    fn single_triple_counts() {
        let g = intern_graph(&[("Bob", "play", "Basketball")]).unwrap();
        assert_eq!(g.entities.len(), 2);
        assert_eq!(g.relations.len(), 1);
        assert_eq!(g.graph.triples().len(), 1);
        assert_eq!(g.graph.signed_edge_count(), 2);
    }

    #[test]
    fn duplicates_are_removed() {
        let g = intern_graph(&[("a", "r", "b"), ("a", "r", "b")]).unwrap();
        assert_eq!(g.graph.triples().len(), 1);
        assert_eq!(g.graph.signed_edge_count(), 2);
    }

    #[test]
    fn empty_input_is_an_error() {
        let rows: Vec<(&str, &str, &str)> = vec![];
        assert!(matches!(intern_graph(&rows), Err(Error::EmptyDataset { .. })));
    }

    #[test]
    fn signed_neighbors_carry_direction() {
        let g = intern_graph(&[("Bob", "play", "Basketball")]).unwrap();
        let bob = EntityId(g.entities.get("Bob").unwrap());
        let ball = EntityId(g.entities.get("Basketball").unwrap());
        let play = g.relations.get("play").unwrap();
        assert_eq!(g.graph.signed_neighbors(bob), &[(SignedRelation::forward(play), ball)]);
        assert_eq!(g.graph.signed_neighbors(ball), &[(SignedRelation::inverse(play), bob)]);
    }

    #[test]
    fn self_loops_are_kept() {
        let g = intern_graph(&[("a", "r", "a")]).unwrap();
        assert_eq!(g.entities.len(), 1);
        let a = EntityId(0);
        assert_eq!(g.graph.degree(a), 2);
    }

    #[test]
    fn adjacency_is_sorted() {
        let g = intern_graph(&[("a", "s", "c"), ("a", "r", "b"), ("b", "r", "a"), ("a", "r", "c")]).unwrap();
        for e in 0..g.entities.len() as u32 {
            let n = g.graph.signed_neighbors(EntityId(e));
            assert!(n.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn parse_skips_comments_and_blank_lines() {
        let text = "# header\n\na\tr\tb\r\n\nc\ts\td\n";
        let rows = parse_triples(text, Path::new("x.tsv")).unwrap();
        assert_eq!(rows, raw(&[("a", "r", "b"), ("c", "s", "d")]));
    }

    #[test]
    fn parse_rejects_wrong_field_count() {
        let err = parse_triples("a\tr\tb\nc\td\n", Path::new("x.tsv")).unwrap_err();
        match err {
            Error::MalformedTriple { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_triples("a\t\tb\n", Path::new("x.tsv")).is_err());
    }

    #[test]
    fn dataset_shares_vocab_across_splits() {
        let train = raw(&[("a", "r", "b"), ("b", "r", "c")]);
        let test = raw(&[("c", "s", "d")]);
        let ds = Dataset::from_splits(&train, &[], &test).unwrap();
        assert_eq!(ds.entity_count(), 4);
        assert_eq!(ds.relation_count(), 2);
        assert_eq!(ds.graph.entity_count(), 4);
        assert_eq!(ds.graph.triples().len(), 2);
        assert_eq!(ds.test, vec![Triple::new(2, 1, 3)]);
        assert_eq!(ds.known_triples().len(), 3);
    }
}
