use rand::Rng;

use crate::graph::{EntityId, RelationId};
use crate::seed;

/// Dense entity and relation vectors in one row-major buffer: all entity
/// rows first, then all relation rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    entity_count: usize,
    relation_count: usize,
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn zeros(entity_count: usize, relation_count: usize, dim: usize) -> Self {
        EmbeddingTable {
            dim,
            entity_count,
            relation_count,
            data: vec![0.0; (entity_count + relation_count) * dim],
        }
    }

    pub fn from_data(entity_count: usize, relation_count: usize, dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), (entity_count + relation_count) * dim);
        EmbeddingTable {
            dim,
            entity_count,
            relation_count,
            data,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entity_count(&self) -> usize {
        self.entity_count
    }

    pub fn relation_count(&self) -> usize {
        self.relation_count
    }

    pub fn entity(&self, e: EntityId) -> &[f64] {
        self.row(e.index())
    }

    pub fn relation(&self, r: RelationId) -> &[f64] {
        self.row(self.entity_count + r.index())
    }

    pub fn entity_mut(&mut self, e: EntityId) -> &mut [f64] {
        self.row_mut(e.index())
    }

    pub fn relation_mut(&mut self, r: RelationId) -> &mut [f64] {
        let i = self.entity_count + r.index();
        self.row_mut(i)
    }

    /// Row `i` of the combined buffer (entities, then relations).
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Scales every entity row to unit L2 norm (zero rows are left alone).
    pub fn normalize_entities(&mut self) {
        let d = self.dim;
        for row in self.data[..self.entity_count * d].chunks_mut(d) {
            let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.0 {
                row.iter_mut().for_each(|x| *x /= n);
            }
        }
    }
}

/// Uniform initialisation in `[-6/sqrt(dim), 6/sqrt(dim)]`.
pub fn init_embeddings(entity_count: usize, relation_count: usize, dim: usize, seed: u64) -> EmbeddingTable {
    assert!(dim >= 1, "embedding dimension must be positive");
    let bound = 6.0 / (dim as f64).sqrt();
    let mut rng = seed::rng(seed, &[0x1417]);
    let data = (0..(entity_count + relation_count) * dim)
        .map(|_| rng.gen_range(-bound..=bound))
        .collect();
    EmbeddingTable::from_data(entity_count, relation_count, dim, data)
}
