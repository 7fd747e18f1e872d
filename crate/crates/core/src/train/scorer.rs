//! Triple scoring functions. Higher scores mean more plausible triples.

use serde::{Deserialize, Serialize};

use super::EmbeddingTable;
use crate::graph::Triple;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    /// `-||h + r - t||_2`
    TransE,
    /// `sum_j h_j r_j t_j`
    DistMult,
}

impl ScorerKind {
    pub fn name(self) -> &'static str {
        match self {
            ScorerKind::TransE => "transe",
            ScorerKind::DistMult => "distmult",
        }
    }

    pub fn code(self) -> u32 {
        match self {
            ScorerKind::TransE => 0,
            ScorerKind::DistMult => 1,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(ScorerKind::TransE),
            1 => Some(ScorerKind::DistMult),
            _ => None,
        }
    }
}

impl std::str::FromStr for ScorerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "transe" => Ok(ScorerKind::TransE),
            "distmult" => Ok(ScorerKind::DistMult),
            _ => Err(format!("expected transe or distmult, got '{s}'")),
        }
    }
}

pub fn score_vectors(kind: ScorerKind, h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    match kind {
        ScorerKind::TransE => {
            let sq: f64 = h
                .iter()
                .zip(r)
                .zip(t)
                .map(|((h, r), t)| {
                    let d = h + r - t;
                    d * d
                })
                .sum();
            -sq.sqrt()
        }
        ScorerKind::DistMult => h.iter().zip(r).zip(t).map(|((h, r), t)| h * r * t).sum(),
    }
}

pub fn score(table: &EmbeddingTable, kind: ScorerKind, triple: &Triple) -> f64 {
    score_vectors(
        kind,
        table.entity(triple.head),
        table.relation(triple.relation),
        table.entity(triple.tail),
    )
}

/// Adds `coef * d score / d(h, r, t)` into the three gradient rows.
/// TransE uses the zero subgradient where `h + r = t`.
pub(crate) fn add_score_grad(
    kind: ScorerKind,
    (h, r, t): (&[f64], &[f64], &[f64]),
    coef: f64,
    (gh, gr, gt): (&mut [f64], &mut [f64], &mut [f64]),
) {
    match kind {
        ScorerKind::TransE => {
            let norm = h
                .iter()
                .zip(r)
                .zip(t)
                .map(|((h, r), t)| (h + r - t).powi(2))
                .sum::<f64>()
                .sqrt();
            if norm == 0.0 {
                return;
            }
            for j in 0..h.len() {
                let g = coef * (h[j] + r[j] - t[j]) / norm;
                gh[j] -= g;
                gr[j] -= g;
                gt[j] += g;
            }
        }
        ScorerKind::DistMult => {
            for j in 0..h.len() {
                gh[j] += coef * r[j] * t[j];
                gr[j] += coef * h[j] * t[j];
                gt[j] += coef * h[j] * r[j];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transe_perfect_translation_scores_zero() {
        assert_eq!(score_vectors(ScorerKind::TransE, &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]), 0.0);
        assert_eq!(score_vectors(ScorerKind::TransE, &[0.0, 0.0], &[3.0, 4.0], &[0.0, 0.0]), -5.0);
    }

    #[test]
    fn distmult_is_trilinear() {
        assert_eq!(score_vectors(ScorerKind::DistMult, &[1.0, 2.0], &[1.0, 1.0], &[2.0, 1.0]), 4.0);
    }

    #[test]
    fn distmult_is_symmetric_in_head_and_tail() {
        let t = super::super::init_embeddings(6, 2, 5, 3);
        for h in 0..6 {
            for tl in 0..6 {
                let a = score(&t, ScorerKind::DistMult, &Triple::new(h, 1, tl));
                let b = score(&t, ScorerKind::DistMult, &Triple::new(tl, 1, h));
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kind_parses() {
        assert_eq!("TransE".parse::<ScorerKind>().unwrap(), ScorerKind::TransE);
        assert!("rotate".parse::<ScorerKind>().is_err());
        assert_eq!(ScorerKind::from_code(ScorerKind::DistMult.code()), Some(ScorerKind::DistMult));
    }
}
