//! Linear probe over frozen entity embeddings.
//!
//! A single affine layer with softmax, trained by full-batch gradient
//! descent on mean cross-entropy from zero-initialised weights.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::EntityId;
use crate::train::EmbeddingTable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub learning_rate: f64,
    pub steps: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            learning_rate: 0.5,
            steps: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeWeights {
    pub n_classes: usize,
    pub dim: usize,
    /// `n_classes x dim`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ProbeWeights {
    pub fn zeros(n_classes: usize, dim: usize) -> Self {
        ProbeWeights {
            n_classes,
            dim,
            weights: vec![0.0; n_classes * dim],
            bias: vec![0.0; n_classes],
        }
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_classes)
            .map(|c| {
                let w = &self.weights[c * self.dim..(c + 1) * self.dim];
                self.bias[c] + w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>()
            })
            .collect()
    }
}

fn softmax(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

fn check_entity(table: &EmbeddingTable, e: EntityId) -> Result<()> {
    if e.index() < table.entity_count() {
        Ok(())
    } else {
        Err(Error::UnknownEntity {
            id: e.0,
            count: table.entity_count(),
        })
    }
}

pub fn train_probe(
    frozen: &EmbeddingTable,
    labeled: &[(EntityId, usize)],
    n_classes: usize,
    cfg: &ProbeConfig,
) -> Result<ProbeWeights> {
    if labeled.is_empty() {
        return Err(Error::InvalidInput("no labelled entities".into()));
    }
    if let Some((_, c)) = labeled.iter().find(|(_, c)| *c >= n_classes) {
        return Err(Error::InvalidInput(format!("class {c} outside 0..{n_classes}")));
    }
    if labeled.iter().all(|(_, c)| *c == labeled[0].1) {
        return Err(Error::SingleClass);
    }
    for (e, _) in labeled {
        check_entity(frozen, *e)?;
    }
    let dim = frozen.dim();
    let mut w = ProbeWeights::zeros(n_classes, dim);
    let n = labeled.len() as f64;
    for _ in 0..cfg.steps {
        let mut gw = vec![0.0; w.weights.len()];
        let mut gb = vec![0.0; n_classes];
        for (e, class) in labeled {
            let x = frozen.entity(*e);
            let mut p = w.logits(x);
            softmax(&mut p);
            p[*class] -= 1.0;
            for c in 0..n_classes {
                gb[c] += p[c];
                for (g, xj) in gw[c * dim..(c + 1) * dim].iter_mut().zip(x) {
                    *g += p[c] * xj;
                }
            }
        }
        for (v, g) in w.weights.iter_mut().zip(&gw) {
            *v -= cfg.learning_rate * g / n;
        }
        for (v, g) in w.bias.iter_mut().zip(&gb) {
            *v -= cfg.learning_rate * g / n;
        }
    }
    Ok(w)
}

/// Arg-max class; ties go to the lowest class id.
pub fn classify(weights: &ProbeWeights, frozen: &EmbeddingTable, e: EntityId) -> Result<usize> {
    if weights.dim != frozen.dim() {
        return Err(Error::DimMismatch {
            expected: weights.dim,
            found: frozen.dim(),
        });
    }
    check_entity(frozen, e)?;
    let z = weights.logits(frozen.entity(e));
    let mut best = 0;
    for (c, v) in z.iter().enumerate() {
        if *v > z[best] {
            best = c;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ClassCounts {
    pub total: usize,
    pub correct: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub per_class: Vec<ClassCounts>,
}

pub fn probe_report(
    weights: &ProbeWeights,
    frozen: &EmbeddingTable,
    test: &[(EntityId, usize)],
) -> Result<ProbeReport> {
    let mut per_class = vec![ClassCounts::default(); weights.n_classes];
    for (e, class) in test {
        let counts = per_class
            .get_mut(*class)
            .ok_or_else(|| Error::InvalidInput(format!("class {class} outside probe range")))?;
        counts.total += 1;
        if classify(weights, frozen, *e)? == *class {
            counts.correct += 1;
        }
    }
    let correct = per_class.iter().map(|c| c.correct).sum();
    let total = test.len();
    Ok(ProbeReport {
        accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        correct,
        total,
        per_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two clusters around (+2, +1) and (-2, -1) with small offsets.
    fn separable() -> (EmbeddingTable, Vec<(EntityId, usize)>) {
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            let class = i % 2;
            let s = if class == 0 { 1.0 } else { -1.0 };
            let jitter = (i as f64 * 0.37).sin() * 0.5;
            data.extend([s * 2.0 + jitter, s + 0.3 * jitter]);
            labels.push((EntityId(i as u32), class));
        }
        (EmbeddingTable::from_data(20, 0, 2, data), labels)
    }

    #[test]
    fn separable_fixture_reaches_full_accuracy() {
        let (t, labels) = separable();
        let w = train_probe(&t, &labels, 2, &ProbeConfig::default()).unwrap();
        let r = probe_report(&w, &t, &labels).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.per_class.iter().map(|c| c.total).sum::<usize>(), r.total);
    }

    #[test]
    fn zero_learning_rate_keeps_zero_weights() {
        let (t, labels) = separable();
        let cfg = ProbeConfig {
            learning_rate: 0.0,
            steps: 10,
        };
        let w = train_probe(&t, &labels, 2, &cfg).unwrap();
        assert_eq!(w, ProbeWeights::zeros(2, 2));
    }

    #[test]
    fn zero_weights_predict_class_zero() {
        let (t, _) = separable();
        let w = ProbeWeights::zeros(3, 2);
        for e in 0..20 {
            assert_eq!(classify(&w, &t, EntityId(e)).unwrap(), 0);
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let (t, _) = separable();
        let labels = vec![(EntityId(0), 1), (EntityId(1), 1)];
        assert!(matches!(
            train_probe(&t, &labels, 2, &ProbeConfig::default()),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let (t, _) = separable();
        let w = ProbeWeights::zeros(2, 5);
        assert!(matches!(
            classify(&w, &t, EntityId(0)),
            Err(Error::DimMismatch { expected: 5, found: 2 })
        ));
    }

    #[test]
    fn relabeling_permutes_predictions() {
        let (t, labels) = separable();
        let swapped: Vec<_> = labels.iter().map(|(e, c)| (*e, 1 - c)).collect();
        let a = train_probe(&t, &labels, 2, &ProbeConfig::default()).unwrap();
        let b = train_probe(&t, &swapped, 2, &ProbeConfig::default()).unwrap();
        for e in 0..20 {
            let pa = classify(&a, &t, EntityId(e)).unwrap();
            let pb = classify(&b, &t, EntityId(e)).unwrap();
            assert_eq!(pa, 1 - pb);
        }
        assert_eq!(
            probe_report(&a, &t, &labels).unwrap().accuracy,
            probe_report(&b, &t, &swapped).unwrap().accuracy
        );
    }
}
