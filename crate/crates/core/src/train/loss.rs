//! Task losses and the symmetrical contrastive loss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norms at or below this are rejected by the contrastive loss.
pub const NORM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskLoss {
    /// `max(0, margin - s(pos) + s(neg))` per (positive, negative) pair.
    MarginRanking,
    /// `-log sigma(s(pos)) - log sigma(-s(neg))` per (positive, negative) pair.
    BinaryCrossEntropy,
}

impl TaskLoss {
    pub fn name(self) -> &'static str {
        match self {
            TaskLoss::MarginRanking => "margin_ranking",
            TaskLoss::BinaryCrossEntropy => "binary_cross_entropy",
        }
    }

    /// Loss of one (positive, negative) pair and its derivatives with
    /// respect to the two scores.
    pub fn pair_term(self, pos: f64, neg: f64, margin: f64) -> (f64, f64, f64) {
        match self {
            TaskLoss::MarginRanking => {
                let v = margin - pos + neg;
                if v > 0.0 {
                    (v, -1.0, 1.0)
                } else {
                    (0.0, 0.0, 0.0)
                }
            }
            TaskLoss::BinaryCrossEntropy => {
                let loss = softplus(-pos) + softplus(neg);
                (loss, -sigmoid(-pos), sigmoid(neg))
            }
        }
    }
}

impl std::str::FromStr for TaskLoss {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "margin_ranking" | "margin" => Ok(TaskLoss::MarginRanking),
            "binary_cross_entropy" | "bce" => Ok(TaskLoss::BinaryCrossEntropy),
            _ => Err(format!("expected margin_ranking or binary_cross_entropy, got '{s}'")),
        }
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn checked_norm(v: &[f64]) -> Result<f64> {
    let n = norm(v);
    if n > NORM_EPS {
        Ok(n)
    } else {
        Err(Error::DegenerateVector { norm: n })
    }
}

/// Mean squared distance between the L2-normalised anchor and each
/// positive. Zero when there are no positives.
pub fn contrastive_loss(anchor: &[f64], positives: &[&[f64]]) -> Result<f64> {
    if positives.is_empty() {
        return Ok(0.0);
    }
    let na = checked_norm(anchor)?;
    let mut sum = 0.0;
    for p in positives {
        let np = checked_norm(p)?;
        sum += anchor
            .iter()
            .zip(p.iter())
            .map(|(a, p)| (a / na - p / np).powi(2))
            .sum::<f64>();
    }
    Ok(sum / positives.len() as f64)
}

/// Same quantity as [`contrastive_loss`], computed as `2 - 2 * mean cosine`.
pub fn contrastive_loss_cosine(anchor: &[f64], positives: &[&[f64]]) -> Result<f64> {
    if positives.is_empty() {
        return Ok(0.0);
    }
    let na = checked_norm(anchor)?;
    let mut cos = 0.0;
    for p in positives {
        let np = checked_norm(p)?;
        cos += anchor.iter().zip(p.iter()).map(|(a, p)| a * p).sum::<f64>() / (na * np);
    }
    Ok(2.0 - 2.0 * cos / positives.len() as f64)
}

/// Adds `coef * d loss / d anchor` into `g_anchor` and
/// `coef * d loss / d positive_i` into `g_positives[i]`.
pub(crate) fn add_contrastive_grad(
    anchor: &[f64],
    positives: &[&[f64]],
    coef: f64,
    g_anchor: &mut [f64],
    g_positives: &mut [Vec<f64>],
) -> Result<()> {
    if positives.is_empty() {
        return Ok(());
    }
    let m = positives.len() as f64;
    let na = checked_norm(anchor)?;
    let a_hat: Vec<f64> = anchor.iter().map(|x| x / na).collect();
    let mut p_hat_sum = vec![0.0; anchor.len()];
    for (p, gp) in positives.iter().zip(g_positives.iter_mut()) {
        let np = checked_norm(p)?;
        let p_hat: Vec<f64> = p.iter().map(|x| x / np).collect();
        for (s, v) in p_hat_sum.iter_mut().zip(&p_hat) {
            *s += v;
        }
        // d/dp of -(2/m) <a_hat, p_hat> = -(2/m) (I - p_hat p_hat^T) a_hat / |p|
        let dot: f64 = p_hat.iter().zip(&a_hat).map(|(x, y)| x * y).sum();
        let scale = -coef * 2.0 / (m * np);
        for j in 0..gp.len() {
            gp[j] += scale * (a_hat[j] - dot * p_hat[j]);
        }
    }
    let dot: f64 = a_hat.iter().zip(&p_hat_sum).map(|(x, y)| x * y).sum();
    let scale = -coef * 2.0 / (m * na);
    for j in 0..g_anchor.len() {
        g_anchor[j] += scale * (p_hat_sum[j] - dot * a_hat[j]);
    }
    Ok(())
}
