use serde::Serialize;
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TTestReport {
    pub sample_a: Vec<f64>,
    pub sample_b: Vec<f64>,
    pub t_statistic: f64,
    pub degrees_of_freedom: f64,
    /// Two-sided.
    pub p_value: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sum_sq_dev(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m).powi(2)).sum()
}

/// Two-sample Student's t-test with pooled variance.
///
/// `t = (mean_a - mean_b) / sqrt(s_p^2 (1/n_a + 1/n_b))` with
/// `n_a + n_b - 2` degrees of freedom; the two-sided p-value is
/// `I_{df/(df+t^2)}(df/2, 1/2)`.
pub fn students_t_test(a: &[f64], b: &[f64]) -> Result<TTestReport> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(Error::InsufficientSamples(s.len()));
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let df = na + nb - 2.0;
    let pooled = (sum_sq_dev(a, ma) + sum_sq_dev(b, mb)) / df;
    let se = (pooled * (1.0 / na + 1.0 / nb)).sqrt();
    let diff = ma - mb;
    let (t, p) = if se == 0.0 {
        if diff == 0.0 {
            (0.0, 1.0)
        } else {
            (diff.signum() * f64::INFINITY, 0.0)
        }
    } else {
        let t = diff / se;
        let p = beta_reg(df / 2.0, 0.5, df / (df + t * t));
        (t, p.clamp(0.0, 1.0))
    };
    Ok(TTestReport {
        sample_a: a.to_vec(),
        sample_b: b.to_vec(),
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: p,
    })
}
