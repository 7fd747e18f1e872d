//! `key=value` training configuration.
//!
//! Precedence: command-line overrides, then the file, then
//! [`TrainConfig::default`]. Blank lines and lines starting with `#` are
//! ignored. Recognised keys:
//!
//! | key          | meaning                                  | default          |
//! |--------------|------------------------------------------|------------------|
//! | `k`          | hop bound of the positive dictionary     | 2                |
//! | `m`          | positives sampled per anchor             | 50               |
//! | `alpha`      | contrastive weight                       | 0.001            |
//! | `dim`        | embedding dimension                      | 200              |
//! | `lr`         | Adam learning rate                       | 0.001            |
//! | `epochs`     |                                          | 500              |
//! | `batch_size` |                                          | 512              |
//! | `negatives`  | corruptions per training triple          | 10               |
//! | `margin`     | margin of the ranking loss               | 1.0              |
//! | `seed`       |                                          | 0                |
//! | `scorer`     | `transe` or `distmult`                   | `transe`         |
//! | `task_loss`  | `margin_ranking` or `binary_cross_entropy` | per scorer     |
//! | `renormalize`| unit-norm entity rows after each step    | false            |
//!
//! When `scorer` is set but `task_loss` is not, the task loss follows the
//! scorer: margin ranking for TransE, binary cross-entropy for DistMult.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::miner::MAX_HOPS;
use crate::train::{default_task_loss, TrainConfig};

const KEYS: &[&str] = &[
    "k",
    "m",
    "alpha",
    "dim",
    "lr",
    "epochs",
    "batch_size",
    "negatives",
    "margin",
    "seed",
    "scorer",
    "task_loss",
    "renormalize",
];

fn canonical(key: &str) -> Option<&'static str> {
    let key = key.trim().replace('-', "_").to_ascii_lowercase();
    let key = match key.as_str() {
        "learning_rate" => "lr",
        "n_negatives" => "negatives",
        "hops" => "k",
        other => other,
    };
    KEYS.iter().copied().find(|k| *k == key)
}

fn parse<T: FromStr>(key: &str, value: &str, line: Option<usize>) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e: T::Err| Error::BadValue {
        line,
        key: key.to_owned(),
        value: value.to_owned(),
        reason: e.to_string(),
    })
}

fn bad(key: &str, value: &str, line: Option<usize>, reason: &str) -> Error {
    Error::BadValue {
        line,
        key: key.to_owned(),
        value: value.to_owned(),
        reason: reason.to_owned(),
    }
}

fn apply(cfg: &mut TrainConfig, key: &'static str, value: &str, line: Option<usize>, task_loss_set: &mut bool) -> Result<()> {
    match key {
        "k" => {
            let k: u32 = parse(key, value, line)?;
            if !(1..=MAX_HOPS).contains(&k) {
                return Err(bad(key, value, line, "must be 1, 2 or 3"));
            }
            cfg.k = k;
        }
        "m" => cfg.m = parse(key, value, line)?,
        "alpha" => cfg.alpha = parse(key, value, line)?,
        "dim" => cfg.dim = parse(key, value, line)?,
        "lr" => cfg.learning_rate = parse(key, value, line)?,
        "epochs" => cfg.epochs = parse(key, value, line)?,
        "batch_size" => cfg.batch_size = parse(key, value, line)?,
        "negatives" => cfg.n_negatives = parse(key, value, line)?,
        "margin" => cfg.margin = parse(key, value, line)?,
        "seed" => cfg.seed = parse(key, value, line)?,
        "scorer" => {
            cfg.scorer = parse(key, value, line)?;
            if !*task_loss_set {
                cfg.task_loss = default_task_loss(cfg.scorer);
            }
        }
        "task_loss" => {
            cfg.task_loss = parse(key, value, line)?;
            *task_loss_set = true;
        }
        "renormalize" => cfg.renormalize = parse(key, value, line)?,
        _ => unreachable!("key list and match arms disagree"),
    }
    let non_negative = |v: f64| v.is_finite() && v >= 0.0;
    let valid = match key {
        "m" => cfg.m > 0,
        "dim" => cfg.dim > 0,
        "epochs" => cfg.epochs > 0,
        "batch_size" => cfg.batch_size > 0,
        "negatives" => cfg.n_negatives > 0,
        "alpha" => non_negative(cfg.alpha),
        "lr" => non_negative(cfg.learning_rate),
        "margin" => non_negative(cfg.margin),
        _ => true,
    };
    if valid {
        Ok(())
    } else {
        Err(bad(key, value, line, "out of range"))
    }
}

/// Parses configuration text and applies `overrides` on top.
pub fn parse_config_str(text: &str, overrides: &[(String, String)]) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::default();
    let mut file_entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::BadValue {
            line: Some(i + 1),
            key: line.to_owned(),
            value: String::new(),
            reason: "expected key=value".into(),
        })?;
        let canon = canonical(key).ok_or_else(|| Error::UnknownKey {
            line: i + 1,
            key: key.trim().to_owned(),
        })?;
        file_entries.push((canon, value.trim().to_owned(), Some(i + 1)));
    }
    // A task_loss anywhere must win over the scorer-derived default, so it
    // is tracked across both sources before scorer is applied.
    let mut override_entries = Vec::new();
    for (key, value) in overrides {
        let canon = canonical(key).ok_or_else(|| Error::UnknownKey {
            line: 0,
            key: key.clone(),
        })?;
        override_entries.push((canon, value.clone(), None));
    }
    let mut task_loss_set = file_entries
        .iter()
        .chain(&override_entries)
        .any(|(k, _, _)| *k == "task_loss");
    for (key, value, line) in file_entries.iter().chain(&override_entries) {
        apply(&mut cfg, key, value, *line, &mut task_loss_set)?;
    }
    Ok(cfg)
}

/// Reads the optional file at `path` and applies `overrides`.
pub fn parse_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<TrainConfig> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
        None => String::new(),
    };
    parse_config_str(&text, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::{ScorerKind, TaskLoss};

    fn ov(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn empty_gives_defaults() {
        let cfg = parse_config_str("", &[]).unwrap();
        assert_eq!(cfg, TrainConfig::default());
        assert_eq!((cfg.alpha, cfg.k, cfg.m), (0.001, 2, 50));
        assert_eq!((cfg.dim, cfg.learning_rate, cfg.batch_size, cfg.epochs), (200, 1e-3, 512, 500));
    }

    #[test]
    fn flags_override_file() {
        let cfg = parse_config_str("alpha=0.01\n", &ov(&[("alpha", "0.1")])).unwrap();
        assert_eq!(cfg.alpha, 0.1);
        let cfg = parse_config_str("# c\n\nalpha = 0.01\n", &[]).unwrap();
        assert_eq!(cfg.alpha, 0.01);
    }

    #[test]
    fn bad_value_reports_line() {
        match parse_config_str("k=2\nalpha=banana\n", &[]) {
            Err(Error::BadValue { line: Some(2), key, .. }) => assert_eq!(key, "alpha"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config_str("k=4\n", &[]), Err(Error::BadValue { .. })));
        assert!(matches!(parse_config_str("m=0\n", &[]), Err(Error::BadValue { .. })));
        assert!(matches!(parse_config_str("alpha=-1\n", &[]), Err(Error::BadValue { .. })));
        assert!(matches!(parse_config_str("novalue\n", &[]), Err(Error::BadValue { .. })));
    }

    #[test]
    fn unknown_key_reports_line() {
        assert!(matches!(
            parse_config_str("k=1\nwibble=3\n", &[]),
            Err(Error::UnknownKey { line: 2, .. })
        ));
    }

    #[test]
    fn task_loss_follows_scorer_unless_set() {
        let cfg = parse_config_str("scorer=distmult\n", &[]).unwrap();
        assert_eq!(cfg.scorer, ScorerKind::DistMult);
        assert_eq!(cfg.task_loss, TaskLoss::BinaryCrossEntropy);
        let cfg = parse_config_str("task_loss=margin_ranking\n", &ov(&[("scorer", "distmult")])).unwrap();
        assert_eq!(cfg.task_loss, TaskLoss::MarginRanking);
    }

    #[test]
    fn hyphenated_flag_names() {
        let cfg = parse_config_str("", &ov(&[("batch-size", "7"), ("task-loss", "bce")])).unwrap();
        assert_eq!(cfg.batch_size, 7);
        assert_eq!(cfg.task_loss, TaskLoss::BinaryCrossEntropy);
    }
}
