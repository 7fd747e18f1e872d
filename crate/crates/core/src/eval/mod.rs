//! Link-prediction ranking, entity-classification probing and significance
//! testing.

mod probe;
mod rank;
mod ttest;

pub use probe::{classify, probe_report, train_probe, ClassCounts, ProbeConfig, ProbeReport, ProbeWeights};
pub use rank::{evaluate_split, filtered_rank, FilterIndex, RankingReport, Side, HITS_AT};
pub use ttest::{students_t_test, TTestReport};
