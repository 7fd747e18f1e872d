//! Knowledge-graph embedding with relation-symmetrical contrastive positives.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: interned triples and the signed union-graph adjacency index.
//! - [`miner`]: k-hop relation-symmetrical structure mining, the positive
//!   dictionary, positive sampling and structure statistics.
//! - [`train`]: embedding tables, TransE/DistMult scorers, task and
//!   contrastive losses, analytic gradients, Adam and the training loop.
//! - [`eval`]: filtered link-prediction ranking, a linear probe for entity
//!   classification and the two-sample Student's t-test.
//! - [`config`] and [`experiment`]: key=value configuration and
//!   with/without-contrastive comparison runs.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and plain iterators otherwise. Every
//! parallel phase collects in input order, so results do not depend on the
//! worker count.

pub mod config;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod graph;
pub mod miner;
pub mod par;
pub mod seed;
pub mod synthetic;
pub mod train;

pub use error::{Error, Result};
