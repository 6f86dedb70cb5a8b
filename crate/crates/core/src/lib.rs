//! Kernel smoothing of preference-event probabilities over tied and
//! incomplete rankings.
//!
//! Rankings are ordered groups of items ([`TiedRanking`]). A set of them
//! trains a [`KernelModel`], which assigns probabilities to any ranking event
//! using a triangular kernel on Kendall's tau. The [`recommend`] and [`rules`]
//! modules build rank prediction and association-rule mining on top of it.
//!
//! ```
//! use rankdens::{ItemUniverse, KernelModel, KernelMode, TiedRanking};
//!
//! let u = ItemUniverse::new(3).unwrap();
//! let s = TiedRanking::parse("1|2|3", &u).unwrap();
//! let model = KernelModel::fit(vec![s], 3.0, KernelMode::Modified).unwrap();
//! let p = model.event_prob(&TiedRanking::parse("1|2", &u).unwrap()).unwrap();
//! assert!((p.value - 2.0 / 3.0).abs() < 1e-12);
//! ```

pub mod censored;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod ingest;
pub mod kendall;
pub mod numeric;
pub mod oracle;
pub mod ranking;
pub mod recommend;
pub mod rules;

pub use censored::{expected_kendall, pair_pref_prob};
pub use error::{Error, Result};
pub use estimator::{EventProbability, EventScorer, KernelModel, PairSummary};
pub use kendall::{
    default_bandwidth, kendall_tau, mahonian_distribution, triangular_normalization, KernelMode,
    MahonianTable, TriangularNormalization,
};
pub use ranking::{Item, ItemUniverse, Permutation, Slot, TiedRanking};
