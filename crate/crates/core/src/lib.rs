//! Session-level search satisfaction evaluation.
//!
//! The crate covers the full pipeline from raw behavior logs to an
//! explainable satisfaction judgment per search session:
//!
//! - [`session`]: event-log parsing, sessionization by goal id, dwell
//!   derivation.
//! - [`features`]: the behavioral feature catalog (search outcome, cost,
//!   effort, and change groups) plus the reduced single-query set.
//! - [`preprocess`]: annotation ingestion, label discretization, outlier
//!   deletion, imputation, splits, rebalancing.
//! - [`stats`]: feature/satisfaction correlation reports with significance
//!   gating.
//! - [`learners`]: from-scratch CART, random forest, second-order boosted
//!   trees, multinomial logistic regression and calibrated linear SVM,
//!   all behind one probabilistic prediction contract.
//! - [`combine`]: one-vs-one voting, one-vs-rest, and DAG combination of
//!   binary classifiers.
//! - [`hybrid`]: the two-layer hybrid model (boosted layer reweighted by
//!   conditional pairwise classifiers), the single-query rule+tree model,
//!   and the final dispatcher.
//! - [`explain`]: local surrogate explanations, quantile discretization,
//!   and corpus-level rule abstraction.
//! - [`eval`]: classification metrics, page-level baselines, A/B
//!   comparison with bootstrap intervals, and GSB adjudication.
//! - [`synth`]: the seeded synthetic session generator used for
//!   desk-scale verification.
//!
//! Everything stochastic is seeded and deterministic; with the `parallel`
//! feature enabled (the default) batch stages run on rayon but produce
//! bit-identical output to the sequential fallback.

pub mod artifact;
pub mod combine;
pub mod error;
pub mod eval;
pub mod explain;
pub mod features;
pub mod hybrid;
pub mod learners;
pub(crate) mod par;
pub mod pipeline;
pub(crate) mod seed;
pub mod preprocess;
pub mod session;
pub mod stats;
pub mod synth;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Number of satisfaction levels (session labels 0..=3).
pub const NUM_LABELS: usize = 4;
