//! Multi-label strategy-tag prediction for programming-challenge problem statements.
//!
//! The crate covers the whole pipeline: text cleaning ([`preprocess`]), dataset
//! handling ([`corpus`]), tag aggregation ([`taxonomy`]), the four input
//! representations ([`represent`]), five classifiers ([`models`]), splitting and
//! gradient training ([`training`]), and evaluation ([`metrics`]).
//! [`pipeline`] ties them together into trainable, serializable bundles and the
//! six-row comparison benchmark.

pub mod config;
pub mod corpus;
mod error;
mod io;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod preprocess;
pub mod represent;
pub mod rng;
pub mod taxonomy;
pub mod training;

pub use config::{HoldoutMode, ModelKind, Representation, RunConfig};
pub use corpus::{Dataset, Problem, Source, StatsReport};
pub use error::{Error, Result};
pub use metrics::MetricsReport;
pub use taxonomy::{LabelVector, TaxonomyMap, N_LABELS};
