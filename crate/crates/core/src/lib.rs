//! Pairwise-fair, community-preserving k-center clustering.
//!
//! A classical k-center solution ([`unfair`]) is turned into a randomized one
//! ([`fair`]) by growing every cluster by an independent exponential amount
//! and letting clusters capture points in sequence. Nearby points are then
//! separated with probability proportional to their distance, and small
//! communities are rarely fragmented. [`eval`] measures both properties over
//! many seeded trials; [`io`] and [`cli`] handle benchmark files and reports.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod eval;
pub mod fair;
pub mod io;
pub mod metric;
pub mod unfair;

pub use error::{Error, Result};
pub use eval::{EvalParams, EvalTargets, TrialEnsemble};
pub use fair::{ExpandedClustering, FairConfig, OrderPolicy};
pub use metric::{Community, MetricSpace};
pub use unfair::{Clustering, Solver};
