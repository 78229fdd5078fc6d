//! Minimum-energy data collection with a ground vehicle serving backscatter
//! IoT users: exact vertex selection, touring and time/power allocation.

// Negated float comparisons below are deliberate: they send NaN down the error path.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod bnb;
pub mod error;
pub mod experiments;
pub mod feasibility;
pub mod inner;
pub mod local_search;
pub mod model;
pub mod oracle;
pub mod plan;
pub mod scenario;
pub mod tour;

pub use error::{Error, Result};
pub use model::Selection;
pub use plan::{Allocation, SolveReport, SolveStats, TourSolution, TraceRecord};
pub use scenario::{Scenario, ScenarioData};
