//! Batch front end for the btq-core checks: identity suites, transport
//! factors, fixed-point coefficients and torus trace studies, written as
//! JSON or CSV reports.

pub mod commands;
pub mod config;
pub mod report;
pub mod suites;

pub use commands::run;
pub use config::RunConfig;
pub use report::{Record, Report};
