//! Predictive autoscaling laboratory for serverless functions.
//!
//! The crate bundles a from-scratch seasonal ARIMA forecaster ([`forecast`]),
//! a synthetic diurnal workload generator ([`workload`]), a fixed-timestep
//! cluster simulator with cold-start accounting ([`cluster`]), two
//! autoscalers sharing one decision contract ([`autoscale`]) and the scenario
//! runner that pits them against each other ([`scenario`]).

pub mod autoscale;
pub mod cluster;
pub mod forecast;
pub mod scenario;
pub mod workload;

mod error;

pub use error::{Error, Result};
