//! Antenna allocation for multi-cell MIMO downlinks with coordinated
//! interference nulling: closed-form stochastic-geometry rate formulas and a
//! Monte Carlo system simulator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod config;
pub mod error;
pub mod montecarlo;
pub mod network;
pub mod phy;
pub mod specfun;
pub mod stats;

#[cfg(test)]
mod oracle;

pub use analytic::{argmax_sum_rate, AnalyticContext, RateCcdfCurve};
pub use config::{
    ClusteringMode, ConfigDocument, DerivedParams, GrantMetric, OperatingPoint, SystemParams,
    UserModel,
};
pub use error::{Error, Result};
