//! Simulator for LTE uplink persistent periodic grants serving UAV telemetry.
//!
//! A UAV flow receives fixed-size grants every `p` subframes, sized from its
//! mean rate and a provisioning factor. The engine steps the cell in 1 ms
//! subframes and records per-message delay; [`metrics`] reduces the records
//! and [`sweep`] runs parameter grids.

pub mod config;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod plot;
pub mod sched;
pub mod sweep;
pub mod tbs;
pub mod traffic;

pub use engine::{run, simulate, DelayRecord, SimConfig, SimOutput, UavScheduling};
pub use error::{Error, Result};
pub use metrics::{resource_metrics, summarize, DelayStats, ResourceMetrics};
pub use sched::{grant_size, supported_users, PersistentFlowConfig, ProvisioningFactor};
pub use tbs::{tbs_lookup, CellConfig, TbsTable};

pub type DelayStatsF64 = metrics::DelayStats<f64>;
pub type DelayStatsF32 = metrics::DelayStats<f32>;
pub type ResourceMetricsF64 = metrics::ResourceMetrics<f64>;
pub type ResourceMetricsF32 = metrics::ResourceMetrics<f32>;
