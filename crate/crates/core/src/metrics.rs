//! Delay statistics and grant resource metrics.

use num_traits::Float;

use crate::engine::DelayRecord;
use crate::error::{Error, Result};
use crate::sched::{grant_size_in, supported_users, PersistentFlowConfig};
use crate::tbs::{CellConfig, TbsTable};

pub const DEFAULT_DEADLINE_MS: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayStats<T> {
    pub count: usize,
    pub mean_ms: T,
    /// Sample standard deviation; zero for a single record.
    pub std_ms: T,
    /// Nearest-rank 99.9th percentile.
    pub p999_ms: T,
    /// Relative frequency of delays strictly above the deadline.
    pub exceed_freq: T,
    pub min_ms: T,
    pub max_ms: T,
}

/// 1-based nearest rank `ceil(q_num / q_den * count)`, at least 1.
fn nearest_rank(count: usize, q_num: usize, q_den: usize) -> usize {
    (count * q_num).div_ceil(q_den).max(1)
}

/// Statistics over raw delays.
pub fn summarize_delays<T: Float>(delays: &[T], deadline_ms: T) -> Result<DelayStats<T>> {
    if delays.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = T::from(delays.len()).expect("count fits the float type");
    let mut sorted = delays.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("delays are not NaN"));

    let mean = sorted.iter().fold(T::zero(), |acc, &d| acc + d) / n;
    let std = if delays.len() > 1 {
        let ss = sorted
            .iter()
            .fold(T::zero(), |acc, &d| acc + (d - mean) * (d - mean));
        (ss / (n - T::one())).sqrt()
    } else {
        T::zero()
    };
    let rank = nearest_rank(sorted.len(), 999, 1000);
    let exceeding = sorted.iter().filter(|&&d| d > deadline_ms).count();
    Ok(DelayStats {
        count: sorted.len(),
        mean_ms: mean,
        std_ms: std,
        p999_ms: sorted[rank - 1],
        exceed_freq: T::from(exceeding).expect("count fits") / n,
        min_ms: sorted[0],
        max_ms: sorted[sorted.len() - 1],
    })
}

pub fn summarize(records: &[DelayRecord], deadline_ms: f64) -> Result<DelayStats<f64>> {
    let delays: Vec<f64> = records.iter().map(|r| r.delay_ms).collect();
    summarize_delays(&delays, deadline_ms)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResourceMetrics<T> {
    pub prbs_per_grant: u32,
    /// `tbs(n, m) * 1000 / p`.
    pub allocated_bps: T,
    /// `allocated_bps / r`.
    pub overalloc_ratio: T,
    pub users_supported: u64,
}

pub fn resource_metrics_in<T: Float>(
    table: &TbsTable,
    flow: &PersistentFlowConfig,
    cell: &CellConfig,
) -> Result<ResourceMetrics<T>> {
    cell.validate()?;
    let n = grant_size_in(table, flow, cell.mcs_index, cell.bandwidth_prbs)?;
    let bits = table.lookup(n, cell.mcs_index)?;
    let alpha = flow.provisioning_factor.ratio();
    // allocated >= alpha * r, exactly
    assert!(
        bits as u128 * 1000 * *alpha.denom() as u128
            >= flow.mean_rate_bps as u128 * flow.period_subframes as u128 * *alpha.numer() as u128,
        "grant of {n} PRBs undershoots the provisioned rate"
    );
    let to_t = |x: u64| T::from(x).expect("integer fits the float type");
    let allocated = to_t(bits as u64) * to_t(1000) / to_t(flow.period_subframes as u64);
    Ok(ResourceMetrics {
        prbs_per_grant: n,
        allocated_bps: allocated,
        overalloc_ratio: allocated / to_t(flow.mean_rate_bps),
        users_supported: supported_users(cell.bandwidth_prbs, n, flow.period_subframes)?,
    })
}

pub fn resource_metrics(
    flow: &PersistentFlowConfig,
    cell: &CellConfig,
) -> Result<ResourceMetrics<f64>> {
    resource_metrics_in(TbsTable::standard(), flow, cell)
}
