use std::fmt;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::tbs::{TbsTable, MAX_PRBS};

const DECIMAL_SCALE: u64 = 1_000_000_000;

/// Overprovisioning factor (>= 1) held as an exact ratio.
///
/// Decimal inputs are rounded half-up to 1e-9 so that grant-size comparisons
/// at table boundaries do not depend on floating-point behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProvisioningFactor(Ratio<u64>);

impl ProvisioningFactor {
    pub const ONE: ProvisioningFactor = ProvisioningFactor(Ratio::new_raw(1, 1));

    pub fn new(numer: u64, denom: u64) -> Result<Self> {
        if denom == 0 || numer < denom {
            return Err(Error::Config(format!(
                "provisioning factor must be >= 1, got {numer}/{denom}"
            )));
        }
        Ok(ProvisioningFactor(Ratio::new(numer, denom)))
    }

    pub fn from_f64(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || !(1.0..=1e6).contains(&alpha) {
            return Err(Error::Config(format!(
                "provisioning factor must be a finite value >= 1, got {alpha}"
            )));
        }
        let scaled = (alpha * DECIMAL_SCALE as f64 + 0.5).floor() as u64;
        Self::new(scaled, DECIMAL_SCALE)
    }

    pub fn ratio(&self) -> Ratio<u64> {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

impl fmt::Display for ProvisioningFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

/// Periodic reservation for one user: mean rate, period, headroom, phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PersistentFlowConfig {
    pub mean_rate_bps: u64,
    pub period_subframes: u32,
    pub provisioning_factor: ProvisioningFactor,
    pub phase_offset: u32,
}

impl PersistentFlowConfig {
    pub fn new(mean_rate_bps: u64, period_subframes: u32, alpha: ProvisioningFactor) -> Self {
        PersistentFlowConfig {
            mean_rate_bps,
            period_subframes,
            provisioning_factor: alpha,
            phase_offset: 0,
        }
    }

    pub fn with_phase(mut self, phase_offset: u32) -> Self {
        self.phase_offset = phase_offset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean_rate_bps == 0 {
            return Err(Error::Parameter {
                name: "mean_rate_bps",
                value: 0,
                expected: "> 0",
            });
        }
        if self.period_subframes == 0 {
            return Err(Error::Parameter {
                name: "period_subframes",
                value: 0,
                expected: ">= 1",
            });
        }
        if self.phase_offset >= self.period_subframes {
            return Err(Error::Parameter {
                name: "phase_offset",
                value: self.phase_offset as i64,
                expected: "0..period",
            });
        }
        Ok(())
    }

    /// Whether a grant of this flow is effective in subframe `sf`.
    pub fn is_due(&self, sf: u64) -> bool {
        let p = self.period_subframes as u64;
        sf % p == self.phase_offset as u64 % p
    }

    /// Bits each grant must carry: `r * p * alpha / 1000`.
    pub fn required_bits(&self) -> Ratio<u128> {
        let alpha = self.provisioning_factor.ratio();
        Ratio::new(
            self.mean_rate_bps as u128 * self.period_subframes as u128 * *alpha.numer() as u128,
            1000 * *alpha.denom() as u128,
        )
    }
}

/// True when `bits >= r * p * alpha / 1000`, compared exactly.
pub(crate) fn meets_threshold(bits: u32, flow: &PersistentFlowConfig) -> bool {
    let alpha = flow.provisioning_factor.ratio();
    let lhs = bits as u128 * 1000 * *alpha.denom() as u128;
    let rhs = flow.mean_rate_bps as u128 * flow.period_subframes as u128 * *alpha.numer() as u128;
    lhs >= rhs
}

fn ratio_to_f64(r: Ratio<u128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Smallest PRB count whose transport block meets the per-period volume,
/// searched over `1..=max_prbs`.
pub fn grant_size_in(
    table: &TbsTable,
    flow: &PersistentFlowConfig,
    mcs: u8,
    max_prbs: u32,
) -> Result<u32> {
    flow.validate()?;
    let max_prbs = max_prbs.min(MAX_PRBS);
    if max_prbs == 0 {
        return Err(Error::Parameter {
            name: "max_prbs",
            value: 0,
            expected: "1..=100",
        });
    }
    // tbs is non-decreasing in n, so the qualifying set is a suffix.
    let (mut lo, mut hi) = (1u32, max_prbs);
    if !meets_threshold(table.lookup(hi, mcs)?, flow) {
        let max_bits = table.lookup(hi, mcs)?;
        let required = ratio_to_f64(flow.required_bits());
        return Err(Error::Infeasible {
            required_bits: required,
            max_bits,
            max_prbs: hi,
            deficit_bits: required - max_bits as f64,
        });
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if meets_threshold(table.lookup(mid, mcs)?, flow) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}

/// Grant size for mean rate `r` (bit/s), period `p` (subframes) and factor
/// `alpha` at MCS `mcs`, using the standard table and up to 100 PRBs.
pub fn grant_size(r_bps: u64, p: u32, alpha: ProvisioningFactor, mcs: u8) -> Result<u32> {
    let flow = PersistentFlowConfig::new(r_bps, p, alpha);
    grant_size_in(TbsTable::standard(), &flow, mcs, MAX_PRBS)
}

/// Users a cell of `cell_prbs` can serve with `grant_prbs`-sized grants every
/// `period` subframes: `floor(N / n) * p`.
pub fn supported_users(cell_prbs: u32, grant_prbs: u32, period: u32) -> Result<u64> {
    for (name, v) in [
        ("cell_prbs", cell_prbs),
        ("grant_prbs", grant_prbs),
        ("period", period),
    ] {
        if v == 0 {
            return Err(Error::Parameter {
                name,
                value: 0,
                expected: ">= 1",
            });
        }
    }
    Ok((cell_prbs / grant_prbs) as u64 * period as u64)
}
