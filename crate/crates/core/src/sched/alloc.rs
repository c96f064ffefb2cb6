//! Per-subframe PRB allocation: persistent reservations first, then BSR
//! opportunities, then best-effort data from reported buffers.

use crate::error::{Error, Result};
use crate::sched::grant::{grant_size_in, PersistentFlowConfig};
use crate::tbs::{CellConfig, TbsTable};

/// Opaque user identifier. Lower ids win best-effort ties.
pub type UserId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GrantKind {
    Persistent,
    BestEffort,
    BsrOpportunity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubframeGrant {
    pub user_id: UserId,
    /// Subframe in which the UE transmits on this grant.
    pub subframe: u64,
    pub prb_count: u32,
    pub tbs_bits: u32,
    pub kind: GrantKind,
}

/// A persistent flow with its grant size resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PersistentFlow {
    pub user_id: UserId,
    pub config: PersistentFlowConfig,
    pub prbs: u32,
}

/// Best-effort input to one subframe's allocation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BestEffortDemand {
    /// Users owed a single-PRB grant to send their buffer status report.
    pub bsr_opportunities: Vec<UserId>,
    /// Outstanding reported bytes per user.
    pub reported_bytes: Vec<(UserId, u64)>,
}

// Enumeration bound for the oversubscription check.
pub(crate) const MAX_HYPERPERIOD: u64 = 1 << 22;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Least common multiple of the periods, saturating above the check bound.
pub(crate) fn hyperperiod<'a>(periods: impl IntoIterator<Item = &'a u32>) -> u64 {
    periods.into_iter().fold(1u64, |acc, &p| {
        let p = p as u64;
        let l = acc / gcd(acc, p) * p;
        l.min(MAX_HYPERPERIOD + 1)
    })
}

/// Summed persistent PRBs per subframe over one hyperperiod.
pub(crate) fn persistent_load(flows: &[PersistentFlow]) -> Result<Vec<u32>> {
    let h = hyperperiod(flows.iter().map(|f| &f.config.period_subframes));
    if h > MAX_HYPERPERIOD {
        return Err(Error::Config(format!(
            "persistent periods have a hyperperiod above {MAX_HYPERPERIOD} subframes"
        )));
    }
    let mut load = vec![0u32; h as usize];
    for f in flows {
        let p = f.config.period_subframes as usize;
        let mut sf = f.config.phase_offset as usize;
        while sf < load.len() {
            load[sf] += f.prbs;
            sf += p;
        }
    }
    Ok(load)
}

pub(crate) fn worst_subframe(load: &[u32]) -> (u64, u32) {
    load.iter()
        .enumerate()
        .map(|(i, &l)| (i as u64, l))
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .unwrap_or((0, 0))
}

#[derive(Debug, Clone)]
pub struct Scheduler<'t> {
    cell: CellConfig,
    table: &'t TbsTable,
    flows: Vec<PersistentFlow>,
}

impl<'t> Scheduler<'t> {
    /// Resolves grant sizes and rejects configurations whose persistent
    /// reservations alone exceed the cell in any subframe.
    pub fn new(
        cell: CellConfig,
        table: &'t TbsTable,
        flows: &[(UserId, PersistentFlowConfig)],
    ) -> Result<Self> {
        cell.validate()?;
        let mut resolved = Vec::with_capacity(flows.len());
        for &(user_id, config) in flows {
            let prbs = grant_size_in(table, &config, cell.mcs_index, cell.bandwidth_prbs)?;
            resolved.push(PersistentFlow {
                user_id,
                config,
                prbs,
            });
        }
        let load = persistent_load(&resolved)?;
        let (subframe, demand) = worst_subframe(&load);
        if demand > cell.bandwidth_prbs {
            return Err(Error::Oversubscribed {
                subframe,
                demand,
                capacity: cell.bandwidth_prbs,
            });
        }
        Ok(Scheduler {
            cell,
            table,
            flows: resolved,
        })
    }

    pub fn cell(&self) -> CellConfig {
        self.cell
    }

    pub fn flows(&self) -> &[PersistentFlow] {
        &self.flows
    }

    fn grant(&self, user_id: UserId, subframe: u64, prbs: u32, kind: GrantKind) -> SubframeGrant {
        let tbs_bits = self
            .table
            .lookup(prbs, self.cell.mcs_index)
            .expect("validated cell and prbs within bandwidth");
        SubframeGrant {
            user_id,
            subframe,
            prb_count: prbs,
            tbs_bits,
            kind,
        }
    }

    /// Smallest PRB count that carries `bytes`, capped at the cell width.
    pub fn prbs_to_drain(&self, bytes: u64) -> u32 {
        let bits = bytes.saturating_mul(8);
        (1..=self.cell.bandwidth_prbs)
            .find(|&n| {
                self.table
                    .lookup(n, self.cell.mcs_index)
                    .map(|tbs| tbs as u64 >= bits)
                    .unwrap_or(false)
            })
            .unwrap_or(self.cell.bandwidth_prbs)
    }

    /// Grants effective in subframe `sf`.
    ///
    /// Leftover PRBs after persistent grants and BSR opportunities are split
    /// among best-effort users in proportion to their reported bytes (at least
    /// one PRB each while any remain), each capped at what drains its buffer.
    /// Anything still unassigned goes largest-buffer-first. Equal buffers are
    /// ordered by ascending user id.
    pub fn schedule_subframe(&self, sf: u64, demand: &BestEffortDemand) -> Vec<SubframeGrant> {
        let mut grants = Vec::new();
        let mut free = self.cell.bandwidth_prbs;

        for f in &self.flows {
            if f.config.is_due(sf) {
                grants.push(self.grant(f.user_id, sf, f.prbs, GrantKind::Persistent));
                free -= f.prbs;
            }
        }

        for &user in &demand.bsr_opportunities {
            if free == 0 {
                break;
            }
            grants.push(self.grant(user, sf, 1, GrantKind::BsrOpportunity));
            free -= 1;
        }

        let mut users: Vec<(UserId, u64, u32)> = demand
            .reported_bytes
            .iter()
            .filter(|(_, b)| *b > 0)
            .map(|&(u, b)| (u, b, self.prbs_to_drain(b)))
            .collect();
        users.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

        if free > 0 && !users.is_empty() {
            let total: u128 = users.iter().map(|u| u.1 as u128).sum();
            let pool = free;
            let mut shares = vec![0u32; users.len()];
            for (i, &(_, bytes, need)) in users.iter().enumerate() {
                if free == 0 {
                    break;
                }
                let prop = (pool as u128 * bytes as u128 / total) as u32;
                // keep one PRB for each user still to come
                let later = (users.len() - i - 1) as u32;
                let cap = free.saturating_sub(later).max(1);
                let s = prop.max(1).min(need).min(cap);
                shares[i] = s;
                free -= s;
            }
            for (i, &(_, _, need)) in users.iter().enumerate() {
                if free == 0 {
                    break;
                }
                let extra = need.saturating_sub(shares[i]).min(free);
                shares[i] += extra;
                free -= extra;
            }
            for (i, &(user, _, _)) in users.iter().enumerate() {
                if shares[i] > 0 {
                    grants.push(self.grant(user, sf, shares[i], GrantKind::BestEffort));
                }
            }
        }

        debug_assert!(grants.iter().map(|g| g.prb_count).sum::<u32>() <= self.cell.bandwidth_prbs);
        grants
    }
}

/// One-shot allocation of subframe `sf`; validates the persistent set first.
pub fn schedule_subframe(
    sf: u64,
    persistent_flows: &[(UserId, PersistentFlowConfig)],
    pending_bsr: &[(UserId, u64)],
    cell: CellConfig,
) -> Result<Vec<SubframeGrant>> {
    let sched = Scheduler::new(cell, TbsTable::standard(), persistent_flows)?;
    let demand = BestEffortDemand {
        bsr_opportunities: Vec::new(),
        reported_bytes: pending_bsr.to_vec(),
    };
    Ok(sched.schedule_subframe(sf, &demand))
}
