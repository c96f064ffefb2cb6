use crate::error::{Error, Result};
use crate::sched::alloc::{hyperperiod, worst_subframe, MAX_HYPERPERIOD};
use crate::sched::grant::{grant_size_in, PersistentFlowConfig};
use crate::tbs::{CellConfig, TbsTable};

/// Picks a phase offset for every flow so that the busiest subframe carries as
/// few persistent PRBs as possible.
///
/// Flows are placed largest grant first. Each takes the offset in `[0, p)`
/// with the lowest resulting peak, scanning from a round-robin cursor so
/// identical flows fill consecutive subframes. Offsets come back in input
/// order. Sets of identical flows are admitted up to exactly `floor(N/n) * p`.
pub fn assign_phase_offsets_in(
    table: &TbsTable,
    flows: &[PersistentFlowConfig],
    cell: CellConfig,
) -> Result<Vec<u32>> {
    if flows.is_empty() {
        return Err(Error::Config("no flows to place".into()));
    }
    cell.validate()?;

    let mut sized = Vec::with_capacity(flows.len());
    for (i, f) in flows.iter().enumerate() {
        let cfg = f.with_phase(0);
        let prbs = grant_size_in(table, &cfg, cell.mcs_index, cell.bandwidth_prbs)?;
        sized.push((i, cfg, prbs));
    }
    sized.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)));

    let h = hyperperiod(flows.iter().map(|f| &f.period_subframes));
    if h > MAX_HYPERPERIOD {
        return Err(Error::Config(
            "persistent periods have too large a common hyperperiod".into(),
        ));
    }

    let mut load = vec![0u32; h as usize];
    let mut offsets = vec![0u32; flows.len()];
    let mut cursor = 0u32;
    for &(idx, cfg, prbs) in &sized {
        let p = cfg.period_subframes;
        let peak_at = |offset: u32| {
            (offset as usize..load.len())
                .step_by(p as usize)
                .map(|sf| load[sf])
                .max()
                .unwrap_or(0)
        };
        let start = cursor % p;
        let best = (0..p)
            .map(|k| (start + k) % p)
            .min_by_key(|&o| peak_at(o))
            .expect("period >= 1");
        for sf in (best as usize..load.len()).step_by(p as usize) {
            load[sf] += prbs;
        }
        offsets[idx] = best;
        cursor = best + 1;
    }

    let (subframe, demand) = worst_subframe(&load);
    if demand > cell.bandwidth_prbs {
        return Err(Error::Oversubscribed {
            subframe,
            demand,
            capacity: cell.bandwidth_prbs,
        });
    }
    Ok(offsets)
}

pub fn assign_phase_offsets(flows: &[PersistentFlowConfig], cell: CellConfig) -> Result<Vec<u32>> {
    assign_phase_offsets_in(TbsTable::standard(), flows, cell)
}
