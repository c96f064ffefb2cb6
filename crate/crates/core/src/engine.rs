//! Subframe-stepped simulation of one UAV and an optional full-buffer
//! background user sharing a cell.
//!
//! Each subframe `t`:
//! 1. telemetry that arrived before `t + 1` ms joins the UAV buffer;
//! 2. best-effort signaling advances;
//! 3. subframe `t + advance` is scheduled (grants are issued `advance` early);
//! 4. grants effective in `t` drain their owner's buffer. A grant can only
//!    carry data that was queued when it was issued, i.e. arrivals before
//!    `t - advance + 1`. A message is delivered `processing` subframes after
//!    the end of the subframe carrying its last byte.

use std::collections::VecDeque;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::sched::{
    BestEffortDemand, GrantKind, PersistentFlowConfig, ProvisioningFactor, Scheduler,
    SignalingAction, SignalingConfig, SignalingPhase, SignalingState, SubframeGrant, UserId,
};
use crate::tbs::{CellConfig, TbsTable};
use crate::traffic::{background_demand, default_profile, TelemetryProfile, TelemetrySource};

pub const UAV_ID: UserId = 0;
pub const BACKGROUND_ID: UserId = 1;

/// How the UAV obtains uplink resources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UavScheduling {
    #[default]
    Persistent,
    /// Standard SR/BSR access, for comparison.
    Default,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub cell: CellConfig,
    pub signaling: SignalingConfig,
    pub flow: PersistentFlowConfig,
    pub duration_ms: u64,
    /// Messages generated before this instant are not recorded.
    pub warmup_ms: u64,
    /// MAC header bytes paid once per grant that carries data.
    pub per_grant_overhead_bytes: u32,
    /// RLC header bytes paid for every message or fragment packed.
    pub per_segment_overhead_bytes: u32,
    pub seed: u64,
    pub background: bool,
    pub uav_scheduling: UavScheduling,
    /// SR opportunity phase of the UAV when it uses default scheduling.
    pub sr_phase: u32,
    /// Overrides the synthetic profile derived from `seed`.
    pub profile: Option<TelemetryProfile>,
    pub jitter_ms: f64,
    /// Extra subframes allowed after `duration_ms` to flush queued messages.
    pub flush_limit_ms: u64,
    /// Check byte conservation and grid capacity every subframe.
    pub check_invariants: bool,
    pub trace_path: Option<PathBuf>,
}

pub const DEFAULT_RATE_BPS: u64 = 19_500;
pub const DEFAULT_DURATION_MS: u64 = 900_000;
pub const DEFAULT_WARMUP_MS: u64 = 10_000;

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            cell: CellConfig::default(),
            signaling: SignalingConfig::default(),
            flow: PersistentFlowConfig::new(DEFAULT_RATE_BPS, 1, ProvisioningFactor::ONE),
            duration_ms: DEFAULT_DURATION_MS,
            warmup_ms: DEFAULT_WARMUP_MS,
            per_grant_overhead_bytes: 3,
            per_segment_overhead_bytes: 2,
            seed: 0,
            background: true,
            uav_scheduling: UavScheduling::Persistent,
            sr_phase: 0,
            profile: None,
            jitter_ms: 0.0,
            flush_limit_ms: DEFAULT_DURATION_MS,
            check_invariants: cfg!(debug_assertions),
            trace_path: None,
        }
    }
}

impl SimConfig {
    pub fn with_grant(mut self, period: u32, alpha: ProvisioningFactor) -> Self {
        self.flow.period_subframes = period;
        self.flow.provisioning_factor = alpha;
        self.flow.phase_offset = 0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.duration_ms <= self.warmup_ms {
            return Err(Error::Config(format!(
                "duration {} ms must exceed warmup {} ms",
                self.duration_ms, self.warmup_ms
            )));
        }
        self.cell.validate()?;
        self.signaling.validate()?;
        self.flow.validate()
    }

    pub fn overheads(&self) -> Overheads {
        Overheads {
            per_grant: self.per_grant_overhead_bytes,
            per_segment: self.per_segment_overhead_bytes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Overheads {
    pub per_grant: u32,
    pub per_segment: u32,
}

/// A queued message or the unsent tail of one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub seq: u64,
    pub type_id: u32,
    pub arrival_ms: f64,
    pub remaining: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum UeRole {
    Persistent(PersistentFlowConfig),
    BestEffort(SignalingState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UeState {
    pub user_id: UserId,
    pub buffer: VecDeque<Segment>,
    buffered_bytes: u64,
    pub role: UeRole,
}

impl UeState {
    pub fn new(user_id: UserId, role: UeRole) -> Self {
        UeState {
            user_id,
            buffer: VecDeque::new(),
            buffered_bytes: 0,
            role,
        }
    }

    pub fn enqueue(&mut self, seg: Segment) {
        self.buffered_bytes += seg.remaining as u64;
        self.buffer.push_back(seg);
    }

    pub fn buffered_bytes(&self) -> u64 {
        self.buffered_bytes
    }

    pub fn is_persistent(&self) -> bool {
        matches!(self.role, UeRole::Persistent(_))
    }

    /// Bytes a buffer status report announces: payload plus the headers
    /// needed to send it in one grant.
    pub fn reportable_bytes(&self, overheads: Overheads) -> u64 {
        if self.buffer.is_empty() {
            return 0;
        }
        self.buffered_bytes
            + overheads.per_grant as u64
            + overheads.per_segment as u64 * self.buffer.len() as u64
    }

    fn recount(&self) -> u64 {
        self.buffer.iter().map(|s| s.remaining as u64).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Drained {
    pub carried_bytes: u64,
    /// Messages whose final byte left in this grant.
    pub completed: Vec<Segment>,
}

/// Packs the head of `ue`'s buffer into `grant`.
///
/// The grant pays `per_grant` once, then `per_segment` for each message or
/// fragment. A message that does not fit is split and its tail stays at the
/// front of the queue. Only segments that arrived before `eligible_before_ms`
/// may be packed.
pub fn drain_grant(
    ue: &mut UeState,
    grant: &SubframeGrant,
    overheads: Overheads,
    eligible_before_ms: f64,
) -> Drained {
    assert_eq!(grant.user_id, ue.user_id, "grant drained by the wrong UE");
    let mut out = Drained::default();
    let mut room = (grant.tbs_bits / 8).saturating_sub(overheads.per_grant);
    while room > overheads.per_segment {
        let Some(head) = ue.buffer.front_mut() else {
            break;
        };
        if head.arrival_ms >= eligible_before_ms {
            break;
        }
        let take = head.remaining.min(room - overheads.per_segment);
        head.remaining -= take;
        room -= take + overheads.per_segment;
        out.carried_bytes += take as u64;
        if head.remaining == 0 {
            let done = ue.buffer.pop_front().expect("head exists");
            out.completed.push(done);
        } else {
            break;
        }
    }
    ue.buffered_bytes -= out.carried_bytes;
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayRecord {
    pub seq: u64,
    pub type_id: u32,
    pub arrival_time_ms: f64,
    pub delivery_time_ms: f64,
    pub delay_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunStats {
    pub subframes: u64,
    pub injected_bytes: u64,
    pub delivered_bytes: u64,
    pub residual_bytes: u64,
    pub messages_injected: u64,
    pub messages_delivered: u64,
    pub uav_grants: u64,
    pub uav_prbs: u64,
    pub background_prbs: u64,
    pub max_prbs_in_subframe: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub records: Vec<DelayRecord>,
    pub stats: RunStats,
}

/// UAV bookkeeping for default (SR/BSR) scheduling.
#[derive(Debug, Default)]
struct ReportedDemand {
    reported: u64,
    in_flight: u64,
}

struct Simulation<'a> {
    cfg: &'a SimConfig,
    table: &'a TbsTable,
    scheduler: Scheduler<'a>,
    source: TelemetrySource,
    uav: UeState,
    uav_demand: ReportedDemand,
    background: Option<SignalingState>,
    /// Index 0 holds grants effective in the current subframe.
    pipeline: VecDeque<Vec<SubframeGrant>>,
    records: Vec<DelayRecord>,
    stats: RunStats,
    arrivals: Vec<crate::traffic::Message>,
}

impl<'a> Simulation<'a> {
    fn new(cfg: &'a SimConfig, table: &'a TbsTable) -> Result<Self> {
        cfg.validate()?;
        let persistent = cfg.uav_scheduling == UavScheduling::Persistent;
        let flows: Vec<(UserId, PersistentFlowConfig)> = if persistent {
            vec![(UAV_ID, cfg.flow)]
        } else {
            Vec::new()
        };
        let scheduler = Scheduler::new(cfg.cell, table, &flows)?;
        let profile = match &cfg.profile {
            Some(p) => {
                p.validate()?;
                p.clone()
            }
            None => default_profile(cfg.seed)?,
        };
        let source = if profile.specs.is_empty() {
            TelemetrySource::new(profile)
        } else {
            TelemetrySource::with_jitter(profile, cfg.jitter_ms, cfg.seed)?
        };
        let role = if persistent {
            UeRole::Persistent(cfg.flow)
        } else {
            UeRole::BestEffort(SignalingState::new(cfg.sr_phase))
        };
        let horizon = cfg.signaling.grant_advance_subframes as usize + 1;
        Ok(Simulation {
            cfg,
            table,
            scheduler,
            source,
            uav: UeState::new(UAV_ID, role),
            uav_demand: ReportedDemand::default(),
            background: cfg.background.then(|| SignalingState::new(0)),
            pipeline: (0..horizon).map(|_| Vec::new()).collect(),
            records: Vec::new(),
            stats: RunStats::default(),
            arrivals: Vec::new(),
        })
    }

    fn inject(&mut self, t: u64) {
        let until = ((t + 1) as f64).min(self.cfg.duration_ms as f64);
        self.arrivals.clear();
        self.source.next_into(until, &mut self.arrivals);
        for m in &self.arrivals {
            self.uav.enqueue(Segment {
                seq: m.seq,
                type_id: m.type_id,
                arrival_ms: m.arrival_time_ms,
                remaining: m.size_bytes,
            });
            self.stats.injected_bytes += m.size_bytes as u64;
            self.stats.messages_injected += 1;
        }
    }

    fn signal(&mut self, t: u64) {
        let cfg = &self.cfg.signaling;
        if let Some(bg) = self.background.as_mut() {
            // full buffer: always something to report
            let level = background_demand(t, &self.cfg.cell, self.table);
            bg.step(t, level, cfg);
        }
        let level = self.uav.reportable_bytes(self.cfg.overheads());
        if let UeRole::BestEffort(state) = &mut self.uav.role {
            for action in state.step(t, level, cfg) {
                if let SignalingAction::DataGrantsEnabled { bytes, .. } = action {
                    self.uav_demand.reported = bytes;
                }
            }
        }
    }

    fn schedule_ahead(&mut self, t: u64) {
        let target = t + self.cfg.signaling.grant_advance_subframes as u64;
        let mut demand = BestEffortDemand::default();
        let mut reported = |id: UserId, state: &SignalingState, bytes: u64| match state.phase {
            SignalingPhase::BsrGrantIssued { effective } if effective == target => {
                demand.bsr_opportunities.push(id)
            }
            SignalingPhase::Reported { data_from } if data_from <= target && bytes > 0 => {
                demand.reported_bytes.push((id, bytes))
            }
            _ => {}
        };
        if let UeRole::BestEffort(state) = &self.uav.role {
            let outstanding = self
                .uav_demand
                .reported
                .saturating_sub(self.uav_demand.in_flight);
            reported(UAV_ID, state, outstanding);
        }
        if let Some(bg) = &self.background {
            reported(
                BACKGROUND_ID,
                bg,
                background_demand(target, &self.cfg.cell, self.table),
            );
        }

        let grants = self.scheduler.schedule_subframe(target, &demand);
        let used: u32 = grants.iter().map(|g| g.prb_count).sum();
        assert!(
            used <= self.cfg.cell.bandwidth_prbs,
            "subframe {target}: {used} PRBs granted on a {}-PRB cell",
            self.cfg.cell.bandwidth_prbs
        );
        self.stats.max_prbs_in_subframe = self.stats.max_prbs_in_subframe.max(used);

        for &id in &demand.bsr_opportunities {
            let placed = grants
                .iter()
                .any(|g| g.user_id == id && g.kind == GrantKind::BsrOpportunity);
            if !placed {
                match id {
                    UAV_ID => {
                        if let UeRole::BestEffort(s) = &mut self.uav.role {
                            s.defer_bsr_grant();
                        }
                    }
                    _ => {
                        if let Some(bg) = self.background.as_mut() {
                            bg.defer_bsr_grant();
                        }
                    }
                }
            }
        }
        for g in &grants {
            if g.user_id == UAV_ID && g.kind == GrantKind::BestEffort {
                self.uav_demand.in_flight += g.tbs_bits as u64 / 8;
            }
        }
        let slot = self.cfg.signaling.grant_advance_subframes as usize;
        self.pipeline[slot] = grants;
    }

    fn apply(&mut self, t: u64) {
        let grants = std::mem::take(&mut self.pipeline[0]);
        let advance = self.cfg.signaling.grant_advance_subframes as u64;
        let cutoff = (t + 1) as f64 - advance as f64;
        let delivered_at = (t + 1 + self.cfg.signaling.processing_delay_subframes as u64) as f64;
        for g in &grants {
            match (g.user_id, g.kind) {
                (UAV_ID, GrantKind::BsrOpportunity) => {}
                (UAV_ID, kind) => {
                    let drained = drain_grant(&mut self.uav, g, self.cfg.overheads(), cutoff);
                    self.stats.uav_grants += 1;
                    self.stats.uav_prbs += g.prb_count as u64;
                    self.stats.delivered_bytes += drained.carried_bytes;
                    self.stats.messages_delivered += drained.completed.len() as u64;
                    for seg in drained.completed {
                        if seg.arrival_ms >= self.cfg.warmup_ms as f64 {
                            self.records.push(DelayRecord {
                                seq: seg.seq,
                                type_id: seg.type_id,
                                arrival_time_ms: seg.arrival_ms,
                                delivery_time_ms: delivered_at,
                                delay_ms: delivered_at - seg.arrival_ms,
                            });
                        }
                    }
                    if kind == GrantKind::BestEffort {
                        // piggybacked BSR refreshes the eNB's view
                        self.uav_demand.in_flight = self
                            .uav_demand
                            .in_flight
                            .saturating_sub(g.tbs_bits as u64 / 8);
                        self.uav_demand.reported = self.uav.reportable_bytes(self.cfg.overheads());
                        if self.uav_demand.reported == 0 && self.uav_demand.in_flight == 0 {
                            if let UeRole::BestEffort(s) = &mut self.uav.role {
                                s.reset();
                            }
                        }
                    }
                }
                _ => self.stats.background_prbs += g.prb_count as u64,
            }
        }
        self.pipeline.rotate_left(1);
    }

    fn check(&self, t: u64) {
        let buffered = self.uav.buffered_bytes;
        assert_eq!(
            buffered,
            self.uav.recount(),
            "subframe {t}: buffer byte count drifted"
        );
        assert_eq!(
            self.stats.injected_bytes,
            buffered + self.stats.delivered_bytes,
            "subframe {t}: bytes not conserved"
        );
    }

    fn run(mut self) -> SimOutput {
        let end = self.cfg.duration_ms;
        let hard_stop = end + self.cfg.flush_limit_ms;
        let mut t = 0u64;
        while t < end || (t < hard_stop && self.uav.buffered_bytes > 0) {
            self.inject(t);
            self.signal(t);
            self.schedule_ahead(t);
            self.apply(t);
            if self.cfg.check_invariants {
                self.check(t);
            }
            t += 1;
        }
        self.stats.subframes = t;
        self.stats.residual_bytes = self.uav.buffered_bytes;
        SimOutput {
            records: self.records,
            stats: self.stats,
        }
    }
}

/// Runs `cfg` against an explicit TBS table.
pub fn simulate(cfg: &SimConfig, table: &TbsTable) -> Result<SimOutput> {
    let out = Simulation::new(cfg, table)?.run();
    if let Some(path) = &cfg.trace_path {
        write_trace(path, &out.records)?;
    }
    Ok(out)
}

/// Per-message delay records of a run using the standard TBS table.
pub fn run(cfg: &SimConfig) -> Result<Vec<DelayRecord>> {
    simulate(cfg, TbsTable::standard()).map(|o| o.records)
}

/// One `seq type_id arrival_ms delivery_ms delay_ms` line per record.
pub fn write_trace(path: &Path, records: &[DelayRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for r in records {
        writeln!(
            w,
            "{} {} {} {} {}",
            r.seq, r.type_id, r.arrival_time_ms, r.delivery_time_ms, r.delay_ms
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
