//! Standard uplink access: scheduling request, buffer status report, data.
//!
//! Timeline for a UE whose buffer becomes non-empty (all in subframes):
//!
//! ```text
//! SR at opportunity s
//!   -> eNB processes for `processing`, issues a BSR grant effective `advance` later
//!   -> UE sends BSR at b = s + processing + advance
//!   -> eNB processes for `processing`, enables data grants from
//!      d = b + processing + advance
//! ```
//!
//! Delivery then follows the usual rule (end of the carrying subframe plus
//! `processing`), so the structural delay of a packet that fits the first
//! data grant is `(s - arrival) + 2 * advance + 3 * processing + 1`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignalingConfig {
    pub sr_period_subframes: u32,
    /// Subframes between grant issuance and the subframe it is valid in.
    pub grant_advance_subframes: u32,
    pub processing_delay_subframes: u32,
}

impl Default for SignalingConfig {
    fn default() -> Self {
        SignalingConfig {
            sr_period_subframes: 10,
            grant_advance_subframes: 4,
            processing_delay_subframes: 2,
        }
    }
}

impl SignalingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sr_period_subframes == 0 {
            return Err(Error::Parameter {
                name: "sr_period_subframes",
                value: 0,
                expected: ">= 1",
            });
        }
        if self.grant_advance_subframes == 0 {
            return Err(Error::Parameter {
                name: "grant_advance_subframes",
                value: 0,
                expected: ">= 1",
            });
        }
        Ok(())
    }

    /// Lower bound on persistent-grant delay: grant advance plus processing.
    pub fn persistent_floor_ms(&self) -> f64 {
        (self.grant_advance_subframes + self.processing_delay_subframes) as f64
    }

    /// Structural delay of the default pipeline, excluding the SR wait.
    pub fn pipeline_overhead_subframes(&self) -> u64 {
        2 * self.grant_advance_subframes as u64 + 3 * self.processing_delay_subframes as u64 + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalingPhase {
    Idle,
    SrSent {
        at: u64,
    },
    BsrGrantIssued {
        effective: u64,
    },
    BsrSent {
        at: u64,
        reported_bytes: u64,
    },
    /// The eNB knows the buffer; data grants may be effective from `data_from`.
    Reported {
        data_from: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalingAction {
    SchedulingRequest {
        subframe: u64,
    },
    /// A single-PRB grant must be placed in `effective` for the BSR.
    BsrGrant {
        issued: u64,
        effective: u64,
    },
    BufferStatusReport {
        subframe: u64,
        bytes: u64,
    },
    DataGrantsEnabled {
        issued: u64,
        effective_from: u64,
        bytes: u64,
    },
}

/// Per-UE request/report state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignalingState {
    pub sr_phase: u32,
    pub phase: SignalingPhase,
}

impl SignalingState {
    pub fn new(sr_phase: u32) -> Self {
        SignalingState {
            sr_phase,
            phase: SignalingPhase::Idle,
        }
    }

    pub fn is_sr_opportunity(&self, sf: u64, cfg: &SignalingConfig) -> bool {
        let period = cfg.sr_period_subframes as u64;
        sf % period == self.sr_phase as u64 % period
    }

    /// First SR opportunity at or after `sf`.
    pub fn next_sr_opportunity(&self, sf: u64, cfg: &SignalingConfig) -> u64 {
        let period = cfg.sr_period_subframes as u64;
        let phase = self.sr_phase as u64 % period;
        sf + (phase + period - sf % period) % period
    }

    pub fn is_reported(&self) -> bool {
        matches!(self.phase, SignalingPhase::Reported { .. })
    }

    /// Back to idle once the eNB-side view of the buffer has drained.
    pub fn reset(&mut self) {
        self.phase = SignalingPhase::Idle;
    }

    /// Moves a BSR grant that found no free PRB to the next subframe.
    pub fn defer_bsr_grant(&mut self) {
        if let SignalingPhase::BsrGrantIssued { effective } = self.phase {
            self.phase = SignalingPhase::BsrGrantIssued {
                effective: effective + 1,
            };
        }
    }

    /// Advances the machine through subframe `sf` given the UE's current
    /// buffer. Zero-delay hops may chain several transitions in one call.
    pub fn step(
        &mut self,
        sf: u64,
        buffered_bytes: u64,
        cfg: &SignalingConfig,
    ) -> Vec<SignalingAction> {
        let proc = cfg.processing_delay_subframes as u64;
        let adv = cfg.grant_advance_subframes as u64;
        let mut actions = Vec::new();
        loop {
            let next = match self.phase {
                SignalingPhase::Idle if buffered_bytes > 0 && self.is_sr_opportunity(sf, cfg) => {
                    actions.push(SignalingAction::SchedulingRequest { subframe: sf });
                    SignalingPhase::SrSent { at: sf }
                }
                SignalingPhase::SrSent { at } if sf >= at + proc => {
                    let effective = sf + adv;
                    actions.push(SignalingAction::BsrGrant {
                        issued: sf,
                        effective,
                    });
                    SignalingPhase::BsrGrantIssued { effective }
                }
                SignalingPhase::BsrGrantIssued { effective } if sf >= effective => {
                    actions.push(SignalingAction::BufferStatusReport {
                        subframe: sf,
                        bytes: buffered_bytes,
                    });
                    SignalingPhase::BsrSent {
                        at: sf,
                        reported_bytes: buffered_bytes,
                    }
                }
                SignalingPhase::BsrSent { at, reported_bytes } if sf >= at + proc => {
                    let data_from = sf + adv;
                    actions.push(SignalingAction::DataGrantsEnabled {
                        issued: sf,
                        effective_from: data_from,
                        bytes: reported_bytes,
                    });
                    SignalingPhase::Reported { data_from }
                }
                _ => break,
            };
            self.phase = next;
        }
        actions
    }
}

/// Advances `state` by one subframe. See [`SignalingState::step`].
pub fn default_pipeline_step(
    state: &mut SignalingState,
    sf: u64,
    buffered_bytes: u64,
    cfg: &SignalingConfig,
) -> Vec<SignalingAction> {
    state.step(sf, buffered_bytes, cfg)
}
