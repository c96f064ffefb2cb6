//! Uplink MAC scheduling: persistent grant sizing, cell capacity, subframe
//! allocation and the request/report signaling pipeline.

mod alloc;
mod grant;
mod phase;
mod signaling;

pub use alloc::{
    schedule_subframe, BestEffortDemand, GrantKind, PersistentFlow, Scheduler, SubframeGrant,
    UserId,
};
pub use grant::{
    grant_size, grant_size_in, supported_users, PersistentFlowConfig, ProvisioningFactor,
};
pub use phase::{assign_phase_offsets, assign_phase_offsets_in};
pub use signaling::{
    default_pipeline_step, SignalingAction, SignalingConfig, SignalingPhase, SignalingState,
};
