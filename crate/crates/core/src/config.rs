//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments start with '#'
//! period = 10
//! alpha = 1.5
//! periods = 1, 4, 7
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::engine::{SimConfig, UavScheduling};
use crate::error::{Error, Result};
use crate::sched::ProvisioningFactor;
use crate::sweep::SweepSpec;
use crate::traffic::{TelemetryProfile, DEFAULT_OVERHEAD_BYTES};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub alpha: f64,
    pub sweep: bool,
    pub periods_ms: Vec<u32>,
    pub alphas: Vec<f64>,
    pub repetitions: u32,
    pub jobs: Option<usize>,
    pub out: PathBuf,
    pub profile_path: Option<PathBuf>,
    pub message_overhead_bytes: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sweep = SweepSpec::default();
        RunConfig {
            sim: SimConfig::default(),
            alpha: 1.0,
            sweep: false,
            periods_ms: sweep.periods_ms,
            alphas: sweep.alphas,
            repetitions: 1,
            jobs: None,
            out: PathBuf::from("out"),
            profile_path: None,
            message_overhead_bytes: DEFAULT_OVERHEAD_BYTES,
        }
    }
}

pub const KEYS: &[&str] = &[
    "period",
    "alpha",
    "rate_bps",
    "mcs",
    "prbs",
    "duration_ms",
    "warmup_ms",
    "seed",
    "sr_period",
    "grant_advance",
    "processing_delay",
    "per_grant_overhead",
    "per_segment_overhead",
    "message_overhead",
    "background",
    "scheduling",
    "sr_phase",
    "jitter_ms",
    "flush_limit_ms",
    "check_invariants",
    "sweep",
    "periods",
    "alphas",
    "repetitions",
    "jobs",
    "out",
    "profile",
    "trace",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value for `{key}`: `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("bad value for `{key}`: `{value}`"))),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let sim = &mut self.sim;
        match key {
            "period" => sim.flow.period_subframes = parse_value(key, value)?,
            "alpha" => self.alpha = parse_value(key, value)?,
            "rate_bps" => sim.flow.mean_rate_bps = parse_value(key, value)?,
            "mcs" => sim.cell.mcs_index = parse_value(key, value)?,
            "prbs" => sim.cell.bandwidth_prbs = parse_value(key, value)?,
            "duration_ms" => sim.duration_ms = parse_value(key, value)?,
            "warmup_ms" => sim.warmup_ms = parse_value(key, value)?,
            "seed" => sim.seed = parse_value(key, value)?,
            "sr_period" => sim.signaling.sr_period_subframes = parse_value(key, value)?,
            "grant_advance" => sim.signaling.grant_advance_subframes = parse_value(key, value)?,
            "processing_delay" => {
                sim.signaling.processing_delay_subframes = parse_value(key, value)?
            }
            "per_grant_overhead" => sim.per_grant_overhead_bytes = parse_value(key, value)?,
            "per_segment_overhead" => sim.per_segment_overhead_bytes = parse_value(key, value)?,
            "message_overhead" => self.message_overhead_bytes = parse_value(key, value)?,
            "background" => sim.background = parse_bool(key, value)?,
            "scheduling" => {
                sim.uav_scheduling = match value {
                    "persistent" => UavScheduling::Persistent,
                    "default" => UavScheduling::Default,
                    _ => return Err(Error::Config(format!("bad value for `{key}`: `{value}`"))),
                }
            }
            "sr_phase" => sim.sr_phase = parse_value(key, value)?,
            "jitter_ms" => sim.jitter_ms = parse_value(key, value)?,
            "flush_limit_ms" => sim.flush_limit_ms = parse_value(key, value)?,
            "check_invariants" => sim.check_invariants = parse_bool(key, value)?,
            "sweep" => self.sweep = parse_bool(key, value)?,
            "periods" => self.periods_ms = parse_list(key, value)?,
            "alphas" => self.alphas = parse_list(key, value)?,
            "repetitions" => self.repetitions = parse_value(key, value)?,
            "jobs" => self.jobs = Some(parse_value(key, value)?),
            "out" => self.out = PathBuf::from(value),
            "profile" => self.profile_path = Some(PathBuf::from(value)),
            "trace" => sim.trace_path = Some(PathBuf::from(value)),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                origin: origin.to_string(),
                line: i + 1,
                msg: "expected `key = value`".into(),
            })?;
            cfg.set(key.trim(), value).map_err(|e| Error::Parse {
                origin: origin.to_string(),
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// The single-run configuration, with profile file and alpha applied.
    pub fn resolve(&self) -> Result<SimConfig> {
        let mut sim = self.sim.clone();
        sim.flow.provisioning_factor = ProvisioningFactor::from_f64(self.alpha)?;
        if let Some(path) = &self.profile_path {
            sim.profile = Some(TelemetryProfile::load(path, self.message_overhead_bytes)?);
        } else if self.message_overhead_bytes != DEFAULT_OVERHEAD_BYTES {
            sim.profile = Some(crate::traffic::default_profile_with_overhead(
                sim.seed,
                self.message_overhead_bytes,
            )?);
        }
        sim.validate()?;
        Ok(sim)
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let mut base = self.resolve()?;
        base.trace_path = None;
        let spec = SweepSpec {
            periods_ms: self.periods_ms.clone(),
            alphas: self.alphas.clone(),
            repetitions: self.repetitions,
            base,
            jobs: self.jobs,
        };
        spec.validate()?;
        Ok(spec)
    }
}
