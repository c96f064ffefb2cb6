//! Deterministic traffic sources.
//!
//! The telemetry generator replays a table of periodic message types. The
//! synthetic default table has 27 types whose periods are spread
//! logarithmically over 100..=11100 ms and warped until the stream carries
//! 47 msg/s; payloads are then re-paired with periods until the on-air bit
//! rate (payload plus per-message IP/UDP overhead) reaches 19.5 kbit/s.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tbs::{CellConfig, TbsTable};

pub const MESSAGE_TYPES: usize = 27;
pub const MIN_PERIOD_MS: f64 = 100.0;
pub const MAX_PERIOD_MS: f64 = 11_100.0;
pub const MIN_PAYLOAD: u32 = 10;
pub const MAX_PAYLOAD: u32 = 40;
/// IPv4 + UDP headers.
pub const DEFAULT_OVERHEAD_BYTES: u32 = 28;

pub const TARGET_MESSAGE_RATE: f64 = 47.0;
pub const TARGET_BIT_RATE: f64 = 19_500.0;
pub const TARGET_INTERARRIVAL_MS: f64 = 21.0;
pub const MESSAGE_RATE_TOLERANCE: f64 = 0.02;
pub const BIT_RATE_TOLERANCE: f64 = 0.05;
pub const INTERARRIVAL_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MessageSpec {
    pub type_id: u32,
    pub period_ms: f64,
    pub payload_bytes: u32,
    pub phase_ms: f64,
}

impl MessageSpec {
    pub fn validate(&self) -> Result<()> {
        if !(MIN_PERIOD_MS..=MAX_PERIOD_MS).contains(&self.period_ms) {
            return Err(Error::Config(format!(
                "message type {}: period {} ms outside {MIN_PERIOD_MS}..={MAX_PERIOD_MS}",
                self.type_id, self.period_ms
            )));
        }
        if !(MIN_PAYLOAD..=MAX_PAYLOAD).contains(&self.payload_bytes) {
            return Err(Error::Config(format!(
                "message type {}: payload {} B outside {MIN_PAYLOAD}..={MAX_PAYLOAD}",
                self.type_id, self.payload_bytes
            )));
        }
        if !(self.phase_ms.is_finite() && self.phase_ms >= 0.0) {
            return Err(Error::Config(format!(
                "message type {}: phase must be a non-negative time",
                self.type_id
            )));
        }
        Ok(())
    }

    pub fn rate_per_s(&self) -> f64 {
        1000.0 / self.period_ms
    }
}

/// Relative deviations of a profile from the calibration targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationResiduals {
    pub message_rate: f64,
    pub bit_rate: f64,
    pub interarrival: f64,
}

impl CalibrationResiduals {
    pub fn within_tolerance(&self) -> bool {
        self.message_rate.abs() <= MESSAGE_RATE_TOLERANCE
            && self.bit_rate.abs() <= BIT_RATE_TOLERANCE
            && self.interarrival.abs() <= INTERARRIVAL_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryProfile {
    pub specs: Vec<MessageSpec>,
    pub overhead_bytes_per_msg: u32,
}

impl TelemetryProfile {
    /// A profile that never emits anything.
    pub fn silent() -> Self {
        TelemetryProfile {
            specs: Vec::new(),
            overhead_bytes_per_msg: DEFAULT_OVERHEAD_BYTES,
        }
    }

    pub fn message_rate(&self) -> f64 {
        self.specs.iter().map(MessageSpec::rate_per_s).sum()
    }

    /// On-air bits per second including the per-message overhead.
    pub fn bit_rate(&self) -> f64 {
        self.specs
            .iter()
            .map(|s| s.rate_per_s() * 8.0 * (s.payload_bytes + self.overhead_bytes_per_msg) as f64)
            .sum()
    }

    pub fn mean_interarrival_ms(&self) -> f64 {
        1000.0 / self.message_rate()
    }

    pub fn residuals(&self) -> CalibrationResiduals {
        CalibrationResiduals {
            message_rate: self.message_rate() / TARGET_MESSAGE_RATE - 1.0,
            bit_rate: self.bit_rate() / TARGET_BIT_RATE - 1.0,
            interarrival: self.mean_interarrival_ms() / TARGET_INTERARRIVAL_MS - 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.specs {
            s.validate()?;
        }
        let mut ids: Vec<u32> = self.specs.iter().map(|s| s.type_id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("duplicate message type id".into()));
        }
        Ok(())
    }

    /// Profile file: one `type_id period_ms payload_bytes phase_ms` per line,
    /// `#` comments allowed.
    pub fn parse(text: &str, origin: &str, overhead_bytes_per_msg: u32) -> Result<Self> {
        let mut specs = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse {
                origin: origin.to_string(),
                line: idx + 1,
                msg,
            };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(err(format!("expected 4 fields, got {}", f.len())));
            }
            let spec = MessageSpec {
                type_id: f[0].parse().map_err(|e| err(format!("type_id: {e}")))?,
                period_ms: f[1].parse().map_err(|e| err(format!("period_ms: {e}")))?,
                payload_bytes: f[2]
                    .parse()
                    .map_err(|e| err(format!("payload_bytes: {e}")))?,
                phase_ms: f[3].parse().map_err(|e| err(format!("phase_ms: {e}")))?,
            };
            spec.validate().map_err(|e| err(e.to_string()))?;
            specs.push(spec);
        }
        let profile = TelemetryProfile {
            specs,
            overhead_bytes_per_msg,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn load(path: &Path, overhead_bytes_per_msg: u32) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string(), overhead_bytes_per_msg)
    }

    /// Serializes in the profile-file format.
    pub fn to_file_string(&self) -> String {
        let mut out = String::from("# type_id period_ms payload_bytes phase_ms\n");
        for s in &self.specs {
            out.push_str(&format!(
                "{} {} {} {}\n",
                s.type_id, s.period_ms, s.payload_bytes, s.phase_ms
            ));
        }
        out
    }
}

fn warped_periods(gamma: f64) -> Vec<f64> {
    let span = MAX_PERIOD_MS / MIN_PERIOD_MS;
    let last = (MESSAGE_TYPES - 1) as f64;
    (0..MESSAGE_TYPES)
        .map(|i| MIN_PERIOD_MS * span.powf((i as f64 / last).powf(gamma)))
        .collect()
}

fn rate_of(periods: &[f64]) -> f64 {
    periods.iter().map(|p| 1000.0 / p).sum()
}

/// Synthetic telemetry table for `seed` with the default 28-byte overhead.
pub fn default_profile(seed: u64) -> Result<TelemetryProfile> {
    default_profile_with_overhead(seed, DEFAULT_OVERHEAD_BYTES)
}

pub fn default_profile_with_overhead(seed: u64, overhead: u32) -> Result<TelemetryProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut payloads: Vec<u32> = (0..MESSAGE_TYPES)
        .map(|_| rng.gen_range(MIN_PAYLOAD..=MAX_PAYLOAD))
        .collect();

    // gamma = 1 is plain log spacing; gamma < 1 pushes periods up and the
    // rate down. Rate is decreasing in 1/gamma, so bisect.
    let (mut lo, mut hi) = (0.01f64, 10.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rate_of(&warped_periods(mid)) > TARGET_MESSAGE_RATE {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let periods = warped_periods(0.5 * (lo + hi));
    let weights: Vec<f64> = periods.iter().map(|p| 1000.0 / p).collect();

    // Rate-weighted mean on-air size needed to hit the bit-rate target.
    let target_payload = TARGET_BIT_RATE / (8.0 * TARGET_MESSAGE_RATE) - overhead as f64;
    let weight_sum: f64 = weights.iter().sum();
    let weighted_mean = |pl: &[u32]| {
        weights
            .iter()
            .zip(pl)
            .map(|(w, &b)| w * b as f64)
            .sum::<f64>()
            / weight_sum
    };

    // Steepest-descent pair swaps keep the drawn payload multiset intact.
    loop {
        let current = (weighted_mean(&payloads) - target_payload).abs();
        if current / (target_payload + overhead as f64) < 0.0025 {
            break;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..MESSAGE_TYPES {
            for j in i + 1..MESSAGE_TYPES {
                if payloads[i] == payloads[j] {
                    continue;
                }
                payloads.swap(i, j);
                let dev = (weighted_mean(&payloads) - target_payload).abs();
                payloads.swap(i, j);
                if best.is_none_or(|b| dev < b.0) {
                    best = Some((dev, i, j));
                }
            }
        }
        match best {
            Some((dev, i, j)) if dev < current => payloads.swap(i, j),
            _ => break,
        }
    }

    let specs = periods
        .iter()
        .zip(&payloads)
        .enumerate()
        .map(|(i, (&period_ms, &payload_bytes))| MessageSpec {
            type_id: i as u32,
            period_ms,
            payload_bytes,
            phase_ms: rng.gen_range(0.0..period_ms),
        })
        .collect();
    let profile = TelemetryProfile {
        specs,
        overhead_bytes_per_msg: overhead,
    };
    let r = profile.residuals();
    if !r.within_tolerance() {
        return Err(Error::Calibration {
            rate_residual: r.message_rate,
            bitrate_residual: r.bit_rate,
        });
    }
    Ok(profile)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Message {
    pub arrival_time_ms: f64,
    /// Payload plus per-message overhead.
    pub size_bytes: u32,
    pub type_id: u32,
    /// Global emission counter, gap-free.
    pub seq: u64,
    /// Emission index within the message type, gap-free.
    pub instance: u64,
}

#[derive(Debug, Clone, Copy)]
struct Due {
    time: f64,
    spec: usize,
}

impl PartialEq for Due {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Due {}
impl PartialOrd for Due {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Due {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.spec.cmp(&other.spec))
    }
}

/// Stateful generator over a profile. Emission `k` of a type happens at
/// `phase + k * period`, optionally displaced by uniform jitter.
#[derive(Debug, Clone)]
pub struct TelemetrySource {
    profile: TelemetryProfile,
    jitter_ms: f64,
    rng: ChaCha8Rng,
    next_instance: Vec<u64>,
    queue: BinaryHeap<Reverse<Due>>,
    seq: u64,
}

impl TelemetrySource {
    pub fn new(profile: TelemetryProfile) -> Self {
        Self::with_jitter(profile, 0.0, 0).expect("zero jitter is always valid")
    }

    /// Jitter must stay below half the shortest period so each type's
    /// emissions remain ordered.
    pub fn with_jitter(profile: TelemetryProfile, jitter_ms: f64, seed: u64) -> Result<Self> {
        let min_period = profile
            .specs
            .iter()
            .map(|s| s.period_ms)
            .fold(f64::INFINITY, f64::min);
        if !(jitter_ms >= 0.0 && jitter_ms < 0.5 * min_period) {
            return Err(Error::Config(format!(
                "jitter {jitter_ms} ms must be in [0, {})",
                0.5 * min_period
            )));
        }
        let mut src = TelemetrySource {
            jitter_ms,
            rng: ChaCha8Rng::seed_from_u64(seed),
            next_instance: vec![0; profile.specs.len()],
            queue: BinaryHeap::with_capacity(profile.specs.len()),
            profile,
            seq: 0,
        };
        for i in 0..src.profile.specs.len() {
            let t = src.emission_time(i, 0);
            src.queue.push(Reverse(Due { time: t, spec: i }));
        }
        Ok(src)
    }

    pub fn profile(&self) -> &TelemetryProfile {
        &self.profile
    }

    fn emission_time(&mut self, spec: usize, k: u64) -> f64 {
        let s = &self.profile.specs[spec];
        let base = s.phase_ms + k as f64 * s.period_ms;
        if self.jitter_ms > 0.0 {
            (base + self.rng.gen_range(-self.jitter_ms..=self.jitter_ms)).max(0.0)
        } else {
            base
        }
    }

    /// All not-yet-emitted messages with arrival time before `until_ms`, in
    /// time order (ties by type order).
    pub fn next(&mut self, until_ms: f64) -> Vec<Message> {
        let mut out = Vec::new();
        self.next_into(until_ms, &mut out);
        out
    }

    pub fn next_into(&mut self, until_ms: f64, out: &mut Vec<Message>) {
        while let Some(Reverse(due)) = self.queue.peek().copied() {
            if due.time >= until_ms {
                break;
            }
            self.queue.pop();
            let spec = self.profile.specs[due.spec];
            let k = self.next_instance[due.spec];
            out.push(Message {
                arrival_time_ms: due.time,
                size_bytes: spec.payload_bytes + self.profile.overhead_bytes_per_msg,
                type_id: spec.type_id,
                seq: self.seq,
                instance: k,
            });
            self.seq += 1;
            self.next_instance[due.spec] = k + 1;
            let t = self.emission_time(due.spec, k + 1);
            self.queue.push(Reverse(Due {
                time: t,
                spec: due.spec,
            }));
        }
    }
}

/// Buffer level reported by the full-buffer background user: one byte more
/// than the whole cell can carry in a subframe.
pub fn background_demand(_sf: u64, cell: &CellConfig, table: &TbsTable) -> u64 {
    let cell_bits = table
        .lookup(cell.bandwidth_prbs, cell.mcs_index)
        .expect("validated cell");
    cell_bits as u64 / 8 + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_profile_meets_targets() {
        let p = default_profile(0).unwrap();
        assert_eq!(p.specs.len(), MESSAGE_TYPES);
        assert_eq!(p.overhead_bytes_per_msg, 28);
        p.validate().unwrap();
        let r = p.residuals();
        assert!(r.message_rate.abs() <= 0.02, "{r:?}");
        assert!(r.bit_rate.abs() <= 0.05, "{r:?}");
        assert!(r.interarrival.abs() <= 0.05, "{r:?}");
        let periods: Vec<f64> = p.specs.iter().map(|s| s.period_ms).collect();
        assert!((periods[0] - 100.0).abs() < 1e-9);
        assert!((periods[26] - 11_100.0).abs() < 1e-6);
        assert!(periods.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn default_profile_is_deterministic_per_seed() {
        assert_eq!(default_profile(5).unwrap(), default_profile(5).unwrap());
        assert_ne!(default_profile(5).unwrap(), default_profile(6).unwrap());
        for seed in 0..20 {
            default_profile(seed).unwrap();
        }
    }

    #[test]
    fn calibration_target_implies_mid_range_payload() {
        let mean_payload = TARGET_BIT_RATE / (8.0 * TARGET_MESSAGE_RATE) - 28.0;
        assert!((mean_payload - 23.86).abs() < 0.01);
        assert!((MIN_PAYLOAD as f64..=MAX_PAYLOAD as f64).contains(&mean_payload));
    }

    #[test]
    fn unreachable_bit_rate_is_a_calibration_error() {
        // without headers the payload mean would need ~52 bytes
        match default_profile_with_overhead(0, 0) {
            Err(Error::Calibration {
                bitrate_residual, ..
            }) => assert!(bitrate_residual < -0.05),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_horizon_is_empty_and_splits_concatenate() {
        let p = default_profile(1).unwrap();
        assert!(TelemetrySource::new(p.clone()).next(0.0).is_empty());

        let mut whole = TelemetrySource::new(p.clone());
        let all = whole.next(60_000.0);
        let mut split = TelemetrySource::new(p);
        let mut parts = split.next(12_345.6);
        parts.extend(split.next(12_345.6));
        parts.extend(split.next(60_000.0));
        assert_eq!(all, parts);
        assert!(all
            .windows(2)
            .all(|w| w[0].arrival_time_ms <= w[1].arrival_time_ms));
        assert!(all.iter().enumerate().all(|(i, m)| m.seq == i as u64));
    }

    #[test]
    fn emissions_are_exact_multiples_of_period() {
        let p = default_profile(2).unwrap();
        let msgs = TelemetrySource::new(p.clone()).next(30_000.0);
        for m in &msgs {
            let s = p.specs.iter().find(|s| s.type_id == m.type_id).unwrap();
            assert_eq!(
                m.arrival_time_ms,
                s.phase_ms + m.instance as f64 * s.period_ms
            );
            assert_eq!(m.size_bytes, s.payload_bytes + 28);
        }
    }

    #[test]
    fn jitter_keeps_per_type_order() {
        let p = default_profile(3).unwrap();
        let msgs = TelemetrySource::with_jitter(p.clone(), 20.0, 9)
            .unwrap()
            .next(60_000.0);
        for s in &p.specs {
            let t: Vec<&Message> = msgs.iter().filter(|m| m.type_id == s.type_id).collect();
            assert!(t
                .windows(2)
                .all(|w| w[0].arrival_time_ms <= w[1].arrival_time_ms));
            assert!(t.iter().enumerate().all(|(k, m)| m.instance == k as u64));
        }
        assert!(TelemetrySource::with_jitter(p, 60.0, 0).is_err());
    }

    #[test]
    fn profile_file_round_trip_and_errors() {
        let p = default_profile(4).unwrap();
        let parsed = TelemetryProfile::parse(&p.to_file_string(), "mem", 28).unwrap();
        assert_eq!(parsed, p);
        assert!(TelemetryProfile::parse("1 50 20 0\n", "mem", 28).is_err());
        assert!(TelemetryProfile::parse("1 500 20\n", "mem", 28).is_err());
        assert!(TelemetryProfile::parse("1 500 20 0\n1 600 20 0\n", "mem", 28).is_err());
        let ok = TelemetryProfile::parse("# c\n\n7 500 20 1.5 # fast\n", "mem", 28).unwrap();
        assert_eq!(ok.specs[0].type_id, 7);
    }

    #[test]
    fn background_exceeds_cell_capacity() {
        let t = TbsTable::standard();
        let cell = CellConfig::default();
        let d = background_demand(0, &cell, t);
        assert_eq!(d, t.lookup(25, 7).unwrap() as u64 / 8 + 1);
        assert!(d * 8 > t.lookup(25, 7).unwrap() as u64);
    }
}
