//! Pedestrian-to-vehicle safety message transport: a bit-exact 22-byte PSM
//! wire codec with CRC-16/CCITT-FALSE integrity, and a deterministic
//! broadcast channel model (periodic advertising cadence, latency, seeded
//! packet loss) standing in for the BLE advertising link.
//!
//! Wire layout, little-endian multi-byte fields, 22 bytes total:
//!
//! ```text
//! bytes  0..2   magic 0x50 0x53
//! byte   2      version = 0x01
//! byte   3      source_id
//! bytes  4..8   timestamp_ms  (u32)
//! bytes  8..12  x_cm          (i32)
//! bytes 12..16  y_cm          (i32)
//! bytes 16..18  speed_q       (u16, units of 0.02 m/s)
//! bytes 18..20  heading_q     (u16, units of 0.0125 deg CCW from +x, < 28800)
//! bytes 20..22  CRC-16/CCITT-FALSE over bytes 0..20, stored big-endian
//! ```

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{normalize_angle, Pose2, Vec2};

pub const FRAME_LEN: usize = 22;
pub const MAGIC: [u8; 2] = [0x50, 0x53];
pub const VERSION: u8 = 0x01;

pub const SPEED_QUANTUM: f64 = 0.02; // m/s
pub const HEADING_QUANTUM_DEG: f64 = 0.0125;
pub const HEADING_Q_MAX: u16 = 28800; // 360 deg / 0.0125

/// Decoded personal safety message. Quantized fields round-trip their
/// physical values within one quantum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PsmMessage {
    pub source_id: u8,
    /// Milliseconds since scenario start.
    pub timestamp_ms: u32,
    /// Centimeters in the virtual frame.
    pub x_cm: i32,
    pub y_cm: i32,
    /// Units of 0.02 m/s.
    pub speed_q: u16,
    /// Units of 0.0125 degrees CCW from +x, in [0, 28800).
    pub heading_q: u16,
}

impl PsmMessage {
    /// Quantizes a pedestrian pose at time `t` (seconds since scenario start).
    pub fn quantize(source_id: u8, t: f64, pose: &Pose2) -> PsmMessage {
        let heading_deg = pose.heading.to_degrees().rem_euclid(360.0);
        let heading_q = ((heading_deg / HEADING_QUANTUM_DEG).round() as u32
            % HEADING_Q_MAX as u32) as u16;
        PsmMessage {
            source_id,
            timestamp_ms: (t * 1000.0).round().clamp(0.0, u32::MAX as f64) as u32,
            x_cm: (pose.position.x * 100.0).round().clamp(i32::MIN as f64, i32::MAX as f64) as i32,
            y_cm: (pose.position.y * 100.0).round().clamp(i32::MIN as f64, i32::MAX as f64) as i32,
            speed_q: (pose.speed / SPEED_QUANTUM).round().clamp(0.0, u16::MAX as f64) as u16,
            heading_q,
        }
    }

    /// Physical-value reconstruction of the quantized fields.
    pub fn to_pose(&self) -> Pose2 {
        Pose2::new(
            Vec2::new(self.x_cm as f64 / 100.0, self.y_cm as f64 / 100.0),
            normalize_angle((self.heading_q as f64 * HEADING_QUANTUM_DEG).to_radians()),
            self.speed_q as f64 * SPEED_QUANTUM,
        )
    }
}

/// A validated 22-byte wire frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PsmFrame(pub [u8; FRAME_LEN]);

impl PsmFrame {
    pub fn as_bytes(&self) -> &[u8; FRAME_LEN] {
        &self.0
    }

    pub fn source_id(&self) -> u8 {
        self.0[3]
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("heading_q {0} out of range [0, 28800)")]
    HeadingOutOfRange(u16),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("bad frame length {0}, expected 22")]
    BadLength(usize),
    #[error("bad magic {0:#04x} {1:#04x}")]
    BadMagic(u8, u8),
    #[error("bad version {0}")]
    BadVersion(u8),
    #[error("CRC mismatch: stored {stored:#06x}, computed {computed:#06x}")]
    BadCrc { stored: u16, computed: u16 },
}

// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final XOR.
const fn crc16_table() -> [u16; 256] {
    let mut table = [0u16; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = (i as u16) << 8;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & 0x8000 != 0 { (crc << 1) ^ 0x1021 } else { crc << 1 };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

static CRC16_TABLE: [u16; 256] = crc16_table();

pub fn crc16_ccitt_false(data: &[u8]) -> u16 {
    let mut crc: u16 = 0xFFFF;
    for &b in data {
        crc = (crc << 8) ^ CRC16_TABLE[((crc >> 8) ^ b as u16) as usize];
    }
    crc
}

/// Serializes a message into its 22-byte wire form.
pub fn encode_psm(m: &PsmMessage) -> Result<PsmFrame, EncodeError> {
    if m.heading_q >= HEADING_Q_MAX {
        return Err(EncodeError::HeadingOutOfRange(m.heading_q));
    }
    let mut buf = [0u8; FRAME_LEN];
    buf[0..2].copy_from_slice(&MAGIC);
    buf[2] = VERSION;
    buf[3] = m.source_id;
    buf[4..8].copy_from_slice(&m.timestamp_ms.to_le_bytes());
    buf[8..12].copy_from_slice(&m.x_cm.to_le_bytes());
    buf[12..16].copy_from_slice(&m.y_cm.to_le_bytes());
    buf[16..18].copy_from_slice(&m.speed_q.to_le_bytes());
    buf[18..20].copy_from_slice(&m.heading_q.to_le_bytes());
    let crc = crc16_ccitt_false(&buf[0..20]);
    buf[20..22].copy_from_slice(&crc.to_be_bytes());
    Ok(PsmFrame(buf))
}

/// Validates magic, version and CRC, then decodes the message.
pub fn decode_psm(bytes: &[u8]) -> Result<PsmMessage, DecodeError> {
    if bytes.len() != FRAME_LEN {
        return Err(DecodeError::BadLength(bytes.len()));
    }
    if bytes[0] != MAGIC[0] || bytes[1] != MAGIC[1] {
        return Err(DecodeError::BadMagic(bytes[0], bytes[1]));
    }
    if bytes[2] != VERSION {
        return Err(DecodeError::BadVersion(bytes[2]));
    }
    let stored = u16::from_be_bytes([bytes[20], bytes[21]]);
    let computed = crc16_ccitt_false(&bytes[0..20]);
    if stored != computed {
        return Err(DecodeError::BadCrc { stored, computed });
    }
    Ok(PsmMessage {
        source_id: bytes[3],
        timestamp_ms: u32::from_le_bytes(bytes[4..8].try_into().unwrap()),
        x_cm: i32::from_le_bytes(bytes[8..12].try_into().unwrap()),
        y_cm: i32::from_le_bytes(bytes[12..16].try_into().unwrap()),
        speed_q: u16::from_le_bytes(bytes[16..18].try_into().unwrap()),
        heading_q: u16::from_le_bytes(bytes[18..20].try_into().unwrap()),
    })
}

/// Broadcast channel parameters. `rng_seed` left unset inherits the
/// scenario seed, keeping all randomness downstream of one value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Advertising cadence, seconds.
    pub broadcast_period: f64,
    /// Mean one-way latency, seconds.
    pub latency_mean: f64,
    /// Uniform latency jitter, +/- seconds (samples clamp at zero).
    pub latency_jitter: f64,
    /// Probability a frame is silently lost, in [0, 1].
    pub drop_probability: f64,
    pub rng_seed: Option<u64>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            broadcast_period: 0.1,
            latency_mean: 0.03,
            latency_jitter: 0.01,
            drop_probability: 0.0,
            rng_seed: None,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.broadcast_period > 0.0 && self.broadcast_period.is_finite()) {
            return Err("channel.broadcast_period must be finite and > 0".into());
        }
        if !(self.latency_mean >= 0.0 && self.latency_mean.is_finite()) {
            return Err("channel.latency_mean must be finite and >= 0".into());
        }
        if !(self.latency_jitter >= 0.0 && self.latency_jitter.is_finite()) {
            return Err("channel.latency_jitter must be finite and >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.drop_probability) {
            return Err("channel.drop_probability must lie in [0, 1]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct InFlightMessage {
    frame: PsmFrame,
    deliver_at_tick: u64,
    seq: u64,
}

/// Deterministic lossy latent channel. All randomness flows from the seed
/// handed to [`SimChannel::new`]; per send it draws one uniform for the drop
/// decision and, if kept, one uniform for the latency.
#[derive(Debug, Clone)]
pub struct SimChannel {
    latency_mean: f64,
    latency_jitter: f64,
    drop_probability: f64,
    rng: ChaCha8Rng,
    in_flight: Vec<InFlightMessage>,
    /// Latest scheduled delivery tick per source; later sends never overtake.
    last_delivery: HashMap<u8, u64>,
    next_seq: u64,
    pub sent_count: u64,
    pub dropped_count: u64,
}

impl SimChannel {
    pub fn new(cfg: &ChannelConfig, fallback_seed: u64) -> SimChannel {
        SimChannel {
            latency_mean: cfg.latency_mean,
            latency_jitter: cfg.latency_jitter,
            drop_probability: cfg.drop_probability,
            rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed.unwrap_or(fallback_seed)),
            in_flight: Vec::new(),
            last_delivery: HashMap::new(),
            next_seq: 0,
            sent_count: 0,
            dropped_count: 0,
        }
    }

    /// Accepts a frame for transport at `now_tick`. Transport always takes at
    /// least one tick, even at zero latency.
    pub fn send(&mut self, frame: PsmFrame, now_tick: u64, dt: f64) {
        assert!(dt > 0.0, "dt must be > 0");
        self.sent_count += 1;
        if self.rng.gen::<f64>() < self.drop_probability {
            self.dropped_count += 1;
            return;
        }
        let u: f64 = self.rng.gen();
        let latency = (self.latency_mean + (2.0 * u - 1.0) * self.latency_jitter).max(0.0);
        let delay_ticks = ((latency / dt).round() as u64).max(1);
        let mut deliver_at = now_tick + delay_ticks;
        let last = self.last_delivery.entry(frame.source_id()).or_insert(0);
        if deliver_at < *last {
            deliver_at = *last;
        }
        *last = deliver_at;
        self.in_flight.push(InFlightMessage {
            frame,
            deliver_at_tick: deliver_at,
            seq: self.next_seq,
        });
        self.next_seq += 1;
    }

    /// Removes and returns, in send order, every frame due at or before
    /// `now_tick`.
    pub fn poll(&mut self, now_tick: u64) -> Vec<PsmFrame> {
        let mut ready: Vec<InFlightMessage> = Vec::new();
        let mut i = 0;
        while i < self.in_flight.len() {
            if self.in_flight[i].deliver_at_tick <= now_tick {
                ready.push(self.in_flight.swap_remove(i));
            } else {
                i += 1;
            }
        }
        ready.sort_by_key(|m| m.seq);
        ready.into_iter().map(|m| m.frame).collect()
    }

    pub fn pending(&self) -> usize {
        self.in_flight.len()
    }
}

/// Periodic beacon: encodes the pedestrian's current state on every crossing
/// of a broadcast-period multiple (inclusive of t = 0).
#[derive(Debug, Clone)]
pub struct Broadcaster {
    pub source_id: u8,
    period: f64,
    emitted: u64,
}

impl Broadcaster {
    pub fn new(source_id: u8, period: f64) -> Broadcaster {
        assert!(period > 0.0);
        Broadcaster {
            source_id,
            period,
            emitted: 0,
        }
    }

    /// Emits at the first tick at or after each period multiple. Returns the
    /// number of frames sent this tick.
    pub fn tick(
        &mut self,
        pose: &Pose2,
        t: f64,
        now_tick: u64,
        dt: f64,
        ch: &mut SimChannel,
    ) -> u64 {
        let mut sent = 0;
        while t >= self.emitted as f64 * self.period - 1e-9 {
            let msg = PsmMessage::quantize(self.source_id, t, pose);
            let frame = encode_psm(&msg).expect("quantize keeps heading_q in range");
            ch.send(frame, now_tick, dt);
            self.emitted += 1;
            sent += 1;
        }
        sent
    }
}
