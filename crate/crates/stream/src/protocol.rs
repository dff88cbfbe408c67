//! Binary wire format.
//!
//! One WebSocket binary message carries exactly one protocol message, so the
//! WebSocket frame length is the length prefix. The first byte is the kind;
//! every integer is little-endian and every float is IEEE-754 binary32.
//!
//! ```text
//! GAZE   0x01  timestamp u64 (µs), x f32, y f32
//! FRAME  0x02  frame_id u64, send_timestamp u64, echoed_gaze_timestamp u64,
//!              gaze_x f32, gaze_y f32, A f32, sigma f32, payload_len u32, payload
//! STATS  0x03  bitrate_mbps f32, fps f32, last_latency_ms f32
//! CONFIG 0x04  A f32, sigma f32, base_qp i16, foveation_enabled u8
//! ```
//!
//! Messages with an unknown kind byte decode to `Ok(None)` so that newer
//! peers can add kinds without breaking older ones.

use thiserror::Error;

pub const KIND_GAZE: u8 = 0x01;
pub const KIND_FRAME: u8 = 0x02;
pub const KIND_STATS: u8 = 0x03;
pub const KIND_CONFIG: u8 = 0x04;

pub const GAZE_LEN: usize = 1 + 8 + 4 + 4;
pub const FRAME_HEADER_LEN: usize = 1 + 8 * 3 + 4 * 4 + 4;
pub const STATS_LEN: usize = 1 + 4 * 3;
pub const CONFIG_LEN: usize = 1 + 4 + 4 + 2 + 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("empty message")]
    Empty,
    #[error("message kind {kind:#04x} should be {expected} bytes, got {actual}")]
    Length { kind: u8, expected: usize, actual: usize },
    #[error("frame payload_len {declared} does not match the {actual} bytes present")]
    PayloadLength { declared: u32, actual: usize },
}

/// Gaze sample sent by the client.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaze {
    /// Microseconds on the client's clock.
    pub timestamp: u64,
    pub x: f32,
    pub y: f32,
}

/// One encoded frame and the state that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMsg {
    pub frame_id: u64,
    /// Microseconds since the server session started.
    pub send_timestamp: u64,
    /// Timestamp of the gaze sample the QP map was built from; 0 before any
    /// gaze has arrived.
    pub echoed_gaze_timestamp: u64,
    pub gaze_x: f32,
    pub gaze_y: f32,
    /// Strength actually applied (0 while foveation is disabled).
    pub strength: f32,
    pub sigma: f32,
    /// FVC1 bitstream.
    pub payload: Vec<u8>,
}

/// Periodic server statistics. All three fields are NaN in an error notice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub bitrate_mbps: f32,
    pub fps: f32,
    pub last_latency_ms: f32,
}

impl Stats {
    pub const ERROR_NOTICE: Stats = Stats { bitrate_mbps: f32::NAN, fps: f32::NAN, last_latency_ms: f32::NAN };

    pub fn is_error_notice(&self) -> bool {
        self.bitrate_mbps.is_nan() && self.fps.is_nan() && self.last_latency_ms.is_nan()
    }
}

/// Runtime parameter change requested by the client.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Config {
    pub strength: f32,
    pub sigma: f32,
    pub base_qp: i16,
    pub foveation_enabled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Gaze(Gaze),
    Frame(FrameMsg),
    Stats(Stats),
    Config(Config),
}

impl Message {
    pub fn kind(&self) -> u8 {
        match self {
            Message::Gaze(_) => KIND_GAZE,
            Message::Frame(_) => KIND_FRAME,
            Message::Stats(_) => KIND_STATS,
            Message::Config(_) => KIND_CONFIG,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(match self {
            Message::Frame(f) => FRAME_HEADER_LEN + f.payload.len(),
            _ => 16,
        });
        out.push(self.kind());
        match self {
            Message::Gaze(g) => {
                out.extend(g.timestamp.to_le_bytes());
                out.extend(g.x.to_le_bytes());
                out.extend(g.y.to_le_bytes());
            }
            Message::Frame(f) => {
                out.extend(f.frame_id.to_le_bytes());
                out.extend(f.send_timestamp.to_le_bytes());
                out.extend(f.echoed_gaze_timestamp.to_le_bytes());
                for v in [f.gaze_x, f.gaze_y, f.strength, f.sigma] {
                    out.extend(v.to_le_bytes());
                }
                let len = u32::try_from(f.payload.len()).expect("payload larger than 4 GiB");
                out.extend(len.to_le_bytes());
                out.extend_from_slice(&f.payload);
            }
            Message::Stats(s) => {
                for v in [s.bitrate_mbps, s.fps, s.last_latency_ms] {
                    out.extend(v.to_le_bytes());
                }
            }
            Message::Config(c) => {
                out.extend(c.strength.to_le_bytes());
                out.extend(c.sigma.to_le_bytes());
                out.extend(c.base_qp.to_le_bytes());
                out.push(u8::from(c.foveation_enabled));
            }
        }
        out
    }

    /// Parses one message. Unknown kinds yield `Ok(None)`.
    pub fn decode(bytes: &[u8]) -> Result<Option<Message>, ProtocolError> {
        let (&kind, _) = bytes.split_first().ok_or(ProtocolError::Empty)?;
        let exact = |expected: usize| {
            if bytes.len() == expected {
                Ok(Reader { bytes, pos: 1 })
            } else {
                Err(ProtocolError::Length { kind, expected, actual: bytes.len() })
            }
        };
        let msg = match kind {
            KIND_GAZE => {
                let mut r = exact(GAZE_LEN)?;
                Message::Gaze(Gaze { timestamp: r.u64(), x: r.f32(), y: r.f32() })
            }
            KIND_FRAME => {
                if bytes.len() < FRAME_HEADER_LEN {
                    return Err(ProtocolError::Length { kind, expected: FRAME_HEADER_LEN, actual: bytes.len() });
                }
                let mut r = Reader { bytes, pos: 1 };
                let (frame_id, send_timestamp, echoed_gaze_timestamp) = (r.u64(), r.u64(), r.u64());
                let (gaze_x, gaze_y, strength, sigma) = (r.f32(), r.f32(), r.f32(), r.f32());
                let declared = r.u32();
                let payload = &bytes[FRAME_HEADER_LEN..];
                if declared as usize != payload.len() {
                    return Err(ProtocolError::PayloadLength { declared, actual: payload.len() });
                }
                Message::Frame(FrameMsg {
                    frame_id,
                    send_timestamp,
                    echoed_gaze_timestamp,
                    gaze_x,
                    gaze_y,
                    strength,
                    sigma,
                    payload: payload.to_vec(),
                })
            }
            KIND_STATS => {
                let mut r = exact(STATS_LEN)?;
                Message::Stats(Stats { bitrate_mbps: r.f32(), fps: r.f32(), last_latency_ms: r.f32() })
            }
            KIND_CONFIG => {
                let mut r = exact(CONFIG_LEN)?;
                Message::Config(Config {
                    strength: r.f32(),
                    sigma: r.f32(),
                    base_qp: r.i16(),
                    foveation_enabled: r.u8() != 0,
                })
            }
            _ => return Ok(None),
        };
        Ok(Some(msg))
    }
}

// Callers check the length up front, so the accessors cannot run off the end.
struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out = self.bytes[self.pos..self.pos + N].try_into().unwrap();
        self.pos += N;
        out
    }

    fn u8(&mut self) -> u8 {
        self.take::<1>()[0]
    }

    fn i16(&mut self) -> i16 {
        i16::from_le_bytes(self.take())
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }

    fn f32(&mut self) -> f32 {
        f32::from_le_bytes(self.take())
    }
}
