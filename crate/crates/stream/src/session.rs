//! Per-connection state, independent of any transport or clock.
//!
//! Time is passed in explicitly as microseconds since the session started,
//! which keeps every rule here testable without sleeping.

use std::collections::VecDeque;

use fovea_core::codec::{encode_frame, EncodedFrame, MAX_QP};
use fovea_core::{build_qp_map, Error, FoveationParams, Frame, GazeSample, QpDeltaMap};

use crate::protocol::{Config, FrameMsg, Gaze, Stats};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub mb_size: u32,
    pub params: FoveationParams,
    pub foveation_enabled: bool,
    pub base_qp: i32,
    /// Longest span the bitrate window retains.
    pub bitrate_window_us: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            mb_size: fovea_core::foveation::DEFAULT_MB_SIZE,
            params: FoveationParams::RECOMMENDED,
            foveation_enabled: true,
            base_qp: fovea_core::codec::DEFAULT_BASE_QP,
            bitrate_window_us: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct LatestGaze {
    gaze: Gaze,
    received_at_us: u64,
}

#[derive(Debug, Clone)]
pub struct Session {
    config: SessionConfig,
    latest_gaze: Option<LatestGaze>,
    frame_counter: u64,
    window: VecDeque<(u64, u64)>,
    last_latency_us: Option<u64>,
}

/// Everything a tick needs, copied out of the session so that encoding runs
/// without holding it. Gaze that arrives afterwards lands in the next plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickPlan {
    pub frame_id: u64,
    /// `None` until the first gaze sample; the map is then centred.
    pub gaze: Option<Gaze>,
    pub gaze_received_at_us: Option<u64>,
    pub params: FoveationParams,
    pub foveation_enabled: bool,
    pub base_qp: i32,
    pub mb_size: u32,
}

/// Result of encoding one tick.
#[derive(Debug, Clone)]
pub struct TickOutput {
    pub message: FrameMsg,
    pub qp_map: QpDeltaMap,
    pub bits: u64,
}

impl Session {
    pub fn new(config: SessionConfig) -> Self {
        Self { config, latest_gaze: None, frame_counter: 0, window: VecDeque::new(), last_latency_us: None }
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn latest_gaze(&self) -> Option<Gaze> {
        self.latest_gaze.map(|l| l.gaze)
    }

    pub fn frame_counter(&self) -> u64 {
        self.frame_counter
    }

    /// Applies a gaze sample if it is newer than the current one. Returns
    /// whether it replaced the stored sample. Coordinates are clamped into
    /// the unit square; NaN coordinates are rejected.
    pub fn on_gaze(&mut self, gaze: Gaze, now_us: u64) -> Result<bool, Error> {
        if gaze.x.is_nan() || gaze.y.is_nan() {
            return Err(Error::InvalidArgument("gaze coordinate is NaN".into()));
        }
        if self.latest_gaze.is_some_and(|l| gaze.timestamp <= l.gaze.timestamp) {
            return Ok(false);
        }
        let gaze = Gaze { x: gaze.x.clamp(0.0, 1.0), y: gaze.y.clamp(0.0, 1.0), ..gaze };
        self.latest_gaze = Some(LatestGaze { gaze, received_at_us: now_us });
        Ok(true)
    }

    /// Validates and applies a CONFIG message; the next snapshot uses it.
    pub fn on_config(&mut self, config: Config) -> Result<(), Error> {
        let params = FoveationParams::new(f64::from(config.strength), f64::from(config.sigma))?;
        let base_qp = i32::from(config.base_qp);
        if !(0..=MAX_QP).contains(&base_qp) {
            return Err(Error::InvalidArgument(format!("base_qp {base_qp} outside 0..={MAX_QP}")));
        }
        self.config.params = params;
        self.config.base_qp = base_qp;
        self.config.foveation_enabled = config.foveation_enabled;
        Ok(())
    }

    /// Takes the state for the next frame and advances the frame counter.
    pub fn snapshot(&mut self) -> TickPlan {
        let frame_id = self.frame_counter;
        self.frame_counter += 1;
        TickPlan {
            frame_id,
            gaze: self.latest_gaze.map(|l| l.gaze),
            gaze_received_at_us: self.latest_gaze.map(|l| l.received_at_us),
            params: self.config.params,
            foveation_enabled: self.config.foveation_enabled,
            base_qp: self.config.base_qp,
            mb_size: self.config.mb_size,
        }
    }

    /// Adds a sent frame to the bitrate window and updates the server-side
    /// latency (gaze receipt to frame send).
    pub fn record_frame(&mut self, now_us: u64, bits: u64, gaze_received_at_us: Option<u64>) {
        self.window.push_back((now_us, bits));
        let span = self.config.bitrate_window_us;
        while self.window.front().is_some_and(|&(t, _)| t + span <= now_us) {
            self.window.pop_front();
        }
        if let Some(at) = gaze_received_at_us {
            self.last_latency_us = Some(now_us.saturating_sub(at));
        }
    }

    /// Megabits per second over `(now - window, now]`. The window is capped at
    /// the configured retention span.
    pub fn bitrate(&self, now_us: u64, window_s: f64) -> Result<f64, Error> {
        let window_us = self.window_us(window_s)?;
        let lo = now_us.saturating_sub(window_us);
        let bits: u64 = self.window.iter().filter(|&&(t, _)| t > lo && t <= now_us).map(|&(_, b)| b).sum();
        Ok(bits as f64 / (window_us as f64 / 1e6) / 1e6)
    }

    /// Frames per second over the same window as [`Session::bitrate`].
    pub fn fps(&self, now_us: u64, window_s: f64) -> Result<f64, Error> {
        let window_us = self.window_us(window_s)?;
        let lo = now_us.saturating_sub(window_us);
        let frames = self.window.iter().filter(|&&(t, _)| t > lo && t <= now_us).count();
        Ok(frames as f64 / (window_us as f64 / 1e6))
    }

    pub fn stats(&self, now_us: u64, window_s: f64) -> Result<Stats, Error> {
        Ok(Stats {
            bitrate_mbps: self.bitrate(now_us, window_s)? as f32,
            fps: self.fps(now_us, window_s)? as f32,
            last_latency_ms: self.last_latency_us.map_or(f32::NAN, |us| us as f32 / 1000.0),
        })
    }

    fn window_us(&self, window_s: f64) -> Result<u64, Error> {
        if !(window_s > 0.0) || !window_s.is_finite() {
            return Err(Error::InvalidArgument(format!("bitrate window must be > 0 s, got {window_s}")));
        }
        Ok(((window_s * 1e6).round() as u64).clamp(1, self.config.bitrate_window_us))
    }
}

impl TickPlan {
    /// The QP offset map this plan encodes with: all zeros when foveation is
    /// disabled, centred on the frame before any gaze has arrived.
    pub fn qp_map(&self, width: u32, height: u32) -> Result<QpDeltaMap, Error> {
        if !self.foveation_enabled {
            return QpDeltaMap::zeros(width, height, self.mb_size);
        }
        let sample = match self.gaze {
            Some(g) => GazeSample::new(f64::from(g.x), f64::from(g.y), g.timestamp)?,
            None => GazeSample::centered(),
        };
        build_qp_map(width, height, self.mb_size, &sample, &self.params)
    }

    /// Encodes `frame` and builds the FRAME message. `send_timestamp` is left
    /// at 0 for the sender to stamp just before writing.
    pub fn encode(&self, frame: &Frame) -> Result<TickOutput, Error> {
        let qp_map = self.qp_map(frame.width(), frame.height())?;
        let EncodedFrame { bitstream, .. } = encode_frame(frame, self.base_qp, &qp_map)?;
        let (gaze_x, gaze_y, echoed) = self.gaze.map_or((0.5, 0.5, 0), |g| (g.x, g.y, g.timestamp));
        let strength = if self.foveation_enabled { self.params.strength() as f32 } else { 0.0 };
        let bits = bitstream.len() as u64 * 8;
        Ok(TickOutput {
            message: FrameMsg {
                frame_id: self.frame_id,
                send_timestamp: 0,
                echoed_gaze_timestamp: echoed,
                gaze_x,
                gaze_y,
                strength,
                sigma: self.params.sigma() as f32,
                payload: bitstream,
            },
            qp_map,
            bits,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaze(ts: u64, x: f32, y: f32) -> Gaze {
        Gaze { timestamp: ts, x, y }
    }

    #[test]
    fn latest_wins_and_stale_is_dropped() {
        let mut s = Session::new(SessionConfig::default());
        assert!(s.on_gaze(gaze(10, 0.2, 0.3), 0).unwrap());
        assert!(s.on_gaze(gaze(20, 0.4, 0.5), 0).unwrap());
        assert!(!s.on_gaze(gaze(15, 0.9, 0.9), 0).unwrap());
        assert!(!s.on_gaze(gaze(20, 0.9, 0.9), 0).unwrap());
        assert_eq!(s.latest_gaze(), Some(gaze(20, 0.4, 0.5)));
    }

    #[test]
    fn gaze_is_clamped_and_nan_rejected() {
        let mut s = Session::new(SessionConfig::default());
        s.on_gaze(gaze(1, -0.5, 1.5), 0).unwrap();
        assert_eq!(s.latest_gaze(), Some(gaze(1, 0.0, 1.0)));
        assert!(s.on_gaze(gaze(2, f32::NAN, 0.5), 0).is_err());
        assert_eq!(s.latest_gaze().unwrap().timestamp, 1);
    }

    #[test]
    fn config_validation() {
        let mut s = Session::new(SessionConfig::default());
        let ok = Config { strength: 20.0, sigma: 0.05, base_qp: 30, foveation_enabled: false };
        s.on_config(ok).unwrap();
        assert_eq!(s.config().base_qp, 30);
        assert!(!s.config().foveation_enabled);
        for bad in [
            Config { sigma: 0.0, ..ok },
            Config { strength: -1.0, ..ok },
            Config { base_qp: 103, ..ok },
            Config { base_qp: -1, ..ok },
        ] {
            assert!(s.on_config(bad).is_err(), "{bad:?}");
        }
        assert_eq!(s.config().params, FoveationParams::new(20.0, f64::from(0.05f32)).unwrap());
    }

    #[test]
    fn one_megabit_in_one_second() {
        let mut s = Session::new(SessionConfig::default());
        s.record_frame(500_000, 1_000_000, None);
        assert_eq!(s.bitrate(1_000_000, 1.0).unwrap(), 1.0);
        assert_eq!(s.bitrate(1_500_000, 1.0).unwrap(), 0.0);
        assert!(s.bitrate(1_000_000, 0.0).is_err());
    }

    #[test]
    fn empty_window_is_zero() {
        let s = Session::new(SessionConfig::default());
        assert_eq!(s.bitrate(3_000_000, 1.0).unwrap(), 0.0);
        assert_eq!(s.fps(3_000_000, 1.0).unwrap(), 0.0);
        assert!(s.stats(0, 1.0).unwrap().last_latency_ms.is_nan());
    }

    #[test]
    fn window_never_exceeds_retention() {
        let mut s = Session::new(SessionConfig { bitrate_window_us: 1_000_000, ..Default::default() });
        for i in 0..100u64 {
            s.record_frame(i * 33_333, 1000, None);
            let (first, last) = (s.window.front().unwrap().0, s.window.back().unwrap().0);
            assert!(last - first < 1_000_000);
        }
    }

    #[test]
    fn snapshot_advances_counter() {
        let mut s = Session::new(SessionConfig::default());
        assert_eq!(s.snapshot().frame_id, 0);
        assert_eq!(s.snapshot().frame_id, 1);
        assert_eq!(s.frame_counter(), 2);
    }

    #[test]
    fn server_latency_is_receipt_to_send() {
        let mut s = Session::new(SessionConfig::default());
        s.on_gaze(gaze(5, 0.5, 0.5), 1_000).unwrap();
        let plan = s.snapshot();
        s.record_frame(13_500, 8, plan.gaze_received_at_us);
        assert_eq!(s.stats(13_500, 1.0).unwrap().last_latency_ms, 12.5);
    }
}
