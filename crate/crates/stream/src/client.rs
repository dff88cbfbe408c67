//! Headless client: a thin message-level wrapper and the latency probe.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use futures_util::{SinkExt, StreamExt};
use tokio::net::TcpStream;
use tokio::time::MissedTickBehavior;
use tokio_tungstenite::tungstenite::Message as WsMessage;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

use crate::protocol::{Config, Gaze, Message, Stats};
use crate::StreamError;

type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

pub struct StreamClient {
    ws: Ws,
}

impl StreamClient {
    pub async fn connect(url: &str) -> Result<Self, StreamError> {
        let (ws, _) = tokio_tungstenite::connect_async(url).await?;
        if let MaybeTlsStream::Plain(tcp) = ws.get_ref() {
            tcp.set_nodelay(true)?;
        }
        Ok(Self { ws })
    }

    pub async fn send(&mut self, msg: &Message) -> Result<(), StreamError> {
        Ok(self.ws.send(WsMessage::Binary(msg.encode())).await?)
    }

    /// Sends raw bytes as one binary message, for exercising error paths.
    pub async fn send_raw(&mut self, bytes: Vec<u8>) -> Result<(), StreamError> {
        Ok(self.ws.send(WsMessage::Binary(bytes)).await?)
    }

    /// Next known protocol message; `None` once the server closes.
    pub async fn recv(&mut self) -> Result<Option<Message>, StreamError> {
        while let Some(msg) = self.ws.next().await {
            if let WsMessage::Binary(bytes) = msg? {
                if let Some(m) = Message::decode(&bytes)? {
                    return Ok(Some(m));
                }
            }
        }
        Ok(None)
    }

    /// Next FRAME, skipping STATS.
    pub async fn recv_frame(&mut self) -> Result<crate::protocol::FrameMsg, StreamError> {
        loop {
            match self.recv().await? {
                Some(Message::Frame(f)) => return Ok(f),
                Some(_) => {}
                None => return Err(StreamError::Closed),
            }
        }
    }

    pub async fn close(mut self) -> Result<(), StreamError> {
        self.ws.close(None).await?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub duration: Duration,
    pub gaze_rate_hz: f64,
    /// Sent once before the first gaze sample.
    pub config: Option<Config>,
    /// Decode every payload and count failures.
    pub decode: bool,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { duration: Duration::from_secs(10), gaze_rate_hz: 60.0, config: None, decode: true }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LatencyReport {
    pub frames: usize,
    /// Receipt time minus echoed gaze timestamp, for frames built from a gaze
    /// sample this probe sent.
    pub latencies_ms: Vec<f64>,
    pub gaze_sent: usize,
    /// Frames whose echoed timestamp went backwards.
    pub non_monotone: usize,
    /// Frames whose echoed timestamp or coordinates match no sent sample.
    pub mismatched: usize,
    pub decode_failures: usize,
    pub payload_bytes: u64,
    pub stats: Vec<Stats>,
}

impl LatencyReport {
    /// Nearest-rank percentile of the latencies, `p` in `[0, 100]`.
    pub fn percentile(&self, p: f64) -> Option<f64> {
        percentile(&self.latencies_ms, p)
    }

    pub fn max(&self) -> Option<f64> {
        self.latencies_ms.iter().copied().reduce(f64::max)
    }
}

pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Gaze trajectory of the probe: a slow Lissajous sweep over the frame.
pub fn probe_path(t_s: f64) -> (f32, f32) {
    let tau = std::f64::consts::TAU;
    ((0.5 + 0.35 * (tau * 0.23 * t_s).sin()) as f32, (0.5 + 0.3 * (tau * 0.31 * t_s).sin()) as f32)
}

/// Streams gaze at `gaze_rate_hz` for `duration` and measures, for each
/// FRAME, the time from sending the echoed gaze sample to receiving the
/// frame. Timestamps are microseconds on this probe's clock, so the
/// measurement needs no clock agreement with the server.
pub async fn run_probe(url: &str, cfg: ProbeConfig) -> Result<LatencyReport, StreamError> {
    if !(cfg.gaze_rate_hz > 0.0) || !cfg.gaze_rate_hz.is_finite() {
        return Err(fovea_core::Error::InvalidArgument(format!("gaze rate must be > 0, got {}", cfg.gaze_rate_hz)).into());
    }
    let client = StreamClient::connect(url).await?;
    let (mut sink, mut stream) = client.ws.split();
    if let Some(c) = cfg.config {
        sink.send(WsMessage::Binary(Message::Config(c).encode())).await?;
    }

    let start = Instant::now();
    let sent: Arc<Mutex<HashMap<u64, (f32, f32)>>> = Arc::default();
    let sender = {
        let sent = Arc::clone(&sent);
        tokio::spawn(async move {
            let mut interval = tokio::time::interval(Duration::from_secs_f64(1.0 / cfg.gaze_rate_hz));
            interval.set_missed_tick_behavior(MissedTickBehavior::Delay);
            let mut last_ts = 0u64;
            let mut count = 0usize;
            loop {
                interval.tick().await;
                let elapsed = start.elapsed();
                let ts = (elapsed.as_micros() as u64).max(last_ts + 1);
                last_ts = ts;
                let (x, y) = probe_path(elapsed.as_secs_f64());
                sent.lock().unwrap().insert(ts, (x, y));
                let msg = Message::Gaze(Gaze { timestamp: ts, x, y });
                if sink.send(WsMessage::Binary(msg.encode())).await.is_err() {
                    break;
                }
                count += 1;
                if start.elapsed() >= cfg.duration {
                    break;
                }
            }
            (sink, count)
        })
    };

    let mut report = LatencyReport::default();
    let mut last_echo = 0u64;
    let mut decodes = Vec::new();
    let deadline = tokio::time::Instant::from_std(start + cfg.duration);
    loop {
        let next = tokio::time::timeout_at(deadline, stream.next()).await;
        let Ok(Some(msg)) = next else { break };
        let bytes = match msg? {
            WsMessage::Binary(b) => b,
            WsMessage::Close(_) => break,
            _ => continue,
        };
        let received_us = start.elapsed().as_micros() as u64;
        match Message::decode(&bytes)? {
            Some(Message::Frame(f)) => {
                report.frames += 1;
                report.payload_bytes += f.payload.len() as u64;
                if f.echoed_gaze_timestamp < last_echo {
                    report.non_monotone += 1;
                }
                last_echo = last_echo.max(f.echoed_gaze_timestamp);
                if f.echoed_gaze_timestamp > 0 {
                    let mut sent = sent.lock().unwrap();
                    if sent.get(&f.echoed_gaze_timestamp) == Some(&(f.gaze_x, f.gaze_y)) {
                        let age = received_us.saturating_sub(f.echoed_gaze_timestamp);
                        report.latencies_ms.push(age as f64 / 1000.0);
                    } else {
                        report.mismatched += 1;
                    }
                    sent.retain(|&ts, _| ts >= f.echoed_gaze_timestamp);
                }
                if cfg.decode {
                    decodes.push(tokio::task::spawn_blocking(move || fovea_core::codec::decode(&f.payload).is_ok()));
                }
            }
            Some(Message::Stats(s)) => report.stats.push(s),
            _ => {}
        }
    }

    let (mut sink, count) = sender.await?;
    report.gaze_sent = count;
    for d in decodes {
        if !d.await? {
            report.decode_failures += 1;
        }
    }
    let _ = sink.close().await;
    Ok(report)
}
