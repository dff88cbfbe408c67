//! WebSocket server: one session per connection, one frame per tick.

use std::net::SocketAddr;
use std::sync::{Arc, Mutex, PoisonError};
use std::time::{Duration, Instant};

use futures_util::stream::SplitStream;
use futures_util::{SinkExt, StreamExt};
use tokio::net::{TcpListener, TcpStream, ToSocketAddrs};
use tokio::sync::oneshot;
use tokio::time::MissedTickBehavior;
use tokio_tungstenite::tungstenite::Message as WsMessage;
use tokio_tungstenite::WebSocketStream;

use crate::protocol::{Message, Stats};
use crate::session::{Session, SessionConfig, TickOutput};
use crate::source::Source;
use crate::StreamError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServerConfig {
    pub fps: f64,
    pub session: SessionConfig,
    pub stats_interval: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self { fps: 30.0, session: SessionConfig::default(), stats_interval: Duration::from_secs(1) }
    }
}

pub struct Server {
    listener: TcpListener,
    config: ServerConfig,
    source: Arc<Source>,
}

impl Server {
    pub async fn bind(addr: impl ToSocketAddrs, config: ServerConfig, source: Source) -> Result<Self, StreamError> {
        if !(config.fps > 0.0) || !config.fps.is_finite() {
            return Err(fovea_core::Error::InvalidArgument(format!("fps must be > 0, got {}", config.fps)).into());
        }
        if config.stats_interval.is_zero() {
            return Err(fovea_core::Error::InvalidArgument("stats interval must be > 0".into()).into());
        }
        let listener = TcpListener::bind(addr).await?;
        Ok(Self { listener, config, source: Arc::new(source) })
    }

    pub fn local_addr(&self) -> Result<SocketAddr, StreamError> {
        Ok(self.listener.local_addr()?)
    }

    /// Accepts connections until the task is dropped.
    pub async fn run(self) -> Result<(), StreamError> {
        loop {
            let (tcp, peer) = self.listener.accept().await?;
            let (config, source) = (self.config, Arc::clone(&self.source));
            tokio::spawn(async move {
                log::info!("{peer}: connected");
                match serve_connection(tcp, config, source).await {
                    Ok(()) => log::info!("{peer}: closed"),
                    Err(e) => log::info!("{peer}: dropped: {e}"),
                }
            });
        }
    }
}

fn elapsed_us(start: Instant) -> u64 {
    start.elapsed().as_micros() as u64
}

/// Runs one session until the peer goes away.
pub async fn serve_connection(tcp: TcpStream, config: ServerConfig, source: Arc<Source>) -> Result<(), StreamError> {
    tcp.set_nodelay(true)?;
    let ws = tokio_tungstenite::accept_async(tcp).await?;
    let (mut sink, stream) = ws.split();
    let start = Instant::now();
    let session = Arc::new(Mutex::new(Session::new(config.session)));

    let (closed_tx, mut closed_rx) = oneshot::channel();
    let receiver = tokio::spawn(receive_loop(stream, Arc::clone(&session), start, closed_tx));

    let mut interval = tokio::time::interval(Duration::from_secs_f64(1.0 / config.fps));
    interval.set_missed_tick_behavior(MissedTickBehavior::Delay);
    let mut next_stats = config.stats_interval;
    let mut index = 0u64;
    let result = loop {
        tokio::select! {
            _ = interval.tick() => {}
            _ = &mut closed_rx => break Ok(()),
        }
        let src = Arc::clone(&source);
        let frame = tokio::task::spawn_blocking(move || src.frame(index)).await?;
        index += 1;
        // Gaze arriving from here on belongs to the next tick.
        let plan = lock(&session).snapshot();
        let encoded = tokio::task::spawn_blocking(move || plan.encode(&frame)).await?;
        let sent = match encoded {
            Ok(TickOutput { mut message, bits, .. }) => {
                let now = elapsed_us(start);
                message.send_timestamp = now;
                let sent = sink.send(WsMessage::Binary(Message::Frame(message).encode())).await;
                lock(&session).record_frame(now, bits, plan.gaze_received_at_us);
                sent
            }
            Err(e) => {
                log::warn!("frame {}: encode failed: {e}", plan.frame_id);
                sink.send(WsMessage::Binary(Message::Stats(Stats::ERROR_NOTICE).encode())).await
            }
        };
        if let Err(e) = sent {
            break Err(e.into());
        }
        if start.elapsed() >= next_stats {
            next_stats += config.stats_interval;
            let stats = lock(&session).stats(elapsed_us(start), config.stats_interval.as_secs_f64())?;
            if let Err(e) = sink.send(WsMessage::Binary(Message::Stats(stats).encode())).await {
                break Err(e.into());
            }
        }
    };
    receiver.abort();
    result
}

fn lock(session: &Mutex<Session>) -> std::sync::MutexGuard<'_, Session> {
    // Session methods leave it consistent even if a caller panicked mid-way.
    session.lock().unwrap_or_else(PoisonError::into_inner)
}

async fn receive_loop(
    mut stream: SplitStream<WebSocketStream<TcpStream>>,
    session: Arc<Mutex<Session>>,
    start: Instant,
    closed: oneshot::Sender<()>,
) {
    while let Some(msg) = stream.next().await {
        match msg {
            Ok(WsMessage::Binary(bytes)) => handle_message(&bytes, &session, start),
            Ok(WsMessage::Close(_)) => break,
            Ok(WsMessage::Text(_)) => log::warn!("ignoring text message"),
            Ok(_) => {}
            Err(e) => {
                log::debug!("receive error: {e}");
                break;
            }
        }
    }
    let _ = closed.send(());
}

fn handle_message(bytes: &[u8], session: &Mutex<Session>, start: Instant) {
    match Message::decode(bytes) {
        Ok(Some(Message::Gaze(g))) => {
            if let Err(e) = lock(session).on_gaze(g, elapsed_us(start)) {
                log::warn!("protocol error: bad gaze: {e}");
            }
        }
        Ok(Some(Message::Config(c))) => match lock(session).on_config(c) {
            Ok(()) => log::debug!("config applied: {c:?}"),
            Err(e) => log::warn!("protocol error: bad config: {e}"),
        },
        Ok(Some(other)) => log::warn!("ignoring client message of kind {:#04x}", other.kind()),
        Ok(None) => log::debug!("skipping message of unknown kind {:#04x}", bytes[0]),
        Err(e) => log::warn!("protocol error: {e}"),
    }
}
