//! Gaze-driven foveated video streaming over WebSocket.
//!
//! The server keeps one [`Session`] per connection. A receive task applies
//! GAZE and CONFIG messages to it as they arrive; a periodic tick takes a
//! [`TickPlan`] snapshot, encodes the next source frame with the QP map for
//! that snapshot and sends it as a FRAME echoing the gaze timestamp used.

pub mod client;
pub mod protocol;
pub mod server;
pub mod session;
pub mod source;

pub use client::{run_probe, LatencyReport, ProbeConfig, StreamClient};
pub use protocol::{Config, FrameMsg, Gaze, Message, ProtocolError, Stats};
pub use server::{Server, ServerConfig};
pub use session::{Session, SessionConfig, TickOutput, TickPlan};
pub use source::Source;

#[derive(Debug, thiserror::Error)]
pub enum StreamError {
    #[error(transparent)]
    Core(#[from] fovea_core::Error),

    #[error(transparent)]
    Protocol(#[from] ProtocolError),

    #[error("websocket: {0}")]
    WebSocket(Box<tokio_tungstenite::tungstenite::Error>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("task failed: {0}")]
    Join(#[from] tokio::task::JoinError),

    #[error("connection closed")]
    Closed,
}

impl From<tokio_tungstenite::tungstenite::Error> for StreamError {
    fn from(e: tokio_tungstenite::tungstenite::Error) -> Self {
        Self::WebSocket(Box::new(e))
    }
}
