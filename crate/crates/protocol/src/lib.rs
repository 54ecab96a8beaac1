//! Line-delimited JSON protocol around the gathering environment.
//!
//! Two uses share one message set:
//!
//! - [`session`]: a client process drives an environment hosted here
//!   (`hello`, `config`, `reset`, `act`, `bye`).
//! - [`controller`]: an environment hosted here asks another process for
//!   actions (`obs` in, `act` out).
//!
//! Observations travel both as raw bearings and as the packed 75x75 image
//! (750 bytes, base64), so peers need not reimplement the rasterizer.
//! Floats are written with round-trip precision, so decoded values are
//! bit-identical to the in-process ones.

pub mod controller;
pub mod message;
pub mod session;
pub mod transport;

pub use controller::{run_controller, ExternalController};
pub use message::{Message, PROTOCOL_VERSION};
pub use session::{serve, Session, SessionEnd, SessionSettings};
pub use transport::{serve_stdio, serve_unix};

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("protocol order violation: {0}")]
    Order(String),
    #[error("peer speaks protocol version {found}, expected {expected}")]
    Version { found: u32, expected: u32 },
    #[error("peer reported an error: {0}")]
    Peer(String),
    #[error("connection closed")]
    Closed,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
