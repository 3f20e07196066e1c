//! Controller-to-robot wire protocol, a seeded lossy link and the digital
//! twin that mirrors the plant from state updates.

mod codec;
mod link;
mod net;
mod state;

pub use codec::{decode, encode, Payload, TwinMessage};
pub use link::{LinkConfig, LinkQueue, SimLink};
pub use net::{SimTransport, SocketLink, Transport};
pub use state::{desync_metric, tcp_desync, TwinState, DESYNC_THRESHOLD};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TwinError {
    #[error("malformed message: {0}")]
    MalformedMessage(String),
    #[error("invalid link configuration: {0}")]
    InvalidLink(&'static str),
    #[error("transport error: {0}")]
    Io(String),
}

/// Hands out strictly increasing sequence numbers for one sender.
#[derive(Clone, Debug, Default)]
pub struct SeqCounter {
    next: u64,
}

impl SeqCounter {
    pub fn next_seq(&mut self) -> u64 {
        let s = self.next;
        self.next += 1;
        s
    }
}
