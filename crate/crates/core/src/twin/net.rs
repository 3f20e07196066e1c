//! Transports carrying encoded messages over the simulated link, either
//! in memory or through a loopback TCP connection.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};

use super::{decode, encode, LinkConfig, LinkQueue, SimLink, TwinError, TwinMessage};

/// One direction of the controller/plant channel on the simulated clock.
pub trait Transport {
    fn send(&mut self, now: f64, msg: &TwinMessage) -> Result<(), TwinError>;
    /// Messages whose delivery time is at or before `now`, in arrival order.
    fn poll(&mut self, now: f64) -> Result<Vec<TwinMessage>, TwinError>;
}

/// In-process link: encoded lines wait in a queue until their delivery time.
pub struct SimTransport {
    link: SimLink,
    queue: LinkQueue<Vec<u8>>,
}

impl SimTransport {
    pub fn new(cfg: LinkConfig) -> Result<Self, TwinError> {
        Ok(Self {
            link: SimLink::new(cfg)?,
            queue: LinkQueue::default(),
        })
    }
}

impl Transport for SimTransport {
    fn send(&mut self, now: f64, msg: &TwinMessage) -> Result<(), TwinError> {
        let bytes = encode(msg)?;
        if let Some(at) = self.link.deliver_time(now) {
            self.queue.push(at, bytes);
        }
        Ok(())
    }

    fn poll(&mut self, now: f64) -> Result<Vec<TwinMessage>, TwinError> {
        self.queue
            .pop_due(now)
            .into_iter()
            .map(|(_, bytes)| decode(&bytes))
            .collect()
    }
}

fn io_err(e: std::io::Error) -> TwinError {
    TwinError::Io(e.to_string())
}

/// Same schedule as [`SimTransport`], but each due line is written to a TCP
/// socket and parsed from what the peer end reads back.
pub struct SocketLink {
    link: SimLink,
    queue: LinkQueue<Vec<u8>>,
    writer: TcpStream,
    reader: BufReader<TcpStream>,
    line: String,
}

impl SocketLink {
    pub fn from_streams(cfg: LinkConfig, writer: TcpStream, reader: TcpStream) -> Result<Self, TwinError> {
        writer.set_nodelay(true).map_err(io_err)?;
        Ok(Self {
            link: SimLink::new(cfg)?,
            queue: LinkQueue::default(),
            writer,
            reader: BufReader::new(reader),
            line: String::new(),
        })
    }

    /// Connects both ends over `127.0.0.1` on an ephemeral port.
    pub fn loopback(cfg: LinkConfig) -> Result<Self, TwinError> {
        let listener = TcpListener::bind("127.0.0.1:0").map_err(io_err)?;
        let addr = listener.local_addr().map_err(io_err)?;
        let writer = TcpStream::connect(addr).map_err(io_err)?;
        let (reader, _) = listener.accept().map_err(io_err)?;
        Self::from_streams(cfg, writer, reader)
    }
}

impl Transport for SocketLink {
    fn send(&mut self, now: f64, msg: &TwinMessage) -> Result<(), TwinError> {
        let bytes = encode(msg)?;
        if let Some(at) = self.link.deliver_time(now) {
            self.queue.push(at, bytes);
        }
        Ok(())
    }

    fn poll(&mut self, now: f64) -> Result<Vec<TwinMessage>, TwinError> {
        let due = self.queue.pop_due(now);
        for (_, bytes) in &due {
            self.writer.write_all(bytes).map_err(io_err)?;
        }
        self.writer.flush().map_err(io_err)?;
        let mut out = Vec::with_capacity(due.len());
        for _ in 0..due.len() {
            self.line.clear();
            let n = self.reader.read_line(&mut self.line).map_err(io_err)?;
            if n == 0 {
                return Err(TwinError::Io("connection closed".into()));
            }
            out.push(decode(self.line.as_bytes())?);
        }
        Ok(out)
    }
}
