//! TCP rollout server. Each connection gets its own [`Session`]; requests
//! and responses are length-prefixed JSON frames.

mod frame;
mod session;

use std::io::{self, BufReader, BufWriter};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::thread::{self, JoinHandle};

use serde_json::Value;

pub use frame::{read_frame, write_frame, FrameError, MAX_FRAME_LEN};
pub use session::{error_response, Flow, Session, PROTOCOL_VERSION};

pub struct Server {
    listener: TcpListener,
    padded: bool,
}

impl Server {
    pub fn bind<A: ToSocketAddrs>(addr: A) -> io::Result<Self> {
        Ok(Self { listener: TcpListener::bind(addr)?, padded: false })
    }

    /// Default padding for new sessions; clients may override at `hello`.
    pub fn padded(mut self, padded: bool) -> Self {
        self.padded = padded;
        self
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Accepts connections forever, one thread each.
    pub fn run(self) -> io::Result<()> {
        for stream in self.listener.incoming() {
            let stream = match stream {
                Ok(s) => s,
                Err(e) => {
                    log::warn!("accept failed: {e}");
                    continue;
                }
            };
            let padded = self.padded;
            thread::spawn(move || {
                let peer = stream.peer_addr().ok();
                if let Err(e) = serve_connection(stream, padded) {
                    log::debug!("connection {peer:?} ended: {e}");
                }
            });
        }
        Ok(())
    }

    /// Runs the accept loop on a background thread.
    pub fn spawn(self) -> JoinHandle<io::Result<()>> {
        thread::spawn(move || self.run())
    }
}

/// Serves one connection until the peer closes it, sends `close`, or sends
/// a malformed frame.
pub fn serve_connection(stream: TcpStream, padded: bool) -> Result<(), FrameError> {
    stream.set_nodelay(true)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    let mut session = Session::new(padded);
    loop {
        let payload = match read_frame(&mut reader) {
            Ok(Some(p)) => p,
            Ok(None) => return Ok(()),
            Err(FrameError::TooLarge(n)) => {
                let resp = error_response("malformed_frame", &format!("frame of {n} bytes is too large"));
                write_frame(&mut writer, resp.to_string().as_bytes())?;
                return Ok(());
            }
            Err(e) => return Err(e),
        };
        let request = match serde_json::from_slice::<Value>(&payload) {
            Ok(v @ Value::Object(_)) => v,
            Ok(_) => {
                let resp = error_response("malformed_frame", "payload is not a JSON object");
                write_frame(&mut writer, resp.to_string().as_bytes())?;
                return Ok(());
            }
            Err(e) => {
                let resp = error_response("malformed_frame", &e.to_string());
                write_frame(&mut writer, resp.to_string().as_bytes())?;
                return Ok(());
            }
        };
        let (resp, flow) = session.handle(&request);
        write_frame(&mut writer, resp.to_string().as_bytes())?;
        if flow == Flow::Close {
            return Ok(());
        }
    }
}
