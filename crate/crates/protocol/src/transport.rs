//! Standard-stream and Unix-socket transports.

use std::io::{self, BufReader};
use std::os::unix::net::UnixListener;
use std::path::Path;
use std::thread;

use crate::session::{serve, SessionEnd, SessionSettings};
use crate::ProtocolError;

/// One session over this process's stdin and stdout.
pub fn serve_stdio(settings: SessionSettings) -> Result<SessionEnd, ProtocolError> {
    let stdin = io::stdin();
    let stdout = io::stdout();
    serve(stdin.lock(), stdout.lock(), settings)
}

/// Listens on a Unix socket and runs every accepted connection as an
/// independent session on its own thread. Returns after `max_sessions`
/// connections have been accepted and finished, or never when it is `None`.
pub fn serve_unix(
    path: &Path,
    settings: SessionSettings,
    max_sessions: Option<usize>,
) -> Result<Vec<SessionEnd>, ProtocolError> {
    let listener = UnixListener::bind(path)?;
    log::info!("listening on {}", path.display());
    let mut handles = Vec::new();
    for (i, stream) in listener.incoming().enumerate() {
        let stream = stream?;
        let settings = settings.clone();
        handles.push(thread::spawn(move || -> Result<SessionEnd, ProtocolError> {
            let reader = BufReader::new(stream.try_clone()?);
            serve(reader, stream, settings)
        }));
        if max_sessions.is_some_and(|m| i + 1 >= m) {
            break;
        }
    }
    handles
        .into_iter()
        .map(|h| h.join().unwrap_or_else(|_| Err(ProtocolError::Peer("session thread panicked".into()))))
        .collect()
}
