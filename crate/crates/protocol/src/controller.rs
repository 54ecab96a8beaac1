//! Controller mode: the environment runs here and another process picks
//! the actions.
//!
//! The roles of the server protocol are reversed. The environment side
//! sends `hello` and gets `hello` back, then for every step sends `obs` and
//! expects `act` with one action per agent. At the end of an episode it
//! sends `done` (no reply) and at shutdown `bye` (answered by `bye`).

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use gather_core::control::{Action, Controller, ControllerError};
use gather_core::env::EpisodeResult;
use gather_core::sensing::Observation;

use crate::message::{Act, Bye, DoneMsg, Hello, Message, ObsMsg, PROTOCOL_VERSION};
use crate::session::agent_obs;
use crate::ProtocolError;

/// A [`Controller`] whose decisions come from a peer over the protocol.
pub struct ExternalController<R: BufRead, W: Write> {
    reader: R,
    writer: W,
    t: u64,
    child: Option<Child>,
    closed: bool,
}

impl ExternalController<BufReader<ChildStdout>, ChildStdin> {
    /// Starts `command` with piped stdin/stdout and performs the handshake.
    pub fn spawn(command: &mut Command) -> Result<Self, ProtocolError> {
        let mut child = command.stdin(Stdio::piped()).stdout(Stdio::piped()).spawn()?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let mut c = Self::connect(BufReader::new(stdout), stdin)?;
        c.child = Some(child);
        Ok(c)
    }
}

impl<R: BufRead, W: Write> ExternalController<R, W> {
    /// Performs the handshake over an existing connection.
    pub fn connect(reader: R, writer: W) -> Result<Self, ProtocolError> {
        let mut c = Self {
            reader,
            writer,
            t: 0,
            child: None,
            closed: false,
        };
        c.send(&Message::Hello(Hello {
            version: PROTOCOL_VERSION,
            name: Some("gather".into()),
        }))?;
        match c.receive()? {
            Message::Hello(h) if h.version == PROTOCOL_VERSION => Ok(c),
            Message::Hello(h) => Err(ProtocolError::Version {
                found: h.version,
                expected: PROTOCOL_VERSION,
            }),
            other => Err(ProtocolError::Order(format!("expected hello, got {}", other.kind()))),
        }
    }

    fn send(&mut self, m: &Message) -> Result<(), ProtocolError> {
        writeln!(self.writer, "{}", m.encode())?;
        self.writer.flush()?;
        Ok(())
    }

    fn receive(&mut self) -> Result<Message, ProtocolError> {
        let mut line = String::new();
        if self.reader.read_line(&mut line)? == 0 {
            return Err(ProtocolError::Closed);
        }
        match Message::decode(&line)? {
            Message::Error(e) => Err(ProtocolError::Peer(e.message)),
            m => Ok(m),
        }
    }

    /// Tells the peer the episode is over and resets the step counter.
    pub fn end_episode(&mut self, result: &EpisodeResult) -> Result<(), ProtocolError> {
        self.send(&Message::Done(DoneMsg {
            t: result.steps,
            outcome: result.outcome.as_str().into(),
            connectivity_preserved: result.connectivity_preserved,
            gather_fraction: result.final_gather_fraction,
            rewards: Vec::new(),
            agents: Vec::new(),
        }))?;
        self.t = 0;
        Ok(())
    }

    /// Sends `bye`, waits for the answer and reaps a spawned child.
    pub fn close(mut self) -> Result<(), ProtocolError> {
        self.shutdown()
    }

    fn shutdown(&mut self) -> Result<(), ProtocolError> {
        if self.closed {
            return Ok(());
        }
        self.closed = true;
        self.send(&Message::Bye(Bye {}))?;
        let reply = self.receive();
        if let Some(mut child) = self.child.take() {
            child.wait()?;
        }
        match reply? {
            Message::Bye(_) => Ok(()),
            other => Err(ProtocolError::Order(format!("expected bye, got {}", other.kind()))),
        }
    }
}

impl<R: BufRead, W: Write> Drop for ExternalController<R, W> {
    fn drop(&mut self) {
        if let Err(e) = self.shutdown() {
            log::debug!("external controller shutdown: {e}");
        }
    }
}

impl<R: BufRead, W: Write> Controller for ExternalController<R, W> {
    fn act(&mut self, observations: &[Observation]) -> Result<Vec<Action>, ControllerError> {
        self.send(&Message::Obs(ObsMsg {
            t: self.t,
            agents: agent_obs(observations),
        }))?;
        self.t += 1;
        match self.receive()? {
            Message::Act(a) if a.actions.len() == observations.len() => Ok(a
                .actions
                .iter()
                .map(|&[alpha, sigma]| Action { alpha, sigma })
                .collect()),
            Message::Act(a) => Err(Box::new(ProtocolError::Malformed(format!(
                "expected {} actions, got {}",
                observations.len(),
                a.actions.len()
            )))),
            other => Err(Box::new(ProtocolError::Order(format!(
                "expected act, got {}",
                other.kind()
            )))),
        }
    }
}

/// Peer side of controller mode: answers every `obs` with the actions of
/// `controller` until `bye` or end of input.
pub fn run_controller<C: Controller + ?Sized, R: BufRead, W: Write>(
    controller: &mut C,
    mut reader: R,
    mut writer: W,
) -> Result<(), ProtocolError> {
    let mut line = String::new();
    let mut greeted = false;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Ok(());
        }
        if line.trim().is_empty() {
            continue;
        }
        let reply = match Message::decode(&line) {
            Err(e) => Message::error(e.to_string(), false),
            Ok(Message::Hello(h)) if !greeted => {
                if h.version != PROTOCOL_VERSION {
                    let m = Message::error(format!("unsupported protocol version {}", h.version), true);
                    writeln!(writer, "{}", m.encode())?;
                    writer.flush()?;
                    return Err(ProtocolError::Version {
                        found: h.version,
                        expected: PROTOCOL_VERSION,
                    });
                }
                greeted = true;
                Message::Hello(Hello {
                    version: PROTOCOL_VERSION,
                    name: Some("gather-controller".into()),
                })
            }
            Ok(Message::Obs(o)) if greeted => {
                let obs: Vec<Observation> = o.agents.iter().map(|a| a.observation()).collect();
                match controller.act(&obs) {
                    Ok(actions) => Message::Act(Act::from_actions(&actions)),
                    Err(e) => Message::error(format!("controller failed: {e}"), false),
                }
            }
            Ok(Message::Done(_)) if greeted => continue,
            Ok(Message::Bye(_)) => {
                writeln!(writer, "{}", Message::Bye(Bye {}).encode())?;
                writer.flush()?;
                return Ok(());
            }
            Ok(other) => {
                let text = format!("unexpected {} in controller mode", other.kind());
                writeln!(writer, "{}", Message::error(text.clone(), true).encode())?;
                writer.flush()?;
                return Err(ProtocolError::Order(text));
            }
        };
        writeln!(writer, "{}", reply.encode())?;
        writer.flush()?;
    }
}
