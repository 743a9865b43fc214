//! Line protocol that lets a game process (client) use a learner living in
//! another process (server).
//!
//! Client to server:
//!
//! | line                               | meaning                              |
//! |------------------------------------|--------------------------------------|
//! | `HELLO catan-trade 1`              | opens the session, protocol version  |
//! | `EPISODE n`                        | starts episode `n`                   |
//! | `STATE reward mask features`       | asks for an action                   |
//! | `TERMINAL reward features`         | ends the current episode             |
//! | `BYE`                              | closes the session                   |
//!
//! Server to client: `WELCOME 1`, `ACTION i`, `ACK` (after `TERMINAL`),
//! `BYE`, or `ERROR message` after which the server closes the session.
//! `mask` is 73 characters of `0`/`1`; `features` are comma-separated
//! decimals printed in shortest round-trip form.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};

use catan_core::actions::{ActionMask, NUM_ACTIONS};
use catan_core::features::NUM_FEATURES;
use catan_core::PolicyError;
use catan_dqn::{Learner, Observation};
use thiserror::Error;

pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("malformed message {line:?}: {msg}")]
    Malformed { line: String, msg: String },
    #[error("expected {expected}, got {got:?}")]
    Unexpected { expected: &'static str, got: String },
    #[error("unsupported protocol version {0}")]
    Version(u32),
    #[error("connection closed")]
    Closed,
    #[error("peer reported: {0}")]
    Remote(String),
    #[error("server chose illegal action {0}")]
    IllegalAction(usize),
    #[error("learner failed: {0}")]
    Learner(#[from] PolicyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClientMsg {
    Hello { version: u32 },
    Episode { index: u64 },
    State { reward: f64, mask: ActionMask, features: Vec<f64> },
    Terminal { reward: f64, features: Vec<f64> },
    Bye,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ServerMsg {
    Welcome { version: u32 },
    Action(usize),
    Ack,
    Bye,
    Error(String),
}

fn features_field(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| v.to_string()).collect();
    parts.join(",")
}

impl std::fmt::Display for ClientMsg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClientMsg::Hello { version } => write!(f, "HELLO catan-trade {version}"),
            ClientMsg::Episode { index } => write!(f, "EPISODE {index}"),
            ClientMsg::State { reward, mask, features } => {
                write!(f, "STATE {reward} {} {}", mask.to_bits(), features_field(features))
            }
            ClientMsg::Terminal { reward, features } => write!(f, "TERMINAL {reward} {}", features_field(features)),
            ClientMsg::Bye => write!(f, "BYE"),
        }
    }
}

impl std::fmt::Display for ServerMsg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ServerMsg::Welcome { version } => write!(f, "WELCOME {version}"),
            ServerMsg::Action(i) => write!(f, "ACTION {i}"),
            ServerMsg::Ack => write!(f, "ACK"),
            ServerMsg::Bye => write!(f, "BYE"),
            ServerMsg::Error(m) => write!(f, "ERROR {}", m.replace('\n', " ")),
        }
    }
}

fn malformed(line: &str, msg: impl Into<String>) -> ProtocolError {
    ProtocolError::Malformed { line: line.chars().take(80).collect(), msg: msg.into() }
}

fn parse_reward(line: &str, s: Option<&str>) -> Result<f64, ProtocolError> {
    let r: f64 = s.ok_or_else(|| malformed(line, "missing reward"))?.parse().map_err(|_| malformed(line, "bad reward"))?;
    if r.is_finite() {
        Ok(r)
    } else {
        Err(malformed(line, "reward is not finite"))
    }
}

fn parse_features(line: &str, s: Option<&str>) -> Result<Vec<f64>, ProtocolError> {
    let x = s
        .ok_or_else(|| malformed(line, "missing features"))?
        .split(',')
        .map(|p| p.parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| malformed(line, "bad feature value"))?;
    if x.len() != NUM_FEATURES {
        return Err(malformed(line, format!("expected {NUM_FEATURES} features, got {}", x.len())));
    }
    Ok(x)
}

impl std::str::FromStr for ClientMsg {
    type Err = ProtocolError;
    fn from_str(line: &str) -> Result<Self, ProtocolError> {
        let mut f = line.split(' ');
        let msg = match f.next().unwrap_or("") {
            "HELLO" => {
                if f.next() != Some("catan-trade") {
                    return Err(malformed(line, "unknown protocol"));
                }
                let version = f.next().and_then(|v| v.parse().ok()).ok_or_else(|| malformed(line, "bad version"))?;
                ClientMsg::Hello { version }
            }
            "EPISODE" => ClientMsg::Episode {
                index: f.next().and_then(|v| v.parse().ok()).ok_or_else(|| malformed(line, "bad episode index"))?,
            },
            "STATE" => {
                let reward = parse_reward(line, f.next())?;
                let mask = f
                    .next()
                    .and_then(ActionMask::from_bits)
                    .ok_or_else(|| malformed(line, format!("mask must be {NUM_ACTIONS} bits")))?;
                let features = parse_features(line, f.next())?;
                ClientMsg::State { reward, mask, features }
            }
            "TERMINAL" => {
                let reward = parse_reward(line, f.next())?;
                ClientMsg::Terminal { reward, features: parse_features(line, f.next())? }
            }
            "BYE" => ClientMsg::Bye,
            _ => return Err(malformed(line, "unknown message")),
        };
        if f.next().is_some() {
            return Err(malformed(line, "trailing fields"));
        }
        Ok(msg)
    }
}

impl std::str::FromStr for ServerMsg {
    type Err = ProtocolError;
    fn from_str(line: &str) -> Result<Self, ProtocolError> {
        let (head, rest) = line.split_once(' ').unwrap_or((line, ""));
        let number = |what: &str| rest.parse::<u64>().map_err(|_| malformed(line, format!("bad {what}")));
        Ok(match head {
            "WELCOME" => ServerMsg::Welcome {
                version: u32::try_from(number("version")?).map_err(|_| malformed(line, "bad version"))?,
            },
            "ACTION" => ServerMsg::Action(number("action")? as usize),
            "ACK" if rest.is_empty() => ServerMsg::Ack,
            "BYE" if rest.is_empty() => ServerMsg::Bye,
            "ERROR" => ServerMsg::Error(rest.to_string()),
            _ => return Err(malformed(line, "unknown message")),
        })
    }
}

fn read_line<R: BufRead>(r: &mut R) -> Result<String, ProtocolError> {
    let mut line = String::new();
    if r.read_line(&mut line)? == 0 {
        return Err(ProtocolError::Closed);
    }
    Ok(line.trim_end_matches(['\n', '\r']).to_string())
}

fn send<W: Write>(w: &mut W, msg: impl std::fmt::Display) -> Result<(), ProtocolError> {
    writeln!(w, "{msg}")?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SessionSummary {
    pub episodes: u64,
    pub decisions: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Greeting,
    Idle,
    Episode,
}

/// Runs one session against `learner` until the client says `BYE`. Any
/// protocol violation is answered with `ERROR` and ends the session.
pub fn serve_session<L: Learner + ?Sized, R: BufRead, W: Write>(
    learner: &mut L,
    mut reader: R,
    mut writer: W,
) -> Result<SessionSummary, ProtocolError> {
    let result = session_loop(learner, &mut reader, &mut writer);
    if let Err(e) = &result {
        if !matches!(e, ProtocolError::Closed | ProtocolError::Io(_)) {
            let _ = send(&mut writer, ServerMsg::Error(e.to_string()));
        }
    }
    result
}

fn session_loop<L: Learner + ?Sized, R: BufRead, W: Write>(
    learner: &mut L,
    reader: &mut R,
    writer: &mut W,
) -> Result<SessionSummary, ProtocolError> {
    let mut phase = Phase::Greeting;
    let mut summary = SessionSummary::default();
    loop {
        let line = read_line(reader)?;
        let msg: ClientMsg = line.parse()?;
        let unexpected = |expected| ProtocolError::Unexpected { expected, got: line.chars().take(40).collect() };
        match (phase, msg) {
            (Phase::Greeting, ClientMsg::Hello { version }) => {
                if version != VERSION {
                    return Err(ProtocolError::Version(version));
                }
                send(writer, ServerMsg::Welcome { version: VERSION })?;
                phase = Phase::Idle;
            }
            (Phase::Greeting, _) => return Err(unexpected("HELLO")),
            (Phase::Idle, ClientMsg::Episode { .. }) => phase = Phase::Episode,
            (Phase::Idle, ClientMsg::Bye) => {
                send(writer, ServerMsg::Bye)?;
                return Ok(summary);
            }
            (Phase::Idle, _) => return Err(unexpected("EPISODE or BYE")),
            (Phase::Episode, ClientMsg::State { reward, mask, features }) => {
                if mask.is_empty() {
                    return Err(malformed(&line, "no legal action"));
                }
                let action = learner.act(&Observation { features, mask, reward })?;
                summary.decisions += 1;
                send(writer, ServerMsg::Action(action))?;
            }
            (Phase::Episode, ClientMsg::Terminal { reward, features }) => {
                learner.end_episode(&Observation { features, mask: ActionMask::none(), reward })?;
                summary.episodes += 1;
                send(writer, ServerMsg::Ack)?;
                phase = Phase::Idle;
            }
            (Phase::Episode, _) => return Err(unexpected("STATE or TERMINAL")),
        }
    }
}

/// Accepts connections one at a time, one session each (one per seat).
/// Stops after `max_sessions` when given. A failed session is reported
/// to `on_session` and does not stop the server.
pub fn serve<L: Learner + ?Sized>(
    listener: &TcpListener,
    learner: &mut L,
    max_sessions: Option<usize>,
    mut on_session: impl FnMut(&mut L, &Result<SessionSummary, ProtocolError>),
) -> Result<(), std::io::Error> {
    let mut served = 0;
    while max_sessions.is_none_or(|m| served < m) {
        let (stream, _) = listener.accept()?;
        stream.set_nodelay(true)?;
        let reader = BufReader::new(stream.try_clone()?);
        let result = serve_session(learner, reader, stream);
        on_session(learner, &result);
        served += 1;
    }
    Ok(())
}

/// A [`Learner`] whose decisions are made by a server.
pub struct RemoteLearner<R, W> {
    reader: R,
    writer: W,
    in_episode: bool,
    episodes: u64,
}

impl RemoteLearner<BufReader<TcpStream>, TcpStream> {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self, ProtocolError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Self::handshake(BufReader::new(stream.try_clone()?), stream)
    }
}

impl<R: BufRead, W: Write> RemoteLearner<R, W> {
    pub fn handshake(mut reader: R, mut writer: W) -> Result<Self, ProtocolError> {
        send(&mut writer, ClientMsg::Hello { version: VERSION })?;
        match expect(&mut reader)? {
            ServerMsg::Welcome { version } if version == VERSION => {}
            ServerMsg::Welcome { version } => return Err(ProtocolError::Version(version)),
            other => return Err(ProtocolError::Unexpected { expected: "WELCOME", got: other.to_string() }),
        }
        Ok(RemoteLearner { reader, writer, in_episode: false, episodes: 0 })
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    /// Ends the session politely.
    pub fn close(mut self) -> Result<(), ProtocolError> {
        send(&mut self.writer, ClientMsg::Bye)?;
        match expect(&mut self.reader)? {
            ServerMsg::Bye => Ok(()),
            other => Err(ProtocolError::Unexpected { expected: "BYE", got: other.to_string() }),
        }
    }

    fn request_action(&mut self, obs: &Observation) -> Result<usize, ProtocolError> {
        if !self.in_episode {
            send(&mut self.writer, ClientMsg::Episode { index: self.episodes })?;
            self.in_episode = true;
        }
        send(
            &mut self.writer,
            ClientMsg::State { reward: obs.reward, mask: obs.mask, features: obs.features.clone() },
        )?;
        match expect(&mut self.reader)? {
            ServerMsg::Action(i) if obs.mask.is_legal(i) => Ok(i),
            ServerMsg::Action(i) => Err(ProtocolError::IllegalAction(i)),
            other => Err(ProtocolError::Unexpected { expected: "ACTION", got: other.to_string() }),
        }
    }

    fn finish_episode(&mut self, obs: &Observation) -> Result<(), ProtocolError> {
        if !self.in_episode {
            // A game in which this seat never decided still counts.
            send(&mut self.writer, ClientMsg::Episode { index: self.episodes })?;
        }
        send(&mut self.writer, ClientMsg::Terminal { reward: obs.reward, features: obs.features.clone() })?;
        match expect(&mut self.reader)? {
            ServerMsg::Ack => {}
            other => return Err(ProtocolError::Unexpected { expected: "ACK", got: other.to_string() }),
        }
        self.in_episode = false;
        self.episodes += 1;
        Ok(())
    }
}

fn expect<R: BufRead>(reader: &mut R) -> Result<ServerMsg, ProtocolError> {
    match read_line(reader)?.parse()? {
        ServerMsg::Error(m) => Err(ProtocolError::Remote(m)),
        msg => Ok(msg),
    }
}

impl<R: BufRead + Send, W: Write + Send> Learner for RemoteLearner<R, W> {
    fn act(&mut self, obs: &Observation) -> Result<usize, PolicyError> {
        self.request_action(obs).map_err(|e| PolicyError(e.to_string()))
    }

    fn end_episode(&mut self, obs: &Observation) -> Result<(), PolicyError> {
        self.finish_episode(obs).map_err(|e| PolicyError(e.to_string()))
    }
}
