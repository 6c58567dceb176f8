//! Newline-delimited JSON protocol between the searches and an external
//! completer, over a child process's standard streams or a TCP socket.
//!
//! ```text
//! -> {"op":"hello","protocol":1,"vocab_hash":"<sha256 of vocabulary>"}
//! <- {"op":"hello","protocol":1,"vocab_hash":"..."}
//! -> {"op":"complete","id":1,"requirements":[0,0,1.5,0.1,0.2,0,1,-1],"prefixes":[["<start>","tra+"]]}
//! <- {"op":"result","id":1,"batch":[["<start>","tra+","SH-100","<end>"]]}
//! -> {"op":"complete","id":2,"requirements":[...],"prefix":["<start>"]}
//! <- {"op":"result","id":2,"tokens":["<start>","tra-","SH-200","<end>"]}
//! <- {"op":"error","id":3,"message":"..."}
//! ```
//!
//! Any violation is answered with an error record and the connection closes.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::datasetgen::Requirements;
use crate::dsl::{vocabulary_hash, GearSequence, Token};
use crate::search::completer::{Completer, CompleterError};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum ClientMessage {
    Hello {
        protocol: u32,
        vocab_hash: String,
    },
    Complete {
        id: u64,
        requirements: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prefix: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prefixes: Option<Vec<Vec<String>>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum ServerMessage {
    Hello {
        protocol: u32,
        vocab_hash: String,
    },
    Result {
        id: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tokens: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        batch: Option<Vec<Vec<String>>>,
    },
    Error {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<u64>,
        message: String,
    },
}

pub fn hello() -> ClientMessage {
    ClientMessage::Hello { protocol: PROTOCOL_VERSION, vocab_hash: vocabulary_hash() }
}

fn token_strings(tokens: &[Token]) -> Vec<String> {
    tokens.iter().map(Token::to_string).collect()
}

fn parse_tokens(words: &[String]) -> Result<Vec<Token>, CompleterError> {
    words
        .iter()
        .map(|w| w.parse::<Token>().map_err(|e| CompleterError::Protocol(e.to_string())))
        .collect()
}

fn write_line<W: Write + ?Sized, T: Serialize>(w: &mut W, msg: &T) -> Result<(), CompleterError> {
    let mut line = serde_json::to_string(msg).map_err(|e| CompleterError::Protocol(e.to_string()))?;
    line.push('\n');
    w.write_all(line.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Next non-blank line, `None` at end of stream.
fn read_line<R: BufRead + ?Sized>(r: &mut R) -> Result<Option<String>, CompleterError> {
    let mut line = String::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Ok(None);
        }
        if !line.trim().is_empty() {
            return Ok(Some(line));
        }
    }
}

/// Client side of the protocol.
pub struct StreamCompleter {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    child: Option<Child>,
    next_id: u64,
}

impl StreamCompleter {
    /// Wraps an established byte stream and performs the handshake.
    pub fn from_streams(reader: Box<dyn BufRead + Send>, writer: Box<dyn Write + Send>) -> Result<Self, CompleterError> {
        let mut c = StreamCompleter { reader, writer, child: None, next_id: 1 };
        c.handshake()?;
        Ok(c)
    }

    pub fn connect(addr: &str) -> Result<Self, CompleterError> {
        let stream = TcpStream::connect(addr).map_err(|e| CompleterError::Unreachable(format!("{addr}: {e}")))?;
        let read_half = stream.try_clone()?;
        Self::from_streams(Box::new(BufReader::new(read_half)), Box::new(stream))
    }

    /// Starts `program args...` and talks over its stdin/stdout.
    pub fn spawn(program: &str, args: &[String]) -> Result<Self, CompleterError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| CompleterError::Unreachable(format!("{program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut c = StreamCompleter {
            reader: Box::new(BufReader::new(stdout)),
            writer: Box::new(stdin),
            child: Some(child),
            next_id: 1,
        };
        c.handshake()?;
        Ok(c)
    }

    fn handshake(&mut self) -> Result<(), CompleterError> {
        write_line(&mut self.writer, &hello()).map_err(|e| CompleterError::Unreachable(e.to_string()))?;
        match self.receive()? {
            ServerMessage::Hello { protocol, vocab_hash } => {
                if protocol != PROTOCOL_VERSION {
                    return Err(CompleterError::Handshake(format!("protocol {protocol}, expected {PROTOCOL_VERSION}")));
                }
                if vocab_hash != vocabulary_hash() {
                    return Err(CompleterError::Handshake(format!("vocabulary hash {vocab_hash} does not match")));
                }
                Ok(())
            }
            ServerMessage::Error { message, .. } => Err(CompleterError::Handshake(message)),
            other => Err(CompleterError::Protocol(format!("expected hello, got {other:?}"))),
        }
    }

    fn receive(&mut self) -> Result<ServerMessage, CompleterError> {
        let line = read_line(&mut self.reader)?
            .ok_or_else(|| CompleterError::Unreachable("completer closed the stream".into()))?;
        serde_json::from_str(&line).map_err(|e| CompleterError::Protocol(format!("{e}: {}", line.trim())))
    }
}

impl Completer for StreamCompleter {
    fn complete_batch(&mut self, req: &Requirements, prefixes: &[Vec<Token>]) -> Result<Vec<GearSequence>, CompleterError> {
        let id = self.next_id;
        self.next_id += 1;
        let msg = ClientMessage::Complete {
            id,
            requirements: req.to_array().to_vec(),
            prefix: None,
            prefixes: Some(prefixes.iter().map(|p| token_strings(p)).collect()),
        };
        write_line(&mut self.writer, &msg)?;
        match self.receive()? {
            ServerMessage::Result { id: got, batch: Some(batch), .. } if got == id => {
                if batch.len() != prefixes.len() {
                    return Err(CompleterError::Protocol(format!(
                        "asked for {} completions, got {}",
                        prefixes.len(),
                        batch.len()
                    )));
                }
                batch.iter().map(|words| Ok(GearSequence::new(parse_tokens(words)?))).collect()
            }
            ServerMessage::Error { message, .. } => Err(CompleterError::Remote(message)),
            other => Err(CompleterError::Protocol(format!("unexpected reply to request {id}: {other:?}"))),
        }
    }
}

impl Drop for StreamCompleter {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.take() {
            // closing stdin lets a well-behaved server exit on its own
            self.writer = Box::new(std::io::sink());
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// Counters reported when a session ends.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ServeStats {
    pub requests: u64,
    pub completions: u64,
}

fn reject<W: Write + ?Sized>(w: &mut W, id: Option<u64>, err: CompleterError) -> CompleterError {
    let _ = write_line(w, &ServerMessage::Error { id, message: err.to_string() });
    err
}

/// Server side: answers one session until the client closes the stream.
pub fn serve<R: BufRead, W: Write>(reader: &mut R, writer: &mut W, completer: &mut dyn Completer) -> Result<ServeStats, CompleterError> {
    let first = read_line(reader)?.ok_or_else(|| CompleterError::Protocol("stream closed before hello".into()))?;
    match serde_json::from_str::<ClientMessage>(&first) {
        Ok(ClientMessage::Hello { protocol, vocab_hash }) => {
            if protocol != PROTOCOL_VERSION {
                let e = CompleterError::Handshake(format!("protocol {protocol} is not supported, expected {PROTOCOL_VERSION}"));
                return Err(reject(writer, None, e));
            }
            if vocab_hash != vocabulary_hash() {
                let e = CompleterError::Handshake(format!("vocabulary hash mismatch: got {vocab_hash}, have {}", vocabulary_hash()));
                return Err(reject(writer, None, e));
            }
        }
        Ok(other) => return Err(reject(writer, None, CompleterError::Protocol(format!("expected hello, got {other:?}")))),
        Err(e) => return Err(reject(writer, None, CompleterError::Protocol(e.to_string()))),
    }
    write_line(writer, &ServerMessage::Hello { protocol: PROTOCOL_VERSION, vocab_hash: vocabulary_hash() })?;

    let mut stats = ServeStats::default();
    while let Some(line) = read_line(reader)? {
        let msg = match serde_json::from_str::<ClientMessage>(&line) {
            Ok(m) => m,
            Err(e) => return Err(reject(writer, None, CompleterError::Protocol(e.to_string()))),
        };
        let (id, requirements, prefix, prefixes) = match msg {
            ClientMessage::Complete { id, requirements, prefix, prefixes } => (id, requirements, prefix, prefixes),
            ClientMessage::Hello { .. } => {
                return Err(reject(writer, None, CompleterError::Protocol("repeated hello".into())));
            }
        };
        let req = match Requirements::from_slice(&requirements) {
            Ok(r) => r,
            Err(e) => return Err(reject(writer, Some(id), CompleterError::Protocol(e.to_string()))),
        };
        let (batched, words) = match (prefix, prefixes) {
            (Some(p), None) => (false, vec![p]),
            (None, Some(ps)) => (true, ps),
            _ => {
                let e = CompleterError::Protocol("exactly one of prefix and prefixes is required".into());
                return Err(reject(writer, Some(id), e));
            }
        };
        let parsed = match words.iter().map(|w| parse_tokens(w)).collect::<Result<Vec<_>, _>>() {
            Ok(p) => p,
            Err(e) => return Err(reject(writer, Some(id), e)),
        };
        let out = match completer.complete_batch(&req, &parsed) {
            Ok(o) => o,
            Err(e) => return Err(reject(writer, Some(id), e)),
        };
        stats.requests += 1;
        stats.completions += out.len() as u64;
        let mut lists: Vec<Vec<String>> = out.iter().map(|s| token_strings(&s.tokens)).collect();
        let reply = if batched {
            ServerMessage::Result { id, tokens: None, batch: Some(lists) }
        } else {
            ServerMessage::Result { id, tokens: lists.pop(), batch: None }
        };
        write_line(writer, &reply)?;
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn message_shapes() {
        let m = ClientMessage::Complete {
            id: 3,
            requirements: vec![0.0; 8],
            prefix: Some(vec!["<start>".into()]),
            prefixes: None,
        };
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"op":"complete","id":3,"requirements":[0.0,0.0,0.0,0.0,0.0,0.0,0.0,0.0],"prefix":["<start>"]}"#);
        let r: ServerMessage = serde_json::from_str(r#"{"op":"result","id":3,"tokens":["<start>","<end>"]}"#).unwrap();
        assert_eq!(r, ServerMessage::Result { id: 3, tokens: Some(vec!["<start>".into(), "<end>".into()]), batch: None });
        let e: ServerMessage = serde_json::from_str(r#"{"op":"error","message":"no"}"#).unwrap();
        assert_eq!(e, ServerMessage::Error { id: None, message: "no".into() });
        let h = serde_json::to_value(hello()).unwrap();
        assert_eq!(h["protocol"], 1);
        assert_eq!(h["vocab_hash"].as_str().unwrap().len(), 64);
    }
}
