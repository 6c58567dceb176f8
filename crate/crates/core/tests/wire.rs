use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::thread;

use gearsyn_core::datasetgen::Requirements;
use gearsyn_core::dsl::{validate_grammar, vocabulary_hash, Token};
use gearsyn_core::search::wire::{serve, ServeStats};
use gearsyn_core::search::{eda_search, mcts_search, Completer, CompleterError, RandomCompleter, StreamCompleter};
use gearsyn_core::search::{FitnessWeights, RequirementObjective, SearchConfig};
use gearsyn_core::{Catalogue, GearSequence};
use serde_json::{json, Value};

/// Serves one connection with a random completer; returns the session result.
fn one_shot_server(seed: u64) -> (String, thread::JoinHandle<Result<ServeStats, String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let handle = thread::spawn(move || {
        let cat = Catalogue::builtin();
        let (stream, _) = listener.accept().map_err(|e| e.to_string())?;
        let mut reader = BufReader::new(stream.try_clone().map_err(|e| e.to_string())?);
        let mut writer = stream;
        let mut completer = RandomCompleter::new(&cat, seed);
        serve(&mut reader, &mut writer, &mut completer).map_err(|e| e.to_string())
    });
    (addr, handle)
}

fn req() -> Requirements {
    "0 0 2 0.2 0.1 0 1 -1".parse().unwrap()
}

fn raw_session(addr: &str) -> (BufReader<TcpStream>, TcpStream) {
    let stream = TcpStream::connect(addr).unwrap();
    (BufReader::new(stream.try_clone().unwrap()), stream)
}

fn send(w: &mut TcpStream, v: Value) {
    writeln!(w, "{v}").unwrap();
}

fn recv(r: &mut BufReader<TcpStream>) -> Value {
    let mut line = String::new();
    r.read_line(&mut line).unwrap();
    serde_json::from_str(&line).unwrap()
}

#[test]
fn tcp_completions_match_in_process() {
    let cat = Catalogue::builtin();
    let (addr, server) = one_shot_server(5);
    let mut remote = StreamCompleter::connect(&addr).unwrap();
    let mut local = RandomCompleter::new(&cat, 5);
    let prefixes: Vec<Vec<Token>> = vec![
        vec![Token::Start],
        "<start> tra+ SH-300".parse::<GearSequence>().unwrap().tokens,
        "<start> MRGF2-500 mesh_2n".parse::<GearSequence>().unwrap().tokens,
    ];
    let got = remote.complete_batch(&req(), &prefixes).unwrap();
    assert_eq!(got, local.complete_batch(&req(), &prefixes).unwrap());
    for (p, s) in prefixes.iter().zip(&got) {
        assert!(s.tokens.starts_with(p));
        assert_eq!(validate_grammar(s, &cat), Ok(()));
    }
    let single = remote.complete(&req(), &[Token::Start]).unwrap();
    assert_eq!(single, local.complete(&req(), &[Token::Start]).unwrap());
    drop(remote);
    let stats = server.join().unwrap().unwrap();
    assert_eq!(stats, ServeStats { requests: 2, completions: 4 });
}

#[test]
fn raw_protocol_exchange() {
    let (addr, server) = one_shot_server(0);
    let (mut r, mut w) = raw_session(&addr);
    send(&mut w, json!({"op": "hello", "protocol": 1, "vocab_hash": vocabulary_hash()}));
    let hello = recv(&mut r);
    assert_eq!(hello["op"], "hello");
    assert_eq!(hello["vocab_hash"], vocabulary_hash());

    let reqv = req().to_array();
    send(&mut w, json!({"op": "complete", "id": 41, "requirements": reqv, "prefix": ["<start>"]}));
    send(&mut w, json!({"op": "complete", "id": 42, "requirements": reqv, "prefixes": [["<start>"], ["<start>", "tra-"]]}));
    let a = recv(&mut r);
    let b = recv(&mut r);
    assert_eq!((a["op"].as_str(), a["id"].as_u64()), (Some("result"), Some(41)));
    assert_eq!(a["tokens"][0], "<start>");
    assert_eq!(b["id"], 42);
    assert_eq!(b["batch"].as_array().unwrap().len(), 2);
    assert_eq!(b["batch"][1][1], "tra-");
    drop(w);
    drop(r);
    assert_eq!(server.join().unwrap().unwrap().requests, 2);
}

#[test]
fn vocabulary_mismatch_aborts() {
    let (addr, server) = one_shot_server(0);
    let (mut r, mut w) = raw_session(&addr);
    send(&mut w, json!({"op": "hello", "protocol": 1, "vocab_hash": "deadbeef"}));
    let reply = recv(&mut r);
    assert_eq!(reply["op"], "error");
    assert!(reply["message"].as_str().unwrap().contains("vocabulary"));
    let err = server.join().unwrap().unwrap_err();
    assert!(err.contains("handshake"), "{err}");
}

#[test]
fn bad_request_gets_error_record() {
    let (addr, server) = one_shot_server(0);
    let (mut r, mut w) = raw_session(&addr);
    send(&mut w, json!({"op": "hello", "protocol": 1, "vocab_hash": vocabulary_hash()}));
    recv(&mut r);
    send(&mut w, json!({"op": "complete", "id": 7, "requirements": [1, 2, 3], "prefix": ["<start>"]}));
    let reply = recv(&mut r);
    assert_eq!(reply["op"], "error");
    assert_eq!(reply["id"], 7);
    assert!(server.join().unwrap().is_err());
}

#[test]
fn client_rejects_mismatched_server() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let fake = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut r = BufReader::new(stream.try_clone().unwrap());
        let mut w = stream;
        let mut line = String::new();
        r.read_line(&mut line).unwrap();
        writeln!(w, "{}", json!({"op": "hello", "protocol": 1, "vocab_hash": "0000"})).unwrap();
    });
    let err = StreamCompleter::connect(&addr).err().expect("handshake must fail");
    assert!(matches!(err, CompleterError::Handshake(_)), "{err}");
    fake.join().unwrap();
}

#[test]
fn unreachable_completer() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    drop(listener);
    assert!(matches!(StreamCompleter::connect(&addr), Err(CompleterError::Unreachable(_))));
    assert!(matches!(
        StreamCompleter::spawn("/nonexistent/completer", &[]),
        Err(CompleterError::Unreachable(_))
    ));
}

#[test]
fn hybrid_search_over_tcp_is_deterministic() {
    let cat = Catalogue::builtin();
    let obj = RequirementObjective::new(req(), FitnessWeights::default(), &cat);
    let cfg = SearchConfig { budget: 200, seed: 3, ..SearchConfig::default() };

    let run = |remote: bool, mcts: bool| {
        let (addr, server) = one_shot_server(9);
        let search = |c: &mut dyn Completer| {
            if mcts { mcts_search(&obj, &cfg, &cat, Some(c)) } else { eda_search(&obj, &cfg, &cat, Some(c)) }.unwrap()
        };
        let out = if remote {
            let mut stream = StreamCompleter::connect(&addr).unwrap();
            search(&mut stream)
        } else {
            // connect and hang up so the server thread ends
            drop(TcpStream::connect(&addr).unwrap());
            search(&mut RandomCompleter::new(&cat, 9))
        };
        let _ = server.join();
        out
    };
    for mcts in [false, true] {
        let a = run(true, mcts);
        let b = run(false, mcts);
        assert_eq!(a.evaluations, 200);
        assert_eq!(a.best, b.best);
    }
}
