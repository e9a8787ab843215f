//! The HTTP scorer client against an in-process stub of the model server.

mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use common::*;
use monolog_core::error::{Error, ScoringError};
use monolog_core::kb::KnowledgeBase;
use monolog_core::scoring::{OfflineScorer, Phrase, RemoteConfig, RemoteScorer, Scorer, Word};
use monolog_core::{Engine, EngineConfig, Label};
use serde_json::{json, Value};
use tiny_http::{Header, Method, Response, Server};

#[derive(Clone, Copy)]
enum Mode {
    Normal,
    /// Answer 500 to the first `n` requests.
    FailFirst(usize),
    BadRequest,
    WrongCount,
    NonFinite,
    OutOfRange,
    Unhealthy,
}

struct Stub {
    url: String,
    hits: Arc<Mutex<Vec<String>>>,
    peak: Arc<AtomicUsize>,
}

impl Stub {
    fn hits(&self) -> Vec<String> {
        self.hits.lock().unwrap().clone()
    }
}

fn pairs_of(body: &Value) -> Vec<(String, String)> {
    body["pairs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| (p[0].as_str().unwrap().to_string(), p[1].as_str().unwrap().to_string()))
        .collect()
}

fn texts_of(body: &Value) -> Vec<String> {
    body["texts"].as_array().unwrap().iter().map(|t| t.as_str().unwrap().to_string()).collect()
}

/// Serves the offline scorer's answers; lemmas are the lowercased whitespace tokens.
fn answer(offline: &OfflineScorer, path: &str, body: &Value) -> Value {
    let phrase = |t: &str| {
        let lemmas: Vec<String> = t.split_whitespace().map(str::to_lowercase).collect();
        let refs: Vec<&str> = lemmas.iter().map(String::as_str).collect();
        Phrase::new(t, &refs)
    };
    match path {
        "/embed" => {
            let v = offline.embed(&texts_of(body).iter().map(|t| phrase(t)).collect::<Vec<_>>()).unwrap();
            json!({"vectors": v, "dim": offline.dim()})
        }
        "/word-similarity" => {
            let pairs: Vec<(Word, Word)> =
                pairs_of(body).iter().map(|(a, b)| (Word::new(a, "X"), Word::new(b, "X"))).collect();
            json!({"scores": offline.word_similarity(&pairs).unwrap()})
        }
        "/paraphrase" => {
            let pairs: Vec<(Phrase, Phrase)> = pairs_of(body).iter().map(|(a, b)| (phrase(a), phrase(b))).collect();
            json!({"probs": offline.paraphrase(&pairs).unwrap()})
        }
        "/parse" => {
            let (p, h) = motorcyclist_pair();
            let docs: Vec<String> = texts_of(body)
                .iter()
                .map(|t| {
                    let s = if *t == p.text { &p } else { &h };
                    monolog_core::conllu::to_conllu(std::slice::from_ref(s))
                })
                .collect();
            json!({"conllu": docs})
        }
        _ => json!({}),
    }
}

fn start(mode: Mode) -> Stub {
    let server = Arc::new(Server::http("127.0.0.1:0").unwrap());
    let url = format!("http://{}", server.server_addr().to_ip().unwrap());
    let hits = Arc::new(Mutex::new(Vec::new()));
    let peak = Arc::new(AtomicUsize::new(0));
    let live = Arc::new(AtomicUsize::new(0));
    let offline = Arc::new(OfflineScorer::new(Arc::new(KnowledgeBase::bundled())));
    let (h, p) = (hits.clone(), peak.clone());
    thread::spawn(move || {
        for mut req in server.incoming_requests() {
            let n = {
                let mut h = h.lock().unwrap();
                h.push(req.url().to_string());
                h.len()
            };
            let (offline, p, live) = (offline.clone(), p.clone(), live.clone());
            thread::spawn(move || {
                let now = live.fetch_add(1, Ordering::SeqCst) + 1;
                p.fetch_max(now, Ordering::SeqCst);
                thread::sleep(Duration::from_millis(5));
                let mut text = String::new();
                req.as_reader().read_to_string(&mut text).unwrap();
                let body: Value = serde_json::from_str(&text).unwrap_or(Value::Null);
                let path = req.url().to_string();
                let (code, v) = match (mode, req.method()) {
                    (Mode::FailFirst(k), _) if n <= k => (500, json!({"error": "busy"})),
                    (Mode::BadRequest, _) => (400, json!({"error": "bad input"})),
                    (Mode::Unhealthy, Method::Get) => (503, json!({"status": "loading"})),
                    (_, Method::Get) if path == "/health" => (200, json!({"status": "ok", "models": {}})),
                    (Mode::WrongCount, _) => (200, json!({"vectors": [], "scores": [], "probs": [], "conllu": []})),
                    (Mode::NonFinite, _) => (200, json!({"vectors": [[0.5, null]], "dim": 2})),
                    (Mode::OutOfRange, _) => (200, json!({"scores": [1.5], "probs": [-0.1]})),
                    _ => (200, answer(&offline, &path, &body)),
                };
                live.fetch_sub(1, Ordering::SeqCst);
                let header = Header::from_bytes("Content-Type", "application/json").unwrap();
                let _ = req.respond(Response::from_string(v.to_string()).with_status_code(code).with_header(header));
            });
        }
    });
    Stub { url, hits, peak }
}

fn client(url: &str) -> RemoteScorer {
    let mut cfg = RemoteConfig::new(url);
    cfg.timeout = Duration::from_secs(5);
    RemoteScorer::new(cfg)
}

fn dead_url() -> String {
    let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = l.local_addr().unwrap();
    drop(l);
    format!("http://{}", addr)
}

fn phrase(t: &str) -> Phrase {
    let lemmas: Vec<String> = t.split_whitespace().map(str::to_lowercase).collect();
    let refs: Vec<&str> = lemmas.iter().map(String::as_str).collect();
    Phrase::new(t, &refs)
}

#[test]
fn endpoints_agree_with_offline_scorer() {
    let stub = start(Mode::Normal);
    let remote = client(&stub.url);
    let offline = OfflineScorer::new(Arc::new(KnowledgeBase::bundled()));
    let phrases = [phrase("a tall man"), phrase("man who is tall")];
    assert_eq!(remote.embed(&phrases).unwrap(), offline.embed(&phrases).unwrap());
    let words = [(Word::new("road", "NOUN"), Word::new("roadway", "NOUN")), (Word::new("dog", "NOUN"), Word::new("dog", "NOUN"))];
    assert_eq!(remote.word_similarity(&words).unwrap(), vec![0.9, 1.0]);
    let pairs = [(phrase("tall man"), phrase("man who is tall"))];
    assert_eq!(remote.paraphrase(&pairs).unwrap(), offline.paraphrase(&pairs).unwrap());
    assert_eq!(remote.health().unwrap()["status"], "ok");
}

#[test]
fn parse_returns_usable_conllu() {
    let stub = start(Mode::Normal);
    let (p, _) = motorcyclist_pair();
    let e = Engine::new(Arc::new(KnowledgeBase::bundled()), Arc::new(client(&stub.url)), EngineConfig::default());
    let s = e.parse_text(&p.text).unwrap();
    assert_eq!(s.lemma_key(), p.lemma_key());
    assert!(e.polarize(&s).is_ok());
}

#[test]
fn repeated_items_are_cached() {
    let stub = start(Mode::Normal);
    let remote = client(&stub.url);
    let a = [phrase("a dog"), phrase("a dog"), phrase("a cat")];
    remote.embed(&a).unwrap();
    remote.embed(&a[..2]).unwrap();
    assert_eq!(stub.hits(), vec!["/embed"]);
    let w = [(Word::new("dog", "NOUN"), Word::new("cat", "NOUN"))];
    remote.word_similarity(&w).unwrap();
    remote.word_similarity(&w).unwrap();
    assert_eq!(stub.hits().len(), 2);
}

#[test]
fn server_errors_are_retried_once() {
    let stub = start(Mode::FailFirst(1));
    assert_eq!(client(&stub.url).embed(&[phrase("a dog")]).unwrap().len(), 1);
    assert_eq!(stub.hits().len(), 2);

    let stub = start(Mode::FailFirst(5));
    let err = client(&stub.url).embed(&[phrase("a dog")]).unwrap_err();
    assert!(matches!(err, ScoringError::Transport { .. }), "{err}");
    assert_eq!(stub.hits().len(), 2);
}

#[test]
fn client_errors_are_not_retried() {
    let stub = start(Mode::BadRequest);
    let err = client(&stub.url).paraphrase(&[(phrase("a"), phrase("b"))]).unwrap_err();
    assert!(matches!(err, ScoringError::Protocol { .. }), "{err}");
    assert_eq!(stub.hits().len(), 1);
}

#[test]
fn malformed_responses_are_rejected() {
    let stub = start(Mode::WrongCount);
    assert!(matches!(client(&stub.url).embed(&[phrase("a")]), Err(ScoringError::Protocol { .. })));
    assert!(matches!(client(&stub.url).parse(&["a".into()]), Err(ScoringError::Protocol { .. })));
    let stub = start(Mode::NonFinite);
    assert!(matches!(client(&stub.url).embed(&[phrase("a")]), Err(ScoringError::Protocol { .. })));
    let stub = start(Mode::OutOfRange);
    let w = [(Word::new("a", "X"), Word::new("b", "X"))];
    assert!(matches!(client(&stub.url).word_similarity(&w), Err(ScoringError::Protocol { .. })));
    assert!(matches!(client(&stub.url).paraphrase(&[(phrase("a"), phrase("b"))]), Err(ScoringError::Protocol { .. })));
}

#[test]
fn unhealthy_server_is_reported() {
    let stub = start(Mode::Unhealthy);
    assert!(client(&stub.url).health().is_err());
}

#[test]
fn requests_in_flight_are_capped() {
    let stub = start(Mode::Normal);
    let remote = Arc::new(client(&stub.url));
    let workers: Vec<_> = (0..24)
        .map(|i| {
            let r = remote.clone();
            thread::spawn(move || r.embed(&[phrase(&format!("dog number {i}"))]).unwrap())
        })
        .collect();
    for w in workers {
        w.join().unwrap();
    }
    assert_eq!(stub.hits().len(), 24);
    assert!(stub.peak.load(Ordering::SeqCst) <= 8);
}

#[test]
fn unreachable_scorer_degrades_unless_strict() {
    let (p, h) = {
        let pairs = load_pairs("mini");
        let x = pairs.into_iter().find(|x| x.id == "1").unwrap();
        (x.premise.unwrap(), x.hypothesis.unwrap())
    };
    let kb = Arc::new(KnowledgeBase::bundled());
    let mut cfg = EngineConfig::default();
    let e = Engine::new(kb.clone(), Arc::new(client(&dead_url())), cfg);
    let r = e.classify(&p, &h).unwrap();
    assert_eq!(r.label, Label::Entail);
    assert!(!r.warnings.is_empty());

    cfg.strict = true;
    let e = Engine::new(kb, Arc::new(client(&dead_url())), cfg);
    assert!(matches!(e.classify(&p, &h), Err(Error::Scoring(_))));
}

#[test]
fn remote_engine_matches_offline_engine_on_mini_corpus() {
    let stub = start(Mode::Normal);
    let kb = Arc::new(KnowledgeBase::bundled());
    let remote = Engine::new(kb, Arc::new(client(&stub.url)), EngineConfig::default());
    let pairs = load_pairs("mini");
    let bad = label_mismatches(&remote, &pairs);
    assert!(bad.is_empty(), "{:#?}", bad);
}
