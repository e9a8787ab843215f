//! Neural-scorer abstraction with an offline deterministic backend and an HTTP client.
//!
//! The remote protocol is JSON over HTTP:
//!
//! | endpoint               | request                       | response                          |
//! |------------------------|-------------------------------|-----------------------------------|
//! | `POST /embed`          | `{"texts": [..]}`             | `{"vectors": [[..]], "dim": n}`   |
//! | `POST /word-similarity`| `{"pairs": [[a, b], ..]}`     | `{"scores": [..]}`                |
//! | `POST /paraphrase`     | `{"pairs": [[a, b], ..]}`     | `{"probs": [..]}`                 |
//! | `POST /parse`          | `{"texts": [..]}`             | `{"conllu": [..]}`                |
//! | `GET /health`          |                               | `{"status": "ok", ..}`            |

use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{KbError, ScoringError};
use crate::kb::{KnowledgeBase, LexicalRelationKind};

/// A phrase as the scorer sees it: surface text plus lemmas.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Phrase {
    pub text: String,
    pub lemmas: Vec<String>,
}

impl Phrase {
    pub fn new(text: &str, lemmas: &[&str]) -> Phrase {
        Phrase { text: text.to_string(), lemmas: lemmas.iter().map(|s| s.to_lowercase()).collect() }
    }
}

/// A word with its coarse POS.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    pub lemma: String,
    pub upos: String,
}

impl Word {
    pub fn new(lemma: &str, upos: &str) -> Word {
        Word { lemma: lemma.to_lowercase(), upos: upos.to_string() }
    }
}

/// The three scoring operations the engine needs. Implementations must be usable from
/// several threads at once.
pub trait Scorer: Send + Sync {
    fn name(&self) -> &str;

    /// One vector per phrase, all of the same dimension.
    fn embed(&self, phrases: &[Phrase]) -> Result<Vec<Vec<f64>>, ScoringError>;

    /// Similarity in `[0, 1]` per pair.
    fn word_similarity(&self, pairs: &[(Word, Word)]) -> Result<Vec<f64>, ScoringError>;

    /// Paraphrase probability in `[0, 1]` per pair.
    fn paraphrase(&self, pairs: &[(Phrase, Phrase)]) -> Result<Vec<f64>, ScoringError>;

    /// Parses raw sentences into CoNLL-U. Only remote backends can do this.
    fn parse(&self, _texts: &[String]) -> Result<Vec<String>, ScoringError> {
        Err(ScoringError::Input(format!("{} scorer cannot parse raw text", self.name())))
    }

    fn health(&self) -> Result<Value, ScoringError> {
        Ok(json!({"status": "ok", "backend": self.name()}))
    }
}

/// Euclidean distance between two embeddings.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Manually curated paraphrase probabilities, keyed by lowercased text in both orders.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParaphraseTable {
    entries: HashMap<(String, String), f64>,
}

fn norm_text(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl ParaphraseTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: &str, b: &str, p: f64) {
        let (a, b) = (norm_text(a), norm_text(b));
        self.entries.insert((a.clone(), b.clone()), p);
        self.entries.insert((b, a), p);
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        self.entries.get(&(norm_text(a), norm_text(b))).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `phrase<TAB>phrase<TAB>probability` per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, KbError> {
        let mut t = ParaphraseTable::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let bad = |msg: String| KbError::Format { line: i + 1, msg };
            if cols.len() != 3 {
                return Err(bad(format!("expected 3 tab-separated columns, found {}", cols.len())));
            }
            let p: f64 = cols[2].trim().parse().map_err(|_| bad(format!("bad probability `{}`", cols[2])))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(bad(format!("probability {} outside [0, 1]", p)));
            }
            t.insert(cols[0], cols[1], p);
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, KbError> {
        let text = std::fs::read_to_string(path).map_err(|source| KbError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }
}

const STOPWORDS: &[&str] = &[
    "a", "an", "the", "be", "who", "which", "that", "whom", "whose", "of", "there", "it", "its",
];

/// Deterministic scorer: hashed bag-of-lemmas embeddings, lemma/KB word similarity and a
/// synonym-aware Jaccard paraphrase score, overridable by a paraphrase table.
#[derive(Debug, Clone)]
pub struct OfflineScorer {
    kb: Arc<KnowledgeBase>,
    table: ParaphraseTable,
    dim: usize,
}

pub const OFFLINE_DIM: usize = 256;

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn is_punct_lemma(l: &str) -> bool {
    !l.is_empty() && l.chars().all(|c| c.is_ascii_punctuation())
}

impl OfflineScorer {
    pub fn new(kb: Arc<KnowledgeBase>) -> Self {
        OfflineScorer { kb, table: ParaphraseTable::new(), dim: OFFLINE_DIM }
    }

    pub fn with_table(mut self, table: ParaphraseTable) -> Self {
        self.table = table;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn embed_one(&self, p: &Phrase) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for l in &p.lemmas {
            let l = l.to_lowercase();
            if is_punct_lemma(&l) {
                continue;
            }
            v[(fnv1a(&l) % self.dim as u64) as usize] += 1.0;
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
        }
        v
    }

    fn synonyms(&self, a: &str, b: &str) -> bool {
        self.kb.relates_any_pos(a, LexicalRelationKind::Synonym, b)
    }

    fn word_sim(&self, a: &Word, b: &Word) -> f64 {
        if a.lemma == b.lemma {
            1.0
        } else if self.synonyms(&a.lemma, &b.lemma) {
            0.9
        } else if crate::kb::normalize_pos(&a.upos) == crate::kb::normalize_pos(&b.upos) {
            0.2
        } else {
            0.0
        }
    }

    fn content(lemmas: &[String]) -> BTreeSet<String> {
        let all: BTreeSet<String> = lemmas
            .iter()
            .map(|l| l.to_lowercase())
            .filter(|l| !is_punct_lemma(l))
            .collect();
        let content: BTreeSet<String> = all.iter().filter(|l| !STOPWORDS.contains(&l.as_str())).cloned().collect();
        if content.is_empty() {
            all
        } else {
            content
        }
    }

    fn para(&self, a: &Phrase, b: &Phrase) -> f64 {
        if let Some(p) = self.table.get(&a.text, &b.text) {
            return p;
        }
        let (sa, sb) = (Self::content(&a.lemmas), Self::content(&b.lemmas));
        if sa.is_empty() && sb.is_empty() {
            return 1.0;
        }
        // a lemma of one side matches when the other side has it or one of its synonyms
        let matched_a = sa.iter().filter(|x| sb.iter().any(|y| *x == y || self.synonyms(x, y))).count();
        let matched_b = sb.iter().filter(|y| sa.iter().any(|x| x == *y || self.synonyms(x, y))).count();
        let matched = matched_a.min(matched_b);
        let union = sa.len() + sb.len() - matched;
        matched as f64 / union as f64
    }
}

impl Scorer for OfflineScorer {
    fn name(&self) -> &str {
        "offline"
    }

    fn embed(&self, phrases: &[Phrase]) -> Result<Vec<Vec<f64>>, ScoringError> {
        Ok(phrases.iter().map(|p| self.embed_one(p)).collect())
    }

    fn word_similarity(&self, pairs: &[(Word, Word)]) -> Result<Vec<f64>, ScoringError> {
        Ok(pairs.iter().map(|(a, b)| self.word_sim(a, b)).collect())
    }

    fn paraphrase(&self, pairs: &[(Phrase, Phrase)]) -> Result<Vec<f64>, ScoringError> {
        Ok(pairs.iter().map(|(a, b)| self.para(a, b)).collect())
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Limiter {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Limiter {
    fn new(n: usize) -> Self {
        Limiter { free: Mutex::new(n.max(1)), cv: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Limiter);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub base_url: String,
    pub timeout: Duration,
    /// Extra attempts after a transport failure.
    pub retries: usize,
    pub max_in_flight: usize,
}

impl RemoteConfig {
    pub fn new(base_url: &str) -> Self {
        RemoteConfig {
            base_url: base_url.trim_end_matches('/').to_string(),
            timeout: Duration::from_secs(30),
            retries: 1,
            max_in_flight: 8,
        }
    }
}

/// HTTP client for the model server, with per-item caching.
#[derive(Debug)]
pub struct RemoteScorer {
    cfg: RemoteConfig,
    agent: ureq::Agent,
    limiter: Limiter,
    embed_cache: Mutex<HashMap<String, Vec<f64>>>,
    word_cache: Mutex<HashMap<(String, String), f64>>,
    para_cache: Mutex<HashMap<(String, String), f64>>,
    dim: Mutex<Option<usize>>,
}

impl RemoteScorer {
    pub fn new(cfg: RemoteConfig) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(cfg.timeout).build();
        let limiter = Limiter::new(cfg.max_in_flight);
        RemoteScorer {
            cfg,
            agent,
            limiter,
            embed_cache: Mutex::new(HashMap::new()),
            word_cache: Mutex::new(HashMap::new()),
            para_cache: Mutex::new(HashMap::new()),
            dim: Mutex::new(None),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.cfg.base_url
    }

    fn request(&self, endpoint: &str, body: Option<&Value>) -> Result<Value, ScoringError> {
        let url = format!("{}{}", self.cfg.base_url, endpoint);
        let mut attempt = 0;
        loop {
            let result = {
                let _permit = self.limiter.acquire();
                match body {
                    Some(b) => self.agent.post(&url).send_json(b.clone()),
                    None => self.agent.get(&url).call(),
                }
            };
            match result {
                Ok(resp) => {
                    return resp.into_json::<Value>().map_err(|e| ScoringError::Protocol {
                        endpoint: endpoint.to_string(),
                        msg: format!("invalid JSON: {}", e),
                    })
                }
                Err(ureq::Error::Status(code, resp)) if code < 500 => {
                    let text = resp.into_string().unwrap_or_default();
                    return Err(ScoringError::Protocol {
                        endpoint: endpoint.to_string(),
                        msg: format!("HTTP {}: {}", code, text.trim()),
                    });
                }
                Err(e) => {
                    if attempt >= self.cfg.retries {
                        return Err(ScoringError::Transport { endpoint: endpoint.to_string(), msg: e.to_string() });
                    }
                    log::warn!("scorer request to {} failed ({}), retrying", endpoint, e);
                    attempt += 1;
                }
            }
        }
    }

    fn field<'a>(endpoint: &str, v: &'a Value, name: &str, expected: usize) -> Result<&'a Vec<Value>, ScoringError> {
        let arr = v.get(name).and_then(Value::as_array).ok_or_else(|| ScoringError::Protocol {
            endpoint: endpoint.to_string(),
            msg: format!("missing array `{}`", name),
        })?;
        if arr.len() != expected {
            return Err(ScoringError::Protocol {
                endpoint: endpoint.to_string(),
                msg: format!("expected {} entries in `{}`, got {}", expected, name, arr.len()),
            });
        }
        Ok(arr)
    }

    fn unit_scores(endpoint: &str, arr: &[Value]) -> Result<Vec<f64>, ScoringError> {
        arr.iter()
            .map(|x| match x.as_f64() {
                Some(f) if (0.0..=1.0).contains(&f) => Ok(f),
                _ => Err(ScoringError::Protocol {
                    endpoint: endpoint.to_string(),
                    msg: format!("score {} is not a number in [0, 1]", x),
                }),
            })
            .collect()
    }

    fn scored_pairs(
        &self,
        endpoint: &str,
        field: &str,
        keys: Vec<(String, String)>,
        cache: &Mutex<HashMap<(String, String), f64>>,
    ) -> Result<Vec<f64>, ScoringError> {
        let missing: Vec<(String, String)> = {
            let c = cache.lock().unwrap();
            let mut seen = BTreeSet::new();
            keys.iter().filter(|k| !c.contains_key(*k) && seen.insert((*k).clone())).cloned().collect()
        };
        if !missing.is_empty() {
            let body = json!({ "pairs": missing.iter().map(|(a, b)| [a, b]).collect::<Vec<_>>() });
            let resp = self.request(endpoint, Some(&body))?;
            let scores = Self::unit_scores(endpoint, Self::field(endpoint, &resp, field, missing.len())?)?;
            let mut c = cache.lock().unwrap();
            for (k, s) in missing.into_iter().zip(scores) {
                c.insert(k, s);
            }
        }
        let c = cache.lock().unwrap();
        Ok(keys.iter().map(|k| c[k]).collect())
    }
}

impl Scorer for RemoteScorer {
    fn name(&self) -> &str {
        "remote"
    }

    fn embed(&self, phrases: &[Phrase]) -> Result<Vec<Vec<f64>>, ScoringError> {
        let endpoint = "/embed";
        let missing: Vec<String> = {
            let c = self.embed_cache.lock().unwrap();
            let mut seen = BTreeSet::new();
            phrases
                .iter()
                .filter(|p| !c.contains_key(&p.text) && seen.insert(p.text.clone()))
                .map(|p| p.text.clone())
                .collect()
        };
        if !missing.is_empty() {
            let resp = self.request(endpoint, Some(&json!({ "texts": missing })))?;
            let vectors = Self::field(endpoint, &resp, "vectors", missing.len())?;
            let bad = |msg: String| ScoringError::Protocol { endpoint: endpoint.to_string(), msg };
            let mut parsed = Vec::with_capacity(vectors.len());
            for v in vectors {
                let row = v.as_array().ok_or_else(|| bad("vector is not an array".into()))?;
                let row: Vec<f64> = row
                    .iter()
                    .map(|x| x.as_f64().filter(|f| f.is_finite()))
                    .collect::<Option<_>>()
                    .ok_or_else(|| bad("vector holds a non-finite value".into()))?;
                parsed.push(row);
            }
            let declared = resp.get("dim").and_then(Value::as_u64).map(|d| d as usize);
            let mut dim = self.dim.lock().unwrap();
            for row in &parsed {
                let expected = dim.or(declared).unwrap_or(row.len());
                if row.len() != expected || row.is_empty() {
                    return Err(bad(format!("vector of length {} where {} was expected", row.len(), expected)));
                }
                *dim = Some(expected);
            }
            let mut c = self.embed_cache.lock().unwrap();
            for (t, v) in missing.into_iter().zip(parsed) {
                c.insert(t, v);
            }
        }
        let c = self.embed_cache.lock().unwrap();
        Ok(phrases.iter().map(|p| c[&p.text].clone()).collect())
    }

    fn word_similarity(&self, pairs: &[(Word, Word)]) -> Result<Vec<f64>, ScoringError> {
        let keys = pairs.iter().map(|(a, b)| (a.lemma.clone(), b.lemma.clone())).collect();
        self.scored_pairs("/word-similarity", "scores", keys, &self.word_cache)
    }

    fn paraphrase(&self, pairs: &[(Phrase, Phrase)]) -> Result<Vec<f64>, ScoringError> {
        let keys = pairs.iter().map(|(a, b)| (a.text.clone(), b.text.clone())).collect();
        self.scored_pairs("/paraphrase", "probs", keys, &self.para_cache)
    }

    fn parse(&self, texts: &[String]) -> Result<Vec<String>, ScoringError> {
        let endpoint = "/parse";
        let resp = self.request(endpoint, Some(&json!({ "texts": texts })))?;
        Self::field(endpoint, &resp, "conllu", texts.len())?
            .iter()
            .map(|v| {
                v.as_str().map(str::to_string).ok_or_else(|| ScoringError::Protocol {
                    endpoint: endpoint.to_string(),
                    msg: "parse result is not a string".into(),
                })
            })
            .collect()
    }

    fn health(&self) -> Result<Value, ScoringError> {
        let v = self.request("/health", None)?;
        match v.get("status").and_then(Value::as_str) {
            Some("ok") => Ok(v),
            _ => Err(ScoringError::Protocol { endpoint: "/health".into(), msg: format!("unhealthy: {}", v) }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn offline() -> OfflineScorer {
        let mut kb = KnowledgeBase::new();
        kb.add("motorcycle", "NOUN", LexicalRelationKind::Synonym, "motorbike", crate::kb::Provenance::Handcrafted);
        OfflineScorer::new(Arc::new(kb))
    }

    #[test]
    fn embeddings_are_unit_length_and_deterministic() {
        let s = offline();
        let p = Phrase::new("A man runs", &["a", "man", "run"]);
        let v = s.embed(&[p.clone(), p]).unwrap();
        assert_eq!(v[0].len(), OFFLINE_DIM);
        assert!((v[0].iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(v[0], v[1]);
        assert_eq!(euclidean(&v[0], &v[1]), 0.0);
    }

    #[test]
    fn word_similarity_levels() {
        let s = offline();
        let pairs = vec![
            (Word::new("dog", "NOUN"), Word::new("dog", "NOUN")),
            (Word::new("motorcycle", "NOUN"), Word::new("motorbike", "NOUN")),
            (Word::new("dog", "NOUN"), Word::new("car", "NOUN")),
            (Word::new("dog", "NOUN"), Word::new("run", "VERB")),
        ];
        assert_eq!(s.word_similarity(&pairs).unwrap(), vec![1.0, 0.9, 0.2, 0.0]);
    }

    #[test]
    fn paraphrase_scores() {
        let s = offline();
        let a = Phrase::new("is running", &["be", "run"]);
        let b = Phrase::new("runs", &["run"]);
        let c = Phrase::new("a motorbike", &["a", "motorbike"]);
        let d = Phrase::new("the motorcycle", &["the", "motorcycle"]);
        let e = Phrase::new("no man", &["no", "man"]);
        let f = Phrase::new("a man", &["a", "man"]);
        let v = s.paraphrase(&[(a, b), (c, d), (e, f)]).unwrap();
        assert_eq!(v[0], 1.0);
        assert_eq!(v[1], 1.0);
        assert_eq!(v[2], 0.5);
    }

    #[test]
    fn table_overrides_and_is_symmetric() {
        let t = ParaphraseTable::parse("down the road\talong a roadway\t0.95\n").unwrap();
        let s = offline().with_table(t);
        let a = Phrase::new("down the road", &["down", "the", "road"]);
        let b = Phrase::new("Along a  roadway", &["along", "a", "roadway"]);
        assert_eq!(s.paraphrase(&[(b, a)]).unwrap(), vec![0.95]);
    }

    #[test]
    fn table_rejects_out_of_range() {
        assert!(ParaphraseTable::parse("a\tb\t1.5\n").is_err());
        assert!(ParaphraseTable::parse("a\tb\n").is_err());
    }

    #[test]
    fn limiter_caps_permits() {
        let l = Limiter::new(2);
        let a = l.acquire();
        let _b = l.acquire();
        assert_eq!(*l.free.lock().unwrap(), 0);
        drop(a);
        assert_eq!(*l.free.lock().unwrap(), 1);
    }
}
